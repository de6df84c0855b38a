"""Stationary 1D scattering on delta barriers plus piecewise-constant segments.

Units are Hartree atomic units with unit mass, H = -1/2 d^2/dx^2 + V(x).
A delta term lam * delta(x - x0) produces the derivative jump
psi'(x0+) - psi'(x0-) = 2 lam psi(x0).

Inside every constant region j the wavefunction is
alpha_j exp(i q_j (x - x_j)) + beta_j exp(-i q_j (x - x_j)) with
q_j = sqrt(2 (eps - u_j)) (imaginary below the step) and x_j the region's left
edge; the two asymptotic regions use x_j = 0 so that their coefficients are the
plane-wave amplitudes. When |eps - u_j| < DEGENERACY_TOL the basis switches to
{1, x - x_j}.

All functions accept scalar or 1-D array energies.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .band import differentiate, unwrap_phase
from .exceptions import NumericalFailure, ValidationError

DEGENERACY_TOL = 1e-9

# largest allowed |theta_{i+1} - theta_i| in a table
UNWRAP_GUARD = np.pi / 2


@dataclass(frozen=True)
class PotentialSpec:
    """V(x) = sum lam_i delta(x - x_i) + sum_j u_j 1[a_j, b_j](x)."""

    deltas: tuple = ()
    segments: tuple = ()

    def __post_init__(self):
        deltas = tuple((float(x), float(lam)) for x, lam in self.deltas)
        segments = tuple((float(a), float(b), float(u)) for a, b, u in self.segments)
        xs = [x for x, _ in deltas]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValidationError("delta positions must be strictly increasing")
        for a, b, _ in segments:
            if not b > a:
                raise ValidationError(f"segment [{a}, {b}] has nonpositive width")
        for (_, b0, _), (a1, _, _) in zip(segments, segments[1:]):
            if a1 < b0:
                raise ValidationError("segments must be sorted and non-overlapping")
        values = [v for d in deltas for v in d] + [v for s in segments for v in s]
        if not all(np.isfinite(values)):
            raise ValidationError("potential parameters must be finite")
        object.__setattr__(self, "deltas", deltas)
        object.__setattr__(self, "segments", segments)

    @classmethod
    def double_barrier(cls, lam=1.0, a=10.0, u=0.0):
        """Delta barriers of strength ``lam`` at 0 and ``a`` with height ``u`` in between."""
        deltas = ((0.0, lam), (a, lam)) if lam != 0 else ()
        segments = ((0.0, a, u),) if u != 0 else ()
        return cls(deltas, segments)

    @property
    def is_free(self):
        return not any(lam for _, lam in self.deltas) and not any(
            u for _, _, u in self.segments
        )

    @property
    def support(self):
        """(x_min, x_max) outside of which V vanishes; (0, 0) for the free particle."""
        pts = self.breakpoints
        if len(pts) == 0:
            return 0.0, 0.0
        return float(pts[0]), float(pts[-1])

    @cached_property
    def breakpoints(self):
        pts = {x for x, _ in self.deltas}
        for a, b, _ in self.segments:
            pts.update((a, b))
        return np.array(sorted(pts))

    @cached_property
    def region_heights(self):
        """Constant potential of each region, asymptotic regions included."""
        pts = self.breakpoints
        heights = [0.0]
        for left, right in zip(pts, pts[1:]):
            heights.append(self.step_height(0.5 * (left + right)))
        if len(pts):
            heights.append(0.0)
        return np.array(heights)

    @cached_property
    def region_origins(self):
        pts = self.breakpoints
        if len(pts) == 0:
            return np.array([0.0])
        return np.concatenate(([0.0], pts[:-1], [0.0]))

    @cached_property
    def jump_strengths(self):
        """Total delta strength sitting on each breakpoint."""
        lookup = dict(self.deltas)
        return np.array([lookup.get(x, 0.0) for x in self.breakpoints])

    def step_height(self, x):
        for a, b, u in self.segments:
            if a <= x < b:
                return u
        return 0.0

    def mirrored(self, center):
        """Potential reflected about ``center`` (x -> 2 center - x)."""
        deltas = sorted((2 * center - x, lam) for x, lam in self.deltas)
        segments = sorted((2 * center - b, 2 * center - a, u) for a, b, u in self.segments)
        return PotentialSpec(tuple(deltas), tuple(segments))

    def region_index(self, x):
        # region j covers (b_{j-1}, b_j]; a point on a breakpoint belongs to the left region
        return np.searchsorted(self.breakpoints, x, side="left")


def _as_energies(eps):
    e = np.atleast_1d(np.asarray(eps, dtype=float))
    if e.ndim != 1:
        raise ValidationError("energies must be scalar or 1-D")
    if np.any(~np.isfinite(e)) or np.any(e <= DEGENERACY_TOL):
        raise ValidationError("scattering energies must be positive and finite")
    return e


def _wavenumbers(eps, u):
    """(q, degenerate mask) for a region of height u; q is complex."""
    d = eps - u
    q = np.sqrt(2.0 * d.astype(complex))
    degenerate = np.abs(d) < DEGENERACY_TOL
    return q, degenerate


def _basis(q, degenerate, s):
    """Value/derivative matrix [[f1, f2], [f1', f2']] at offset s from the region origin."""
    n = q.shape[0]
    w = np.empty((n, 2, 2), dtype=complex)
    ep = np.exp(1j * q * s)
    em = np.exp(-1j * q * s)
    w[:, 0, 0] = ep
    w[:, 0, 1] = em
    w[:, 1, 0] = 1j * q * ep
    w[:, 1, 1] = -1j * q * em
    if np.any(degenerate):
        w[degenerate] = np.array([[1.0, s], [0.0, 1.0]], dtype=complex)
    return w


def _step_matrices(potential, eps):
    """Per-breakpoint matrices mapping region j coefficients to region j + 1."""
    heights = potential.region_heights
    origins = potential.region_origins
    steps = []
    q_prev, deg_prev = _wavenumbers(eps, heights[0])
    for j, xb in enumerate(potential.breakpoints):
        q_next, deg_next = _wavenumbers(eps, heights[j + 1])
        left = _basis(q_prev, deg_prev, xb - origins[j])
        right = _basis(q_next, deg_next, xb - origins[j + 1])
        jump = np.array([[1.0, 0.0], [2.0 * potential.jump_strengths[j], 1.0]])
        steps.append(np.linalg.solve(right, jump @ left))
        q_prev, deg_prev = q_next, deg_next
    return steps


def _compose(steps, size):
    m = np.broadcast_to(np.eye(2, dtype=complex), (size, 2, 2)).copy()
    with np.errstate(over="ignore", invalid="ignore"):
        for step in steps:
            m = step @ m
    if not np.all(np.isfinite(m)):
        raise NumericalFailure("transfer matrix overflows (barrier too opaque for double precision)")
    return m


def transfer_matrix(potential, eps):
    """Matrix M with (alpha_right, beta_right) = M (alpha_left, beta_left).

    Shape (2, 2) for scalar ``eps``, (n, 2, 2) for an array.
    """
    e = _as_energies(eps)
    with np.errstate(over="ignore", invalid="ignore"):
        steps = _step_matrices(potential, e)
    m = _compose(steps, e.size)
    return m[0] if np.ndim(eps) == 0 else m


@dataclass(frozen=True)
class ScatteringSolution:
    """Energy-normalized scattering state(s) psi_{eps, channel}.

    ``coefficients`` has shape (n_energy, n_regions, 2) and already includes the
    1 / sqrt(2 pi k) prefactor. Channel "R" is incident from the left
    (left: e^{ikx} + r e^{-ikx}, right: t e^{ikx}); channel "L" from the right.
    """

    potential: PotentialSpec
    energies: np.ndarray
    t: np.ndarray
    r: np.ndarray
    coefficients: np.ndarray
    channel: str = "R"

    @property
    def k(self):
        return np.sqrt(2.0 * self.energies)

    def _region_data(self, x):
        x = np.asarray(x, dtype=float)
        idx = self.potential.region_index(x)
        heights = self.potential.region_heights[idx]
        origins = self.potential.region_origins[idx]
        eps = self.energies.reshape((-1,) + (1,) * x.ndim)
        d = eps - heights
        q = np.sqrt(2.0 * d.astype(complex))
        deg = np.abs(d) < DEGENERACY_TOL
        s = x - origins
        c = self.coefficients[:, idx, :]
        return q, deg, s, c

    def value(self, x):
        """psi(x) with shape (n_energy,) + shape(x)."""
        q, deg, s, c = self._region_data(x)
        a, b = c[..., 0], c[..., 1]
        ep = np.exp(1j * q * s)
        em = np.exp(-1j * q * s)
        out = a * ep + b * em
        if np.any(deg):
            out = np.where(deg, a + b * s, out)
        return out

    def derivative(self, x):
        q, deg, s, c = self._region_data(x)
        a, b = c[..., 0], c[..., 1]
        out = 1j * q * (a * np.exp(1j * q * s) - b * np.exp(-1j * q * s))
        if np.any(deg):
            out = np.where(deg, b + 0 * s, out)
        return out


def amplitudes(potential, eps, channel="R"):
    """Scattering amplitudes and region coefficients at energy ``eps``.

    For channel "R": T (1, r) = (t, 0). For channel "L": T (0, t) = (r, 1), where
    T is the transfer matrix; reciprocity gives the same t for both channels.
    """
    if channel not in ("R", "L"):
        raise ValidationError(f"unknown channel {channel!r}")
    e = _as_energies(eps)
    with np.errstate(over="ignore", invalid="ignore"):
        steps = _step_matrices(potential, e)
    m = _compose(steps, e.size)
    m12, m21, m22 = m[:, 0, 1], m[:, 1, 0], m[:, 1, 1]
    t = 1.0 / m22
    if channel == "R":
        r = -m21 / m22
        first = np.stack([np.ones_like(r), r], axis=-1)
    else:
        r = m12 / m22
        first = np.stack([np.zeros_like(t), t], axis=-1)

    norm = 1.0 / np.sqrt(2.0 * np.pi * np.sqrt(2.0 * e))
    coeffs = np.empty((e.size, len(steps) + 1, 2), dtype=complex)
    coeffs[:, 0] = first * norm[:, None]
    for j, step in enumerate(steps):
        coeffs[:, j + 1] = np.einsum("nij,nj->ni", step, coeffs[:, j])
    # pin the asymptotic outgoing/incoming amplitudes exactly
    if channel == "R":
        coeffs[:, -1] = np.stack([t, np.zeros_like(t)], axis=-1) * norm[:, None]
    else:
        coeffs[:, -1] = np.stack([r, np.ones_like(r)], axis=-1) * norm[:, None]
    return ScatteringSolution(potential, e, t, r, coeffs, channel)


def eigenstate_value(solution, x):
    """psi_{eps, channel}(x); scalar energy solutions return shape(x)."""
    out = solution.value(x)
    return out[0] if solution.energies.size == 1 else out


def count_local_maxima(values):
    v = np.asarray(values)
    return int(np.sum((v[1:-1] > v[:-2]) & (v[1:-1] > v[2:])))


def local_maxima(values):
    v = np.asarray(values)
    return np.nonzero((v[1:-1] > v[:-2]) & (v[1:-1] > v[2:]))[0] + 1


@dataclass(frozen=True)
class ScatteringTable:
    grid: object
    t: np.ndarray
    r: np.ndarray
    abs_t: np.ndarray
    theta: np.ndarray
    dtheta: np.ndarray
    dabs_t: np.ndarray

    @property
    def energies(self):
        return self.grid.energies

    @property
    def resonances(self):
        """Grid indices of interior local maxima of |t|."""
        return local_maxima(self.abs_t)

    @property
    def n_resonances(self):
        return len(self.resonances)


def scattering_table(potential, grid):
    """Tabulate t, r, |t|, unwrapped phase and their energy derivatives on a band grid."""
    sol = amplitudes(potential, grid.energies)
    t = sol.t
    theta = unwrap_phase(t)
    jumps = np.abs(np.diff(theta))
    if jumps.size and jumps.max() >= UNWRAP_GUARD:
        raise ValidationError(
            f"grid too coarse to unwrap the transmission phase "
            f"(max step {jumps.max():.3f} rad); increase n"
        )
    abs_t = np.abs(t)
    return ScatteringTable(
        grid=grid,
        t=t,
        r=sol.r,
        abs_t=abs_t,
        theta=theta,
        dtheta=differentiate(theta, grid.step),
        dabs_t=differentiate(abs_t, grid.step),
    )
