"""States on a finite energy band with periodic boundary conditions.

A state is stored as complex samples of its amplitude g(eps, channel) on a
uniform, endpoint-inclusive grid with an odd number of points. All integrals
over the band use composite Simpson, so norms, overlaps and moments share one
quadrature rule.
"""

import math
from fractions import Fraction
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.interpolate import make_interp_spline

from .exceptions import ValidationError

CHANNELS = ("R", "L")

# relative edge magnitude above which a warning is issued
SUPPORT_TOL = 1e-8

DEFAULT_STENCIL_ORDER = 6


@dataclass(frozen=True)
class BandGrid:
    """Uniform grid eps_i = eps0 + i * delta_eps / (n - 1), i = 0..n-1."""

    eps0: float
    delta_eps: float
    n: int

    def __post_init__(self):
        if not (np.isfinite(self.eps0) and np.isfinite(self.delta_eps)):
            raise ValidationError("band edges must be finite")
        if self.eps0 <= 0:
            raise ValidationError(f"eps0 must be positive, got {self.eps0}")
        if self.delta_eps <= 0:
            raise ValidationError(f"delta_eps must be positive, got {self.delta_eps}")
        if int(self.n) != self.n or self.n < 3 or self.n % 2 == 0:
            raise ValidationError(f"n must be an odd integer >= 3, got {self.n}")

    @property
    def eps1(self):
        """Band top."""
        return self.eps0 + self.delta_eps

    @property
    def center(self):
        return self.eps0 + 0.5 * self.delta_eps

    @property
    def step(self):
        return self.delta_eps / (self.n - 1)

    @cached_property
    def energies(self):
        e = self.eps0 + self.step * np.arange(self.n)
        e[-1] = self.eps1
        e.setflags(write=False)
        return e

    @cached_property
    def simpson_weights(self):
        w = np.ones(self.n)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        w *= self.step / 3.0
        w.setflags(write=False)
        return w

    def sub_band(self, center, width, n=None):
        """Grid of the given width centred at ``center`` (same point count by default)."""
        return BandGrid(center - 0.5 * width, width, self.n if n is None else n)


def make_band(eps0, delta_eps, n):
    return BandGrid(float(eps0), float(delta_eps), int(n))


def quadrature(grid, samples):
    """Composite Simpson integral of ``samples`` over the band (last axis)."""
    samples = np.asarray(samples)
    if samples.shape[-1] != grid.n:
        raise ValidationError(
            f"sample count {samples.shape[-1]} does not match grid size {grid.n}"
        )
    return samples @ grid.simpson_weights


def _stencil_weights(offsets):
    """First-derivative weights at 0, exact for polynomials of degree < len(offsets).

    Lagrange weights in exact rational arithmetic, so the weights sum to zero
    exactly and constants differentiate to exactly zero.
    """
    xs = [Fraction(int(o)) for o in offsets]
    weights = []
    for j, xj in enumerate(xs):
        total = Fraction(0)
        for k, xk in enumerate(xs):
            if k == j:
                continue
            term = 1 / (xj - xk)
            for m, xm in enumerate(xs):
                if m not in (j, k):
                    term *= (0 - xm) / (xj - xm)
            total += term
        weights.append(total)
    return np.array([float(w) for w in weights])


def differentiate(samples, step, order=DEFAULT_STENCIL_ORDER):
    """First derivative along the last axis with an ``order``-accurate stencil.

    Central differences in the interior; points within ``order // 2`` of an edge
    use one-sided stencils of the same width. ``order`` must be even. Grids with
    fewer than ``order + 1`` points fall back to the widest stencil that fits.
    Stencils are applied to differences, so constants give exactly zero.
    """
    f = np.asarray(samples)
    n = f.shape[-1]
    if order % 2:
        raise ValidationError("stencil order must be even")
    width = min(order + 1, n if n % 2 else n - 1)
    if width < 3:
        raise ValidationError("need at least 3 samples to differentiate")
    half = width // 2
    out = np.empty(f.shape, dtype=np.result_type(f.dtype, float))

    central = _stencil_weights(np.arange(-half, half + 1))
    inner = slice(half, n - half)
    acc = np.zeros(f.shape[:-1] + (n - 2 * half,), dtype=out.dtype)
    for j in range(1, half + 1):
        acc = acc + central[half + j] * (f[..., half + j:n - half + j] - f[..., half - j:n - half - j])
    out[..., inner] = acc

    for i in range(half):
        w = _stencil_weights(np.arange(width) - i)
        left = f[..., :width]
        right = f[..., n - width:][..., ::-1]
        others = [j for j in range(width) if j != i]
        out[..., i] = sum(w[j] * (left[..., j] - left[..., i]) for j in others)
        out[..., n - 1 - i] = -sum(w[j] * (right[..., j] - right[..., i]) for j in others)
    return out / step


def unwrap_phase(values, threshold=np.pi):
    """Continuous phase of complex ``values`` (cumulative unwrap, jumps > threshold removed)."""
    return np.unwrap(np.angle(values), discont=threshold)


@dataclass(frozen=True)
class ChannelAmplitude:
    """Samples g_i of a state's amplitude in one scattering channel."""

    grid: BandGrid
    samples: np.ndarray
    channel: str = "R"

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.shape != (self.grid.n,):
            raise ValidationError(
                f"expected {self.grid.n} samples, got shape {s.shape}"
            )
        if self.channel not in CHANNELS:
            raise ValidationError(f"unknown channel {self.channel!r}")
        s = s.copy()
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    def with_samples(self, samples):
        return ChannelAmplitude(self.grid, samples, self.channel)

    def norm(self):
        return math.sqrt(quadrature(self.grid, np.abs(self.samples) ** 2))

    def normalize(self):
        return self.with_samples(self.samples / self.norm())

    def inner(self, other):
        """<self|other> (zero across different channels)."""
        _check_same_grid(self.grid, other.grid)
        if self.channel != other.channel:
            return 0.0j
        return complex(quadrature(self.grid, np.conj(self.samples) * other.samples))

    def edge_ratio(self):
        peak = np.max(np.abs(self.samples))
        if peak == 0:
            return 0.0
        return max(abs(self.samples[0]), abs(self.samples[-1])) / peak

    def check_support(self):
        """Warn if the amplitude does not vanish at the band edges."""
        ratio = self.edge_ratio()
        if ratio >= SUPPORT_TOL:
            warnings.warn(
                f"amplitude is not supported inside the band (edge/max = {ratio:.3g})",
                stacklevel=2,
            )
        return ratio


def _check_same_grid(a, b):
    if a != b:
        raise ValidationError(f"grid mismatch: {a} vs {b}")


def cos2_amplitude(grid):
    """Normalized A(eps) = N_A cos^2((eps - eps_c) pi / delta_eps).

    Returns ``(samples, N_A)``; N_A = sqrt(8 / (3 delta_eps)) is the analytic
    normalization of the squared profile.
    """
    phase = (grid.energies - grid.center) * np.pi / grid.delta_eps
    norm = math.sqrt(8.0 / (3.0 * grid.delta_eps))
    a = norm * np.cos(phase) ** 2
    a[0] = a[-1] = 0.0
    return a, norm


@dataclass(frozen=True)
class GaugePhase:
    """Channel-diagonal gauge eta_alpha(eps) with running integral Phi(eps), Phi(eps0) = 0."""

    grid: BandGrid
    eta_r: np.ndarray
    eta_l: np.ndarray = field(default=None)

    def __post_init__(self):
        r = np.broadcast_to(np.asarray(self.eta_r, dtype=float), (self.grid.n,)).copy()
        l_src = r if self.eta_l is None else self.eta_l
        l = np.broadcast_to(np.asarray(l_src, dtype=float), (self.grid.n,)).copy()
        for arr in (r, l):
            arr.setflags(write=False)
        object.__setattr__(self, "eta_r", r)
        object.__setattr__(self, "eta_l", l)

    def eta(self, channel="R"):
        return self.eta_r if channel == "R" else self.eta_l

    def phase(self, channel="R"):
        return self._phases[channel]

    @cached_property
    def _phases(self):
        # antiderivative of a quintic interpolating spline: smooth to roundoff, so
        # the derivative stencil recovers eta without the odd/even ripple that
        # cumulative Simpson leaves behind
        e = self.grid.energies
        out = {}
        for channel, eta in (("R", self.eta_r), ("L", self.eta_l)):
            if np.all(eta == eta[0]):
                phi = eta[0] * (e - e[0])
            else:
                anti = make_interp_spline(e, eta, k=5).antiderivative()
                phi = anti(e) - anti(e[0])
            phi.setflags(write=False)
            out[channel] = phi
        return out

    def __neg__(self):
        return GaugePhase(self.grid, -self.eta_r, -self.eta_l)

    def __add__(self, other):
        _check_same_grid(self.grid, other.grid)
        return GaugePhase(self.grid, self.eta_r + other.eta_r, self.eta_l + other.eta_l)

    def shifted(self, c):
        """Same gauge with a constant ``c`` added to both channels."""
        return GaugePhase(self.grid, self.eta_r + c, self.eta_l + c)


def constant_gauge(grid, t0=0.0):
    """eta = -T0 on both channels: zero-time state built from incoming waves at time T0."""
    return GaugePhase(grid, np.full(grid.n, -float(t0)))


def arrival_gauge(grid, x0):
    """eta = d(k x0)/d eps = x0 / sqrt(2 eps).

    The zero-time eigenstate then has free-particle amplitude exp(i k x0); read as
    an arrival-time operator (minus tau) this is the Kijowski-type choice for a
    detector at x0. For a packet with amplitude exp(-i k x_R), x0 = -x_R removes
    the ballistic x_R / k from the mean.
    """
    return GaugePhase(grid, x0 / np.sqrt(2.0 * grid.energies))


def gauge_transform(g, nu):
    """Multiply g channel-diagonally by exp(i Phi_nu(eps)); norm is preserved."""
    _check_same_grid(g.grid, nu.grid)
    return g.with_samples(g.samples * np.exp(1j * nu.phase(g.channel)))
