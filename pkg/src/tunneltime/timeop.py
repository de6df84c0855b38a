"""Time operator tau = i d/deps + eta(eps) on a periodic energy band.

Eigenfunctions are exp(-i tau_m eps) exp(i Phi(eps)) / sqrt(delta_eps) with
tau_m = 2 pi m / delta_eps, so the overlap of a state with them is a Fourier
coefficient of h(eps) = exp(-i Phi(eps)) g(eps). Overlaps are computed by direct
Simpson quadrature per m (one rule for every integral in the package).
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .band import (
    ChannelAmplitude,
    _check_same_grid,
    differentiate,
    quadrature,
    unwrap_phase,
)
from .exceptions import NumericalFailure, ValidationError

DEFAULT_TAIL_TOL = 1e-3
DEFAULT_M_CAP = 2**14
INITIAL_M = 64
DEFAULT_MOMENT_RTOL = 1e-8

# threshold on Im<tau> relative to the time scale of the band
IMAG_TOL = 1e-8


def time_quantum(delta_eps):
    return 2.0 * math.pi / delta_eps


@dataclass(frozen=True)
class TimeGrid:
    delta_eps: float
    m_min: int
    m_max: int

    def __post_init__(self):
        if not self.m_min <= 0 <= self.m_max:
            raise ValidationError("time grid must contain m = 0")

    @property
    def m(self):
        return np.arange(self.m_min, self.m_max + 1)

    @property
    def values(self):
        return time_quantum(self.delta_eps) * self.m


def eigenfunction(grid, m, gauge, channel="R"):
    """Stroboscopic wavepacket |tau_m, channel> in the energy-band representation."""
    tau = time_quantum(grid.delta_eps) * m
    phi = gauge.phase(channel)
    samples = np.exp(-1j * tau * grid.energies + 1j * phi) / math.sqrt(grid.delta_eps)
    return ChannelAmplitude(grid, samples, channel)


def _gauge_free(g, gauge):
    _check_same_grid(g.grid, gauge.grid)
    return g.samples * np.exp(-1j * gauge.phase(g.channel))


def _overlap_matrix(grid, h, m):
    tau = time_quantum(grid.delta_eps) * np.asarray(m, dtype=float)
    # eps measured from eps0 keeps the phases small; the constant factor is a pure phase
    phase = np.outer(tau, grid.energies - grid.eps0)
    kernel = np.exp(1j * phase) * grid.simpson_weights
    offset = np.exp(1j * tau * grid.eps0)
    return offset * (kernel @ h) / math.sqrt(grid.delta_eps)


def eigenstate_overlap(g, m, gauge):
    """c_m = <tau_m | g>; ``m`` may be an integer or an array of integers."""
    h = _gauge_free(g, gauge)
    c = _overlap_matrix(g.grid, h, np.atleast_1d(m))
    return complex(c[0]) if np.ndim(m) == 0 else c


@dataclass(frozen=True)
class ArrivalDistribution:
    time_grid: TimeGrid
    p: np.ndarray
    captured: float
    mean: float
    second_moment: float
    moments_converged: bool = True

    @property
    def m(self):
        return self.time_grid.m

    @property
    def tau(self):
        return self.time_grid.values

    @property
    def tail_mass(self):
        return max(0.0, 1.0 - self.captured)

    @property
    def variance(self):
        return self.second_moment - self.mean**2

    @property
    def delta_tau(self):
        return math.sqrt(max(self.variance, 0.0))


def _max_alias_free_m(grid):
    # Simpson mixes the step-h and step-2h trapezoid rules; the coarser one
    # aliases m with m +- (n - 1) / 2, so stay below half of that
    return max(1, (grid.n - 1) // 4)


def distribution(
    g, gauge, tail_tol=DEFAULT_TAIL_TOL, m_cap=DEFAULT_M_CAP, moment_rtol=DEFAULT_MOMENT_RTOL
):
    """Arrival probabilities P_m = |<tau_m|g>|^2 on an adaptively grown m range.

    The range starts at |m| <= 64 and doubles until the captured mass reaches
    1 - tail_tol (NumericalFailure if ``m_cap`` is hit first). It then keeps
    doubling while the second moment still changes by more than
    ``moment_rtol``, since slowly decaying resonant tails carry most of <tau^2>.
    The usable range is limited to |m| <= (n - 1) // 4 by aliasing of the
    sampled kernel.
    """
    grid = g.grid
    h = _gauge_free(g, gauge)
    if int(m_cap) < 1:
        raise ValidationError(f"m_cap must be >= 1, got {m_cap}")
    cap = min(int(m_cap), _max_alias_free_m(grid))
    quantum = time_quantum(grid.delta_eps)

    def evaluate(m_half):
        m = np.arange(-m_half, m_half + 1)
        p = np.abs(_overlap_matrix(grid, h, m)) ** 2
        tau = quantum * m
        return m, p, float(np.sum(p)), float(np.sum(p * tau**2))

    m_half = min(INITIAL_M, cap)
    m, p, captured, second = evaluate(m_half)
    while captured < 1.0 - tail_tol:
        if m_half >= cap:
            raise NumericalFailure(
                f"captured probability {captured:.6g} < {1 - tail_tol:.6g} "
                f"with |m| <= {m_half}",
                captured=captured,
                m_max=m_half,
            )
        m_half = min(2 * m_half, cap)
        m, p, captured, second = evaluate(m_half)

    converged = False
    while m_half < cap:
        m_next = min(2 * m_half, cap)
        m2, p2, captured2, second2 = evaluate(m_next)
        change = abs(second2 - second)
        m_half, m, p, captured, second = m_next, m2, p2, captured2, second2
        # floor at one time quantum squared so a sharp state (second moment ~ 0) converges
        if change <= moment_rtol * max(abs(second), quantum**2):
            converged = True
            break

    tau = quantum * m
    return ArrivalDistribution(
        time_grid=TimeGrid(grid.delta_eps, -m_half, m_half),
        p=p,
        captured=captured,
        mean=float(np.sum(p * tau)),
        second_moment=second,
        moments_converged=converged,
    )


def _demodulated(g, gauge):
    """(omega, u) with (i d/deps + eta) g = exp(i Phi - i omega (eps - eps0)) (omega u + i u').

    Differentiating the gauge-free amplitude after removing its mean phase rate
    omega keeps the stencil on slowly varying samples; the split is exact.
    """
    grid = g.grid
    h = _gauge_free(g, gauge)
    x = grid.energies - grid.eps0
    omega = 0.0
    for _ in range(2):
        u = h * np.exp(1j * omega * x)
        norm = quadrature(grid, np.abs(u) ** 2)
        if norm == 0:
            break
        omega += float(np.real(quadrature(grid, np.conj(u) * 1j * differentiate(u, grid.step)))) / norm
    return omega, h * np.exp(1j * omega * x)


def expectation_complex(g, gauge):
    """<g| i d/deps + eta |g> before discarding the (roundoff) imaginary part."""
    omega, u = _demodulated(g, gauge)
    du = differentiate(u, g.grid.step)
    return complex(
        omega * quadrature(g.grid, np.abs(u) ** 2) + quadrature(g.grid, np.conj(u) * (1j * du))
    )


def expectation_energy_rep(g, gauge):
    """Mean arrival time from the derivative stencil and Simpson quadrature.

    The imaginary part must vanish for an edge-supported state; anything above
    IMAG_TOL times the time scale max(1, |<tau>|, 2 pi / delta_eps) raises.
    """
    value = expectation_complex(g, gauge)
    scale = max(1.0, abs(value.real), time_quantum(g.grid.delta_eps))
    if abs(value.imag) > IMAG_TOL * scale:
        raise NumericalFailure(
            f"time expectation has imaginary part {value.imag:.3g}",
            imag=value.imag,
        )
    return value.real


def second_moment_energy_rep(g, gauge):
    """<g|tau^2|g> = || (i d/deps + eta) g ||^2."""
    omega, u = _demodulated(g, gauge)
    tg = omega * u + 1j * differentiate(u, g.grid.step)
    return float(quadrature(g.grid, np.abs(tg) ** 2))


class VarianceTerms(NamedTuple):
    modulus_term: float
    phase_term: float
    segments: int

    @property
    def total(self):
        return self.modulus_term + self.phase_term


def _segments(mask):
    """(start, stop) index pairs of the True runs in ``mask``."""
    edges = np.diff(np.concatenate(([0], mask.astype(int), [0])))
    return list(zip(np.nonzero(edges == 1)[0], np.nonzero(edges == -1)[0]))


def variance_decomposition(g, gauge, zero_tol=1e-10):
    """Split the time variance into |g|-derivative and phase-dispersion terms.

    With g = |g| e^{i chi}: modulus_term = int (d|g|/deps)^2 and phase_term is the
    |g|^2-weighted variance of eta - d chi/deps. Points where |g| falls below
    ``zero_tol * max|g|`` carry no phase; interior zeros split the phase
    integration into segments (three points around each zero are dropped).
    """
    grid = g.grid
    s = g.samples
    mod = np.abs(s)
    modulus_term = float(quadrature(grid, differentiate(mod, grid.step) ** 2))

    mask = mod > zero_tol * mod.max()
    runs = _segments(mask)
    weight = np.zeros(grid.n)
    rate = np.zeros(grid.n)
    for i, (lo, hi) in enumerate(runs):
        # trim next to zeros between runs, not next to the band-edge zeros
        if i > 0:
            lo += 3
        if i < len(runs) - 1:
            hi -= 3
        if hi - lo < 3:
            continue
        chi = unwrap_phase(s[lo:hi])
        rate[lo:hi] = gauge.eta(g.channel)[lo:hi] - differentiate(chi, grid.step)
        weight[lo:hi] = mod[lo:hi] ** 2
    norm = quadrature(grid, weight)
    mean_rate = quadrature(grid, weight * rate) / norm
    phase_term = float(quadrature(grid, weight * (rate - mean_rate) ** 2))
    return VarianceTerms(modulus_term, phase_term, len(runs))


def evolve(g, dt):
    """exp(-i H dt) g: samples multiplied by exp(-i eps dt)."""
    return g.with_samples(g.samples * np.exp(-1j * g.grid.energies * dt))


def energy_shift(g, j, gauge):
    """exp(-i eps' tau) g with eps' = j * step: energies move down by eps' modulo delta_eps.

    Acts as a circular shift of the gauge-free amplitude exp(-i Phi) g on the
    n - 1 distinct points of the periodic band (the two edges are identified).
    """
    grid = g.grid
    h = _gauge_free(g, gauge)
    period = grid.n - 1
    core = h[:period]
    shifted = np.roll(core, -int(j))
    out = np.empty_like(h)
    out[:period] = shifted
    out[period] = shifted[0]
    return g.with_samples(out * np.exp(1j * gauge.phase(g.channel)))


def energy_moments(g):
    """(<H>, Delta H) of a normalized amplitude."""
    w = np.abs(g.samples) ** 2
    e = g.grid.energies
    mean = float(quadrature(g.grid, e * w))
    var = float(quadrature(g.grid, (e - mean) ** 2 * w))
    return mean, math.sqrt(max(var, 0.0))


def commutator_expectation(g, gauge):
    """<g|[tau, H]|g> evaluated with the derivative stencil."""
    s = g.samples
    e = g.grid.energies
    h = g.grid.step
    eta = gauge.eta(g.channel)
    tau_hg = 1j * differentiate(e * s, h) + eta * e * s
    h_taug = e * (1j * differentiate(s, h) + eta * s)
    return complex(quadrature(g.grid, np.conj(s) * (tau_hg - h_taug)))


def time_variance(g, gauge):
    """<tau^2> - <tau>^2 in the energy representation, as || (tau - <tau>) g ||^2.

    The gauge-free amplitude is demodulated by the mean itself, so the variance
    is int |u'|^2 with no large moments to cancel.
    """
    grid = g.grid
    mean = expectation_energy_rep(g, gauge)
    u = _gauge_free(g, gauge) * np.exp(1j * mean * (grid.energies - grid.eps0))
    return float(quadrature(grid, np.abs(differentiate(u, grid.step)) ** 2))
