"""Brute-force cross-checks that share no numerical pathway with what they verify.

* ode_scattering integrates the Schrodinger equation with fixed-step RK4
  instead of composing analytic transfer matrices.
* brute_force_overlaps uses a 10x finer spline-resampled grid, the trapezoid
  rule and its own running integral of eta, instead of Simpson on the band grid.
* exact_projection_overlap evaluates <psi_R|phi> by spatial quadrature instead
  of the asymptotic shortcut t* A exp(-ik x_R).
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.interpolate import CubicSpline

from .band import ChannelAmplitude, GaugePhase
from .exceptions import NumericalFailure
from .scattering import amplitudes
from .timeop import eigenstate_overlap, evolve, time_quantum

ODE_STEP = 1e-3
ODE_CONVERGENCE = 1e-8


def _height(potential, x):
    for a, b, u in potential.segments:
        if a <= x < b:
            return u
    return 0.0


def _rk4_interval(psi, dpsi, eps, v, x_from, x_to, step):
    n = max(1, math.ceil(abs(x_to - x_from) / step))
    h = (x_to - x_from) / n
    c = 2.0 * (v - eps)
    for _ in range(n):
        k1p, k1d = dpsi, c * psi
        k2p, k2d = dpsi + 0.5 * h * k1d, c * (psi + 0.5 * h * k1p)
        k3p, k3d = dpsi + 0.5 * h * k2d, c * (psi + 0.5 * h * k2p)
        k4p, k4d = dpsi + h * k3d, c * (psi + h * k3p)
        psi = psi + h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)
        dpsi = dpsi + h / 6.0 * (k1d + 2 * k2d + 2 * k3d + k4d)
    return psi, dpsi


def _integrate(potential, eps, step):
    eps = np.atleast_1d(np.asarray(eps, dtype=float))
    k = np.sqrt(2.0 * eps)
    strengths = {}
    for x, lam in potential.deltas:
        strengths[x] = strengths.get(x, 0.0) + lam
    points = sorted(set(strengths) | {p for a, b, _ in potential.segments for p in (a, b)})
    if not points:
        return np.ones_like(k, dtype=complex), np.zeros_like(k, dtype=complex)

    # outgoing wave exp(ikx) on the right, unit amplitude; march leftwards
    x = points[-1]
    psi = np.exp(1j * k * x)
    dpsi = 1j * k * psi
    for i in range(len(points) - 1, -1, -1):
        x = points[i]
        dpsi = dpsi - 2.0 * strengths.get(x, 0.0) * psi
        if i > 0:
            left = points[i - 1]
            v = _height(potential, 0.5 * (left + x))
            psi, dpsi = _rk4_interval(psi, dpsi, eps, v, x, left, step)
    alpha = 0.5 * (psi + dpsi / (1j * k)) * np.exp(-1j * k * x)
    beta = 0.5 * (psi - dpsi / (1j * k)) * np.exp(1j * k * x)
    return 1.0 / alpha, beta / alpha


def ode_scattering(potential, eps, step=ODE_STEP, tol=ODE_CONVERGENCE):
    """(t, r) by RK4 integration; NumericalFailure if halving the step moves t or r by > tol."""
    t, r = _integrate(potential, eps, step)
    t_half, r_half = _integrate(potential, eps, 0.5 * step)
    change = max(np.max(np.abs(t_half - t)), np.max(np.abs(r_half - r)))
    if change > tol:
        raise NumericalFailure(
            f"RK4 step halving changed the amplitudes by {change:.3g}", change=change
        )
    if np.ndim(eps) == 0:
        return complex(t_half[0]), complex(r_half[0])
    return t_half, r_half


def _fine_grid(grid, refine):
    n = (grid.n - 1) * refine + 1
    e = np.linspace(grid.eps0, grid.eps1, n)
    return e


def _resample(grid, values, fine):
    values = np.asarray(values)
    if np.iscomplexobj(values):
        re = CubicSpline(grid.energies, values.real)(fine)
        im = CubicSpline(grid.energies, values.imag)(fine)
        return re + 1j * im
    return CubicSpline(grid.energies, values)(fine)


def brute_force_overlaps(g, gauge, m_list, refine=10, grid=None, channel="R"):
    """<tau_m|g> for each m by the trapezoid rule on a ``refine``-times finer grid.

    ``g`` and ``gauge`` may be ChannelAmplitude / GaugePhase objects (resampled
    with cubic splines) or callables of energy evaluated directly on the fine
    grid; with callables the band ``grid`` must be given.
    """
    if isinstance(g, ChannelAmplitude):
        grid, channel = g.grid, g.channel
    fine = _fine_grid(grid, refine)
    g_fine = g(fine) if callable(g) else _resample(grid, g.samples, fine)
    if isinstance(gauge, GaugePhase):
        eta_fine = _resample(grid, gauge.eta(channel), fine)
    else:
        eta_fine = np.broadcast_to(gauge(fine), fine.shape)
    phi = cumulative_trapezoid(eta_fine, fine, initial=0.0)
    h = g_fine * np.exp(-1j * phi)
    m = np.atleast_1d(np.asarray(m_list))
    tau = time_quantum(grid.delta_eps) * m
    kernel = np.exp(1j * np.outer(tau, fine))
    return trapezoid(kernel * h, fine, axis=1) / math.sqrt(grid.delta_eps)


def evolution_overlap_check(g, gauge, m):
    """|<tau_m|g> - <tau_0|exp(i H tau_m) g>|: arrival at tau_m equals evolving back to zero."""
    tau = time_quantum(g.grid.delta_eps) * m
    direct = eigenstate_overlap(g, m, gauge)
    if m == 0:
        back = eigenstate_overlap(g, 0, gauge)
    else:
        back = eigenstate_overlap(evolve(g, -tau), 0, gauge)
    return abs(direct - back)


@dataclass(frozen=True)
class ProjectionCheck:
    energies: np.ndarray
    exact: np.ndarray
    shortcut: np.ndarray

    @property
    def abs_error(self):
        return np.abs(self.exact - self.shortcut)

    @property
    def rel_error(self):
        return self.abs_error / np.abs(self.shortcut)


def _profile(scenario, eps):
    band = scenario.band
    norm = math.sqrt(8.0 / (3.0 * band.delta_eps))
    return norm * np.cos((eps - band.center) * np.pi / band.delta_eps) ** 2


def exact_projection_overlap(
    scenario, energies=None, x_left=-600.0, dx=0.05, n_fine=12001, chunk=512
):
    """<psi_{eps,R}|phi> by spatial quadrature, next to the asymptotic shortcut.

    The overlap is split as shortcut + int_{x_left}^{x_b} (psi* - psi_asym*) phi dx,
    where psi_asym = t exp(ikx) / sqrt(2 pi k) is exact right of the potential
    edge x_b, so only a finite spatial window needs quadrature. phi(x) is built
    from its plane-wave integral on an ``n_fine``-point trapezoid grid.
    """
    band = scenario.band
    if energies is None:
        energies = np.linspace(band.eps0, band.eps1, 35)[1:-1]
    energies = np.asarray(energies, dtype=float)
    x_b = scenario.potential.support[1]

    fine = np.linspace(band.eps0, band.eps1, n_fine)
    kf = np.sqrt(2.0 * fine)
    amp = _profile(scenario, fine) / np.sqrt(2.0 * np.pi * kf)
    x = np.arange(x_left, x_b + 0.5 * dx, dx)
    phi = np.empty(x.size, dtype=complex)
    for lo in range(0, x.size, chunk):
        xs = x[lo:lo + chunk]
        phi[lo:lo + chunk] = trapezoid(
            np.exp(1j * np.outer(xs - scenario.x_r, kf)) * amp, fine, axis=1
        )

    sol = amplitudes(scenario.potential, energies)
    k = np.sqrt(2.0 * energies)
    psi = sol.value(x)
    asym = sol.t[:, None] * np.exp(1j * np.outer(k, x)) / np.sqrt(2.0 * np.pi * k)[:, None]
    correction = trapezoid(np.conj(psi - asym) * phi, x, axis=1)
    shortcut = np.conj(sol.t) * _profile(scenario, energies) * np.exp(-1j * k * scenario.x_r)
    return ProjectionCheck(energies, shortcut + correction, shortcut)


def random_band_state(grid, rng, n_modes=4, channel="R"):
    """Normalized smooth state vanishing at the band edges.

    sin^2 envelope times a random complex trigonometric polynomial with
    |frequency| <= n_modes (in units of 2 pi / delta_eps).
    """
    x = (grid.energies - grid.eps0) / grid.delta_eps
    j = np.arange(-n_modes, n_modes + 1)
    coef = (rng.normal(size=j.size) + 1j * rng.normal(size=j.size)) / (1.0 + np.abs(j))
    poly = np.exp(2j * np.pi * np.outer(x, j)) @ coef
    samples = np.sin(np.pi * x) ** 2 * poly
    samples[0] = samples[-1] = 0.0
    return ChannelAmplitude(grid, samples, channel).normalize()
