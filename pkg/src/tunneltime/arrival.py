"""Arrival of a tunneling particle into a state localized right of the barrier.

The arrival state is phi(x) = int d eps A(eps) exp(ik(x - x_R)) / sqrt(2 pi k)
with a cos^2 profile A. Projecting it on right-going scattering states gives
the energy amplitude t*(eps) A(eps) exp(-ik x_R) / sqrt(<T>), whose
time-operator statistics are the arrival-time distribution and its moments.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from .band import (
    BandGrid,
    ChannelAmplitude,
    arrival_gauge,
    constant_gauge,
    cos2_amplitude,
    quadrature,
)
from .exceptions import NumericalFailure, ValidationError
from .scattering import PotentialSpec, amplitudes, scattering_table
from .timeop import (
    DEFAULT_M_CAP,
    DEFAULT_TAIL_TOL,
    distribution,
    expectation_complex,
    expectation_energy_rep,
    variance_decomposition,
)

GAUGES = ("constant", "spatial_arrival")

# probability left of the potential edge; the cos^2 packet has algebraic tails
LEAKAGE_TOL = 1e-5
LEAKAGE_WINDOW = 200.0
T_FLOOR = 1e-300


@dataclass(frozen=True)
class ArrivalScenario:
    potential: PotentialSpec
    band: BandGrid
    x_r: float = 100.0
    t0: float = 0.0
    gauge: str = "constant"
    x0: float = 0.0
    tail_tol: float = DEFAULT_TAIL_TOL
    m_cap: int = DEFAULT_M_CAP

    def __post_init__(self):
        if self.gauge not in GAUGES:
            raise ValidationError(f"gauge must be one of {GAUGES}, got {self.gauge!r}")
        for name in ("x_r", "t0", "x0", "tail_tol"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite")
        if not 0 < self.tail_tol < 1:
            raise ValidationError("tail_tol must lie in (0, 1)")

    def gauge_phase(self):
        if self.gauge == "constant":
            return constant_gauge(self.band, self.t0)
        return arrival_gauge(self.band, self.x0)

    def with_potential(self, potential):
        return ArrivalScenario(
            potential, self.band, self.x_r, self.t0, self.gauge, self.x0,
            self.tail_tol, self.m_cap,
        )


def _free_packet(grid, weights, x, x_r, chunk=2048):
    # psi(x) = int d eps weights(eps) exp(ik(x - x_r)) / sqrt(2 pi k)
    k = np.sqrt(2.0 * grid.energies)
    amp = grid.simpson_weights * weights / np.sqrt(2.0 * np.pi * k)
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape, dtype=complex)
    flat_x, flat_out = x.ravel(), out.reshape(-1)
    for lo in range(0, flat_x.size, chunk):
        xs = flat_x[lo:lo + chunk]
        flat_out[lo:lo + chunk] = np.exp(1j * np.outer(xs - x_r, k)) @ amp
    return out


@dataclass(frozen=True)
class ArrivalState:
    """Unprojected arrival state: real profile A and the positioning phase exp(-ik x_R)."""

    grid: BandGrid
    profile: np.ndarray
    norm_constant: float
    x_r: float
    leakage: float

    @property
    def amplitude(self):
        """Free plane-wave amplitude A(eps) exp(-ik x_R)."""
        k = np.sqrt(2.0 * self.grid.energies)
        return ChannelAmplitude(self.grid, self.profile * np.exp(-1j * k * self.x_r))

    def wavefunction(self, x):
        return _free_packet(self.grid, self.profile, x, self.x_r)


def packet_leakage(grid, profile, x_r, x_edge, window=LEAKAGE_WINDOW, dx=0.25):
    """Probability of the free packet left of ``x_edge`` (window of given width)."""
    x = np.arange(x_edge - window, x_edge + 0.5 * dx, dx)
    dens = np.abs(_free_packet(grid, profile, x, x_r)) ** 2
    return float(trapezoid(dens, x))


def arrival_state(band, x_r, potential=None, leakage_tol=LEAKAGE_TOL):
    """cos^2 arrival state at x_R; checks it does not overlap the potential."""
    profile, norm = cos2_amplitude(band)
    leakage = 0.0
    if potential is not None and not potential.is_free:
        leakage = packet_leakage(band, profile, x_r, potential.support[1])
        if leakage >= leakage_tol:
            raise ValidationError(
                f"arrival state at x_R={x_r} overlaps the potential "
                f"(probability {leakage:.3g} left of x={potential.support[1]})"
            )
    return ArrivalState(band, profile, norm, float(x_r), leakage)


@dataclass(frozen=True)
class ProjectedState:
    amplitude: ChannelAmplitude
    mean_transmission: float
    x_r: float
    potential: PotentialSpec = field(repr=False)

    @property
    def left(self):
        """The L-channel amplitude, zero by construction."""
        g = self.amplitude
        return ChannelAmplitude(g.grid, np.zeros(g.grid.n), "L")


def project_right(scenario, table=None, state=None):
    """Von Neumann projection of the arrival state onto right-going scattering states."""
    grid = scenario.band
    if table is None:
        table = scattering_table(scenario.potential, grid)
    if table.grid != grid:
        raise ValidationError("scattering table and band grids differ")
    if state is None:
        state = arrival_state(grid, scenario.x_r, scenario.potential)
    a = state.profile
    mean_t = float(quadrature(grid, a**2 * table.abs_t**2))
    if not mean_t > T_FLOOR:
        raise NumericalFailure("mean transmission underflows", mean_transmission=mean_t)
    k = np.sqrt(2.0 * grid.energies)
    samples = np.conj(table.t) * a * np.exp(-1j * k * scenario.x_r) / math.sqrt(mean_t)
    return ProjectedState(
        ChannelAmplitude(grid, samples, "R"), mean_t, scenario.x_r, scenario.potential
    )


def traversal_time(table):
    """Larmor-z / traversal time |t|^-1 d|t|/d eps; NaN where |t| underflows."""
    abs_t = table.abs_t
    out = np.full(abs_t.shape, np.nan)
    ok = abs_t > T_FLOOR
    out[ok] = table.dabs_t[ok] / abs_t[ok]
    return out


def keldysh_time(potential, eps):
    """Sum over barrier segments above ``eps`` of width / kappa, kappa = sqrt(2(u - eps)).

    NaN where no segment lies above the energy.
    """
    eps = np.atleast_1d(np.asarray(eps, dtype=float))
    total = np.zeros(eps.shape)
    under = np.zeros(eps.shape, dtype=bool)
    for a, b, u in potential.segments:
        below = eps < u
        kappa = np.sqrt(2.0 * np.clip(u - eps, 0.0, None))
        total[below] += (b - a) / kappa[below]
        under |= below
    total[~under] = np.nan
    return total


@dataclass(frozen=True)
class ArrivalReport:
    scenario: ArrivalScenario
    projected: ProjectedState
    distribution: object
    tau_bar: float
    imag_residue: float
    phase_time_term: float
    ballistic_term: float
    gauge_term: float
    modulus_term: float
    phase_term: float
    segments: int
    mean_energy: float
    phase_time_curve: np.ndarray
    traversal_curve: np.ndarray
    keldysh_curve: np.ndarray

    @property
    def mean_transmission(self):
        return self.projected.mean_transmission

    @property
    def delta_tau(self):
        return self.distribution.delta_tau

    @property
    def keldysh_estimate(self):
        """width / kappa at the transmission-weighted mean energy (NaN above the barrier)."""
        return float(keldysh_time(self.scenario.potential, self.mean_energy)[0])

    def summary(self):
        d = self.distribution
        return {
            "mean_T": self.mean_transmission,
            "tau_bar": self.tau_bar,
            "tau_bar_distribution": d.mean,
            "terms": {
                "phase_time": self.phase_time_term,
                "ballistic": self.ballistic_term,
                "gauge": self.gauge_term,
            },
            "delta_tau": d.delta_tau,
            "modulus_term": self.modulus_term,
            "phase_term": self.phase_term,
            "captured_mass": d.captured,
            "m_max": int(d.time_grid.m_max),
            "moments_converged": d.moments_converged,
            "mean_energy": self.mean_energy,
            "keldysh_estimate": self.keldysh_estimate,
            "imag_residue": self.imag_residue,
        }


def arrival_analysis(scenario, table=None):
    """Arrival-time distribution, mean with its three-term split, and time scales."""
    grid = scenario.band
    if table is None:
        table = scattering_table(scenario.potential, grid)
    state = arrival_state(grid, scenario.x_r, scenario.potential)
    projected = project_right(scenario, table, state)
    g = projected.amplitude
    gauge = scenario.gauge_phase()

    dist = distribution(g, gauge, scenario.tail_tol, scenario.m_cap)
    tau_bar = expectation_energy_rep(g, gauge)
    residue = expectation_complex(g, gauge).imag
    terms = variance_decomposition(g, gauge)

    weight = state.profile**2 * table.abs_t**2 / projected.mean_transmission
    k = np.sqrt(2.0 * grid.energies)
    return ArrivalReport(
        scenario=scenario,
        projected=projected,
        distribution=dist,
        tau_bar=tau_bar,
        imag_residue=residue,
        phase_time_term=float(quadrature(grid, weight * table.dtheta)),
        ballistic_term=float(quadrature(grid, weight * scenario.x_r / k)),
        gauge_term=float(quadrature(grid, weight * gauge.eta("R"))),
        modulus_term=terms.modulus_term,
        phase_term=terms.phase_term,
        segments=terms.segments,
        mean_energy=float(quadrature(grid, weight * grid.energies)),
        phase_time_curve=table.dtheta,
        traversal_curve=traversal_time(table),
        keldysh_curve=keldysh_time(scenario.potential, grid.energies),
    )


@dataclass(frozen=True)
class SpatialDensity:
    x: np.ndarray
    density: np.ndarray
    left: float
    interior: float
    right: float

    @property
    def total(self):
        return self.left + self.interior + self.right


def _region_weights(x, density, support):
    x_min, x_max = support

    def weight(mask):
        if mask.sum() < 2:
            return 0.0
        return float(trapezoid(density[mask], x[mask]))

    return (
        weight(x <= x_min),
        weight((x >= x_min) & (x <= x_max)),
        weight(x >= x_max),
    )


def reconstruct_position(state, potential, x, chunk=1024, coverage_tol=2e-3):
    """|psi(x)|^2 of a projected state (scattering basis) or raw arrival state (plane waves).

    Reports the integrated weight left of, inside and right of the potential
    support; warns if the grid captures less than 1 - coverage_tol of the norm.
    """
    x = np.asarray(x, dtype=float)
    if isinstance(state, ArrivalState):
        psi = state.wavefunction(x)
    elif isinstance(state, ProjectedState):
        g = state.amplitude
        sol = amplitudes(potential, g.grid.energies)
        coeff = g.grid.simpson_weights * g.samples
        psi = np.empty(x.shape, dtype=complex)
        for lo in range(0, x.size, chunk):
            psi[lo:lo + chunk] = coeff @ sol.value(x[lo:lo + chunk])
    else:
        raise ValidationError(f"cannot reconstruct {type(state).__name__}")
    density = np.abs(psi) ** 2
    left, interior, right = _region_weights(x, density, potential.support)
    result = SpatialDensity(x, density, left, interior, right)
    captured = float(trapezoid(density, x))
    if abs(1.0 - captured) > coverage_tol:
        warnings.warn(
            f"spatial grid captures {captured:.6f} of the state norm", stacklevel=2
        )
    return result
