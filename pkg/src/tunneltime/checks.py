"""Invariant and oracle checks run by ``tunneltime verify``.

Each check returns a :class:`CheckResult`; the suite never raises on a failed
check, only on invalid configuration or numerical failure of the pipeline itself.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np

from .arrival import arrival_analysis, project_right
from .band import constant_gauge, make_band
from .oracle import (
    brute_force_overlaps,
    evolution_overlap_check,
    ode_scattering,
    random_band_state,
)
from .scattering import PotentialSpec, amplitudes
from .timeop import (
    commutator_expectation,
    distribution,
    eigenfunction,
    energy_moments,
    energy_shift,
    expectation_energy_rep,
    time_variance,
    variance_decomposition,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""

    def as_dict(self):
        return asdict(self)


def _result(name, value, tolerance, detail="", below=True):
    value = float(value)
    passed = value < tolerance if below else value >= tolerance
    return CheckResult(name, bool(passed), value, float(tolerance), detail)


def check_flux(config):
    grid = make_band(config["band.eps0"], config["band.delta_eps"], 801)
    worst = 0.0
    for u in config.u_values():
        sol = amplitudes(config.potential(u), grid.energies)
        worst = max(worst, np.max(np.abs(np.abs(sol.r) ** 2 + np.abs(sol.t) ** 2 - 1)))
    return _result("flux_unitarity", worst, 1e-10)


def check_ode_oracle(config):
    band = config.band()
    energies = np.linspace(band.eps0, band.eps1, 33)
    worst = 0.0
    for u in config.u_values():
        pot = config.potential(u)
        t_ode, _ = ode_scattering(pot, energies, step=config["numerics.ode_step"])
        t_tm = amplitudes(pot, energies).t
        worst = max(worst, np.max(np.abs(t_ode - t_tm) / np.abs(t_tm)))
    return _result("ode_oracle", worst, 1e-6)


def check_single_delta(config):
    lam = config["potential.lambda"]
    energies = np.linspace(0.05, 2.0, 10)
    k2 = 2.0 * energies
    t = amplitudes(PotentialSpec(((0.0, lam),)), energies).t
    err = np.max(np.abs(np.abs(t) ** 2 - k2 / (k2 + lam**2)))
    return _result("single_delta_closed_form", err, 1e-10)


def check_orthonormality(config):
    grid = make_band(config["band.eps0"], config["band.delta_eps"], 1601)
    gauge = constant_gauge(grid, config["arrival.t0"])
    basis = np.array([eigenfunction(grid, m, gauge).samples for m in range(-20, 21)])
    gram = (np.conj(basis) * grid.simpson_weights) @ basis.T
    return _result("time_basis_orthonormality", np.max(np.abs(gram - np.eye(41))), 1e-6)


def check_scenario(config, u):
    scenario = config.scenario(u)
    report = arrival_analysis(scenario)
    d = report.distribution
    out = [
        _result(f"normalization[u={u}]", d.captured, 1.0 - scenario.tail_tol, below=False),
        _result(f"positivity[u={u}]", -d.p.min(), 1e-14),
        _result(
            f"mean_consistency[u={u}]",
            abs(d.mean - report.tau_bar) / abs(report.tau_bar),
            1e-4,
        ),
        _result(
            f"variance_consistency[u={u}]",
            abs(d.variance - (report.modulus_term + report.phase_term)) / d.variance,
            1e-3,
        ),
    ]
    terms = report.phase_time_term + report.ballistic_term + report.gauge_term
    out.append(
        _result(f"mean_decomposition[u={u}]", abs(terms - report.tau_bar) / abs(report.tau_bar), 1e-4)
    )
    return out


def check_gauge_laws(config):
    scenario = config.scenario()
    g = project_right(scenario).amplitude
    base = constant_gauge(scenario.band, 0.0)
    shifted = constant_gauge(scenario.band, 37.5)
    mean_shift = abs(
        expectation_energy_rep(g, shifted) - (expectation_energy_rep(g, base) - 37.5)
    )
    v0 = variance_decomposition(g, base)
    v1 = variance_decomposition(g, shifted)
    return [
        _result("gauge_mean_shift", mean_shift, 1e-10),
        _result("gauge_modulus_term", abs(v0.modulus_term - v1.modulus_term), 1e-300),
        _result("gauge_variance", abs(time_variance(g, base) - time_variance(g, shifted)), 1e-10),
    ]


def check_commutator(config, n_states=10, seed=2024):
    grid = config.band()
    gauge = constant_gauge(grid, config["arrival.t0"])
    rng = np.random.default_rng(seed)
    worst_comm, worst_unc = 0.0, math.inf
    for _ in range(n_states):
        g = random_band_state(grid, rng)
        worst_comm = max(worst_comm, abs(commutator_expectation(g, gauge) - 1j))
        _, dh = energy_moments(g)
        worst_unc = min(worst_unc, math.sqrt(time_variance(g, gauge)) * dh)
    return [
        _result("canonical_commutator", worst_comm, 1e-6),
        _result("uncertainty_relation", worst_unc, 0.5 * (1 - 1e-3), below=False),
    ]


def check_energy_shift(config):
    grid = config.band()
    gauge = constant_gauge(grid, config["arrival.t0"])
    g = random_band_state(grid, np.random.default_rng(7))
    back = energy_shift(g, grid.n - 1, gauge)
    return _result("mod_band_identity", np.max(np.abs(back.samples - g.samples)), 1e-12)


def check_brute_force(config):
    scenario = config.scenario()
    g = project_right(scenario).amplitude
    gauge = scenario.gauge_phase()
    d = distribution(g, gauge, scenario.tail_tol, scenario.m_cap)
    m = np.arange(-40, 41)
    p_bf = np.abs(brute_force_overlaps(g, gauge, m)) ** 2
    p = d.p[np.searchsorted(d.m, m)]
    return _result("brute_force_overlaps", np.max(np.abs(p - p_bf)), 1e-6)


def check_evolution(config, seed=11):
    grid = config.band()
    gauge = constant_gauge(grid, config["arrival.t0"])
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(3):
        g = random_band_state(grid, rng)
        for m in (-5, 0, 7):
            worst = max(worst, evolution_overlap_check(g, gauge, m))
    return _result("evolution_overlap", worst, 1e-9)


def run_checks(config):
    results = [
        check_flux(config),
        check_ode_oracle(config),
        check_single_delta(config),
        check_orthonormality(config),
    ]
    for u in config.u_values():
        results.extend(check_scenario(config, u))
    results.extend(check_gauge_laws(config))
    results.extend(check_commutator(config))
    results.append(check_energy_shift(config))
    results.append(check_brute_force(config))
    results.append(check_evolution(config))
    return results
