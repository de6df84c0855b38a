"""Acceptance criteria 1-15, each at its stated tolerance.

Every criterion records one PASS/FAIL line; pytest prints them in the terminal
summary and ``python tests/test_acceptance.py`` prints them directly.
"""

import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import ACCEPTANCE_LINES, PAPER_U  # noqa: E402
from tunneltime import (  # noqa: E402
    ArrivalScenario,
    PotentialSpec,
    RunConfig,
    amplitudes,
    arrival_analysis,
    arrival_gauge,
    constant_gauge,
    eigenfunction,
    energy_shift,
    expectation_energy_rep,
    make_band,
    scattering_table,
    time_variance,
    traversal_time,
    variance_decomposition,
)
from tunneltime.cli import main as cli_main  # noqa: E402
from tunneltime.oracle import ode_scattering, random_band_state  # noqa: E402
from tunneltime.scattering import local_maxima  # noqa: E402
from tunneltime.timeop import commutator_expectation, energy_moments  # noqa: E402

CONFIG = RunConfig({})


def paper(u):
    return PotentialSpec.double_barrier(1.0, 10.0, u)


_reports = {}


def report(u):
    if u not in _reports:
        pot = PotentialSpec() if u is None else paper(u)
        _reports[u] = arrival_analysis(CONFIG.scenario(potential=pot))
    return _reports[u]


def record(number, passed, detail):
    line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return passed


def criterion_1():
    start = time.perf_counter()
    eps = make_band(0.2, 0.4, 801).energies
    worst = 0.0
    for u in PAPER_U:
        sol = amplitudes(paper(u), eps)
        worst = max(worst, np.max(np.abs(np.abs(sol.r) ** 2 + np.abs(sol.t) ** 2 - 1)))
    elapsed = time.perf_counter() - start
    return record(1, worst < 1e-10 and elapsed < 1.0,
                  f"flux max||r|^2+|t|^2-1| = {worst:.2e} (< 1e-10), {elapsed:.3f} s (< 1 s)")


def criterion_2():
    start = time.perf_counter()
    eps = np.linspace(0.2, 0.6, 33)
    worst = 0.0
    for u in PAPER_U:
        t_ode, _ = ode_scattering(paper(u), eps)
        t_tm = amplitudes(paper(u), eps).t
        worst = max(worst, np.max(np.abs(t_ode - t_tm) / np.abs(t_tm)))
    elapsed = time.perf_counter() - start
    return record(2, worst < 1e-6 and elapsed < 30.0,
                  f"ODE vs transfer matrix rel = {worst:.2e} (< 1e-6), {elapsed:.2f} s (< 30 s)")


def criterion_3():
    start = time.perf_counter()
    eps = np.linspace(0.05, 2.0, 10)
    t = amplitudes(PotentialSpec(((0.0, 1.0),)), eps).t
    err = np.max(np.abs(np.abs(t) ** 2 - 2 * eps / (2 * eps + 1.0)))
    elapsed = time.perf_counter() - start
    return record(3, err < 1e-10 and elapsed < 0.1,
                  f"single delta |t|^2 err = {err:.2e} (< 1e-10), {elapsed * 1e3:.1f} ms (< 100 ms)")


def criterion_4():
    grid = make_band(0.2, 0.4, 1601)
    gauge = constant_gauge(grid, 0.0)
    basis = np.array([eigenfunction(grid, m, gauge).samples for m in range(-20, 21)])
    gram = (np.conj(basis) * grid.simpson_weights) @ basis.T
    dev = np.max(np.abs(gram - np.eye(41)))
    return record(4, dev < 1e-6, f"Gram deviation = {dev:.2e} (< 1e-6)")


def criterion_5():
    parts, ok = [], True
    for u in PAPER_U:
        d = report(u).distribution
        ok &= d.captured >= 0.999 and d.p.min() >= -1e-14
        parts.append(f"u={u}: sum={d.captured:.6f} min={d.p.min():.1e}")
    return record(5, ok, "; ".join(parts))


def criterion_6():
    worst_mean = worst_var = 0.0
    for u in PAPER_U:
        r = report(u)
        d = r.distribution
        g, gauge = r.projected.amplitude, r.scenario.gauge_phase()
        worst_mean = max(worst_mean, abs(d.mean - r.tau_bar) / abs(r.tau_bar))
        for var in (time_variance(g, gauge), r.modulus_term + r.phase_term):
            worst_var = max(worst_var, abs(d.variance - var) / d.variance)
    return record(6, worst_mean < 1e-4 and worst_var < 1e-3,
                  f"mean rel = {worst_mean:.2e} (< 1e-4), variance rel = {worst_var:.2e} (< 1e-3)")


def criterion_7():
    t0 = 25.0
    worst_mean = worst_var = 0.0
    modulus_same = True
    for u in PAPER_U:
        r = report(u)
        g, grid = r.projected.amplitude, r.scenario.band
        g0, g1 = constant_gauge(grid, 0.0), constant_gauge(grid, t0)
        worst_mean = max(worst_mean, abs(expectation_energy_rep(g, g1) - (expectation_energy_rep(g, g0) - t0)))
        worst_var = max(worst_var, abs(time_variance(g, g1) - time_variance(g, g0)))
        moduli = {variance_decomposition(g, gauge).modulus_term
                  for gauge in (g0, g1, arrival_gauge(grid, 100.0))}
        modulus_same &= len(moduli) == 1
    ok = worst_mean < 1e-10 and worst_var < 1e-10 and modulus_same
    return record(7, ok, f"mean shift err = {worst_mean:.1e}, variance change = {worst_var:.1e} "
                         f"(< 1e-10), modulus term identical = {modulus_same}")


def criterion_8():
    grid = make_band(0.2, 0.4, 1601)
    gauge = constant_gauge(grid, 0.0)
    rng = np.random.default_rng(2024)
    worst_comm, worst_unc = 0.0, math.inf
    for _ in range(10):
        g = random_band_state(grid, rng)
        worst_comm = max(worst_comm, abs(commutator_expectation(g, gauge) - 1j))
        worst_unc = min(worst_unc, math.sqrt(time_variance(g, gauge)) * energy_moments(g)[1])
    ok = worst_comm < 1e-6 and worst_unc >= 0.5 * (1 - 1e-3)
    return record(8, ok, f"|<[tau,H]> - i| = {worst_comm:.1e} (< 1e-6), "
                         f"min dtau*dH = {worst_unc:.3f} (>= 0.4995)")


def criterion_9():
    grid = make_band(0.2, 0.4, 1601)
    gauge = constant_gauge(grid, 0.0)
    g = random_band_state(grid, np.random.default_rng(9))
    err = np.max(np.abs(energy_shift(g, grid.n - 1, gauge).samples - g.samples))
    # bump 10 steps below the top, shifted up by 30 steps, lands 20 steps above the bottom
    bump = np.zeros(grid.n, dtype=complex)
    bump[grid.n - 11] = 1.0
    moved = energy_shift(g.with_samples(bump), -30, gauge).samples
    wrapped = int(np.argmax(np.abs(moved))) == 20 and np.count_nonzero(moved) == 1
    return record(9, err < 1e-12 and wrapped,
                  f"full-band shift err = {err:.1e} (< 1e-12), bump wraps to bottom = {wrapped}")


def criterion_10():
    start = time.perf_counter()
    opaque = arrival_analysis(CONFIG.scenario(0.65))
    free = arrival_analysis(CONFIG.scenario(potential=PotentialSpec()))
    elapsed = time.perf_counter() - start
    ok = opaque.tau_bar < free.tau_bar and elapsed < 10.0
    return record(10, ok, f"tau_bar(u=0.65) = {opaque.tau_bar:.3f} < tau_bar(free) = "
                          f"{free.tau_bar:.3f}, {elapsed:.2f} s (< 10 s)")


def secondary_maxima(d, floor=0.05):
    """Local maxima of P_m after the main peak holding at least ``floor`` of it."""
    idx = local_maxima(d.p)
    main = int(np.argmax(d.p))
    return [i for i in idx if i > main and d.p[i] >= floor * d.p[main]]


def criterion_11():
    r = report(0.3)
    d = r.distribution
    sec = secondary_maxima(d)
    spacing = np.diff(d.tau[sec])
    round_trip = 2 * 10.0 / math.sqrt(2 * (r.mean_energy - 0.3))
    rel = np.abs(spacing / round_trip - 1)
    ok = len(sec) >= 2 and np.all(rel < 0.3)
    return record(11, ok, f"{len(sec)} secondary maxima at tau = {np.round(d.tau[sec], 1).tolist()}, "
                          f"spacing {np.round(spacing, 1).tolist()} vs round trip {round_trip:.1f} "
                          f"(max rel {rel.max() if rel.size else math.nan:.2f} < 0.30)")


def criterion_12():
    dt = {u: report(u).delta_tau for u in (0.3, 0.53, 0.55, 0.65)}
    ordering = dt[0.53] > dt[0.3] and dt[0.53] > dt[0.65]
    rel = abs(dt[0.55] - dt[0.65]) / dt[0.65]
    return record(12, ordering and rel < 0.15,
                  f"dtau(0.53)={dt[0.53]:.1f} > dtau(0.3)={dt[0.3]:.1f}, dtau(0.65)={dt[0.65]:.1f}: "
                  f"{ordering}; |dtau(0.55)-dtau(0.65)|/dtau(0.65) = {rel:.2f} (< 0.15)")


def criterion_13():
    band = make_band(0.2, 0.4, 1601)
    parts, ok = [], True
    for u, center in ((0.65, 0.4), (0.3, 0.55)):
        table = scattering_table(paper(u), band)
        expected = np.interp(center, band.energies, table.dtheta)
        # the narrow band makes a wide packet; x_R = 1000 keeps it clear of the barrier
        sub = band.sub_band(center, band.delta_eps / 16)
        r = arrival_analysis(ArrivalScenario(paper(u), sub, x_r=1000.0))
        rel = abs((r.tau_bar - r.ballistic_term) / expected - 1)
        ok &= rel < 0.02
        parts.append(f"u={u} eps_c={center}: {r.tau_bar - r.ballistic_term:.3f} vs {expected:.3f} "
                     f"(rel {rel:.1e})")
    return record(13, ok, "; ".join(parts) + " (< 2%)")


def criterion_14():
    band = make_band(0.2, 0.4, 1601)
    tz = traversal_time(scattering_table(paper(0.65), band))[band.n // 2]
    keldysh = 10.0 / math.sqrt(2 * (0.65 - band.center))
    rel = abs(tz / keldysh - 1)
    return record(14, rel < 0.25, f"tau_z(0.4) = {tz:.3f} vs d/kappa = {keldysh:.3f} (rel {rel:.3f} < 0.25)")


def criterion_15(tmp_dir):
    outs = [Path(tmp_dir) / name for name in ("run1", "run2")]
    codes = [cli_main(["arrival", "--out", str(o), "--set", "potential.u=0.3"]) for o in outs]
    same = all(c == 0 for c in codes) and (
        (outs[0] / "arrival.csv").read_bytes() == (outs[1] / "arrival.csv").read_bytes()
    )
    return record(15, same, f"two arrival runs byte-identical = {same}")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11, criterion_12,
            criterion_13, criterion_14]


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{i}" for i in range(1, 15)])
def test_criterion(criterion):
    assert criterion()


def test_criterion_15(tmp_path):
    assert criterion_15(tmp_path)


if __name__ == "__main__":
    import tempfile

    results = [c() for c in CRITERIA]
    with tempfile.TemporaryDirectory() as tmp:
        results.append(criterion_15(tmp))
    print(f"{sum(results)}/{len(results)} criteria pass")
    sys.exit(0 if all(results) else 1)
