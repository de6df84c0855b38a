"""Command-line driver: tunneltime {scatter,states,arrival,sweep,verify}.

Every run writes its tables (CSV or JSON), a JSON summary where relevant and,
last, ``manifest.json`` with the config echo, library versions and sha256 of
each output. Exit codes: 0 success, 1 invalid input, 2 numerical failure or a
failed verification check.
"""

import argparse
import hashlib
import json
import math
import platform
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .arrival import (
    arrival_analysis,
    arrival_state,
    project_right,
    reconstruct_position,
    traversal_time,
)
from .checks import run_checks
from .config import RunConfig
from .exceptions import NumericalFailure, ValidationError
from .scattering import PotentialSpec, scattering_table

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    return "nan" if math.isnan(value) else format(value, ".17g")


def _jsonable(obj, reasons=None):
    """Plain-JSON copy of ``obj``: non-finite numbers become null plus a ``<key>_reason`` entry."""
    if isinstance(obj, dict):
        out = {}
        for key, value in obj.items():
            if isinstance(value, (float, np.floating)) and not math.isfinite(value):
                out[key] = None
                out[f"{key}_reason"] = (reasons or {}).get(key, "not finite")
            else:
                out[key] = _jsonable(value, reasons)
        return out
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v, reasons) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


class OutputWriter:
    """Writes each output file once and records its checksum for the manifest."""

    def __init__(self, directory, fmt="csv"):
        self.directory = Path(directory)
        self.fmt = fmt
        self.files = {}
        self.directory.mkdir(parents=True, exist_ok=True)

    def _write(self, name, text):
        path = self.directory / name
        data = text.encode("utf-8")
        path.write_bytes(data)
        self.files[name] = hashlib.sha256(data).hexdigest()
        return path

    def table(self, stem, columns):
        names = list(columns)
        cols = [np.asarray(columns[c]) for c in names]
        if self.fmt == "json":
            rows = [[_jsonable(c[i].item()) for c in cols] for i in range(len(cols[0]))]
            return self.json(f"{stem}.json", {"columns": names, "rows": rows})
        lines = [",".join(names)]
        lines.extend(",".join(_fmt(c[i]) for c in cols) for i in range(len(cols[0])))
        return self._write(f"{stem}.csv", "\n".join(lines) + "\n")

    def json(self, name, payload, reasons=None):
        text = json.dumps(_jsonable(payload, reasons), indent=2, sort_keys=True, allow_nan=False)
        return self._write(name, text + "\n")

    def manifest(self, command, config, status):
        payload = {
            "command": command,
            "status": status,
            "config": config.dump(),
            "versions": {
                "tunneltime": __version__,
                "python": platform.python_version(),
                "numpy": np.__version__,
                "scipy": scipy.__version__,
            },
            "outputs": dict(sorted(self.files.items())),
        }
        text = json.dumps(payload, indent=2, sort_keys=True)
        (self.directory / "manifest.json").write_text(text + "\n")


def _u_tag(u):
    return f"u{u:g}"


def cmd_scatter(config, writer, u=None, suffix=""):
    table = scattering_table(config.potential(u), config.band())
    flags = np.zeros(table.grid.n, dtype=bool)
    flags[table.resonances] = True
    writer.table(f"scatter{suffix}", {
        "epsilon": table.energies,
        "abs_t": table.abs_t,
        "arg_t_unwrapped": table.theta,
        "dtheta_deps": table.dtheta,
        "abs_t_prime": table.dabs_t,
        "larmor_z": traversal_time(table),
        "resonance": flags,
    })
    return {"n_resonances": table.n_resonances, "max_abs_t2": float(np.max(table.abs_t**2))}


def cmd_states(config, writer, u=None, suffix=""):
    scenario = config.scenario(u)
    x = np.arange(config["states.x_min"], config["states.x_max"] + 0.5 * config["states.dx"],
                  config["states.dx"])
    state = arrival_state(scenario.band, scenario.x_r, scenario.potential)
    projected = project_right(scenario, state=state)
    raw = reconstruct_position(state, scenario.potential, x)
    proj = reconstruct_position(projected, scenario.potential, x)
    writer.table(f"states{suffix}", {
        "x": x,
        "prob_density_unprojected": raw.density,
        "prob_density_projected": proj.density,
    })
    table = scattering_table(scenario.potential, scenario.band)
    analytic_right = float(
        scenario.band.simpson_weights @ (state.profile**2 * table.abs_t**4)
        / projected.mean_transmission
    )
    summary = {
        "u": config["potential.u"] if u is None else u,
        "mean_T": projected.mean_transmission,
        "norm_unprojected": raw.total,
        "norm_projected": proj.total,
        "projected_weights": {"left": proj.left, "interior": proj.interior, "right": proj.right},
        "projected_right_analytic": analytic_right,
        "leakage": state.leakage,
    }
    writer.json(f"states_summary{suffix}.json", summary)
    return summary


def _free_reference(config):
    return arrival_analysis(config.scenario(potential=PotentialSpec()))


def _arrival_summary(report, free, u):
    summary = report.summary()
    summary["u"] = u
    summary["hartman"] = {
        "tau_bar_free": free.tau_bar,
        "earlier_than_free": bool(report.tau_bar < free.tau_bar),
    }
    return summary


_REASONS = {"keldysh_estimate": "mean energy lies above every barrier segment"}


def cmd_arrival(config, writer, u=None, suffix="", free=None):
    report = arrival_analysis(config.scenario(u))
    if free is None:
        free = _free_reference(config)
    d = report.distribution
    writer.table(f"arrival{suffix}", {"m": d.m, "tau_m": d.tau, "p_m": d.p})
    summary = _arrival_summary(report, free, config["potential.u"] if u is None else u)
    writer.json(f"arrival_summary{suffix}.json", summary, _REASONS)
    return summary


def _sweep_point(values, u):
    # worker entry: rebuild the config so nothing but plain data crosses processes
    config = RunConfig(values)
    return arrival_analysis(config.scenario(u))


def cmd_sweep(config, writer):
    u_values = config.u_values()
    free = _free_reference(config)
    jobs = config["sweep.jobs"]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_sweep_point, [config.values] * len(u_values), u_values))
    else:
        reports = [_sweep_point(config.values, u) for u in u_values]
    summaries = []
    for u, report in zip(u_values, reports):
        d = report.distribution
        writer.table(f"arrival_{_u_tag(u)}", {"m": d.m, "tau_m": d.tau, "p_m": d.p})
        summaries.append(_arrival_summary(report, free, u))
    payload = {"free": {"tau_bar": free.tau_bar, "delta_tau": free.delta_tau}, "points": summaries}
    writer.json("sweep_summary.json", payload, _REASONS)
    return payload


def cmd_verify(config, writer):
    results = run_checks(config)
    report = {
        "passed": all(r.passed for r in results),
        "checks": [r.as_dict() for r in results],
    }
    writer.json("verify_report.json", report)
    return report


def build_parser():
    parser = argparse.ArgumentParser(prog="tunneltime", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in [
        ("scatter", "tabulate t(eps) across the band"),
        ("states", "spatial densities of the arrival state before and after projection"),
        ("arrival", "arrival-time distribution and moments"),
        ("sweep", "arrival runs over sweep.u_values"),
        ("verify", "oracle and invariant checks"),
    ]:
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", metavar="PATH", help="key = value config file")
        p.add_argument("--set", metavar="KEY=VALUE", action="append", default=[],
                       dest="overrides", help="override one config key (repeatable)")
        p.add_argument("--out", metavar="DIR", help="output directory (default output.directory)")
    return parser


COMMANDS = {
    "scatter": cmd_scatter,
    "states": cmd_states,
    "arrival": cmd_arrival,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = RunConfig.load(args.config, args.overrides)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    writer = OutputWriter(args.out or config["output.directory"], config["output.format"])
    try:
        result = COMMANDS[args.command](config, writer)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        writer.manifest(args.command, config, "invalid")
        return EXIT_INVALID
    except NumericalFailure as exc:
        diag = ", ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}"
                         for k, v in exc.diagnostics.items())
        print(f"numerical failure: {exc}" + (f" [{diag}]" if diag else ""), file=sys.stderr)
        writer.json("failure.json", {"message": str(exc), "diagnostics": exc.diagnostics})
        writer.manifest(args.command, config, "numerical_failure")
        return EXIT_NUMERICAL
    if args.command == "verify" and not result["passed"]:
        failed = [c["name"] for c in result["checks"] if not c["passed"]]
        print("failed checks: " + ", ".join(failed), file=sys.stderr)
        writer.manifest(args.command, config, "checks_failed")
        return EXIT_NUMERICAL
    writer.manifest(args.command, config, "ok")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
