"""Run configuration: one flat schema of dotted keys with typed defaults.

Config files hold ``key = value`` lines (``#`` starts a comment, string values
may be quoted), e.g.::

    potential.u = 0.65
    band.n_grid = 1601
    arrival.gauge = "constant"

Command-line ``--set key=value`` overrides use the same keys.
"""

import math
from dataclasses import dataclass, field

from .arrival import GAUGES, ArrivalScenario
from .band import make_band
from .exceptions import ValidationError
from .scattering import PotentialSpec

SCHEMA = {
    "potential.lambda": 1.0,
    "potential.a": 10.0,
    "potential.u": 0.3,
    "band.eps0": 0.2,
    "band.delta_eps": 0.4,
    "band.n_grid": 1601,
    "arrival.x_r": 100.0,
    "arrival.t0": 0.0,
    "arrival.gauge": "constant",
    "arrival.x0": 100.0,
    "numerics.tail_tol": 1e-3,
    "numerics.m_cap": 16384,
    "numerics.ode_step": 1e-3,
    "states.x_min": -400.0,
    "states.x_max": 400.0,
    "states.dx": 0.1,
    "sweep.u_values": "0.1,0.3,0.53,0.55,0.65",
    "sweep.jobs": 1,
    "output.directory": "out",
    "output.format": "csv",
}

FORMATS = ("csv", "json")


def _coerce(key, raw):
    default = SCHEMA[key]
    text = raw.strip() if isinstance(raw, str) else raw
    if isinstance(text, str) and len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        text = text[1:-1]
    try:
        if isinstance(default, bool):
            return str(text).lower() in ("1", "true", "yes")
        if isinstance(default, int):
            value = float(text)
            if value != int(value):
                raise ValueError
            return int(value)
        if isinstance(default, float):
            return float(text)
    except (TypeError, ValueError):
        raise ValidationError(f"{key}: cannot parse {raw!r} as {type(default).__name__}")
    return str(text)


def parse_assignments(lines, source="<config>"):
    values = {}
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{source}:{lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in SCHEMA:
            raise ValidationError(f"{source}:{lineno}: unknown key {key!r}")
        values[key] = _coerce(key, raw)
    return values


@dataclass(frozen=True)
class RunConfig:
    values: dict = field(default_factory=lambda: dict(SCHEMA))

    def __post_init__(self):
        merged = dict(SCHEMA)
        merged.update(self.values)
        object.__setattr__(self, "values", merged)
        self.validate()

    def __getitem__(self, key):
        return self.values[key]

    @classmethod
    def load(cls, path=None, overrides=()):
        values = {}
        if path is not None:
            try:
                with open(path) as fh:
                    values.update(parse_assignments(fh, str(path)))
            except OSError as exc:
                raise ValidationError(f"cannot read config {path}: {exc}")
        values.update(parse_assignments(overrides, "--set"))
        return cls(values)

    def with_value(self, key, value):
        values = dict(self.values)
        values[key] = value
        return RunConfig(values)

    def validate(self):
        v = self.values
        for key, default in SCHEMA.items():
            if isinstance(default, float) and not math.isfinite(v[key]):
                raise ValidationError(f"{key} must be finite")
        if v["potential.a"] <= 0:
            raise ValidationError("potential.a must be positive")
        if not 0 < v["numerics.tail_tol"] < 1:
            raise ValidationError("numerics.tail_tol must lie in (0, 1)")
        if v["numerics.m_cap"] < 1:
            raise ValidationError("numerics.m_cap must be >= 1")
        if v["numerics.ode_step"] <= 0:
            raise ValidationError("numerics.ode_step must be positive")
        if v["arrival.gauge"] not in GAUGES:
            raise ValidationError(f"arrival.gauge must be one of {GAUGES}")
        if v["output.format"] not in FORMATS:
            raise ValidationError(f"output.format must be one of {FORMATS}")
        if v["states.dx"] <= 0 or v["states.x_max"] <= v["states.x_min"]:
            raise ValidationError("states grid must have dx > 0 and x_max > x_min")
        if v["sweep.jobs"] < 1:
            raise ValidationError("sweep.jobs must be >= 1")
        self.u_values()
        self.band()

    def u_values(self):
        try:
            return [float(s) for s in str(self["sweep.u_values"]).split(",") if s.strip()]
        except ValueError:
            raise ValidationError(f"sweep.u_values: cannot parse {self['sweep.u_values']!r}")

    def band(self):
        return make_band(self["band.eps0"], self["band.delta_eps"], self["band.n_grid"])

    def potential(self, u=None):
        u = self["potential.u"] if u is None else u
        return PotentialSpec.double_barrier(self["potential.lambda"], self["potential.a"], u)

    def scenario(self, u=None, potential=None):
        return ArrivalScenario(
            potential=self.potential(u) if potential is None else potential,
            band=self.band(),
            x_r=self["arrival.x_r"],
            t0=self["arrival.t0"],
            gauge=self["arrival.gauge"],
            x0=self["arrival.x0"],
            tail_tol=self["numerics.tail_tol"],
            m_cap=self["numerics.m_cap"],
        )

    def dump(self):
        return {key: self.values[key] for key in SCHEMA}
