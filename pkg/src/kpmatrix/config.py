"""Scenario configuration: TOML file plus command-line overrides.

A config file is a flat table of keys, with optional ``[[barriers]]``
array entries describing a custom potential::

    scenario = "bands"
    n_barriers = 10
    barrier_width = "1/6"      # numbers or exact fractions as strings
    barrier_height = 100
    basis_size = 100

    # custom potential instead of a Kronig-Penney crystal
    box_length = 4
    [[barriers]]
    center = 2.0
    width = 0.5
    height = 30

Every key is listed in ``FIELDS``; anything else is rejected with the line
it appears on.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, fields, replace
from fractions import Fraction
from pathlib import Path
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError
from .potential import Barrier, PotentialSpec

SCENARIOS = (
    "bands",
    "wavefunctions",
    "levels-vs-cells",
    "dimer-gaps",
    "surface",
    "field-bands",
    "evolve",
    "oracle",
)


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str = "bands"
    n_barriers: int = 10
    barrier_width: float = 1 / 6
    barrier_height: float | None = 100.0
    strength: float | None = None  # P; barrier height becomes 2P/b when set
    vacuum_height: float = 50.0
    field_slope: float = 0.0
    basis_size: int = 100
    converge: bool = False
    rel_tol: float = 1e-6
    level_count: int = 30
    levels: tuple[int, ...] = (1, 9, 10, 16)
    grid_points: int = 1001
    envelope_amplitude: float = 0.6
    max_cells: int = 10
    energy_cap: float | None = None
    u_values: tuple[float, ...] = (0.0, 0.05, 0.10, 0.15, 0.20)
    n_gaps: int = 3
    field_values: tuple[float, ...] = (0.0, 0.01, 0.1, 1.0)
    times: tuple[float, ...] = (0.0, 0.26)
    trajectory_steps: int = 26
    sigma2: float = 0.05
    x0: float | None = None
    spacing_factor: float = 5.0
    numeric_tamm: bool = False
    box_length: float | None = None
    barriers: tuple[Barrier, ...] | None = None

    def resolved_height(self) -> float:
        if self.strength is not None:
            return 2.0 * self.strength / self.barrier_width
        if self.barrier_height is None:
            raise ConfigError("either barrier_height or strength must be given")
        return self.barrier_height

    def resolved_strength(self) -> float:
        if self.strength is not None:
            return self.strength
        return 0.5 * self.resolved_height() * self.barrier_width

    def custom_spec(self) -> PotentialSpec | None:
        if self.barriers is None:
            return None
        if self.box_length is None:
            raise ConfigError("a custom barrier list needs box_length")
        return PotentialSpec(self.box_length, self.barriers, self.field_slope)

    def to_dict(self) -> dict[str, Any]:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "barriers" and v is not None:
                v = [{"center": b.center, "width": b.width, "height": b.height} for b in v]
            elif isinstance(v, tuple):
                v = list(v)
            out[f.name] = v
        return out


FIELDS = {f.name: f for f in fields(ScenarioConfig)}

# published parameters for each scenario
SCENARIO_DEFAULTS: dict[str, dict[str, Any]] = {
    "bands": {},
    "wavefunctions": {},
    "levels-vs-cells": {},
    "dimer-gaps": {"n_barriers": 80, "barrier_width": 0.01, "barrier_height": 100.0,
                   "basis_size": 200},
    "surface": {"barrier_height": None, "strength": 10.0, "basis_size": 400},
    "field-bands": {"n_barriers": 20, "level_count": 60},
    "evolve": {"barrier_height": 0.0, "field_slope": 10.0},
    "oracle": {"barrier_height": None, "strength": 10.0},
}

_INT = {"n_barriers", "basis_size", "level_count", "grid_points", "max_cells", "n_gaps",
        "trajectory_steps"}
_BOOL = {"converge", "numeric_tamm"}
_OPT_FLOAT = {"barrier_height", "strength", "energy_cap", "x0", "box_length"}
_FLOAT_LIST = {"u_values", "field_values", "times"}
_INT_LIST = {"levels"}


def parse_number(value) -> float:
    """Accept ints, floats and fraction strings such as ``"1/6"``."""
    if isinstance(value, bool):
        raise ValueError(f"expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        return float(Fraction(value.strip()))
    raise ValueError(f"expected a number, got {value!r}")


def parse_list(value, conv) -> tuple:
    if isinstance(value, str):
        value = [v for v in value.split(",") if v.strip()]
    if not isinstance(value, (list, tuple)):
        raise ValueError(f"expected a list, got {value!r}")
    return tuple(conv(v) for v in value)


def _parse_int(value) -> int:
    if isinstance(value, bool):
        raise ValueError(f"expected an integer, got {value!r}")
    if isinstance(value, str):
        value = value.strip()
    if isinstance(value, float) and not value.is_integer():
        raise ValueError(f"expected an integer, got {value!r}")
    return int(value)


def _convert(key: str, value):
    if key == "scenario":
        if value not in SCENARIOS:
            raise ValueError(f"unknown scenario {value!r}; choose from {', '.join(SCENARIOS)}")
        return value
    if key == "barriers":
        if not isinstance(value, list):
            raise ValueError("barriers must be an array of tables")
        out = []
        for item in value:
            extra = set(item) - {"center", "width", "height"}
            if extra:
                raise ValueError(f"unknown barrier keys {sorted(extra)}")
            out.append(Barrier(parse_number(item["center"]), parse_number(item["width"]),
                               parse_number(item["height"])))
        return tuple(out)
    if key in _BOOL:
        if not isinstance(value, bool):
            raise ValueError(f"expected true or false, got {value!r}")
        return value
    if key in _INT:
        return _parse_int(value)
    if key in _INT_LIST:
        return parse_list(value, _parse_int)
    if key in _FLOAT_LIST:
        return parse_list(value, parse_number)
    if key in _OPT_FLOAT and value is None:
        return None
    return parse_number(value)


def _line_of(text: str, key: str) -> int | None:
    pat = re.compile(rf"^[ \t]*{re.escape(key)}[ \t]*=", re.MULTILINE)
    m = pat.search(text)
    if m is None:
        return None
    return text.count("\n", 0, m.start()) + 1


def _where(source: str, text: str, key: str) -> str:
    line = _line_of(text, key) if text else None
    return f"{source}:{line}" if line else source


def load_file(path) -> tuple[dict[str, Any], str]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        pos = getattr(exc, "pos", None)
        line = text.count("\n", 0, pos) + 1 if pos is not None else getattr(exc, "lineno", None)
        where = f"{path}:{line}" if line else str(path)
        raise ConfigError(f"{where}: {exc}") from exc
    return data, text


def build_config(scenario: str, file_values: dict[str, Any] | None = None,
                 overrides: dict[str, Any] | None = None, source: str = "<config>",
                 text: str = "") -> ScenarioConfig:
    """Merge scenario defaults, file values and overrides, validating every key."""
    file_values = dict(file_values or {})
    declared = file_values.pop("scenario", None)
    if declared is not None and declared != scenario:
        raise ConfigError(
            f"{_where(source, text, 'scenario')}: config is for scenario {declared!r}, not {scenario!r}"
        )
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}")
    values: dict[str, Any] = {"scenario": scenario}
    values.update(SCENARIO_DEFAULTS[scenario])
    for key, raw in file_values.items():
        if key not in FIELDS:
            raise ConfigError(f"{_where(source, text, key)}: unknown key {key!r}")
        try:
            values[key] = _convert(key, raw)
        except (ValueError, KeyError, TypeError, ZeroDivisionError) as exc:
            raise ConfigError(f"{_where(source, text, key)}: bad value for {key!r}: {exc}") from exc
    if "strength" in file_values and "barrier_height" not in file_values:
        values["barrier_height"] = None
    for key, raw in (overrides or {}).items():
        if raw is None:
            continue
        try:
            values[key] = _convert(key, raw)
        except (ValueError, KeyError, TypeError, ZeroDivisionError) as exc:
            raise ConfigError(f"command line: bad value for {key!r}: {exc}") from exc
        if key == "barrier_height":
            values["strength"] = None
    cfg = ScenarioConfig(**values)
    validate(cfg)
    return cfg


def validate(cfg: ScenarioConfig) -> None:
    def need(cond, msg):
        if not cond:
            raise ConfigError(msg)

    need(cfg.n_barriers >= 1, "n_barriers must be >= 1")
    need(0 < cfg.barrier_width < 1, "barrier_width must lie in (0, 1)")
    need(cfg.basis_size >= 1, "basis_size must be >= 1")
    need(cfg.grid_points >= 3, "grid_points must be >= 3")
    need(cfg.rel_tol > 0, "rel_tol must be positive")
    need(cfg.level_count >= 1, "level_count must be >= 1")
    need(all(n >= 1 for n in cfg.levels), "levels are numbered from 1")
    need(cfg.sigma2 > 0, "sigma2 must be positive")
    need(cfg.spacing_factor > 1, "spacing_factor must exceed 1")
    need(cfg.strength is not None or cfg.barrier_height is not None,
         "either barrier_height or strength must be given")
    if cfg.barriers is not None:
        need(cfg.box_length is not None, "a custom barrier list needs box_length")
        try:
            cfg.custom_spec()
        except ValueError as exc:
            raise ConfigError(f"invalid barrier list: {exc}") from exc
    if cfg.scenario == "dimer-gaps":
        need(cfg.n_barriers % 2 == 0, "dimer-gaps needs an even n_barriers")
        need(all(0 <= u < 0.5 * (1 - cfg.barrier_width) for u in cfg.u_values),
             "every u must lie in [0, (1-b)/2)")


def with_overrides(cfg: ScenarioConfig, **kw) -> ScenarioConfig:
    new = replace(cfg, **kw)
    validate(new)
    return new
