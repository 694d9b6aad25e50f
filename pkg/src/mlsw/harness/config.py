"""Plain-text run configuration (INI sections of ``key = value`` pairs).

Example::

    [scenario]
    name = tidal_forcing
    layers = nvar2

    [time]
    scheme = imex
    dt = 25
    t_final = 43200
    snapshots = 21600, 43200

    [physics]
    dz0 = 3.3e-3

    [boundary]
    right = surface 100 3 0.00014544 0

    [output]
    out_dir = runs/tidal

Boundary values are ``wall``, ``discharge Q [s1,s2,...]`` (layer shares)
or ``surface ETA [AMPLITUDE OMEGA PHASE]``.
"""

from __future__ import annotations

import configparser
from pathlib import Path

from ..exceptions import ConfigurationError
from ..operators import BoundarySide
from ..physics import PhysicsParams
from .scenarios import ScenarioConfig, build_scenario

_FLOAT = {"x_start", "x_end", "eta_base", "eta_slope", "discharge0", "dt", "theta", "courant", "t_final"}
_INT = {"cells"}
_BOOL = {"tracer", "sediment", "spinup"}
_STR = {"scheme", "layers", "bathymetry", "out_dir", "reference_dir", "spinup_profile"}
_SECTIONS = {"scenario", "time", "physics", "bathymetry", "boundary", "output"}
_PHYSICS = {k.lower(): k for k in PhysicsParams.__dataclass_fields__}  # keys are case-insensitive


def parse_floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.replace(",", " ").split())
    except ValueError as exc:
        raise ConfigurationError(f"bad number list {text!r}") from None


def parse_boundary(text: str) -> BoundarySide:
    parts = text.split(None, 1)
    if not parts:
        raise ConfigurationError("empty boundary specification")
    kind, rest = parts[0].lower(), (parts[1] if len(parts) > 1 else "")
    if kind == "wall":
        if rest.strip():
            raise ConfigurationError("a wall takes no parameters")
        return BoundarySide.wall()
    if kind == "discharge":
        fields = rest.split(None, 1)
        if not fields:
            raise ConfigurationError("discharge boundary needs a value")
        q = parse_floats(fields[0])
        if len(q) != 1:
            raise ConfigurationError(f"bad discharge {fields[0]!r}")
        profile = parse_floats(fields[1]) if len(fields) > 1 else None
        return BoundarySide.discharge(q[0], profile)
    if kind == "surface":
        vals = parse_floats(rest)
        if len(vals) not in (1, 4):
            raise ConfigurationError("surface boundary takes ETA or ETA AMPLITUDE OMEGA PHASE")
        return BoundarySide.surface(*vals)
    raise ConfigurationError(f"unknown boundary kind {kind!r}")


def _convert(key: str, value: str):
    try:
        if key in _FLOAT:
            return None if value.lower() == "none" else float(value)
        if key in _INT:
            return int(value)
    except ValueError:
        raise ConfigurationError(f"bad value for {key}: {value!r}") from None
    if key in _BOOL:
        v = value.strip().lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off"):
            return False
        raise ConfigurationError(f"bad boolean for {key}: {value!r}")
    if key in _STR:
        return value
    if key == "snapshots":
        return parse_floats(value)
    raise ConfigurationError(f"unknown configuration key {key!r}")


def read_config(path) -> tuple[str, dict]:
    """Scenario name and override dictionary from a configuration file."""
    p = Path(path)
    if not p.is_file():
        raise ConfigurationError(f"configuration file {p} not found")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(p.read_text())
    except configparser.Error as exc:
        raise ConfigurationError(f"cannot parse {p}: {exc}") from None
    unknown = set(parser.sections()) - _SECTIONS
    if unknown:
        raise ConfigurationError(f"unknown section(s): {', '.join(sorted(unknown))}")
    if not parser.has_option("scenario", "name"):
        raise ConfigurationError("[scenario] name is required")
    name = parser.get("scenario", "name")
    over: dict = {}
    for section in ("scenario", "time", "output"):
        if parser.has_section(section):
            for key, value in parser.items(section):
                if section == "scenario" and key == "name":
                    continue
                over[key] = _convert(key, value)
    if parser.has_section("physics"):
        phys = {}
        for key, value in parser.items("physics"):
            if key not in _PHYSICS:
                raise ConfigurationError(f"unknown physics parameter {key!r}")
            try:
                phys[_PHYSICS[key]] = float(value)
            except ValueError:
                raise ConfigurationError(f"bad value for {key}: {value!r}") from None
        over["params"] = phys
    if parser.has_section("bathymetry"):
        over["bathy_params"] = {k: float(v) for k, v in parser.items("bathymetry")}
    if parser.has_section("boundary"):
        sides = {}
        for key, value in parser.items("boundary"):
            if key not in ("left", "right"):
                raise ConfigurationError(f"unknown boundary side {key!r}")
            sides[key] = parse_boundary(value)
        over["_boundary"] = sides
    return name, over


def make_config(name: str, overrides: dict) -> ScenarioConfig:
    """Scenario defaults updated by ``overrides`` (boundary sides under ``_boundary``)."""
    over = dict(overrides)
    sides = over.pop("_boundary", None)
    cfg = build_scenario(name, over)
    if sides:
        cfg = cfg.with_(bc=cfg.bc.with_(**sides))
        cfg.validate()
    return cfg


def load_config(path) -> ScenarioConfig:
    name, over = read_config(path)
    return make_config(name, over)
