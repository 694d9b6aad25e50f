"""Scenario definitions for the four benchmark problems.

A :class:`ScenarioConfig` is a plain description of a run (grid, layers,
bathymetry, initial state, boundary conditions, physics and time stepping);
:meth:`ScenarioConfig.build` turns it into a :class:`~mlsw.steppers.Model`
and an initial :class:`~mlsw.operators.State`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from ..exceptions import ConfigurationError
from ..mesh import Grid1D, LayerLayout, build_grid, build_layout, parse_layer_spec
from ..operators import BoundaryConditions, BoundarySide, State, make_state, upwind_heights
from ..physics import PhysicsParams
from ..steppers import Model

SCHEMES = ("theta", "imex", "rk3")

# --------------------------------------------------------------------------
# bathymetries
# --------------------------------------------------------------------------


def gaussian_bump(x, amplitude=4.0, x0=5000.0, sigma=1000.0):
    return amplitude * np.exp(-((x - x0) ** 2) / sigma**2)


def sloped_cosine_peak(x, offset=0.05, slope=-0.001, amplitude=2.0, half_width=5.0):
    """Linear slope plus a ``cos^2`` peak of the given amplitude on ``|x| < half_width``."""
    x = np.asarray(x, dtype=float)
    peak = np.where(np.abs(x) < half_width, amplitude * np.cos(np.pi * x / (2.0 * half_width)) ** 2, 0.0)
    return offset + slope * x + peak


def tanh_shelf(x, z0=44.0, z1=-44.0, lam=-1.0 / 3000.0, x0=7500.0, amplitude=70.0, x1=16000.0, sigma=2000.0):
    """``z0 - z1 tanh(lam (x - x0)) + amplitude exp(-(x - x1)^2 / sigma^2)``."""
    x = np.asarray(x, dtype=float)
    return z0 - z1 * np.tanh(lam * (x - x0)) + amplitude * np.exp(-((x - x1) ** 2) / sigma**2)


def sine_dune(x, base=0.1, x_lo=300.0, x_hi=500.0):
    """``base + sin^2(pi (x - x_lo) / (x_hi - x_lo))`` on ``[x_lo, x_hi]``, ``base`` elsewhere."""
    x = np.asarray(x, dtype=float)
    inside = (x >= x_lo) & (x <= x_hi)
    return base + np.where(inside, np.sin(np.pi * (x - x_lo) / (x_hi - x_lo)) ** 2, 0.0)


BATHYMETRIES = {
    "gaussian": gaussian_bump,
    "cosine_peak": sloped_cosine_peak,
    "tanh_shelf": tanh_shelf,
    "dune": sine_dune,
}


def evaluate_bathymetry(kind: str, x, params: dict) -> np.ndarray:
    try:
        fn = BATHYMETRIES[kind]
    except KeyError:
        raise ConfigurationError(f"unknown bathymetry {kind!r}") from None
    try:
        return np.asarray(fn(np.asarray(x, dtype=float), **params), dtype=float)
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for bathymetry {kind!r}: {exc}") from None


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------


@dataclass
class ScenarioConfig:
    """Everything needed to reproduce a run.

    ``eta_slope`` makes the initial surface ``eta_base + eta_slope * x``;
    ``discharge0`` (if set) starts every edge with that discharge per unit
    width, distributed over layers by ``discharge_profile`` (defaults to the
    layer fractions).
    """

    name: str
    x_start: float
    x_end: float
    cells: int
    layers: str = "10"
    bathymetry: str = "gaussian"
    bathy_params: dict = field(default_factory=dict)
    eta_base: float = 0.0
    eta_slope: float = 0.0
    discharge0: float | None = None
    discharge_profile: tuple[float, ...] | None = None
    bc: BoundaryConditions = field(default_factory=BoundaryConditions)
    params: PhysicsParams = field(default_factory=PhysicsParams)
    scheme: str = "theta"
    dt: float = 25.0
    theta: float = 0.55
    courant: float = 0.1
    t_final: float = 10000.0
    snapshots: tuple[float, ...] = ()
    out_dir: str | None = None
    reference_dir: str | None = None
    tracer: bool = False
    sediment: bool = False
    spinup: bool = False
    spinup_profile: str | None = None

    def __post_init__(self):
        self.snapshots = tuple(float(t) for t in self.snapshots)

    def validate(self) -> None:
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"unknown scheme {self.scheme!r}; choose from {', '.join(SCHEMES)}")
        if self.bathymetry not in BATHYMETRIES:
            raise ConfigurationError(f"unknown bathymetry {self.bathymetry!r}")
        if not (math.isfinite(self.x_start) and math.isfinite(self.x_end)) or self.x_end <= self.x_start:
            raise ConfigurationError(f"invalid extent [{self.x_start}, {self.x_end}]")
        if int(self.cells) != self.cells or self.cells < 3:
            raise ConfigurationError("need at least 3 cells")
        if not self.t_final > 0:
            raise ConfigurationError("t_final must be positive")
        if self.scheme != "rk3" and not self.dt > 0:
            raise ConfigurationError("dt must be positive")
        if not 0.0 <= self.theta <= 1.0:
            raise ConfigurationError(f"theta={self.theta} outside [0, 1]")
        if self.scheme == "rk3" and not 0.0 < self.courant <= 1.0:
            raise ConfigurationError(f"target Courant number {self.courant} outside (0, 1]")
        for t in self.snapshots:
            if not 0.0 < t <= self.t_final:
                raise ConfigurationError(f"snapshot time {t} outside (0, t_final={self.t_final}]")
        self.bc.validate()
        parse_layer_spec(self.layers)

    def with_(self, **kw) -> "ScenarioConfig":
        return replace(self, **kw)

    @property
    def output_times(self) -> tuple[float, ...]:
        """Sorted snapshot times, always ending with ``t_final``."""
        return tuple(sorted(set(self.snapshots) | {float(self.t_final)}))

    def grid(self) -> Grid1D:
        return build_grid(self.x_start, self.x_end, int(self.cells))

    def layout(self, grid: Grid1D | None = None) -> LayerLayout:
        return build_layout(self.grid() if grid is None else grid, parse_layer_spec(self.layers))

    def build(self) -> tuple[Model, State]:
        """Model and initial state (discharge profiles must already be resolved)."""
        self.validate()
        grid = self.grid()
        layout = self.layout(grid)
        model = Model(grid, layout, self.params, self.bc, tracer=self.tracer, sediment=self.sediment)
        b = evaluate_bathymetry(self.bathymetry, grid.x_center, self.bathy_params)
        eta = self.eta_base + self.eta_slope * grid.x_center
        if np.any(eta - b < self.params.h_min):
            raise ConfigurationError("initial depth below the minimum")
        u = None
        if self.discharge0 is not None:
            u = initial_velocity(grid, layout, eta - b, self.discharge0, self.discharge_profile)
        return model, make_state(layout, eta, b, u=u)


def initial_velocity(grid: Grid1D, layout: LayerLayout, h, q: float, profile=None) -> np.ndarray:
    """Velocities carrying discharge ``q`` at every edge, split over layers by ``profile``.

    Edge depths are the mean of the adjacent cells (the adjacent cell at the
    boundary).  A profile given for a different number of layers than the
    local edge count is rejected.
    """
    h = np.asarray(h, dtype=float)
    he = np.empty(grid.M + 1)
    he[1:-1] = 0.5 * (h[:-1] + h[1:])
    he[0], he[-1] = h[0], h[-1]
    u = np.zeros((layout.n_max, grid.M + 1))
    for e in range(grid.M + 1):
        n = layout.n_edge[e]
        l = layout.l_edge[:n, e]
        p = l if profile is None else np.asarray(profile, dtype=float)
        if p.size != n:
            raise ConfigurationError(f"discharge profile has {p.size} entries, edge {e} has {n} layers")
        u[:n, e] = q * p / (l * he[e])
    return u


# --------------------------------------------------------------------------
# the four benchmark problems
# --------------------------------------------------------------------------

DAY = 86400.0

LAYER_PRESETS = {
    "free_oscillations": {"uniform": "10", "nvar": "5000:inf:1;-inf:5000:10"},
    "subcritical_peak": {"uniform": "10", "nvar": "-10:inf:10;-inf:-10:1"},
    "tidal_forcing": {
        "uniform": "10",
        "nvar1": "-inf:inf:1;4000:inf:10",
        "nvar2": "-inf:inf:2:0.1,0.9;4000:inf:10",
        "nvar3": "-inf:inf:3:0.1,0.1,0.8;4000:inf:10",
    },
    "sediment_dune": {"uniform": "10"},
}


def _free_oscillations() -> ScenarioConfig:
    L = 10000.0
    b = dict(amplitude=4.0, x0=5000.0, sigma=0.1 * L)
    # h(0) = 10 and h(L) = 11 with the bump negligible at both ends
    slope = 1.0 / L
    return ScenarioConfig(
        name="free_oscillations", x_start=0.0, x_end=L, cells=200, layers="10",
        bathymetry="gaussian", bathy_params=b, eta_base=10.0, eta_slope=slope,
        bc=BoundaryConditions(BoundarySide.wall(), BoundarySide.wall()),
        params=PhysicsParams(dz0=3.3e-5, Cw=1.2e-6, u_wind=-1.0),
        scheme="theta", dt=25.0, theta=0.55, t_final=10000.0)


def _subcritical_peak() -> ScenarioConfig:
    q0, eta0 = 4.42, 5.0
    return ScenarioConfig(
        name="subcritical_peak", x_start=-25.0, x_end=25.0, cells=200, layers="10",
        bathymetry="cosine_peak", bathy_params={}, eta_base=eta0, discharge0=q0,
        bc=BoundaryConditions(BoundarySide.discharge(q0), BoundarySide.surface(eta0)),
        params=PhysicsParams(dz0=3.3e-5, Cw=0.0, u_wind=0.0),
        scheme="theta", dt=0.11, theta=0.55, t_final=1200.0)


def _tidal_forcing() -> ScenarioConfig:
    period = 43200.0
    return ScenarioConfig(
        name="tidal_forcing", x_start=-5000.0, x_end=20000.0, cells=500, layers="10",
        bathymetry="tanh_shelf", bathy_params={}, eta_base=100.0,
        bc=BoundaryConditions(BoundarySide.discharge(1.0),
                              BoundarySide.surface(100.0, 3.0, 2.0 * math.pi / period)),
        params=PhysicsParams(dz0=3.3e-3, Cw=1.2e-6, u_wind=1.0),
        scheme="theta", dt=55.0, theta=0.55, t_final=3 * period)


def _sediment_dune() -> ScenarioConfig:
    q0 = 15.0
    return ScenarioConfig(
        name="sediment_dune", x_start=0.0, x_end=1000.0, cells=150, layers="10",
        bathymetry="dune", bathy_params={}, eta_base=15.0, discharge0=q0,
        bc=BoundaryConditions(BoundarySide.discharge(q0), BoundarySide.surface(15.0)),
        params=PhysicsParams(dz0=3.3e-5, Cw=0.0, u_wind=0.0, Ag=0.001, porosity=0.4),
        scheme="theta", dt=2.0, theta=0.55, t_final=8 * DAY, sediment=True, spinup=True)


_BUILDERS = {
    "free_oscillations": _free_oscillations,
    "subcritical_peak": _subcritical_peak,
    "tidal_forcing": _tidal_forcing,
    "sediment_dune": _sediment_dune,
}

SCENARIOS = tuple(_BUILDERS)


def build_scenario(name: str, overrides: dict | None = None) -> ScenarioConfig:
    """Default configuration of a named scenario with optional field overrides.

    ``overrides`` maps :class:`ScenarioConfig` field names to values;
    ``params`` and ``bathy_params`` may be given as dicts that update the
    defaults, and ``layers`` may name a preset of the scenario.
    """
    try:
        cfg = _BUILDERS[name]()
    except KeyError:
        raise ConfigurationError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}") from None
    if overrides:
        cfg = apply_overrides(cfg, overrides)
    cfg.validate()
    return cfg


def apply_overrides(cfg: ScenarioConfig, overrides: dict) -> ScenarioConfig:
    names = {f.name for f in fields(ScenarioConfig)}
    kw = {}
    for key, value in overrides.items():
        if key not in names:
            raise ConfigurationError(f"unknown configuration key {key!r}")
        if key == "params" and isinstance(value, dict):
            try:
                value = cfg.params.with_(**value)
            except TypeError as exc:
                raise ConfigurationError(f"bad physics parameter: {exc}") from None
        elif key == "bathy_params":
            value = {**cfg.bathy_params, **value}
        elif key == "layers":
            value = LAYER_PRESETS.get(cfg.name, {}).get(value, value)
        kw[key] = value
    return cfg.with_(**kw)


# --------------------------------------------------------------------------
# sediment spin-up
# --------------------------------------------------------------------------


def layer_discharges(state: State, layout: LayerLayout, e: int) -> np.ndarray:
    """Per-layer discharge ``l_a h_e u_a`` through edge ``e`` (upwind depth)."""
    he = upwind_heights(state, layout)[e]
    n = layout.n_edge[e]
    return layout.l_edge[:n, e] * he * state.u[:n, e]


def write_profile(path, values) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("".join(f"{v:.17g}\n" for v in values))


def read_profile(path) -> np.ndarray:
    try:
        values = [float(line) for line in Path(path).read_text().split()]
    except ValueError as exc:
        raise ConfigurationError(f"bad discharge profile file {path}: {exc}") from None
    if not values or not all(math.isfinite(v) for v in values):
        raise ConfigurationError(f"bad discharge profile file {path}")
    return np.array(values)


def spinup_profile(cfg: ScenarioConfig, tol: float = 1e-8, check_every: int = 100,
                   max_time: float = 4 * DAY) -> tuple[np.ndarray, dict]:
    """Outlet per-layer discharges after a precursor run with uniform inflow.

    The precursor uses the scenario as configured but with a uniform
    discharge profile, advanced with the theta-method at the scenario time
    step until the outlet profile changes by less than ``tol`` (relative,
    max norm) over ``check_every`` steps.
    """
    from ..steppers import advance_semi_implicit

    pre = cfg.with_(discharge_profile=None, bc=cfg.bc.with_(left=BoundarySide.discharge(cfg.bc.left.base)),
                    tracer=False)
    model, state = pre.build()
    e_out = model.grid.M
    prev = layer_discharges(state, model.layout, e_out)
    steps = 0
    change = np.inf
    while state.time < max_time:
        state, rep = advance_semi_implicit(model, state, "theta", pre.dt, max_time, pre.theta,
                                           max_steps=check_every)
        steps += rep.steps
        cur = layer_discharges(state, model.layout, e_out)
        change = float(np.max(np.abs(cur - prev)) / np.max(np.abs(cur)))
        prev = cur
        if change < tol:
            break
    info = {"spinup_time": state.time, "spinup_steps": steps, "spinup_change": change, "converged": change < tol}
    return prev, info


def resolve_spinup(cfg: ScenarioConfig) -> tuple[ScenarioConfig, dict]:
    """Replace the inflow of a spin-up scenario by the precursor outlet profile.

    The profile is read from ``cfg.spinup_profile`` when that file exists and
    written there after a fresh precursor run otherwise.  Returns the updated
    configuration (discharge total and shares, also used as initial state).
    """
    if not cfg.spinup:
        return cfg, {}
    path = cfg.spinup_profile
    info: dict = {}
    if path is not None and Path(path).exists():
        q = read_profile(path)
        info["spinup_profile"] = str(path)
    else:
        q, info = spinup_profile(cfg)
        if path is not None:
            write_profile(path, q)
            info["spinup_profile"] = str(path)
    total = float(q.sum())
    if not total > 0:
        raise ConfigurationError("spin-up profile carries no discharge")
    shares = tuple(float(v) for v in q / total)
    left = BoundarySide.discharge(total, shares)
    out = cfg.with_(bc=cfg.bc.with_(left=left), discharge0=total, discharge_profile=shares, spinup=False)
    return out, info
