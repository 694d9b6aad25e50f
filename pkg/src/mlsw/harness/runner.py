"""Run loop: integrate a scenario, write snapshots and metrics, compare with a cached reference."""

from __future__ import annotations

import hashlib
import json
import math
import time as _time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from ..exceptions import SolverAbort
from ..mesh import Grid1D, LayerLayout
from ..operators import State, recover_vertical_velocity
from ..steppers import Model, advance_rk3, advance_semi_implicit
from .errors import ErrorReport, compute_errors
from .scenarios import ScenarioConfig, resolve_spinup

REFERENCE_COURANT = 0.1
METRICS_FILE = "metrics.txt"


@dataclass
class RunResult:
    config: ScenarioConfig
    model: Model
    snapshots: dict[float, State]
    metrics: dict
    errors: dict[float, ErrorReport] = field(default_factory=dict)
    files: list[Path] = field(default_factory=list)

    @property
    def final(self) -> State:
        return self.snapshots[max(self.snapshots)]


@dataclass
class _Totals:
    steps: int = 0
    C_vel: float = 0.0
    C_cel: float = 0.0
    residual: float = 0.0
    wall_time: float = 0.0

    def add(self, rep) -> None:
        self.steps += rep.steps
        self.C_vel = max(self.C_vel, rep.C_vel)
        self.C_cel = max(self.C_cel, rep.C_cel)
        self.residual = max(self.residual, rep.residual)
        self.wall_time += rep.wall_time


# --------------------------------------------------------------------------
# hashing and reference cache
# --------------------------------------------------------------------------


def _jsonable(value):
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in sorted(value.items())}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def physical_key(cfg: ScenarioConfig) -> dict:
    """Configuration fields that determine the exact solution (not the scheme or the output)."""
    d = asdict(cfg)
    for k in ("scheme", "dt", "theta", "courant", "out_dir", "reference_dir", "spinup_profile"):
        d.pop(k)
    d["output_times"] = list(cfg.output_times)
    d.pop("snapshots")
    d["version"] = __version__
    return _jsonable(d)


def config_hash(cfg: ScenarioConfig, extra: dict | None = None) -> str:
    key = physical_key(cfg)
    if extra:
        key["extra"] = _jsonable(extra)
    text = json.dumps(key, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _save_states(path: Path, states: dict[float, State], metrics: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    arrays = {"times": np.array(sorted(states))}
    for k, t in enumerate(sorted(states)):
        s = states[t]
        arrays.update({f"eta_{k}": s.eta, f"u_{k}": s.u, f"rho_{k}": s.rho, f"b_{k}": s.b})
    arrays["metrics"] = np.array(json.dumps(_jsonable(metrics)))
    tmp = path.with_name(path.name + ".tmp.npz")
    np.savez(tmp, **arrays)
    tmp.replace(path)


def _load_states(path: Path) -> tuple[dict[float, State], dict]:
    with np.load(path) as f:
        times = f["times"]
        states = {float(t): State(f[f"eta_{k}"], f[f"u_{k}"], f[f"rho_{k}"], f[f"b_{k}"], float(t))
                  for k, t in enumerate(times)}
        metrics = json.loads(str(f["metrics"]))
    return states, metrics


def reference_run(cfg: ScenarioConfig, cache_dir: str | Path | None = None,
                  courant: float = REFERENCE_COURANT) -> tuple[dict[float, State], dict]:
    """RK3 reference snapshots at ``cfg.output_times``, cached by configuration hash."""
    ref_cfg = cfg.with_(scheme="rk3", courant=courant, out_dir=None, reference_dir=None)
    path = None
    if cache_dir is not None:
        path = Path(cache_dir) / f"{cfg.name}_rk3_{config_hash(cfg, {'courant': courant})}.npz"
        if path.exists():
            return _load_states(path)
    res = run(ref_cfg)
    if path is not None:
        _save_states(path, res.snapshots, res.metrics)
    return res.snapshots, res.metrics


# --------------------------------------------------------------------------
# integration
# --------------------------------------------------------------------------


def advance(cfg: ScenarioConfig, model: Model, state: State, t_end: float):
    """Advance ``state`` to ``t_end`` with the configured scheme."""
    if cfg.scheme == "rk3":
        return advance_rk3(model, state, t_end, cfg.courant)
    return advance_semi_implicit(model, state, cfg.scheme, cfg.dt, t_end, cfg.theta)


def integrate(cfg: ScenarioConfig, model: Model, state: State, times) -> tuple[dict[float, State], _Totals]:
    totals = _Totals()
    out = {}
    for t in times:
        try:
            state, rep = advance(cfg, model, state, t)
        except SolverAbort as exc:
            raise type(exc)(f"{exc} (after {totals.steps} completed steps)") from exc
        totals.add(rep)
        out[float(t)] = state
    return out, totals


def spinup_path(cfg: ScenarioConfig) -> str | None:
    """File holding the spin-up inflow profile of ``cfg`` (``None`` when nothing is cached)."""
    if cfg.spinup_profile is not None:
        return cfg.spinup_profile
    base = cfg.reference_dir or cfg.out_dir
    if base is None:
        return None
    # the precursor ignores the horizon but uses the scenario time step
    key = cfg.with_(t_final=1.0, snapshots=())
    extra = {"spinup": True, "dt": cfg.dt, "theta": cfg.theta}
    return str(Path(base) / f"{cfg.name}_spinup_{config_hash(key, extra)}.txt")


def run(cfg: ScenarioConfig) -> RunResult:
    """Run a scenario, write outputs when ``cfg.out_dir`` is set and compare with a reference when
    ``cfg.reference_dir`` is set."""
    cfg.validate()
    metrics: dict = {}
    if cfg.spinup:
        cfg, info = resolve_spinup(cfg.with_(spinup_profile=spinup_path(cfg)))
        metrics.update(info)
    model, state0 = cfg.build()
    start = _time.perf_counter()
    snaps, totals = integrate(cfg, model, state0, cfg.output_times)
    wall = _time.perf_counter() - start
    metrics = {
        "scenario": cfg.name,
        "scheme": cfg.scheme,
        "dt": cfg.dt if cfg.scheme != "rk3" else "adaptive",
        "theta": cfg.theta if cfg.scheme == "theta" else "n/a",
        "courant_target": cfg.courant if cfg.scheme == "rk3" else "n/a",
        "t_final": cfg.t_final,
        "cells": cfg.cells,
        "dof": model.layout.dof,
        "steps": totals.steps,
        "C_vel_max": totals.C_vel,
        "C_cel_max": totals.C_cel,
        "surface_residual_max": totals.residual,
        "wall_time": wall,
        **metrics,
    }
    result = RunResult(cfg, model, snaps, metrics)
    if cfg.reference_dir is not None:
        refs, _ = reference_run(cfg, cfg.reference_dir)
        for t, s in snaps.items():
            result.errors[t] = compute_errors(s, refs[t], model.layout, model.grid)
        for name, value in result.errors[max(snaps)].as_dict().items():
            metrics[f"err_{name}"] = value
    if cfg.out_dir is not None:
        result.files = write_outputs(result, Path(cfg.out_dir))
    return result


# --------------------------------------------------------------------------
# output
# --------------------------------------------------------------------------


def _fmt(v: float) -> str:
    return "nan" if not math.isfinite(v) else f"{v:.17g}"


def snapshot_table(state: State, grid: Grid1D, layout: LayerLayout) -> tuple[list[str], np.ndarray]:
    """Header and rows of a snapshot: per cell ``x, eta, b, h``, layer velocities, interface w."""
    nmax, M = layout.n_max, grid.M
    uc = np.full((nmax, M), np.nan)
    for i in range(M):
        for a in range(layout.n_cell[i]):
            uc[a, i] = 0.5 * (state.u[layout.cell_to_left[a, i], i] + state.u[layout.cell_to_right[a, i], i + 1])
    wp, _ = recover_vertical_velocity(state, grid, layout)
    w = np.full((nmax + 1, M), np.nan)
    for i in range(M):
        n = layout.n_cell[i]
        w[: n + 1, i] = wp[: n + 1, i]
    header = ["x", "eta", "b", "h"] + [f"u_{a + 1}" for a in range(nmax)] + [f"w_{k + 1}" for k in range(nmax + 1)]
    rows = np.column_stack([grid.x_center, state.eta, state.b, state.h, uc.T, w.T])
    return header, rows


def write_snapshot(path: Path, state: State, grid: Grid1D, layout: LayerLayout) -> None:
    header, rows = snapshot_table(state, grid, layout)
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def snapshot_name(t: float) -> str:
    return f"snapshot_t{t:.10g}.csv"


def write_metrics(path: Path, metrics: dict) -> None:
    lines = []
    for k, v in metrics.items():
        if isinstance(v, float):
            v = _fmt(v)
        lines.append(f"{k}={v}")
    path.write_text("\n".join(lines) + "\n")


def read_metrics(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def write_outputs(result: RunResult, out_dir: Path) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    files = []
    for t in sorted(result.snapshots):
        p = out_dir / snapshot_name(t)
        write_snapshot(p, result.snapshots[t], result.model.grid, result.model.layout)
        files.append(p)
    metrics = dict(result.metrics)
    for t in sorted(result.errors):
        if t != max(result.snapshots):
            metrics[f"err_eta_l2@{t:.10g}"] = result.errors[t].eta_l2
    p = out_dir / METRICS_FILE
    write_metrics(p, metrics)
    files.append(p)
    return files
