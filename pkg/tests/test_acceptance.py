"""Acceptance checks on the benchmark scenarios.

Every test prints one ``PASS``/``FAIL`` line (also collected in the terminal
summary).  RK3 references are cached in the ``reference_dir`` fixture, so the
first run is much slower than later ones.
"""

import numpy as np
import pytest
from helpers import LAYOUT_KINDS, random_bed, random_layout, random_state

from mlsw import (BoundaryConditions, Model, PhysicsParams, advance_rk3, advance_semi_implicit, make_state,
                  step_theta)
from mlsw.harness import build_scenario, run
from mlsw.harness.runner import spinup_path
from mlsw.harness.scenarios import resolve_spinup
from mlsw.linalg import TridiagonalSystem, assemble_free_surface_system, thomas_solve
from mlsw.operators import apply_boundary_conditions, mass_transfer_center_all
from mlsw.transport import bed_flux

pytestmark = pytest.mark.slow

DAY = 86400.0
HALF_DAY = 43200.0


def _err(cfg, **kw):
    res = run(cfg.with_(**kw))
    return res.metrics["err_eta_l2"], res


def _slope(dts, errs):
    return float(np.polyfit(np.log(dts), np.log(errs), 1)[0])


# ---------------------------------------------------------------- 1: free oscillations accuracy


def test_free_oscillations_accuracy(reference_dir, verdict):
    cfg = build_scenario("free_oscillations", {"reference_dir": str(reference_dir)})
    e_theta, _ = _err(cfg, scheme="theta", theta=0.55, dt=25.0)
    e_imex, _ = _err(cfg, scheme="imex", dt=25.0)
    ok = 0.9e-3 <= e_theta <= 8e-3 and e_imex < e_theta
    verdict("criterion 1 (free oscillations, dt=25)", ok,
            f"theta=0.55 Err_eta_l2={e_theta:.3e} in [9e-4, 8e-3]; imex {e_imex:.3e} < theta")


# ---------------------------------------------------------------- 2: temporal order


def test_temporal_order(reference_dir, verdict):
    cfg = build_scenario("free_oscillations", {"reference_dir": str(reference_dir)})
    dts = (50.0, 25.0, 12.5, 6.25)
    cases = (("imex", "imex", 0.55, 1.8), ("theta=0.5", "theta", 0.5, 1.8), ("theta=0.55", "theta", 0.55, 0.9))
    parts, ok = [], True
    for label, scheme, theta, need in cases:
        errs = [_err(cfg, scheme=scheme, theta=theta, dt=dt)[0] for dt in dts]
        p = _slope(dts, errs)
        ok &= p >= need
        parts.append(f"{label} slope {p:.2f} (need {need}; errors {', '.join(f'{e:.2e}' for e in errs)})")
    verdict("criterion 2 (temporal order)", ok, "; ".join(parts))


# ---------------------------------------------------------------- 3: steady subcritical flow


def test_subcritical_peak_steady(reference_dir, verdict):
    cfg = build_scenario("subcritical_peak", {"reference_dir": str(reference_dir), "dt": 0.11})
    e_theta, r_theta = _err(cfg, scheme="theta", theta=0.55)
    e_imex, r_imex = _err(cfg, scheme="imex")
    gap = float(np.max(np.abs(r_theta.final.eta - r_imex.final.eta)))
    ok = e_theta <= 1e-4 and e_imex <= 1e-4 and gap <= 1e-8
    verdict("criterion 3 (steady flow over a peak, dt=0.11)", ok,
            f"Err_eta_l2 theta {e_theta:.3e}, imex {e_imex:.3e} (<= 1e-4); max |eta_theta - eta_imex| {gap:.2e} "
            f"(<= 1e-8) at t={cfg.t_final:g}")


# ---------------------------------------------------------------- 4: tidal forcing


def test_tidal_forcing(reference_dir, verdict):
    cfg = build_scenario("tidal_forcing", {"reference_dir": str(reference_dir), "t_final": HALF_DAY})
    parts, ok = [], True
    c_cel = None
    for dt in (5.0, 10.0, 25.0, 55.0):
        e_theta, r_theta = _err(cfg, scheme="theta", theta=0.55, dt=dt)
        e_imex, _ = _err(cfg, scheme="imex", dt=dt)
        ok &= e_imex < e_theta
        parts.append(f"dt={dt:g}: imex {e_imex:.2e} vs theta {e_theta:.2e}")
        if dt == 55.0:
            c_cel = r_theta.metrics["C_cel_max"]
    ok &= 25.0 <= c_cel <= 45.0
    verdict("criterion 4 (tidal forcing, 12 h)", ok, f"C_cel at dt=55 {c_cel:.1f} in [25, 45]; " + "; ".join(parts))


# ---------------------------------------------------------------- 5: variable layers


def test_variable_layers(verdict):
    snaps = (2500.0, 5000.0, 7500.0)
    uni = run(build_scenario("free_oscillations", {"snapshots": snaps}))
    var = run(build_scenario("free_oscillations", {"snapshots": snaps, "layers": "nvar"}))
    dofs = (uni.model.layout.dof, var.model.layout.dof)
    diffs = [float(np.max(np.abs(uni.snapshots[t].eta - var.snapshots[t].eta))) for t in sorted(uni.snapshots)]
    ok = dofs == (2210, 1310) and max(diffs) <= 0.05
    verdict("criterion 5 (variable layers)", ok,
            f"DOF {dofs[0]} -> {dofs[1]}; max |d eta| per snapshot {', '.join(f'{d:.4f}' for d in diffs)} m (<= 0.05)")


# ---------------------------------------------------------------- 6: properties


def _rest_state_drift():
    worst = 0.0
    calm = PhysicsParams(u_wind=0.0)
    for seed, kind in enumerate(LAYOUT_KINDS):
        rng = np.random.default_rng(100 + seed)
        grid, lay = random_layout(rng, kind)
        s = make_state(lay, 0.25, random_bed(rng, grid))
        model = Model(grid, lay, calm, BoundaryConditions())
        for scheme in ("theta", "imex", "rk3"):
            if scheme == "rk3":
                new, _ = advance_rk3(model, s, 1e9, 0.5, max_steps=100)
            else:
                new, _ = advance_semi_implicit(model, s, scheme, 50.0, 100 * 50.0)
            worst = max(worst, np.max(np.abs(new.eta - 0.25)), np.max(np.abs(new.u)))
    return worst


def _mass_drift():
    worst = 0.0
    for seed, kind in enumerate(LAYOUT_KINDS):
        rng = np.random.default_rng(200 + seed)
        grid, lay = random_layout(rng, kind)
        s = random_state(rng, grid, lay, amp=0.05)
        model = Model(grid, lay, PhysicsParams(), BoundaryConditions())
        vol0 = np.sum(grid.dx * s.h)
        for scheme in ("theta", "imex", "rk3"):
            if scheme == "rk3":
                new, _ = advance_rk3(model, s, 1e9, 0.5, max_steps=1000)
            else:
                new, _ = advance_semi_implicit(model, s, scheme, 20.0, 1000 * 20.0)
            worst = max(worst, abs(np.sum(grid.dx * new.h) - vol0) / vol0)
    return worst


def _tracer_drift():
    worst = 0.0
    for layers in ("10", "nvar"):
        model, s = build_scenario("free_oscillations", {"layers": layers, "tracer": True}).build()
        active = np.arange(model.layout.n_max)[:, None] < model.layout.n_cell[None, :]
        for scheme in ("theta", "imex", "rk3"):
            if scheme == "rk3":
                new, _ = advance_rk3(model, s, 1e9, 0.5, max_steps=500)
            else:
                new, _ = advance_semi_implicit(model, s, scheme, 25.0, 500 * 25.0)
            worst = max(worst, np.max(np.abs(new.rho[active] - 1.0)))
    return worst


def _top_transfer():
    worst = 0.0
    for seed, kind in enumerate(LAYOUT_KINDS):
        rng = np.random.default_rng(300 + seed)
        grid, lay = random_layout(rng, kind)
        s = random_state(rng, grid, lay)
        G = mass_transfer_center_all(s, grid, lay, zero_top=False)
        worst = max(worst, np.max(np.abs(G[lay.n_cell, np.arange(grid.M)])))
    return worst


def _surface_asymmetry():
    worst = 0.0
    rng = np.random.default_rng(400)
    for M in (5, 17, 40):
        for dirichlet in ((None, None), (1.5, None), (None, -2.0), (0.5, 0.7)):
            dx, dx_edge = rng.uniform(0.5, 2, M), rng.uniform(0.5, 2, M + 1)
            T = rng.uniform(0.1, 10, M + 1)
            T[0] = T[-1] = 0.0
            A = assemble_free_surface_system(dx, dx_edge, T, rng.normal(size=M + 1), rng.uniform(1, 100), 9.81,
                                             rng.normal(size=M), dirichlet).dense()
            worst = max(worst, np.max(np.abs(A - A.T)) / np.max(np.abs(A)))
    return worst


def _thomas_error():
    worst = 0.0
    rng = np.random.default_rng(500)
    for _ in range(200):
        lower, upper = rng.uniform(-1, 1, 8), rng.uniform(-1, 1, 8)
        diag = (np.abs(lower) + np.abs(upper) + rng.uniform(0.1, 2, 8)) * rng.choice([-1, 1], 8)
        sys = TridiagonalSystem(lower, diag, upper, rng.normal(size=8))
        worst = max(worst, np.max(np.abs(thomas_solve(sys) - np.linalg.solve(sys.dense(), sys.rhs))))
    return worst


def test_property_suite(verdict):
    checks = (
        ("rest state (3 schemes, 100 steps)", _rest_state_drift(), 1e-12),
        ("closed-basin relative mass drift (1000 steps)", _mass_drift(), 1e-10),
        ("tracer rho=1 drift", _tracer_drift(), 1e-10),
        ("top transfer G", _top_transfer(), 1e-12),
        ("free-surface asymmetry", _surface_asymmetry(), 1e-13),
        ("Thomas vs dense", _thomas_error(), 1e-10),
    )
    ok = all(v <= tol for _, v, tol in checks)
    verdict("criterion 6 (properties)", ok, "; ".join(f"{n} {v:.1e} (<= {t:g})" for n, v, t in checks))


# ---------------------------------------------------------------- 7: sediment transport


def _dune_run(cfg, days):
    """Theta run stepped in Python: crest positions and bed volume balance."""
    model, s = cfg.build()
    g, lay, bc, p = model.grid, model.layout, model.bc, model.params
    b0 = s.b.copy()
    crest = [g.x_center[np.argmax(s.b)]]
    boundary = 0.0
    for n in range(int(round(days * DAY / cfg.dt))):
        old = s.copy()
        apply_boundary_conditions(old, lay, bc, s.time)
        s, _ = step_theta(model, s, cfg.theta, cfg.dt)
        Q = cfg.theta * bed_flux(s.u, p.Ag) + (1 - cfg.theta) * bed_flux(old.u, p.Ag)
        boundary -= p.xi * cfg.dt * (Q[-1] - Q[0])
        if n % 30 == 29:  # every simulated minute
            crest.append(g.x_center[np.argmax(s.b)])
    return np.array(crest), float(np.sum(g.dx * (s.b - b0))), boundary


def test_sediment_dune(reference_dir, verdict):
    cfg = build_scenario("sediment_dune", {"reference_dir": str(reference_dir)})
    day = cfg.with_(t_final=DAY)
    e_theta = run(day.with_(scheme="theta", theta=0.55)).metrics["err_b_l2"]
    e_imex = run(day.with_(scheme="imex")).metrics["err_b_l2"]
    spun, _ = resolve_spinup(cfg.with_(spinup_profile=spinup_path(cfg)))
    crest, volume, boundary = _dune_run(spun, 8.0)
    monotone = bool(np.all(np.diff(crest) >= 0.0))
    balance = abs(volume - boundary) / abs(boundary)
    ok = monotone and balance <= 1e-10 and e_theta <= 1e-4 and e_imex <= 1e-4
    verdict("criterion 7 (sediment dune)", ok,
            f"crest {crest[0]:.1f} -> {crest[-1]:.1f} m, nondecreasing over 8 days: {monotone}; "
            f"bed volume {volume:.6f} vs boundary flux integral {boundary:.6f} (rel {balance:.1e} <= 1e-10); "
            f"24 h Err_b_l2 theta {e_theta:.2e}, imex {e_imex:.2e} (<= 1e-4)")


# ---------------------------------------------------------------- 8: efficiency


def test_efficiency(verdict):
    cfg = build_scenario("tidal_forcing", {"t_final": HALF_DAY})
    for scheme in ("theta", "rk3"):  # compile the kernels before timing
        run(cfg.with_(scheme=scheme, t_final=600.0, courant=0.9))
    t_theta = run(cfg.with_(scheme="theta", dt=55.0, theta=0.55)).metrics["wall_time"]
    t_rk3 = run(cfg.with_(scheme="rk3", courant=0.9)).metrics["wall_time"]
    speedup = t_rk3 / t_theta
    verdict("criterion 8 (efficiency, tidal 12 h)", speedup >= 5.0,
            f"theta dt=55 {t_theta:.2f} s, rk3 C_cel=0.9 {t_rk3:.2f} s, speed-up {speedup:.1f} (>= 5)")
