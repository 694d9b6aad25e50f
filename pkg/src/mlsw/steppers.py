"""Time integrators: theta-method, IMEX-ARK2 and explicit SSP-RK3.

The semi-implicit steps follow one pattern per implicit stage: explicit
terms are collected in a right-hand side, every edge column is reduced with
two tridiagonal solves (``A X = F``, ``A Y = H``), a single tridiagonal
system is solved for the free surface and the velocities are recovered by
back-substitution.  Depths and mixing coefficients are frozen at the start
of the step.
"""

from __future__ import annotations

import math
import time as _time
import warnings
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .exceptions import ClosureError, ConfigurationError, DryingError, SingularSystemError, SolverAbort
from .linalg import _thomas, column_solve, free_surface_bands
from .mesh import Grid1D, LayerLayout
from .operators import (BoundaryConditions, State, bc_value, edge_flux, edge_heights, explicit_tendency,
                        set_boundary_velocities, stiff_tendency)
from .physics import PhysicsParams, column_closures
from .transport import bed_flux, bed_update, implied_boundary_flux, tracer_from_mass, tracer_mass, tracer_tendency

OK, CLOSURE, DRYING, SINGULAR_COLUMN, SINGULAR_SURFACE, NONFINITE = 0, 1, 2, 3, 4, 5

_S2 = math.sqrt(2.0)


@dataclass(frozen=True)
class ButcherTableaux:
    """Explicit/implicit tableau pair of an additive Runge-Kutta method."""

    a: np.ndarray
    a_impl: np.ndarray
    b: np.ndarray
    b_impl: np.ndarray
    c: np.ndarray

    @property
    def stages(self) -> int:
        return self.c.size

    def check(self, tol: float = 1e-14) -> None:
        for name, A in (("explicit", self.a), ("implicit", self.a_impl)):
            if np.max(np.abs(A.sum(axis=1) - self.c)) > tol:
                raise ConfigurationError(f"{name} tableau rows do not sum to the nodes")
        if abs(self.b.sum() - 1.0) > tol or abs(self.b_impl.sum() - 1.0) > tol:
            raise ConfigurationError("weights do not sum to one")


def ark2_tableaux() -> ButcherTableaux:
    """Second-order IMEX pair whose implicit part is TR-BDF2 with ``gamma = 2 - sqrt(2)``."""
    gamma = 2.0 - _S2
    a32 = (3.0 + 2.0 * _S2) / 6.0
    a = np.array([[0.0, 0.0, 0.0], [gamma, 0.0, 0.0], [1.0 - a32, a32, 0.0]])
    d = 1.0 - 1.0 / _S2
    w = 1.0 / (2.0 * _S2)
    at = np.array([[0.0, 0.0, 0.0], [d, d, 0.0], [w, w, d]])
    b = np.array([w, w, d])
    return ButcherTableaux(a, at, b, b.copy(), np.array([0.0, gamma, 1.0]))


ARK2 = ark2_tableaux()


@dataclass
class StepReport:
    dt: float
    C_vel: float
    C_cel: float
    residual: float = 0.0
    wall_time: float = 0.0
    steps: int = 1


@dataclass
class Model:
    """Everything a stepper needs besides the state."""

    grid: Grid1D
    layout: LayerLayout
    params: PhysicsParams = field(default_factory=PhysicsParams)
    bc: BoundaryConditions = field(default_factory=BoundaryConditions)
    tracer: bool = True
    sediment: bool = False

    def __post_init__(self):
        if self.layout.M != self.grid.M:
            raise ConfigurationError("grid and layout cell counts differ")
        self.bc.validate()
        lay = self.layout
        self._lay = (lay.n_edge, lay.l_edge, lay.n_cell, lay.l_cell, lay.cell_to_left, lay.cell_to_right,
                     lay.edge_from_left_cell, lay.edge_from_right_cell, lay.donor_range, lay.donor_same,
                     lay.log_below)
        g = self.grid
        self._geo = (g.x_edge, g.x_center, g.dx, g.dx_edge, g.upwind_weights)
        self._bcs = self.bc.arrays(lay)
        p = self.params
        self._phys = (p.g, p.kappa, p.dz0, p.Cw, p.u_wind, p.Ag, p.xi, p.h_min)
        self._flags = (bool(self.tracer), bool(self.sediment))

    def kernel_args(self):
        return self._lay, self._geo, self._bcs, self._phys, self._flags


# --------------------------------------------------------------------------
# shared kernels
# --------------------------------------------------------------------------


@njit(cache=True)
def _min_depth_ok(eta, b, hmin):
    for i in range(eta.size):
        if not (eta[i] - b[i] >= hmin):
            return False
    return True


@njit(cache=True)
def _courant(u, h, n_edge, dx, g, dt):
    cv = 0.0
    cc = 0.0
    M = h.size
    for e in range(1, M + 1):
        i = e - 1
        c = math.sqrt(g * h[i])
        for a in range(n_edge[e]):
            s = abs(u[a, e])
            if s * dt / dx[i] > cv:
                cv = s * dt / dx[i]
            if (s + c) * dt / dx[i] > cc:
                cc = (s + c) * dt / dx[i]
    return cv, cc


@njit(cache=True)
def _implicit_stage(R, rhs_expl, w, he, cvis, cfu, cwt, t_new, u_old, lay, geo, bcs, phys):
    """Solve one implicit stage; returns ``(U, eta, status, residual)``.

    ``R`` holds the explicit velocity predictor, ``rhs_expl`` the explicit
    part of ``dx * eta``.  Boundary edges of ``U`` follow the boundary
    conditions at ``t_new`` with the frozen depths.
    """
    n_edge, l_edge, n_cell, l_cell, c2l, c2r, efl, efr, donor, same, logb = lay
    x_edge, x_center, dx, dx_edge, W = geo
    kind, par, prof = bcs
    g, kappa, dz0, Cw, uw, Ag, xi, hmin = phys
    nmax, ne = R.shape
    M = ne - 1
    X = np.zeros((nmax, ne))
    Y = np.zeros((nmax, ne))
    Sx = np.zeros(ne)
    T = np.zeros(ne)
    U = u_old.copy()
    code = column_solve(he, cvis, cfu, cwt, uw, w, R, n_edge, l_edge, X, Y, Sx, T, 1, M - 1)
    if code:
        return U, rhs_expl / dx, SINGULAR_COLUMN, 0.0
    set_boundary_velocities(U, he, n_edge, l_edge, kind, par, prof, t_new)
    for s in range(2):
        e = 0 if s == 0 else M
        if kind[s] == 1:
            acc = 0.0
            for a in range(n_edge[e]):
                acc += l_edge[a, e] * U[a, e]
            Sx[e] = he[e] * acc
        else:
            Sx[e] = 0.0
        T[e] = 0.0
    dl = kind[0] == 2
    dr = kind[1] == 2
    lower, diag, upper, rhs = free_surface_bands(dx, dx_edge, T, Sx, w, g, rhs_expl, dl, dr,
                                                 bc_value(par, 0, t_new), bc_value(par, 1, t_new))
    eta = np.empty(M)
    cp = np.empty(M)
    if _thomas(lower, diag, upper, rhs, eta, cp):
        return U, eta, SINGULAR_SURFACE, 0.0
    res = 0.0
    for i in range(M):
        r = diag[i] * eta[i] - rhs[i]
        if i > 0:
            r += lower[i] * eta[i - 1]
        if i < M - 1:
            r += upper[i] * eta[i + 1]
        if abs(r) > res:
            res = abs(r)
    for e in range(1, M):
        fac = g * w * (eta[e] - eta[e - 1]) / dx_edge[e]
        for a in range(n_edge[e]):
            U[a, e] = X[a, e] - fac * Y[a, e]
    set_boundary_velocities(U, he, n_edge, l_edge, kind, par, prof, t_new)
    return U, eta, OK, res


@njit(cache=True)
def _prepare(eta, u, b, t, lay, bcs, phys):
    """Depths, boundary velocities (in place) and frozen closures at the start of a step."""
    n_edge, l_edge, n_cell, l_cell, c2l, c2r, efl, efr, donor, same, logb = lay
    kind, par, prof = bcs
    g, kappa, dz0, Cw, uw, Ag, xi, hmin = phys
    h = eta - b
    he = edge_heights(h, u, n_edge, l_edge)
    set_boundary_velocities(u, he, n_edge, l_edge, kind, par, prof, t)
    cvis, cfu, cwt, st = column_closures(u, he, n_edge, l_edge, logb, kappa, dz0, Cw, uw)
    return h, he, cvis, cfu, cwt, st


@njit(cache=True)
def _shift_eta(eta, db, kind):
    """Move the free surface with the bed (depth-preserving) except in prescribed cells."""
    M = eta.size
    for i in range(M):
        if (i == 0 and kind[0] == 2) or (i == M - 1 and kind[1] == 2):
            continue
        eta[i] += db[i]


@njit(cache=True)
def _overrides(kind, S_int, h_old, h_new, dx, dt):
    """Implied boundary fluxes for prescribed-surface cells."""
    M = h_old.size
    ovr = np.zeros(2)
    use = np.zeros(2, dtype=np.bool_)
    if dt > 0.0:
        if kind[0] == 2:
            ovr[0] = implied_boundary_flux(S_int[1], h_old[0], h_new[0], dx[0], dt, 0)
            use[0] = True
        if kind[1] == 2:
            ovr[1] = implied_boundary_flux(S_int[M - 1], h_old[M - 1], h_new[M - 1], dx[M - 1], dt, 1)
            use[1] = True
    return ovr, use


# --------------------------------------------------------------------------
# theta-method
# --------------------------------------------------------------------------


@njit(cache=True)
def _theta_kernel(eta, u, rho, b, t, dt, theta, lay, geo, bcs, phys, flags):
    n_edge, l_edge, n_cell, l_cell, c2l, c2r, efl, efr, donor, same, logb = lay
    x_edge, x_center, dx, dx_edge, W = geo
    kind, par, prof = bcs
    g, kappa, dz0, Cw, uw, Ag, xi, hmin = phys
    do_tracer, do_sed = flags
    nmax, ne = u.shape
    M = ne - 1
    u0 = u.copy()
    if not _min_depth_ok(eta, b, hmin):
        return eta, u0, rho, b, DRYING, 0.0
    h, he, cvis, cfu, cwt, st = _prepare(eta, u0, b, t, lay, bcs, phys)
    if st:
        return eta, u0, rho, b, CLOSURE, 0.0
    F = explicit_tendency(u0, he, n_edge, l_edge, n_cell, l_cell, c2l, c2r, efl, efr, donor, same, W, dx_edge)
    R = u0 + dt * F
    if theta < 1.0:
        I = stiff_tendency(u0, eta, he, cvis, cfu, cwt, uw, g, n_edge, l_edge, dx_edge)
        R += (1.0 - theta) * dt * I
    S0 = edge_flux(u0, he, n_edge, l_edge)
    rhs = np.empty(M)
    for i in range(M):
        rhs[i] = dx[i] * eta[i] - (1.0 - theta) * dt * (S0[i + 1] - S0[i])
    U, eta1, st, res = _implicit_stage(R, rhs, theta * dt, he, cvis, cfu, cwt, t + dt, u0, lay, geo, bcs, phys)
    if st:
        return eta, u0, rho, b, st, res
    b1 = b
    if do_sed:
        Q = theta * bed_flux(U, Ag) + (1.0 - theta) * bed_flux(u0, Ag)
        b1 = bed_update(b, Q, dx, xi, dt)
        _shift_eta(eta1, b1 - b, kind)
    rho1 = rho
    if do_tracer:
        ut = theta * U + (1.0 - theta) * u0
        h1 = eta1 - b1
        ovr, use = _overrides(kind, edge_flux(ut, he, n_edge, l_edge), h, h1, dx, dt)
        m = tracer_mass(rho, h, l_cell, n_cell, dx)
        m += dt * tracer_tendency(rho, ut, he, n_cell, l_cell, c2l, c2r, dx, ovr, use)
        rho1 = tracer_from_mass(m, h1, l_cell, n_cell, dx)
    return eta1, U, rho1, b1, OK, res


# --------------------------------------------------------------------------
# IMEX-ARK2
# --------------------------------------------------------------------------


@njit(cache=True)
def _imex_kernel(eta, u, rho, b, t, dt, A, At, bw, c, lay, geo, bcs, phys, flags):
    n_edge, l_edge, n_cell, l_cell, c2l, c2r, efl, efr, donor, same, logb = lay
    x_edge, x_center, dx, dx_edge, W = geo
    kind, par, prof = bcs
    g, kappa, dz0, Cw, uw, Ag, xi, hmin = phys
    do_tracer, do_sed = flags
    nmax, ne = u.shape
    M = ne - 1
    s = c.size
    u0 = u.copy()
    if not _min_depth_ok(eta, b, hmin):
        return eta, u0, rho, b, DRYING, 0.0
    h, he, cvis, cfu, cwt, st = _prepare(eta, u0, b, t, lay, bcs, phys)
    if st:
        return eta, u0, rho, b, CLOSURE, 0.0
    Us = np.zeros((s, nmax, ne))
    Fs = np.zeros((s, nmax, ne))
    Is = np.zeros((s, nmax, ne))
    Ss = np.zeros((s, ne))
    Qs = np.zeros((s, ne))
    etas = np.zeros((s, M))
    bs = np.zeros((s, M))
    res_max = 0.0
    for j in range(s):
        if j == 0:
            Uj = u0
            etaj = eta.copy()
            bj = b.copy()
        else:
            R = u0.copy()
            rhs = dx * eta
            for k in range(j):
                R += dt * (A[j, k] * Fs[k] + At[j, k] * Is[k])
                for i in range(M):
                    rhs[i] -= dt * At[j, k] * (Ss[k, i + 1] - Ss[k, i])
            Uj, etaj, st, res = _implicit_stage(R, rhs, At[j, j] * dt, he, cvis, cfu, cwt, t + c[j] * dt, u0,
                                                lay, geo, bcs, phys)
            if st:
                return eta, u0, rho, b, st, res
            res_max = max(res_max, res)
            bj = b.copy()
            if do_sed:
                Qs[j] = bed_flux(Uj, Ag)
                Q = np.zeros(ne)
                for k in range(j + 1):
                    Q += At[j, k] * Qs[k]
                bj = bed_update(b, Q, dx, xi, dt)
                _shift_eta(etaj, bj - b, kind)
        Us[j] = Uj
        etas[j] = etaj
        bs[j] = bj
        if do_sed and j == 0:
            Qs[0] = bed_flux(Uj, Ag)
        Fs[j] = explicit_tendency(Uj, he, n_edge, l_edge, n_cell, l_cell, c2l, c2r, efl, efr, donor, same, W,
                                  dx_edge)
        Is[j] = stiff_tendency(Uj, etaj, he, cvis, cfu, cwt, uw, g, n_edge, l_edge, dx_edge)
        Ss[j] = edge_flux(Uj, he, n_edge, l_edge)
    # final assembly
    u1 = Us[s - 1].copy()
    for e in range(1, M):
        for a in range(n_edge[e]):
            acc = 0.0
            for j in range(s):
                acc += bw[j] * (Fs[j, a, e] + Is[j, a, e])
            u1[a, e] = u0[a, e] + dt * acc
    eta1 = np.empty(M)
    for i in range(M):
        acc = 0.0
        for j in range(s):
            acc += bw[j] * (Ss[j, i + 1] - Ss[j, i])
        eta1[i] = eta[i] - dt / dx[i] * acc
    if kind[0] == 2:
        eta1[0] = bc_value(par, 0, t + dt)
    if kind[1] == 2:
        eta1[M - 1] = bc_value(par, 1, t + dt)
    b1 = b
    if do_sed:
        Q = np.zeros(ne)
        for j in range(s):
            Q += bw[j] * Qs[j]
        b1 = bed_update(b, Q, dx, xi, dt)
        _shift_eta(eta1, b1 - b, kind)
    rho1 = rho
    if do_tracer:
        m0 = tracer_mass(rho, h, l_cell, n_cell, dx)
        rhos = np.zeros((s, nmax, M))
        rhos[0] = rho
        for j in range(1, s):
            ubar = np.zeros((nmax, ne))
            for k in range(j + 1):
                ubar += At[j, k] * Us[k]
            ubar /= c[j]
            hj = etas[j] - bs[j]
            ovr, use = _overrides(kind, edge_flux(ubar, he, n_edge, l_edge), h, hj, dx, c[j] * dt)
            m = m0.copy()
            for k in range(j):
                if A[j, k] != 0.0:
                    m += dt * A[j, k] * tracer_tendency(rhos[k], ubar, he, n_cell, l_cell, c2l, c2r, dx, ovr, use)
            rhos[j] = tracer_from_mass(m, hj, l_cell, n_cell, dx)
        h1 = eta1 - b1
        m = m0.copy()
        for j in range(s):
            ovr, use = _overrides(kind, Ss[j], h, h1, dx, dt)
            m += dt * bw[j] * tracer_tendency(rhos[j], Us[j], he, n_cell, l_cell, c2l, c2r, dx, ovr, use)
        rho1 = tracer_from_mass(m, h1, l_cell, n_cell, dx)
    return eta1, u1, rho1, b1, OK, res_max


# --------------------------------------------------------------------------
# explicit SSP-RK3
# --------------------------------------------------------------------------


@njit(cache=True)
def _euler(eta, u, b, rho, t, dt, target_l, target_r, lay, geo, bcs, phys, flags):
    """Forward-Euler substep with all terms explicit; prescribed cells jump to the targets."""
    n_edge, l_edge, n_cell, l_cell, c2l, c2r, efl, efr, donor, same, logb = lay
    x_edge, x_center, dx, dx_edge, W = geo
    kind, par, prof = bcs
    g, kappa, dz0, Cw, uw, Ag, xi, hmin = phys
    do_tracer, do_sed = flags
    nmax, ne = u.shape
    M = ne - 1
    uu = u.copy()
    h, he, cvis, cfu, cwt, st = _prepare(eta, uu, b, t, lay, bcs, phys)
    if st:
        return eta, uu, b, rho, CLOSURE
    F = explicit_tendency(uu, he, n_edge, l_edge, n_cell, l_cell, c2l, c2r, efl, efr, donor, same, W, dx_edge)
    I = stiff_tendency(uu, eta, he, cvis, cfu, cwt, uw, g, n_edge, l_edge, dx_edge)
    S = edge_flux(uu, he, n_edge, l_edge)
    u1 = uu.copy()
    for e in range(1, M):
        for a in range(n_edge[e]):
            u1[a, e] = uu[a, e] + dt * (F[a, e] + I[a, e])
    eta1 = np.empty(M)
    for i in range(M):
        eta1[i] = eta[i] - dt / dx[i] * (S[i + 1] - S[i])
    b1 = b
    if do_sed:
        b1 = bed_update(b, bed_flux(uu, Ag), dx, xi, dt)
        _shift_eta(eta1, b1 - b, kind)
    if kind[0] == 2:
        eta1[0] = target_l
    if kind[1] == 2:
        eta1[M - 1] = target_r
    rho1 = rho
    if do_tracer:
        h1 = eta1 - b1
        ovr, use = _overrides(kind, S, h, h1, dx, dt)
        m = tracer_mass(rho, h, l_cell, n_cell, dx)
        m += dt * tracer_tendency(rho, uu, he, n_cell, l_cell, c2l, c2r, dx, ovr, use)
        rho1 = tracer_from_mass(m, h1, l_cell, n_cell, dx)
    return eta1, u1, b1, rho1, OK


@njit(cache=True)
def _combine(c0, eta0, u0, b0, rho0, c1, eta1, u1, b1, rho1, lay, geo):
    n_edge, l_edge, n_cell, l_cell, c2l, c2r, efl, efr, donor, same, logb = lay
    dx = geo[2]
    eta = c0 * eta0 + c1 * eta1
    b = c0 * b0 + c1 * b1
    u = c0 * u0 + c1 * u1
    m = c0 * tracer_mass(rho0, eta0 - b0, l_cell, n_cell, dx) + c1 * tracer_mass(rho1, eta1 - b1, l_cell, n_cell, dx)
    rho = tracer_from_mass(m, eta - b, l_cell, n_cell, dx)
    return eta, u, b, rho


@njit(cache=True)
def _rk3_run(eta, u, rho, b, t, t_end, courant, dt_fixed, max_steps, lay, geo, bcs, phys, flags):
    """Advance with SSP-RK3 until ``t_end`` (or ``max_steps``).

    The step is ``courant * min dx / (|u| + sqrt(g h))`` unless ``dt_fixed > 0``,
    truncated to land on ``t_end``.  Returns the new fields, time, number of
    steps, last dt, max Courant numbers and a status code.
    """
    n_edge, l_edge, n_cell, l_cell, c2l, c2r, efl, efr, donor, same, logb = lay
    x_edge, x_center, dx, dx_edge, W = geo
    kind, par, prof = bcs
    g, kappa, dz0, Cw, uw, Ag, xi, hmin = phys
    do_tracer = flags[0]
    M = eta.size
    steps = 0
    cmax_v = 0.0
    cmax_c = 0.0
    dt = 0.0
    while t < t_end and steps < max_steps:
        if not _min_depth_ok(eta, b, hmin):
            return eta, u, rho, b, t, steps, dt, cmax_v, cmax_c, DRYING
        h = eta - b
        if dt_fixed > 0.0:
            dt = dt_fixed
        else:
            smax = 0.0
            for e in range(1, M + 1):
                i = e - 1
                c = math.sqrt(g * h[i])
                for a in range(n_edge[e]):
                    v = (abs(u[a, e]) + c) / dx[i]
                    if v > smax:
                        smax = v
            dt = courant / smax
        if t + dt >= t_end or t_end - (t + dt) < 1e-9 * dt:
            dt = t_end - t
        cv, cc = _courant(u, h, n_edge, dx, g, dt)
        cmax_v = max(cmax_v, cv)
        cmax_c = max(cmax_c, cc)
        tl = bc_value(par, 0, t)
        tr = bc_value(par, 1, t)
        e1, u1, b1, r1, st = _euler(eta, u, b, rho, t, dt, bc_value(par, 0, t + dt), bc_value(par, 1, t + dt),
                                    lay, geo, bcs, phys, flags)
        if st:
            return eta, u, rho, b, t, steps, dt, cmax_v, cmax_c, st
        if not _min_depth_ok(e1, b1, hmin):
            return eta, u, rho, b, t, steps, dt, cmax_v, cmax_c, DRYING
        e2, u2, b2, r2, st = _euler(e1, u1, b1, r1, t + dt, dt,
                                    4.0 * bc_value(par, 0, t + 0.5 * dt) - 3.0 * tl,
                                    4.0 * bc_value(par, 1, t + 0.5 * dt) - 3.0 * tr, lay, geo, bcs, phys, flags)
        if st:
            return eta, u, rho, b, t, steps, dt, cmax_v, cmax_c, st
        e2, u2, b2, r2 = _combine(0.75, eta, u, b, rho, 0.25, e2, u2, b2, r2, lay, geo)
        if not _min_depth_ok(e2, b2, hmin):
            return eta, u, rho, b, t, steps, dt, cmax_v, cmax_c, DRYING
        e3, u3, b3, r3, st = _euler(e2, u2, b2, r2, t + 0.5 * dt, dt,
                                    0.5 * (3.0 * bc_value(par, 0, t + dt) - tl),
                                    0.5 * (3.0 * bc_value(par, 1, t + dt) - tr), lay, geo, bcs, phys, flags)
        if st:
            return eta, u, rho, b, t, steps, dt, cmax_v, cmax_c, st
        eta, u, b, rho3 = _combine(1.0 / 3.0, eta, u, b, rho, 2.0 / 3.0, e3, u3, b3, r3, lay, geo)
        if do_tracer:
            rho = rho3
        t = t + dt
        if t_end - t < 1e-12 * max(1.0, abs(t_end)):
            t = t_end
        # boundary edges follow the conditions at the new time
        he = edge_heights(eta - b, u, n_edge, l_edge)
        set_boundary_velocities(u, he, n_edge, l_edge, kind, par, prof, t)
        steps += 1
    return eta, u, rho, b, t, steps, dt, cmax_v, cmax_c, OK


@njit(cache=True)
def _si_run(eta, u, rho, b, t, t_end, dt_user, scheme, theta, a, at, bw, c, max_steps, lay, geo, bcs, phys,
            flags):
    """Fixed-step theta (``scheme == 0``) or IMEX (``scheme == 1``) loop up to ``t_end``.

    The last step is shortened to land on ``t_end``.  Courant maxima are
    taken over the states at the start of each step.
    """
    n_edge = lay[0]
    dx = geo[2]
    g = phys[0]
    steps = 0
    cmax_v = 0.0
    cmax_c = 0.0
    res_max = 0.0
    dt = dt_user
    while t < t_end and steps < max_steps:
        dt = min(dt_user, t_end - t)
        cv, cc = _courant(u, eta - b, n_edge, dx, g, dt)
        cmax_v = max(cmax_v, cv)
        cmax_c = max(cmax_c, cc)
        if scheme == 0:
            eta, u, rho, b, st, res = _theta_kernel(eta, u, rho, b, t, dt, theta, lay, geo, bcs, phys, flags)
        else:
            eta, u, rho, b, st, res = _imex_kernel(eta, u, rho, b, t, dt, a, at, bw, c, lay, geo, bcs, phys, flags)
        if st:
            return eta, u, rho, b, t, steps, dt, cmax_v, cmax_c, res_max, st
        for i in range(eta.size):
            if not math.isfinite(eta[i]):
                return eta, u, rho, b, t, steps, dt, cmax_v, cmax_c, res_max, NONFINITE
        res_max = max(res_max, res)
        t = t + dt
        if t_end - t < 1e-12 * max(1.0, abs(t_end)):
            t = t_end
        steps += 1
    return eta, u, rho, b, t, steps, dt, cmax_v, cmax_c, res_max, OK


# --------------------------------------------------------------------------
# Python API
# --------------------------------------------------------------------------


def _raise_for(status: int, t: float, where: str):
    msg = f"{where} failed at t={t:.6g}"
    if status == CLOSURE:
        raise ClosureError(f"{msg}: closure evaluated below the roughness length")
    if status == DRYING:
        raise DryingError(f"{msg}: water depth below the minimum")
    if status in (SINGULAR_COLUMN, SINGULAR_SURFACE):
        raise SingularSystemError(f"{msg}: singular tridiagonal system")
    if status == NONFINITE:
        raise SolverAbort(f"{msg}: non-finite values")
    raise SolverAbort(f"{msg}: status {status}")


def _finish(model: Model, state: State, eta, u, rho, b, dt, t_new, residual, wall, steps=1):
    if not (np.all(np.isfinite(eta)) and np.all(np.isfinite(u))):
        _raise_for(NONFINITE, state.time, "step")
    new = State(eta, u, rho if model.tracer else state.rho.copy(), b if model.sediment else state.b.copy(), t_new)
    cv, cc = courant_numbers(new, model.grid, model.layout, dt, model.params.g)
    return new, StepReport(dt, cv, cc, residual, wall, steps)


def courant_numbers(state: State, grid: Grid1D, layout: LayerLayout, dt: float, g: float = 9.81):
    """Maximum velocity and celerity Courant numbers (edge ``e`` paired with cell ``e-1``)."""
    cv, cc = _courant(state.u, state.h, layout.n_edge, grid.dx, g, dt)
    return float(cv), float(cc)


def step_theta(model: Model, state: State, theta: float, dt: float) -> tuple[State, StepReport]:
    """One theta-method step."""
    if not 0.0 <= theta <= 1.0:
        raise ConfigurationError(f"theta={theta} outside [0, 1]")
    if not dt > 0:
        raise ConfigurationError("dt must be positive")
    if theta < 0.5:
        warnings.warn("theta < 0.5 is only conditionally stable", RuntimeWarning, stacklevel=2)
    t0 = _time.perf_counter()
    lay, geo, bcs, phys, flags = model.kernel_args()
    eta, u, rho, b, st, res = _theta_kernel(state.eta, state.u, state.rho, state.b, state.time, dt, theta,
                                            lay, geo, bcs, phys, flags)
    if st:
        _raise_for(st, state.time, "theta step")
    return _finish(model, state, eta, u, rho, b, dt, state.time + dt, res, _time.perf_counter() - t0)


def step_imex_ark2(model: Model, state: State, dt: float, tableau: ButcherTableaux = ARK2) -> tuple[State, StepReport]:
    """One IMEX-ARK2 step (two free-surface solves)."""
    if not dt > 0:
        raise ConfigurationError("dt must be positive")
    t0 = _time.perf_counter()
    lay, geo, bcs, phys, flags = model.kernel_args()
    eta, u, rho, b, st, res = _imex_kernel(state.eta, state.u, state.rho, state.b, state.time, dt, tableau.a,
                                           tableau.a_impl, tableau.b, tableau.c, lay, geo, bcs, phys, flags)
    if st:
        _raise_for(st, state.time, "IMEX step")
    return _finish(model, state, eta, u, rho, b, dt, state.time + dt, res, _time.perf_counter() - t0)


def step_rk3_explicit(model: Model, state: State, target_C_cel: float, t_stop: float | None = None,
                      dt: float | None = None) -> tuple[State, StepReport]:
    """One SSP-RK3 step at Courant number ``target_C_cel`` (or a fixed ``dt``), never passing ``t_stop``."""
    return advance_rk3(model, state, np.inf if t_stop is None else t_stop, target_C_cel, max_steps=1, dt=dt)


def advance_rk3(model: Model, state: State, t_end: float, target_C_cel: float, max_steps: int = 2**62,
                dt: float | None = None) -> tuple[State, StepReport]:
    """Run SSP-RK3 steps until ``t_end``; the report holds the maxima over all steps."""
    if dt is None and not 0.0 < target_C_cel <= 1.0:
        raise ConfigurationError(f"target Courant number {target_C_cel} outside (0, 1]")
    t0 = _time.perf_counter()
    lay, geo, bcs, phys, flags = model.kernel_args()
    out = _rk3_run(state.eta.copy(), state.u.copy(), state.rho.copy(), state.b.copy(), state.time, float(t_end),
                   float(target_C_cel), 0.0 if dt is None else float(dt), max_steps, lay, geo, bcs, phys, flags)
    eta, u, rho, b, t, steps, dt_last, cv, cc, st = out
    if st:
        _raise_for(st, t, "RK3 step")
    if not (np.all(np.isfinite(eta)) and np.all(np.isfinite(u))):
        _raise_for(NONFINITE, t, "RK3 step")
    new = State(eta, u, rho, b if model.sediment else state.b.copy(), t)
    return new, StepReport(dt_last, cv, cc, 0.0, _time.perf_counter() - t0, steps)


def advance_semi_implicit(model: Model, state: State, scheme: str, dt: float, t_end: float, theta: float = 0.55,
                          tableau: ButcherTableaux = ARK2, max_steps: int = 2**62) -> tuple[State, StepReport]:
    """Run theta (``scheme="theta"``) or IMEX-ARK2 (``scheme="imex"``) steps of size ``dt`` until ``t_end``.

    The report holds the Courant maxima and the largest free-surface residual over all steps.
    """
    if scheme not in ("theta", "imex"):
        raise ConfigurationError(f"unknown semi-implicit scheme {scheme!r}")
    if not dt > 0:
        raise ConfigurationError("dt must be positive")
    if scheme == "theta":
        if not 0.0 <= theta <= 1.0:
            raise ConfigurationError(f"theta={theta} outside [0, 1]")
        if theta < 0.5:
            warnings.warn("theta < 0.5 is only conditionally stable", RuntimeWarning, stacklevel=2)
    t0 = _time.perf_counter()
    lay, geo, bcs, phys, flags = model.kernel_args()
    out = _si_run(state.eta.copy(), state.u.copy(), state.rho.copy(), state.b.copy(), state.time, float(t_end),
                  float(dt), 0 if scheme == "theta" else 1, float(theta), tableau.a, tableau.a_impl, tableau.b,
                  tableau.c, max_steps, lay, geo, bcs, phys, flags)
    eta, u, rho, b, t, steps, dt_last, cv, cc, res, st = out
    if st:
        _raise_for(st, t, f"{scheme} step {steps}")
    new = State(eta, u, rho if model.tracer else state.rho.copy(), b if model.sediment else state.b.copy(), t)
    return new, StepReport(dt_last, cv, cc, res, _time.perf_counter() - t0, steps)
