"""Passive tracer transport and Exner/Grass bed evolution.

The tracer is advanced in conservative form on the cell layering: the
layer mass ``m = dx l h rho`` changes by horizontal upwind fluxes and by the
vertical mass-transfer fluxes ``rho_{k} G_{k}``.  When the velocities used for
the fluxes are the same as those of the continuity update, a uniform tracer
stays uniform to round-off.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .mesh import Grid1D, LayerLayout
from .operators import transfer_center_from_fluxes


@dataclass
class TracerField:
    rho: np.ndarray


@dataclass
class BedState:
    z_b: np.ndarray
    Q_b: np.ndarray | None = None


def interface_tracer_value(rho_lo: float, rho_hi: float, G: float) -> float:
    """Upwind interface value: the upper layer when ``G > 0``, the lower one when ``G < 0``."""
    return 0.5 * (rho_lo + rho_hi) + 0.5 * float(np.sign(G)) * (rho_hi - rho_lo)


def grass_flux(u_bottom, Ag: float):
    """Bedload flux ``Ag |u|^2 u``."""
    u = np.asarray(u_bottom, dtype=float)
    out = Ag * u * u * u  # |u|^2 u
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------
# compiled kernels
# --------------------------------------------------------------------------


@njit(cache=True)
def bed_flux(u, Ag):
    ne = u.shape[1]
    Q = np.empty(ne)
    for e in range(ne):
        v = u[0, e]
        Q[e] = Ag * v * v * v
    return Q


@njit(cache=True)
def layer_fluxes(rho, u, he, n_cell, c2l, c2r, l_cell, ovr, use_ovr):
    """Per-cell-layer face fluxes of volume and tracer.

    Fluxes are evaluated on the finer of the two cells adjacent to each edge;
    the other cell, whose layering equals that of the edge, receives their sums.
    ``ovr[s]`` replaces the total volume flux through boundary edge ``s`` when
    ``use_ovr[s]`` is set; it is spread over layers by their fractions.

    Returns ``(VL, VR, TL, TR)``: volume and tracer fluxes through the left and
    right faces of every cell layer.
    """
    nmax, M = rho.shape
    VL = np.zeros((nmax, M))
    VR = np.zeros((nmax, M))
    TL = np.zeros((nmax, M))
    TR = np.zeros((nmax, M))
    for e in range(M + 1):
        left = e - 1
        right = e if e < M else -1
        if left < 0:
            fine = right
        elif right < 0:
            fine = left
        elif n_cell[left] > n_cell[right]:
            fine = left
        else:
            fine = right
        other = right if fine == left else left
        boundary = left < 0 or right < 0
        side = 0 if left < 0 else 1
        for a in range(n_cell[fine]):
            beta = c2r[a, fine] if fine == left else c2l[a, fine]
            if boundary and use_ovr[side]:
                vol = l_cell[a, fine] * ovr[side]
            else:
                vol = l_cell[a, fine] * he[e] * u[beta, e]
            if boundary:
                r_up = rho[a, fine]
            elif vol > 0.0:
                r_up = rho[a, left] if fine == left else rho[beta, left]
            elif vol < 0.0:
                r_up = rho[a, right] if fine == right else rho[beta, right]
            else:
                r_up = 0.0
            tr = vol * r_up
            if fine == left:
                VR[a, left] = vol
                TR[a, left] = tr
                if other >= 0:
                    VL[beta, other] += vol
                    TL[beta, other] += tr
            else:
                VL[a, right] = vol
                TL[a, right] = tr
                if other >= 0:
                    VR[beta, other] += vol
                    TR[beta, other] += tr
    return VL, VR, TL, TR


@njit(cache=True)
def tracer_tendency(rho, u, he, n_cell, l_cell, c2l, c2r, dx, ovr, use_ovr):
    """Time derivative of the layer tracer mass ``dx l h rho``."""
    nmax, M = rho.shape
    VL, VR, TL, TR = layer_fluxes(rho, u, he, n_cell, c2l, c2r, l_cell, ovr, use_ovr)
    G = transfer_center_from_fluxes(VL, VR, n_cell, l_cell, dx, True)
    dm = np.zeros((nmax, M))
    for i in range(M):
        n = n_cell[i]
        for a in range(n):
            vert = 0.0
            if a + 1 < n:
                g = G[a + 1, i]
                if g > 0.0:
                    r = rho[a + 1, i]
                elif g < 0.0:
                    r = rho[a, i]
                else:
                    r = 0.5 * (rho[a, i] + rho[a + 1, i])
                vert += r * g
            if a > 0:
                g = G[a, i]
                if g > 0.0:
                    r = rho[a, i]
                elif g < 0.0:
                    r = rho[a - 1, i]
                else:
                    r = 0.5 * (rho[a - 1, i] + rho[a, i])
                vert -= r * g
            dm[a, i] = -(TR[a, i] - TL[a, i]) + dx[i] * vert
    return dm


@njit(cache=True)
def tracer_mass(rho, h, l_cell, n_cell, dx):
    nmax, M = rho.shape
    m = np.zeros((nmax, M))
    for i in range(M):
        for a in range(n_cell[i]):
            m[a, i] = dx[i] * l_cell[a, i] * h[i] * rho[a, i]
    return m


@njit(cache=True)
def tracer_from_mass(m, h, l_cell, n_cell, dx):
    nmax, M = m.shape
    rho = np.zeros((nmax, M))
    for i in range(M):
        for a in range(n_cell[i]):
            rho[a, i] = m[a, i] / (dx[i] * l_cell[a, i] * h[i])
    return rho


@njit(cache=True)
def implied_boundary_flux(S_inner, h_old, h_new, dx, dt, side):
    """Boundary volume flux making a prescribed depth change mass-consistent."""
    if side == 0:
        return S_inner + dx * (h_new - h_old) / dt
    return S_inner - dx * (h_new - h_old) / dt


@njit(cache=True)
def bed_update(b, Qsum, dx, xi, dt):
    """``b - xi dt/dx (Q_{i+1} - Q_i)`` with a pre-weighted edge flux ``Qsum``."""
    M = b.size
    out = np.empty(M)
    for i in range(M):
        out[i] = b[i] - xi * dt / dx[i] * (Qsum[i + 1] - Qsum[i])
    return out


# --------------------------------------------------------------------------
# Python-level operations
# --------------------------------------------------------------------------


def tracer_step_theta(rho, h_old, h_new, he, u_old, u_new, theta: float, dt: float, grid: Grid1D,
                      layout: LayerLayout, boundary_flux=(None, None)) -> TracerField:
    """One tracer update with the velocity blend ``theta u_new + (1-theta) u_old``.

    ``boundary_flux`` optionally prescribes the total volume flux through the
    left/right boundary edge (used next to prescribed free-surface cells).
    """
    u_theta = theta * np.asarray(u_new) + (1.0 - theta) * np.asarray(u_old)
    ovr = np.array([0.0 if f is None else f for f in boundary_flux], dtype=float)
    use = np.array([f is not None for f in boundary_flux])
    args = (layout.n_cell, layout.l_cell, layout.cell_to_left, layout.cell_to_right)
    m = tracer_mass(rho, h_old, layout.l_cell, layout.n_cell, grid.dx)
    m += dt * tracer_tendency(rho, u_theta, he, *args, grid.dx, ovr, use)
    return TracerField(tracer_from_mass(m, h_new, layout.l_cell, layout.n_cell, grid.dx))


def tracer_step_imex(rho, h_stages, he, U_stages, dt: float, tableau, grid: Grid1D,
                     layout: LayerLayout, h_new=None, boundary_flux=None) -> TracerField:
    """Stagewise tracer update of the additive Runge-Kutta step, then weighted assembly.

    ``h_stages[j]`` and ``U_stages[j]`` are the stage depths and velocities
    (stage 0 is the old state); ``h_new`` is the final depth (defaults to the
    last stage depth).  Stage ``j`` transports with the implicit-weighted
    stage velocity ``sum_k at[j,k] U_k / c_j``, the one its continuity
    update used.
    """
    a, at, bw, c = tableau.a, tableau.a_impl, tableau.b, tableau.c
    s = len(U_stages)
    h_new = h_stages[-1] if h_new is None else h_new
    args = (layout.n_cell, layout.l_cell, layout.cell_to_left, layout.cell_to_right, grid.dx)
    ovr = np.zeros(2)
    use = np.zeros(2, dtype=np.bool_)
    m0 = tracer_mass(rho, h_stages[0], layout.l_cell, layout.n_cell, grid.dx)
    rhos = [np.asarray(rho, dtype=float)]
    for j in range(1, s):
        ubar = sum(at[j, k] * U_stages[k] for k in range(j + 1)) / c[j]
        m = m0.copy()
        for k in range(j):
            if a[j, k] != 0.0:
                m += dt * a[j, k] * tracer_tendency(rhos[k], ubar, he, *args, ovr, use)
        rhos.append(tracer_from_mass(m, h_stages[j], layout.l_cell, layout.n_cell, grid.dx))
    m = m0.copy()
    for j in range(s):
        m += dt * bw[j] * tracer_tendency(rhos[j], U_stages[j], he, *args, ovr, use)
    return TracerField(tracer_from_mass(m, h_new, layout.l_cell, layout.n_cell, grid.dx))


def exner_step_theta(z_b, u1_old, u1_new, dt: float, theta: float, xi: float, Ag: float, grid: Grid1D) -> BedState:
    """Bed update from the theta-blend of the Grass flux differences of the bottom-layer edge velocity."""
    Q = theta * grass_flux(u1_new, Ag) + (1.0 - theta) * grass_flux(u1_old, Ag)
    return BedState(bed_update(np.asarray(z_b, float), np.asarray(Q, float), grid.dx, xi, dt), Q)


def exner_step_imex(z_b, u1_stages, dt: float, tableau, xi: float, Ag: float, grid: Grid1D):
    """Stage bed values ``b_j`` (implicit-tableau weights) and the final bed (weights ``b``)."""
    Qs = [grass_flux(u1, Ag) for u1 in u1_stages]
    z_b = np.asarray(z_b, float)
    stages = [z_b.copy()]
    for j in range(1, len(Qs)):
        Qj = sum(tableau.a_impl[j, k] * Qs[k] for k in range(j + 1))
        stages.append(bed_update(z_b, np.asarray(Qj, float), grid.dx, xi, dt))
    Qf = sum(tableau.b_impl[j] * Qs[j] for j in range(len(Qs)))
    return BedState(bed_update(z_b, np.asarray(Qf, float), grid.dx, xi, dt), Qf), stages
