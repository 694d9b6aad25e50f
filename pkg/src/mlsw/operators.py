"""Discrete spatial operators on the staggered grid.

The compiled kernels work on padded arrays: velocities ``u[a, e]`` have
shape ``(nmax, M+1)``, cell quantities ``(nmax, M)``; entries beyond the
local layer count are ignored (kept at zero).  Interface arrays have an extra
row: row ``k`` is the interface between 0-based layers ``k-1`` and ``k``, so
rows ``0`` and ``N`` are the bed and the free surface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from numba import njit

from .exceptions import ConfigurationError
from .mesh import Grid1D, LayerLayout

WALL, DISCHARGE, SURFACE = 0, 1, 2
_KIND_NAMES = {"wall": WALL, "discharge": DISCHARGE, "surface": SURFACE}


@dataclass
class State:
    """Prognostic variables; ``rho`` lives on the cell layering."""

    eta: np.ndarray
    u: np.ndarray
    rho: np.ndarray
    b: np.ndarray
    time: float = 0.0

    @property
    def h(self) -> np.ndarray:
        return self.eta - self.b

    def copy(self) -> "State":
        return State(self.eta.copy(), self.u.copy(), self.rho.copy(), self.b.copy(), float(self.time))

    def check_shapes(self, layout: LayerLayout) -> None:
        M, nmax = layout.M, layout.n_max
        expected = {"eta": (M,), "b": (M,), "u": (nmax, M + 1), "rho": (nmax, M)}
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ConfigurationError(f"state.{name} has shape {getattr(self, name).shape}, expected {shape}")


def make_state(layout: LayerLayout, eta, b, u=None, rho=None, time: float = 0.0) -> State:
    """Build a state, zeroing padding entries beyond each column's layer count."""
    M, nmax = layout.M, layout.n_max
    eta = np.array(np.broadcast_to(np.asarray(eta, dtype=float), (M,)))
    b = np.array(np.broadcast_to(np.asarray(b, dtype=float), (M,)))
    uu = np.zeros((nmax, M + 1))
    if u is not None:
        uu[:] = np.broadcast_to(np.asarray(u, dtype=float), (nmax, M + 1))
    rr = np.ones((nmax, M)) if rho is None else np.array(np.broadcast_to(np.asarray(rho, dtype=float), (nmax, M)))
    mask_e = np.arange(nmax)[:, None] < layout.n_edge[None, :]
    mask_c = np.arange(nmax)[:, None] < layout.n_cell[None, :]
    uu[~mask_e] = 0.0
    rr[~mask_c] = 0.0
    return State(eta, uu, rr, b, float(time))


@dataclass(frozen=True)
class BoundarySide:
    """One boundary condition.

    ``value(t) = base + amplitude * sin(omega * t + phase)`` is either the
    discharge per unit width (``discharge``) or the free-surface elevation
    (``surface``).  ``profile`` optionally gives the share of the discharge
    carried by each layer of the boundary edge (defaults to the layer
    fractions).
    """

    kind: str = "wall"
    base: float = 0.0
    amplitude: float = 0.0
    omega: float = 0.0
    phase: float = 0.0
    profile: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in _KIND_NAMES:
            raise ConfigurationError(f"unknown boundary kind {self.kind!r}")
        if not all(math.isfinite(v) for v in (self.base, self.amplitude, self.omega, self.phase)):
            raise ConfigurationError("boundary parameters must be finite")
        if self.profile is not None:
            p = np.asarray(self.profile, dtype=float)
            if p.ndim != 1 or not np.all(np.isfinite(p)) or abs(p.sum() - 1.0) > 1e-9:
                raise ConfigurationError("discharge profile must be finite and sum to 1")

    @classmethod
    def wall(cls) -> "BoundarySide":
        return cls("wall")

    @classmethod
    def discharge(cls, q: float, profile: Sequence[float] | None = None) -> "BoundarySide":
        return cls("discharge", float(q), profile=None if profile is None else tuple(float(p) for p in profile))

    @classmethod
    def surface(cls, eta: float, amplitude: float = 0.0, omega: float = 0.0, phase: float = 0.0) -> "BoundarySide":
        return cls("surface", float(eta), float(amplitude), float(omega), float(phase))

    @property
    def code(self) -> int:
        return _KIND_NAMES[self.kind]

    def value(self, t: float) -> float:
        return self.base + self.amplitude * math.sin(self.omega * t + self.phase)


@dataclass(frozen=True)
class BoundaryConditions:
    left: BoundarySide = field(default_factory=BoundarySide.wall)
    right: BoundarySide = field(default_factory=BoundarySide.wall)

    def arrays(self, layout: LayerLayout):
        """Numeric encoding consumed by the kernels: ``(kind, par, profile)``."""
        kind = np.array([self.left.code, self.right.code], dtype=np.int64)
        par = np.zeros((2, 4))
        prof = np.zeros((2, layout.n_max))
        for s, (side, e) in enumerate(((self.left, 0), (self.right, layout.M))):
            par[s] = (side.base, side.amplitude, side.omega, side.phase)
            n = layout.n_edge[e]
            if side.profile is None:
                prof[s, :n] = layout.l_edge[:n, e]
            else:
                if len(side.profile) != n:
                    raise ConfigurationError(
                        f"discharge profile has {len(side.profile)} entries but the boundary edge has {n} layers"
                    )
                prof[s, :n] = side.profile
        return kind, par, prof

    def validate(self) -> None:
        for name, side in (("left", self.left), ("right", self.right)):
            if side.profile is not None and side.kind != "discharge":
                raise ConfigurationError(f"{name} boundary: a layer profile needs a discharge condition")
            if side.kind != "surface" and (side.amplitude or side.omega):
                raise ConfigurationError(f"{name} boundary: periodic forcing is only supported for the free surface")

    def with_(self, **kw) -> "BoundaryConditions":
        return replace(self, **kw)


# --------------------------------------------------------------------------
# compiled kernels
# --------------------------------------------------------------------------


@njit(cache=True)
def bc_value(par, side, t):
    return par[side, 0] + par[side, 1] * math.sin(par[side, 2] * t + par[side, 3])


@njit(cache=True)
def edge_heights(h, u, n_edge, l_edge):
    """Upwind edge depths chosen by the depth-averaged edge velocity."""
    M = h.size
    he = np.empty(M + 1)
    he[0] = h[0]
    he[M] = h[M - 1]
    for e in range(1, M):
        ubar = 0.0
        for a in range(n_edge[e]):
            ubar += l_edge[a, e] * u[a, e]
        if ubar > 0.0:
            he[e] = h[e - 1]
        elif ubar < 0.0:
            he[e] = h[e]
        else:
            he[e] = 0.5 * (h[e - 1] + h[e])
    return he


@njit(cache=True)
def set_boundary_velocities(u, he, n_edge, l_edge, kind, par, prof, t):
    """Impose wall / discharge / copied velocities on the two boundary edges (in place)."""
    M = he.size - 1
    for s in range(2):
        e = 0 if s == 0 else M
        inner = 1 if s == 0 else M - 1
        n = n_edge[e]
        k = kind[s]
        if k == 0:
            for a in range(n):
                u[a, e] = 0.0
        elif k == 1:
            q = bc_value(par, s, t)
            for a in range(n):
                u[a, e] = q * prof[s, a] / (l_edge[a, e] * he[e])
        else:
            if n_edge[inner] == n:
                for a in range(n):
                    u[a, e] = u[a, inner]
            else:
                ubar = 0.0
                for a in range(n_edge[inner]):
                    ubar += l_edge[a, inner] * u[a, inner]
                for a in range(n):
                    u[a, e] = ubar


@njit(cache=True)
def edge_flux(u, he, n_edge, l_edge):
    """Total volume flux ``h_e sum_a l_a u_a`` at every edge."""
    ne = he.size
    S = np.empty(ne)
    for e in range(ne):
        s = 0.0
        for a in range(n_edge[e]):
            s += l_edge[a, e] * u[a, e]
        S[e] = he[e] * s
    return S


@njit(cache=True)
def _cell_deviation(u, he, i, n_cell, l_cell, c2l, c2r, out):
    """Upwinded ``h u_a - sum_g l_g h u_g`` for every layer of cell ``i``."""
    n = n_cell[i]
    mean = 0.0
    for a in range(n):
        uL = u[c2l[a, i], i]
        uR = u[c2r[a, i], i + 1]
        uc = uL + uR
        if uc > 0.0:
            q = he[i] * uL
        elif uc < 0.0:
            q = he[i + 1] * uR
        else:
            q = 0.5 * (he[i] * uL + he[i + 1] * uR)
        out[a] = q
        mean += l_cell[a, i] * q
    for a in range(n):
        out[a] -= mean


@njit(cache=True)
def transfer_edge(u, he, n_edge, l_edge, n_cell, l_cell, c2l, c2r, efl, efr):
    """Mass transfer ``calG[k, e]`` at interior interfaces of interior edges (no 1/dx)."""
    nmax, ne = u.shape
    M = ne - 1
    Gc = np.zeros((nmax + 1, ne))
    dev = np.zeros((nmax, M))
    tmp = np.zeros(nmax)
    for i in range(M):
        _cell_deviation(u, he, i, n_cell, l_cell, c2l, c2r, tmp)
        for a in range(n_cell[i]):
            dev[a, i] = tmp[a]
    for e in range(1, M):
        n = n_edge[e]
        if n < 2:
            continue
        acc = 0.0
        for b in range(n - 1):
            # aggregate the finer cell layers onto edge layer b
            lo, hi = efl[0, b, e], efl[1, b, e]
            if lo == hi:
                dl = dev[lo, e - 1]
            else:
                dl = 0.0
                wl = 0.0
                for a in range(lo, hi + 1):
                    dl += l_cell[a, e - 1] * dev[a, e - 1]
                    wl += l_cell[a, e - 1]
                dl /= wl
            lo, hi = efr[0, b, e], efr[1, b, e]
            if lo == hi:
                dr = dev[lo, e]
            else:
                dr = 0.0
                wr = 0.0
                for a in range(lo, hi + 1):
                    dr += l_cell[a, e] * dev[a, e]
                    wr += l_cell[a, e]
                dr /= wr
            acc += l_edge[b, e] * (dr - dl)
            Gc[b + 1, e] = acc
    return Gc


@njit(cache=True)
def cell_layer_fluxes(u, he, n_cell, l_cell, c2l, c2r):
    """Per-cell-layer volume fluxes on the left/right faces, ``l_{a,i} h_e u``."""
    nmax, ne = u.shape
    M = ne - 1
    FL = np.zeros((nmax, M))
    FR = np.zeros((nmax, M))
    for i in range(M):
        for a in range(n_cell[i]):
            FL[a, i] = l_cell[a, i] * he[i] * u[c2l[a, i], i]
            FR[a, i] = l_cell[a, i] * he[i + 1] * u[c2r[a, i], i + 1]
    return FL, FR


@njit(cache=True)
def transfer_center_from_fluxes(FL, FR, n_cell, l_cell, dx, zero_top):
    """Mass transfer ``G[k, i]`` at cell centres from per-layer face fluxes.

    The value at the free surface is zero up to round-off; it is forced to
    exactly zero when ``zero_top`` is set.
    """
    nmax, M = FL.shape
    G = np.zeros((nmax + 1, M))
    for i in range(M):
        n = n_cell[i]
        tot = 0.0
        for a in range(n):
            tot += FR[a, i] - FL[a, i]
        acc = 0.0
        inv = 1.0 / dx[i]
        for a in range(n):
            acc += (FR[a, i] - FL[a, i]) - l_cell[a, i] * tot
            G[a + 1, i] = acc * inv
        if zero_top:
            G[n, i] = 0.0
    return G


@njit(cache=True)
def _donor_value(u, l_edge, donor, same, k, b, e, d):
    if same[k, e]:
        return u[b, d]
    lo = donor[k, 0, b, e]
    hi = donor[k, 1, b, e]
    if lo == hi:
        return u[lo, d]
    s = 0.0
    w = 0.0
    for a in range(lo, hi + 1):
        s += l_edge[a, d] * u[a, d]
        w += l_edge[a, d]
    return s / w


@njit(cache=True)
def advection(u, n_edge, l_edge, donor, same, W):
    """``-u du/dx`` with second-order upwind differences (first order next to the boundary).

    ``W`` holds the precomputed one-sided stencil weights of the grid.
    """
    nmax, ne = u.shape
    M = ne - 1
    A = np.zeros((nmax, ne))
    for e in range(1, M):
        for b in range(n_edge[e]):
            ue = u[b, e]
            if ue == 0.0:
                continue
            if ue > 0.0:
                sd = 0
                d1 = e - 1
                k1 = 1
                d2 = e - 2
                k2 = 0
            else:
                sd = 1
                d1 = e + 1
                k1 = 2
                d2 = e + 2
                k2 = 3
            if same[k1, e]:
                v1 = u[b, d1]
            else:
                v1 = _donor_value(u, l_edge, donor, same, k1, b, e, d1)
            D = W[sd, 0, e] * ue + W[sd, 1, e] * v1
            w2 = W[sd, 2, e]
            if w2 != 0.0:
                if same[k2, e]:
                    v2 = u[b, d2]
                else:
                    v2 = _donor_value(u, l_edge, donor, same, k2, b, e, d2)
                D += w2 * v2
            A[b, e] = -ue * D
    return A


@njit(cache=True)
def explicit_tendency(u, he, n_edge, l_edge, n_cell, l_cell, c2l, c2r, efl, efr, donor, same, W, dx_edge):
    """Non-stiff momentum tendency: advection plus vertical mass-transfer source."""
    F = advection(u, n_edge, l_edge, donor, same, W)
    Gc = transfer_edge(u, he, n_edge, l_edge, n_cell, l_cell, c2l, c2r, efl, efr)
    ne = he.size
    for e in range(1, ne - 1):
        n = n_edge[e]
        for a in range(n):
            s = 0.0
            if a + 1 < n:
                s += 0.5 * (u[a + 1, e] - u[a, e]) * Gc[a + 1, e]
            if a > 0:
                s += 0.5 * (u[a, e] - u[a - 1, e]) * Gc[a, e]
            F[a, e] += s / (dx_edge[e] * l_edge[a, e] * he[e])
    return F


@njit(cache=True)
def stiff_tendency(u, eta, he, cvis, cfu, cwt, u_wind, g, n_edge, l_edge, dx_edge):
    """Stiff momentum tendency: surface gradient, vertical viscosity, bed friction and wind drag."""
    nmax, ne = u.shape
    I = np.zeros((nmax, ne))
    for e in range(1, ne - 1):
        n = n_edge[e]
        grad = -g * (eta[e] - eta[e - 1]) / dx_edge[e]
        h = he[e]
        for a in range(n):
            s = 0.0
            if a + 1 < n:
                s += cvis[a + 1, e] * (u[a + 1, e] - u[a, e])
            if a > 0:
                s -= cvis[a, e] * (u[a, e] - u[a - 1, e])
            if a == 0:
                s -= cfu[e] * u[0, e]
            if a == n - 1:
                s += cwt[e] * (u_wind - u[n - 1, e])
            I[a, e] = grad + s / (l_edge[a, e] * h)
    return I


@njit(cache=True)
def vertical_velocity(u, eta, b, h, n_edge, l_edge, n_cell, l_cell, c2l, c2r, x_center, dx):
    """Interface vertical velocities ``w[k, i]`` at cell centres (upper-side values).

    Row ``k`` holds ``w^+`` at the interface between cell layers ``k-1`` and
    ``k``; row 0 is the bed value ``u_1 db/dx``.  Also returns the lower-side
    values ``w^-`` (row 0 unused).
    """
    nmax, ne = u.shape
    M = ne - 1
    wp = np.zeros((nmax + 1, M))
    wm = np.zeros((nmax + 1, M))
    for i in range(M):
        if i == 0:
            il, ir = 0, 1
        elif i == M - 1:
            il, ir = M - 2, M - 1
        else:
            il, ir = i - 1, i + 1
        span = x_center[ir] - x_center[il]
        dbdx = (b[ir] - b[il]) / span
        dhdx = (h[ir] - h[il]) / span
        n = n_cell[i]
        u1 = 0.5 * (u[c2l[0, i], i] + u[c2r[0, i], i + 1])
        wp[0, i] = u1 * dbdx
        frac = 0.0
        for a in range(n):
            ua = 0.5 * (u[c2l[a, i], i] + u[c2r[a, i], i + 1])
            dudx = (u[c2r[a, i], i + 1] - u[c2l[a, i], i]) / dx[i]
            wm[a + 1, i] = wp[a, i] - l_cell[a, i] * h[i] * dudx
            frac += l_cell[a, i]
            if a + 1 < n:
                ub = 0.5 * (u[c2l[a + 1, i], i] + u[c2r[a + 1, i], i + 1])
                dzdx = dbdx + frac * dhdx
                wp[a + 1, i] = wm[a + 1, i] + (ub - ua) * dzdx
            else:
                wp[a + 1, i] = wm[a + 1, i]
    return wp, wm


# --------------------------------------------------------------------------
# Python-level operations
# --------------------------------------------------------------------------


def layout_args(layout: LayerLayout):
    return (layout.n_edge, layout.l_edge, layout.n_cell, layout.l_cell, layout.cell_to_left,
            layout.cell_to_right, layout.edge_from_left_cell, layout.edge_from_right_cell)


def upwind_heights(state: State, layout: LayerLayout) -> np.ndarray:
    """Edge depths; boundary edges take the adjacent cell depth."""
    return edge_heights(state.h, state.u, layout.n_edge, layout.l_edge)


def upwind_height(state: State, layout: LayerLayout, edge: int) -> float:
    if not 1 <= edge <= layout.M - 1:
        raise IndexError(f"edge {edge} is not an interior edge")
    return float(upwind_heights(state, layout)[edge])


def mass_transfer_edge_all(state: State, layout: LayerLayout, he=None) -> np.ndarray:
    he = upwind_heights(state, layout) if he is None else he
    return transfer_edge(state.u, he, *layout_args(layout))


def mass_transfer_edge(state: State, layout: LayerLayout, edge: int, interface: int) -> float:
    """``calG`` at 1-based interface ``interface`` (top of layer ``interface``) of an interior edge."""
    if not 1 <= edge <= layout.M - 1:
        raise IndexError(f"edge {edge} is not an interior edge")
    n = layout.n_edge[edge]
    if not 1 <= interface <= n:
        raise IndexError(f"interface {interface} outside 1..{n}")
    if interface == n:
        return 0.0
    return float(mass_transfer_edge_all(state, layout)[interface, edge])


def mass_transfer_center_all(state: State, grid: Grid1D, layout: LayerLayout, he=None, zero_top=True) -> np.ndarray:
    he = upwind_heights(state, layout) if he is None else he
    FL, FR = cell_layer_fluxes(state.u, he, layout.n_cell, layout.l_cell, layout.cell_to_left, layout.cell_to_right)
    return transfer_center_from_fluxes(FL, FR, layout.n_cell, layout.l_cell, grid.dx, zero_top)


def mass_transfer_center(state: State, grid: Grid1D, layout: LayerLayout, cell: int, interface: int) -> float:
    """``G`` at 1-based interface ``interface`` of cell ``cell``; exactly 0 at the free surface."""
    n = layout.n_cell[cell]
    if not 1 <= interface <= n:
        raise IndexError(f"interface {interface} outside 1..{n}")
    return float(mass_transfer_center_all(state, grid, layout)[interface, cell])


def advection_term(state: State, grid: Grid1D, layout: LayerLayout, edge: int | None = None, layer: int | None = None):
    """Advection tendency; the full array, or one 1-based ``layer`` at ``edge``."""
    A = advection(state.u, layout.n_edge, layout.l_edge, layout.donor_range, layout.donor_same, grid.upwind_weights)
    if edge is None:
        return A
    if not 1 <= edge <= layout.M - 1:
        raise IndexError(f"edge {edge} is not an interior edge")
    return float(A[layer - 1, edge])


def recover_vertical_velocity(state: State, grid: Grid1D, layout: LayerLayout):
    """Interface vertical velocities ``(w_plus, w_minus)`` on the cell layering."""
    h = state.h
    return vertical_velocity(state.u, state.eta, state.b, h, layout.n_edge, layout.l_edge, layout.n_cell,
                             layout.l_cell, layout.cell_to_left, layout.cell_to_right, grid.x_center, grid.dx)


def apply_boundary_conditions(state: State, layout: LayerLayout, bc: BoundaryConditions, time: float | None = None,
                              he=None) -> State:
    """Set boundary-edge velocities and Dirichlet free-surface cells in place; returns ``state``."""
    t = state.time if time is None else time
    kind, par, prof = bc.arrays(layout)
    he = upwind_heights(state, layout) if he is None else he
    set_boundary_velocities(state.u, he, layout.n_edge, layout.l_edge, kind, par, prof, t)
    if bc.left.kind == "surface":
        state.eta[0] = bc.left.value(t)
    if bc.right.kind == "surface":
        state.eta[-1] = bc.right.value(t)
    return state
