"""Staggered 1D grid and variable vertical layer layouts.

Free-surface values live at cell centres ``i = 0..M-1``; horizontal
velocities live at edges ``e = 0..M`` where edge ``e`` separates cells
``e-1`` and ``e``.  Each edge carries its own number of layers and layer
fractions; cells inherit the layout of their finer neighbouring edge.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import ConfigurationError, LayoutError
from .physics import log_interface_heights

FRACTION_TOL = 1e-12

# Offsets of the donor edges used by the upwind advection stencil.
DONOR_OFFSETS = (-2, -1, 1, 2)


@dataclass(frozen=True)
class Grid1D:
    """Cell-centred grid with staggered edges.

    ``dx_edge[e]`` is the centre-to-centre spacing for interior edges and the
    centre-to-boundary distance for the two boundary edges.
    """

    x_start: float
    x_end: float
    M: int
    x_center: np.ndarray
    x_edge: np.ndarray
    dx: np.ndarray
    dx_edge: np.ndarray
    upwind_weights: np.ndarray = field(repr=False, default=None)

    @property
    def length(self) -> float:
        return self.x_end - self.x_start


def grid_from_edges(x_edge: Sequence[float]) -> Grid1D:
    x_edge = np.asarray(x_edge, dtype=float)
    if x_edge.ndim != 1 or x_edge.size < 4:
        raise ConfigurationError("a grid needs at least 3 cells")
    dx = np.diff(x_edge)
    if np.any(dx <= 0.0) or not np.all(np.isfinite(x_edge)):
        raise ConfigurationError("grid edges must be finite and strictly increasing")
    x_center = 0.5 * (x_edge[:-1] + x_edge[1:])
    dx_edge = np.empty_like(x_edge)
    dx_edge[1:-1] = np.diff(x_center)
    dx_edge[0] = x_center[0] - x_edge[0]
    dx_edge[-1] = x_edge[-1] - x_center[-1]
    W = _upwind_weights(x_edge)
    for arr in (x_edge, x_center, dx, dx_edge, W):
        arr.setflags(write=False)
    return Grid1D(float(x_edge[0]), float(x_edge[-1]), dx.size, x_center, x_edge, dx, dx_edge, W)


def _upwind_weights(x_edge: np.ndarray) -> np.ndarray:
    """One-sided derivative weights at every edge.

    ``W[s, :, e]`` gives the weights of ``(u_e, u_{e-+1}, u_{e-+2})`` for
    upwinding from the left (``s=0``) or the right (``s=1``): the derivative of
    the quadratic through the three points, or the two-point slope when the
    second donor lies outside the domain.
    """
    M = x_edge.size - 1
    W = np.zeros((2, 3, M + 1))
    for e in range(1, M):
        for s, step in ((0, -1), (1, 1)):
            x0, x1 = x_edge[e], x_edge[e + step]
            d2 = e + 2 * step
            if d2 < 0 or d2 > M:
                W[s, 0, e] = 1.0 / (x0 - x1)
                W[s, 1, e] = -1.0 / (x0 - x1)
                continue
            x2 = x_edge[d2]
            W[s, 0, e] = (2.0 * x0 - x1 - x2) / ((x0 - x1) * (x0 - x2))
            W[s, 1, e] = (x0 - x2) / ((x1 - x0) * (x1 - x2))
            W[s, 2, e] = (x0 - x1) / ((x2 - x0) * (x2 - x1))
    return W


def build_grid(x_start: float, x_end: float, M: int) -> Grid1D:
    """Uniform grid of ``M`` cells on ``[x_start, x_end]``."""
    if not (np.isfinite(x_start) and np.isfinite(x_end)) or x_end <= x_start:
        raise ConfigurationError(f"invalid extent [{x_start}, {x_end}]")
    if int(M) != M or M < 3:
        raise ConfigurationError(f"need at least 3 cells, got {M}")
    M = int(M)
    x_edge = x_start + (x_end - x_start) * np.arange(M + 1) / M
    x_edge[-1] = x_end
    return grid_from_edges(x_edge)


def nesting_map(fine: Sequence[float], coarse: Sequence[float], tol: float = FRACTION_TOL) -> np.ndarray:
    """Index of the coarse layer containing each fine layer.

    Raises :class:`LayoutError` when the coarse interfaces are not a subset of
    the fine ones, i.e. when each coarse fraction is not the sum of a
    contiguous run of fine fractions.
    """
    fine = np.asarray(fine, dtype=float)
    coarse = np.asarray(coarse, dtype=float)
    if coarse.size > fine.size:
        raise LayoutError("coarse layout has more layers than fine layout")
    cf = np.cumsum(fine)
    cc = np.cumsum(coarse)
    for z in cc[:-1]:
        if np.min(np.abs(cf[:-1] - z)) > tol:
            raise LayoutError(f"coarse interface at fraction {z:.15g} has no matching fine interface")
    mid = cf - 0.5 * fine
    parent = np.searchsorted(cc, mid)
    return np.minimum(parent, coarse.size - 1).astype(np.int64)


def transition_ranges(fine: Sequence[float], coarse: Sequence[float]) -> list[tuple[int, int]]:
    """Inclusive fine-index range ``(lo, hi)`` of every coarse layer."""
    parent = nesting_map(fine, coarse)
    out = []
    for beta in range(len(coarse)):
        idx = np.flatnonzero(parent == beta)
        if idx.size == 0:
            raise LayoutError(f"coarse layer {beta} covers no fine layer")
        out.append((int(idx[0]), int(idx[-1])))
    return out


def aggregate_velocity(fine_values, fine_fractions, map_range) -> float:
    """Fraction-weighted mean of ``fine_values`` over the inclusive ``map_range``."""
    lo, hi = map_range
    n = len(fine_values)
    if lo > hi or lo < 0 or hi >= n:
        raise IndexError(f"empty or out-of-bounds layer range {map_range} for {n} layers")
    v = np.asarray(fine_values, dtype=float)[lo : hi + 1]
    w = np.asarray(fine_fractions, dtype=float)[lo : hi + 1]
    total = w.sum()
    if not total > 0.0:
        raise ValueError("layer fractions over the range must have a positive sum")
    return float(np.dot(w, v) / total)


@dataclass(frozen=True)
class LayerRegion:
    x_lo: float
    x_hi: float
    n: int
    fractions: tuple[float, ...]

    @classmethod
    def uniform(cls, x_lo: float, x_hi: float, n: int) -> "LayerRegion":
        return cls(x_lo, x_hi, n, tuple([1.0 / n] * n))


@dataclass(frozen=True, eq=False)
class LayerLayout:
    """Per-edge layer counts and fractions plus the derived cell layout.

    Index arrays used by the compiled kernels:

    ``cell_to_left[a, i]`` / ``cell_to_right[a, i]``
        layer of edge ``i`` / ``i+1`` containing layer ``a`` of cell ``i``.
    ``edge_from_left_cell`` / ``edge_from_right_cell``
        inclusive ranges ``[.., 0, b, e]`` (lo) and ``[.., 1, b, e]`` (hi) of
        the layers of cell ``e-1`` / ``e`` making up layer ``b`` of edge ``e``.
    ``donor_range[k, 0|1, b, e]``
        layers of edge ``e + DONOR_OFFSETS[k]`` whose weighted mean is the
        donor value for layer ``b`` of edge ``e`` (``-1`` if out of range).
    ``donor_same[k, e]``
        the donor edge has exactly the layering of edge ``e``.
    ``log_below[k, e]``
        ``log(l_0 + ... + l_{k-1})`` at edge ``e`` for interior interfaces
        ``1 <= k < N``; saves logarithms in the closure evaluation.
    """

    n_edge: np.ndarray
    l_edge: np.ndarray
    n_cell: np.ndarray
    l_cell: np.ndarray
    transition_maps: dict = field(repr=False)
    cell_to_left: np.ndarray = field(repr=False)
    cell_to_right: np.ndarray = field(repr=False)
    edge_from_left_cell: np.ndarray = field(repr=False)
    edge_from_right_cell: np.ndarray = field(repr=False)
    donor_range: np.ndarray = field(repr=False)
    donor_same: np.ndarray = field(repr=False)
    log_below: np.ndarray = field(repr=False)

    @property
    def M(self) -> int:
        return self.n_cell.size

    @property
    def n_max(self) -> int:
        return self.l_edge.shape[0]

    @property
    def dof(self) -> int:
        """Free-surface values plus all edge velocities."""
        return int(self.M + self.n_edge.sum())

    def edge_fractions(self, e: int) -> np.ndarray:
        return self.l_edge[: self.n_edge[e], e]

    def cell_fractions(self, i: int) -> np.ndarray:
        return self.l_cell[: self.n_cell[i], i]

    @property
    def is_uniform(self) -> bool:
        return bool(np.all(self.n_edge == self.n_edge[0]) and not self.transition_maps)

    def validate(self) -> None:
        _validate(self.n_edge, self.l_edge)


def _validate(n_edge: np.ndarray, l_edge: np.ndarray) -> dict:
    M = n_edge.size - 1
    for e in range(M + 1):
        n = n_edge[e]
        if n < 1:
            raise LayoutError(f"edge {e}: needs at least one layer")
        frac = l_edge[:n, e]
        if np.any(frac <= 0.0):
            raise LayoutError(f"edge {e}: layer fractions must be positive")
        if abs(frac.sum() - 1.0) > FRACTION_TOL:
            raise LayoutError(f"edge {e}: layer fractions sum to {frac.sum():.15g}, not 1")
    maps = {}
    for i in range(M):
        nl, nr = n_edge[i], n_edge[i + 1]
        fl, fr = l_edge[:nl, i], l_edge[:nr, i + 1]
        if nl == nr:
            if np.max(np.abs(fl - fr)) > FRACTION_TOL:
                raise LayoutError(
                    f"edges {i} and {i + 1}: equal layer counts with different fractions"
                )
            continue
        if i - 1 >= 0 and n_edge[i - 1] != nl:
            raise LayoutError(f"edge {i}: layer count must match edge {i - 1} next to a transition")
        if i + 2 <= M and n_edge[i + 2] != nr:
            raise LayoutError(f"edge {i + 1}: layer count must match edge {i + 2} next to a transition")
        fine, coarse = (fl, fr) if nl > nr else (fr, fl)
        try:
            maps[i] = transition_ranges(fine, coarse)
        except LayoutError as exc:
            raise LayoutError(f"transition across cell {i} (edges {i}, {i + 1}): {exc}") from exc
    return maps


def _layout_from_edges(n_edge: np.ndarray, l_edge: np.ndarray) -> LayerLayout:
    n_edge = np.asarray(n_edge, dtype=np.int64)
    l_edge = np.asarray(l_edge, dtype=float)
    maps = _validate(n_edge, l_edge)
    M = n_edge.size - 1
    nmax = int(n_edge.max())

    n_cell = np.maximum(n_edge[:-1], n_edge[1:])
    l_cell = np.zeros((nmax, M))
    cell_to_left = np.zeros((nmax, M), dtype=np.int64)
    cell_to_right = np.zeros((nmax, M), dtype=np.int64)
    for i in range(M):
        src = i if n_edge[i] >= n_edge[i + 1] else i + 1
        cfrac = l_edge[: n_cell[i], src]
        l_cell[: n_cell[i], i] = cfrac
        cell_to_left[: n_cell[i], i] = nesting_map(cfrac, l_edge[: n_edge[i], i])
        cell_to_right[: n_cell[i], i] = nesting_map(cfrac, l_edge[: n_edge[i + 1], i + 1])

    # ranges of cell layers composing each edge layer, seen from both cells
    from_left = -np.ones((2, nmax, M + 1), dtype=np.int64)
    from_right = -np.ones((2, nmax, M + 1), dtype=np.int64)
    for e in range(M + 1):
        for cell, table, rng in ((e - 1, cell_to_right, from_left), (e, cell_to_left, from_right)):
            if cell < 0 or cell >= M:
                continue
            parent = table[: n_cell[cell], cell]
            for b in range(n_edge[e]):
                idx = np.flatnonzero(parent == b)
                rng[0, b, e] = idx[0]
                rng[1, b, e] = idx[-1]

    donor = -np.ones((len(DONOR_OFFSETS), 2, nmax, M + 1), dtype=np.int64)
    same = np.zeros((len(DONOR_OFFSETS), M + 1), dtype=np.bool_)
    for e in range(M + 1):
        fe = l_edge[: n_edge[e], e]
        for k, off in enumerate(DONOR_OFFSETS):
            d = e + off
            if d < 0 or d > M:
                continue
            fd = l_edge[: n_edge[d], d]
            same[k, e] = n_edge[d] == n_edge[e] and np.array_equal(fd, fe)
            if n_edge[d] >= n_edge[e]:
                for b, (lo, hi) in enumerate(transition_ranges(fd, fe)):
                    donor[k, 0, b, e] = lo
                    donor[k, 1, b, e] = hi
            else:
                parent = nesting_map(fe, fd)
                donor[k, 0, : n_edge[e], e] = parent
                donor[k, 1, : n_edge[e], e] = parent

    log_below = log_interface_heights(n_edge, l_edge)

    arrays = (n_edge, l_edge, n_cell, l_cell, cell_to_left, cell_to_right, from_left, from_right, donor, same,
              log_below)
    for arr in arrays:
        arr.setflags(write=False)
    return LayerLayout(
        n_edge=n_edge,
        l_edge=l_edge,
        n_cell=n_cell,
        l_cell=l_cell,
        transition_maps=maps,
        cell_to_left=cell_to_left,
        cell_to_right=cell_to_right,
        edge_from_left_cell=from_left,
        edge_from_right_cell=from_right,
        donor_range=donor,
        donor_same=same,
        log_below=log_below,
    )


def build_layout(grid: Grid1D, regions: Sequence) -> LayerLayout:
    """Assign layers to edges from ``(x_lo, x_hi, N, fractions)`` regions.

    An edge belongs to a region when ``x_lo <= x_edge <= x_hi``; when several
    regions match, the last one wins.  ``fractions`` may be ``None`` for
    equal layers.
    """
    regs = []
    for r in regions:
        if isinstance(r, LayerRegion):
            regs.append(r)
            continue
        x_lo, x_hi, n, *rest = r
        frac = rest[0] if rest and rest[0] is not None else [1.0 / n] * int(n)
        regs.append(LayerRegion(float(x_lo), float(x_hi), int(n), tuple(float(f) for f in frac)))
    if not regs:
        raise LayoutError("no layer regions given")
    for r in regs:
        if r.n < 1 or len(r.fractions) != r.n:
            raise LayoutError(f"region [{r.x_lo}, {r.x_hi}]: {r.n} layers but {len(r.fractions)} fractions")
        if abs(sum(r.fractions) - 1.0) > FRACTION_TOL:
            raise LayoutError(f"region [{r.x_lo}, {r.x_hi}]: fractions sum to {sum(r.fractions):.15g}")

    M = grid.M
    owner = -np.ones(M + 1, dtype=np.int64)
    for k, r in enumerate(regs):
        owner[(grid.x_edge >= r.x_lo) & (grid.x_edge <= r.x_hi)] = k
    if np.any(owner < 0):
        e = int(np.flatnonzero(owner < 0)[0])
        raise LayoutError(f"edge {e} at x={grid.x_edge[e]} is not covered by any layer region")

    nmax = max(regs[k].n for k in np.unique(owner))
    n_edge = np.array([regs[k].n for k in owner], dtype=np.int64)
    l_edge = np.zeros((nmax, M + 1))
    for e, k in enumerate(owner):
        l_edge[: regs[k].n, e] = regs[k].fractions
    return _layout_from_edges(n_edge, l_edge)


def uniform_layout(grid: Grid1D, n: int, fractions: Sequence[float] | None = None) -> LayerLayout:
    return build_layout(grid, [(-np.inf, np.inf, n, fractions)])


def parse_layer_spec(spec: str) -> list[LayerRegion]:
    """Parse ``"x_lo:x_hi:N[:l1,l2,...];..."`` (``inf``/``-inf`` allowed).

    A bare integer such as ``"10"`` means that many equal layers everywhere.
    """
    spec = spec.strip()
    if not spec:
        raise ConfigurationError("empty layer specification")
    if ":" not in spec:
        try:
            n = int(spec)
        except ValueError as exc:
            raise ConfigurationError(f"bad layer specification {spec!r}") from exc
        return [LayerRegion.uniform(-np.inf, np.inf, n)]
    out = []
    for part in spec.split(";"):
        part = part.strip()
        if not part:
            continue
        fields = part.split(":")
        if len(fields) not in (3, 4):
            raise ConfigurationError(f"bad layer region {part!r}")
        try:
            x_lo, x_hi, n = float(fields[0]), float(fields[1]), int(fields[2])
            frac = [float(v) for v in fields[3].split(",")] if len(fields) == 4 else [1.0 / n] * n
        except ValueError as exc:
            raise ConfigurationError(f"bad layer region {part!r}") from exc
        out.append(LayerRegion(x_lo, x_hi, n, tuple(frac)))
    return out
