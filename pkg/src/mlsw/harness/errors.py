"""Relative error norms between a solution and a reference state."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..mesh import Grid1D, LayerLayout
from ..operators import State


@dataclass(frozen=True)
class ErrorReport:
    eta_l2: float
    eta_linf: float
    u_l2: float
    u_linf: float
    b_l2: float
    b_linf: float

    def as_dict(self) -> dict:
        return asdict(self)


def _rel(num: float, den: float) -> float:
    if den > 0.0:
        return num / den
    return 0.0 if num == 0.0 else float("inf")


def relative_l2(x, ref, weights=None) -> float:
    x = np.asarray(x, dtype=float)
    ref = np.asarray(ref, dtype=float)
    w = np.ones_like(ref) if weights is None else np.asarray(weights, dtype=float)
    return _rel(float(np.sqrt(np.sum(w * (x - ref) ** 2))), float(np.sqrt(np.sum(w * ref**2))))


def relative_linf(x, ref) -> float:
    x = np.asarray(x, dtype=float)
    ref = np.asarray(ref, dtype=float)
    return _rel(float(np.max(np.abs(x - ref))), float(np.max(np.abs(ref))))


def velocity_weights(ref: State, grid: Grid1D, layout: LayerLayout) -> np.ndarray:
    """``dx_e l_{a,e} h_e`` for every active edge layer (zero in the padding).

    ``h_e`` is the mean depth of the cells adjacent to the edge (the adjacent
    cell at the boundary).
    """
    h = ref.h
    he = np.empty(grid.M + 1)
    he[1:-1] = 0.5 * (h[:-1] + h[1:])
    he[0], he[-1] = h[0], h[-1]
    return grid.dx_edge[None, :] * layout.l_edge * he[None, :]


def compute_errors(solution: State, reference: State, layout: LayerLayout, grid: Grid1D) -> ErrorReport:
    """Relative l2/linf errors of free surface, velocity (depth-weighted l2) and bed.

    Both states must live on the same grid and layout.
    """
    for name in ("eta", "u", "b"):
        a, r = getattr(solution, name), getattr(reference, name)
        if a.shape != r.shape:
            raise ValueError(f"{name} shapes differ: {a.shape} vs {r.shape}")
    if solution.u.shape != layout.l_edge.shape or solution.eta.shape != (grid.M,):
        raise ValueError("states do not match the layout")
    w = velocity_weights(reference, grid, layout)
    mask = w > 0
    u, ur = solution.u[mask], reference.u[mask]
    return ErrorReport(
        eta_l2=relative_l2(solution.eta, reference.eta),
        eta_linf=relative_linf(solution.eta, reference.eta),
        u_l2=relative_l2(u, ur, w[mask]),
        u_linf=relative_linf(u, ur),
        b_l2=relative_l2(solution.b, reference.b),
        b_linf=relative_linf(solution.b, reference.b),
    )
