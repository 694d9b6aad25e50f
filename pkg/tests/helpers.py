"""Random layouts and states shared by the property tests."""

import numpy as np

from mlsw import build_grid, build_layout, make_state

LAYOUT_KINDS = ("uniform", "stretched", "fine_left", "fine_right", "nested")


def random_layout(rng, kind: str, M: int = 24, x_end: float = 1000.0):
    """A grid and a layout of the given kind (transitions sit at interior edges)."""
    grid = build_grid(0.0, x_end, M)
    xt = grid.x_edge[M // 2]
    n = int(rng.integers(2, 7))
    if kind == "uniform":
        regions = [(-np.inf, np.inf, n, None)]
    elif kind == "stretched":
        f = rng.uniform(0.2, 1.0, n)
        regions = [(-np.inf, np.inf, n, tuple(f / f.sum()))]
    elif kind == "fine_left":
        regions = [(-np.inf, np.inf, 1, None), (-np.inf, xt, n, None)]
    elif kind == "fine_right":
        regions = [(-np.inf, np.inf, 1, None), (xt, np.inf, n, None)]
    else:  # 2n equal layers next to n pairs of merged layers
        regions = [(-np.inf, np.inf, 2 * n, None), (xt, np.inf, n, None)]
    return grid, build_layout(grid, regions)


def random_bed(rng, grid, depth: float = 10.0, relief: float = 4.0):
    x = (grid.x_center - grid.x_start) / grid.length
    k = rng.integers(1, 4)
    return relief * (0.5 + 0.5 * np.sin(2 * np.pi * k * x + rng.uniform(0, 2 * np.pi))) * rng.uniform(0.2, 1.0) - depth


def random_state(rng, grid, layout, amp: float = 0.5, eta_amp: float = 0.1):
    """Smooth random surface and edge velocities; ``b`` is well below the surface."""
    b = random_bed(rng, grid)
    x = (grid.x_center - grid.x_start) / grid.length
    eta = eta_amp * np.sin(2 * np.pi * x + rng.uniform(0, 6))
    xe = (grid.x_edge - grid.x_start) / grid.length
    nmax = layout.n_max
    u = np.zeros((nmax, grid.M + 1))
    for a in range(nmax):
        u[a] = amp * (rng.uniform(-1, 1) + rng.uniform(-1, 1) * np.sin(2 * np.pi * xe + rng.uniform(0, 6)))
    return make_state(layout, eta, b, u)
