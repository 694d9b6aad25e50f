import math

import numpy as np
import pytest
from helpers import LAYOUT_KINDS, random_layout, random_state
from hypothesis import given
from hypothesis import strategies as st

from mlsw import BoundaryConditions, BoundarySide, ConfigurationError, build_grid, build_layout, make_state, \
    uniform_layout
from mlsw.operators import (advection_term, apply_boundary_conditions, cell_layer_fluxes, edge_flux,
                            mass_transfer_center, mass_transfer_center_all, mass_transfer_edge,
                            mass_transfer_edge_all, recover_vertical_velocity, upwind_height, upwind_heights)

seeds = st.integers(0, 2**32 - 1)
kinds = st.sampled_from(LAYOUT_KINDS)


def _two_cells(h_left, h_right, ubar):
    g = build_grid(0, 3, 3)
    lay = uniform_layout(g, 2)
    eta = np.array([h_left, h_right, h_right])
    u = np.zeros((2, 4))
    u[:, 1] = ubar
    return make_state(lay, eta, 0.0, u), lay


# ---------------------------------------------------------------- upwind depth


def test_upwind_height_direction():
    s, lay = _two_cells(10.0, 12.0, 1.0)
    assert upwind_height(s, lay, 1) == 10.0
    s, lay = _two_cells(10.0, 12.0, -1.0)
    assert upwind_height(s, lay, 1) == 12.0
    s, lay = _two_cells(10.0, 12.0, 0.0)
    assert upwind_height(s, lay, 1) == 11.0
    s, lay = _two_cells(7.0, 7.0, -3.0)
    assert upwind_height(s, lay, 1) == 7.0
    with pytest.raises(IndexError):
        upwind_height(s, lay, 0)


def test_upwind_height_uses_depth_mean():
    g = build_grid(0, 3, 3)
    lay = build_layout(g, [(-np.inf, np.inf, 2, (0.8, 0.2))])
    u = np.zeros((2, 4))
    u[:, 1] = (-1.0, 3.0)  # mean -0.2
    s = make_state(lay, np.array([1.0, 2.0, 2.0]), 0.0, u)
    assert upwind_height(s, lay, 1) == 2.0


# ---------------------------------------------------------------- mass transfer


@given(kinds, seeds)
def test_transfer_vanishes_for_vertically_uniform_u(kind, seed):
    rng = np.random.default_rng(seed)
    grid, lay = random_layout(rng, kind)
    s = random_state(rng, grid, lay)
    ubar = np.sin(grid.x_edge / 100.0)
    s.u[:] = np.where(np.arange(lay.n_max)[:, None] < lay.n_edge[None, :], ubar[None, :], 0.0)
    assert np.max(np.abs(mass_transfer_edge_all(s, lay))) < 1e-12
    assert np.max(np.abs(mass_transfer_center_all(s, grid, lay))) < 1e-12


@given(kinds, seeds)
def test_transfer_center_top_is_zero(kind, seed):
    rng = np.random.default_rng(seed)
    grid, lay = random_layout(rng, kind)
    s = random_state(rng, grid, lay)
    G = mass_transfer_center_all(s, grid, lay, zero_top=False)
    top = G[lay.n_cell, np.arange(grid.M)]
    assert np.max(np.abs(top)) <= 1e-12
    for i in (0, grid.M // 2, grid.M - 1):
        assert mass_transfer_center(s, grid, lay, i, int(lay.n_cell[i])) == 0.0


def test_transfer_center_two_layers():
    g = build_grid(0, 3, 3)
    lay = uniform_layout(g, 2)
    u = np.zeros((2, 4))
    u[0, 2] = 1.0  # layer 1 velocity rises by 1 across cell 1
    u[1, 2] = -1.0  # layer 2 falls by 1
    s = make_state(lay, 1.0, 0.0, u)
    he = np.ones(4)
    G = mass_transfer_center_all(s, g, lay, he=he)
    assert G[1, 1] == pytest.approx(0.5, abs=1e-15)


def test_transfer_edge_single_layer_and_flat_field():
    g = build_grid(0, 4, 4)
    s = make_state(uniform_layout(g, 1), 2.0, 0.0, 1.0)
    assert mass_transfer_edge(s, uniform_layout(g, 1), 2, 1) == 0.0
    lay = uniform_layout(g, 2)
    u = np.zeros((2, 5))
    u[1] = 2.0
    s = make_state(lay, 1.0, 0.0, u)
    assert mass_transfer_edge(s, lay, 2, 1) == 0.0
    with pytest.raises(IndexError):
        mass_transfer_edge(s, lay, 2, 3)


@given(kinds, seeds)
def test_layer_fluxes_sum_to_total_flux(kind, seed):
    rng = np.random.default_rng(seed)
    grid, lay = random_layout(rng, kind)
    s = random_state(rng, grid, lay)
    he = upwind_heights(s, lay)
    FL, FR = cell_layer_fluxes(s.u, he, lay.n_cell, lay.l_cell, lay.cell_to_left, lay.cell_to_right)
    S = edge_flux(s.u, he, lay.n_edge, lay.l_edge)
    scale = np.max(np.abs(S)) + 1e-300
    assert np.max(np.abs(FL.sum(axis=0) - S[:-1])) <= 1e-13 * scale
    assert np.max(np.abs(FR.sum(axis=0) - S[1:])) <= 1e-13 * scale


# ---------------------------------------------------------------- advection


@given(kinds, seeds)
def test_advection_of_uniform_field(kind, seed):
    rng = np.random.default_rng(seed)
    grid, lay = random_layout(rng, kind)
    s = random_state(rng, grid, lay)
    s.u[:] = np.where(np.arange(lay.n_max)[:, None] < lay.n_edge[None, :], 0.7, 0.0)
    # zero up to the round-off of the stencil weights (scale u^2/dx)
    assert np.max(np.abs(advection_term(s, grid, lay))) <= 1e-13 * 0.7**2 / grid.dx.min()


@pytest.mark.parametrize("c", [0.01, -0.02])
def test_advection_exact_on_linear_fields(c):
    g = build_grid(0, 100, 20)
    lay = uniform_layout(g, 3)
    u0 = 1.0 if c > 0 else -1.0
    u = np.tile(u0 + c * g.x_edge, (3, 1))
    s = make_state(lay, 10.0, 0.0, u)
    for e in range(1, g.M):
        for layer in (1, 3):
            assert advection_term(s, g, lay, e, layer) == pytest.approx(-u[0, e] * c, rel=1e-12)


def test_advection_constant_across_transition():
    g = build_grid(0, 100, 20)
    lay = build_layout(g, [(-np.inf, np.inf, 1, None), (-np.inf, 50, 10, None)])
    s = make_state(lay, 10.0, 0.0, 0.3)
    A = advection_term(s, g, lay)
    assert np.max(np.abs(A)) <= 1e-13 * 0.3**2 / 5.0


# ---------------------------------------------------------------- vertical velocity


def test_vertical_velocity_uniform_flat():
    g = build_grid(0, 100, 10)
    lay = uniform_layout(g, 4)
    s = make_state(lay, 5.0, 0.0, 0.4)
    wp, wm = recover_vertical_velocity(s, g, lay)
    assert np.max(np.abs(wp)) == 0.0 and np.max(np.abs(wm[1:])) == 0.0


def test_vertical_velocity_bed_condition():
    g = build_grid(0, 100, 10)
    lay = uniform_layout(g, 3)
    slope = 0.01
    b = slope * g.x_center
    s = make_state(lay, 10.0, b, 0.5)
    wp, _ = recover_vertical_velocity(s, g, lay)
    assert np.allclose(wp[0], 0.5 * slope, rtol=1e-12)


def test_vertical_velocity_single_layer_divergence():
    g = build_grid(0, 100, 10)
    lay = uniform_layout(g, 1)
    d = 1e-3
    h = 4.0
    s = make_state(lay, h, 0.0, d * g.x_edge)
    wp, wm = recover_vertical_velocity(s, g, lay)
    assert np.allclose(wm[1] - wp[0], -d * h, rtol=1e-12)


@given(kinds, seeds)
def test_vertical_velocity_jump_relation(kind, seed):
    rng = np.random.default_rng(seed)
    grid, lay = random_layout(rng, kind)
    s = random_state(rng, grid, lay)
    wp, wm = recover_vertical_velocity(s, grid, lay)
    h = s.h
    for i in range(1, grid.M - 1):
        dbdx = (s.b[i + 1] - s.b[i - 1]) / (grid.x_center[i + 1] - grid.x_center[i - 1])
        dhdx = (h[i + 1] - h[i - 1]) / (grid.x_center[i + 1] - grid.x_center[i - 1])
        n = lay.n_cell[i]
        uc = [0.5 * (s.u[lay.cell_to_left[a, i], i] + s.u[lay.cell_to_right[a, i], i + 1]) for a in range(n)]
        for k in range(1, n):
            dz = dbdx + lay.l_cell[:k, i].sum() * dhdx
            assert wp[k, i] - wm[k, i] == pytest.approx((uc[k] - uc[k - 1]) * dz, abs=1e-12)


# ---------------------------------------------------------------- boundary conditions


def test_discharge_boundary():
    g = build_grid(0, 10, 10)
    lay = uniform_layout(g, 5)
    s = make_state(lay, 5.0, 0.0)
    bc = BoundaryConditions(BoundarySide.discharge(4.42), BoundarySide.surface(5.0))
    apply_boundary_conditions(s, lay, bc, 0.0)
    assert np.allclose(s.u[:, 0], 0.884, rtol=1e-14)


def test_surface_boundary_value():
    omega = 2 * math.pi / 43200
    side = BoundarySide.surface(100.0, 3.0, omega)
    assert side.value(10800.0) == pytest.approx(103.0, abs=1e-12)
    g = build_grid(0, 10, 10)
    lay = uniform_layout(g, 2)
    s = make_state(lay, 100.0, 0.0)
    apply_boundary_conditions(s, lay, BoundaryConditions(BoundarySide.wall(), side), 10800.0)
    assert s.eta[-1] == pytest.approx(103.0)


def test_wall_boundary_zeroes_velocity():
    g = build_grid(0, 10, 10)
    lay = uniform_layout(g, 2)
    s = make_state(lay, 1.0, 0.0, 0.3)
    apply_boundary_conditions(s, lay, BoundaryConditions())
    assert not s.u[:, 0].any() and not s.u[:, -1].any()


def test_boundary_configuration_errors():
    with pytest.raises(ConfigurationError):
        BoundarySide("tide")
    with pytest.raises(ConfigurationError):
        BoundarySide.discharge(1.0, (0.5, 0.6))
    with pytest.raises(ConfigurationError):
        BoundaryConditions(BoundarySide("discharge", 1.0, amplitude=1.0)).validate()
    g = build_grid(0, 10, 10)
    with pytest.raises(ConfigurationError):
        BoundaryConditions(BoundarySide.discharge(1.0, (0.5, 0.5))).arrays(uniform_layout(g, 3))
