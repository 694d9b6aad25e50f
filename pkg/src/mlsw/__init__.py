"""Multilayer shallow-water solver with a variable number of vertical layers."""

from .exceptions import (ClosureError, ConfigurationError, DryingError, LayoutError, MLSWError,
                         SingularSystemError, SolverAbort)
from .mesh import Grid1D, LayerLayout, aggregate_velocity, build_grid, build_layout, uniform_layout
from .operators import BoundaryConditions, BoundarySide, State, make_state
from .physics import PhysicsParams
from .steppers import (ARK2, ButcherTableaux, Model, StepReport, advance_rk3, advance_semi_implicit,
                       courant_numbers, step_imex_ark2, step_rk3_explicit, step_theta)

__version__ = "0.1.0"

__all__ = [
    "ARK2", "BoundaryConditions", "BoundarySide", "ButcherTableaux", "ClosureError", "ConfigurationError",
    "DryingError", "Grid1D", "LayerLayout", "LayoutError", "MLSWError", "Model", "PhysicsParams",
    "SingularSystemError", "SolverAbort", "State", "StepReport", "advance_rk3", "advance_semi_implicit",
    "aggregate_velocity", "build_grid", "build_layout", "courant_numbers", "make_state", "step_imex_ark2", "step_rk3_explicit",
    "step_theta", "uniform_layout",
]
