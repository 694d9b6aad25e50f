"""Exception hierarchy shared by all solver modules."""


class MLSWError(Exception):
    """Base class for all solver errors."""


class ConfigurationError(MLSWError):
    """Invalid grid, scenario, boundary or run configuration."""


class LayoutError(ConfigurationError):
    """Layer layout violating the sum, nesting or adjacency constraints."""


class ClosureError(MLSWError):
    """Turbulence/friction closure evaluated outside its domain of validity."""


class SolverAbort(MLSWError):
    """A time step could not be completed."""


class DryingError(SolverAbort):
    """Water depth fell below the minimum admissible depth."""


class SingularSystemError(SolverAbort):
    """A tridiagonal system produced a zero or tiny pivot."""
