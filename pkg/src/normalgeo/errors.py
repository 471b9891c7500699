"""Exception hierarchy shared across the toolkit."""


class GeometryError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(GeometryError):
    """Invalid metric/scenario configuration document."""


class DomainError(GeometryError):
    """Point outside the declared chart domain."""


class SingularMetricError(GeometryError):
    """Metric numerically degenerate at the requested point."""


class ConjugatePointError(GeometryError):
    """Operation crossed the first conjugate point of the chart."""


class ConvergenceError(GeometryError):
    """Iterative solver failed to reach its tolerance."""


class StepUnderflowError(GeometryError):
    """Adaptive integrator step size fell below the representable floor."""
