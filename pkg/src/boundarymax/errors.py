"""Exception types shared across the solver suite."""


class BoundaryMaxError(Exception):
    """Base class for all errors raised by this package."""


class SpacingTooCoarse(BoundaryMaxError):
    """Grid spacing leaves too few nodes to resolve the domain."""


class NonConvexDomain(BoundaryMaxError):
    """Polygon vertices fail the same-sign cross-product test."""


class NotPositiveDefinite(BoundaryMaxError):
    """Inverse metric is not positive-definite at some grid node."""

    def __init__(self, x: float, y: float, message: str = ""):
        self.x = x
        self.y = y
        super().__init__(message or f"inverse metric not positive-definite at ({x}, {y})")


class EmptyInterior(BoundaryMaxError):
    """Grid has no interior nodes."""


class AllMasked(BoundaryMaxError):
    """Every interior node fell below the amplitude floor."""


class IncompatibleSource(BoundaryMaxError):
    """Source term violates the zero-flux solvability condition."""


class UnsupportedMetric(BoundaryMaxError):
    """Operation does not support this metric family."""


class DomainTooSmall(BoundaryMaxError):
    """Density does not decay enough inside the grid for the free-space kernel."""


class CFLViolation(BoundaryMaxError):
    """Requested time step exceeds the stability bound."""


class NumericalBlowup(BoundaryMaxError):
    """Field magnitude exceeded the runaway threshold during evolution."""


class DegenerateMetric(BoundaryMaxError):
    """Metric eigenvalue indistinguishable from zero."""


class NotRefining(BoundaryMaxError):
    """Convergence study errors fail to decrease under refinement."""


class ConfigInvalid(BoundaryMaxError):
    """Experiment configuration failed validation."""


class MalformedCSV(BoundaryMaxError):
    """CSV artifact violates its declared format."""

    def __init__(self, path, line_no: int, message: str):
        self.path = str(path)
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {message}")
