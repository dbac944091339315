"""Exception types shared across projlab modules."""


class ProjLabError(Exception):
    """Base class for all projlab errors."""


class DomainError(ProjLabError, ValueError):
    """An argument is outside its mathematical domain (e.g. theta not in [0,1])."""


class NumericError(ProjLabError, ArithmeticError):
    """A computation produced non-finite or otherwise unusable values."""


class ConfigurationError(ProjLabError, ValueError):
    """Inputs are individually fine but mutually inconsistent."""


class CapacityError(ProjLabError, MemoryError):
    """A construction would exceed the configured cell or grid budget."""


class InfeasibleError(ProjLabError, RuntimeError):
    """The requested object provably does not exist at this scale/budget."""


class RangeError(ProjLabError, ValueError):
    """A scale range is empty or degenerate (e.g. fewer than 3 fit scales)."""


class InconsistencyError(ProjLabError, RuntimeError):
    """Cross-checked structures disagree (e.g. a covering missing its target)."""


class PreconditionError(ProjLabError, RuntimeError):
    """A documented operation precondition was violated by the inputs."""


class GeometryError(ProjLabError, RuntimeError):
    """Geometric construction impossible (e.g. degenerate curve frames)."""
