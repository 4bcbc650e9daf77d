"""Exception types shared across the package."""


class OrderKinError(Exception):
    """Base class for all library errors."""


class ConfigurationError(OrderKinError, ValueError):
    """Invalid parameters, incompatible inputs or a malformed scenario."""


class DegenerateGeometryError(OrderKinError, ArithmeticError):
    """Contact geometry for which the collision impulse is undefined."""


class DegenerateEnsembleError(OrderKinError, ArithmeticError):
    """An ensemble statistic is undefined, e.g. a vanishing mean direction."""


class NotApplicableError(OrderKinError, ValueError):
    """The requested quantity does not exist for the given parameters."""
