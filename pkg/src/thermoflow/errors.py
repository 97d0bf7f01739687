"""Exception types shared across the package."""


class ThermoflowError(Exception):
    """Base class for package errors."""


class BudgetExceededError(ThermoflowError):
    """A computation would exceed its configured enumeration/work budget."""


class NonMixingError(ThermoflowError):
    """An operation requires a mixing transition matrix."""


class NotEventuallyPositiveError(ThermoflowError):
    """Birkhoff sums of the potential never become uniformly positive."""


class BracketError(ThermoflowError):
    """A root bracket could not be established or validated."""


class DegenerateItineraryError(ThermoflowError):
    """An orbit hit a rectangle corner within tolerance; caller may perturb."""


class ChartError(ThermoflowError):
    """A point or window left the rectangle-chart atlas."""


class ResolutionError(ThermoflowError):
    """A discretization is too coarse for the requested operation."""


class QuadratureError(ThermoflowError):
    """A quadrature tolerance cannot be met within the time budget."""


class IntegrityError(ThermoflowError):
    """A measure-family invariant (positivity, monotonicity) was violated."""
