"""Exception hierarchy shared by all modules."""


class MixedOrderError(Exception):
    """Base class for every error raised by the package."""


class ArgumentError(MixedOrderError, ValueError):
    """Malformed input: wrong shapes, inconsistent sizes, bad parameters."""


class DomainError(MixedOrderError, ValueError):
    """Evaluation requested outside the domain of a map (e.g. xi = 0)."""


class PreconditionError(MixedOrderError, ValueError):
    """An analysis precondition on the data does not hold."""


class AnalysisError(MixedOrderError, RuntimeError):
    """Numerical analysis failed on too many sample points."""


class SaturationError(MixedOrderError, OverflowError):
    """Matrix exponent too large to be exponentiated reliably."""

    def __init__(self, norm, limit):
        self.norm = float(norm)
        self.limit = float(limit)
        super().__init__(f"matrix exponential saturated: ||M||_1 = {self.norm:.6g} exceeds {self.limit:.6g}")


class ResolutionError(MixedOrderError, ValueError):
    """A wave packet is not resolved by (or does not fit into) the grid."""

    def __init__(self, message, required_points=None):
        self.required_points = required_points
        if required_points is not None:
            message = f"{message} (requires points_per_axis >= {required_points})"
        super().__init__(message)


class IntegrityError(MixedOrderError, AssertionError):
    """A closed-form reference and the analyzer disagree."""
