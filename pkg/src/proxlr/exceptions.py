"""Exception hierarchy shared by the solvers and the benchmark harness."""


class ProxLRError(Exception):
    """Base class for all errors raised by proxlr."""


class DimensionError(ProxLRError, ValueError):
    """Array shapes are inconsistent with the sensing operator or set."""


class ParameterError(ProxLRError, ValueError):
    """A hyperparameter lies outside its admissible range."""


class DegenerateInputError(ProxLRError, ValueError):
    """The input has no well-defined answer (e.g. projecting the zero matrix)."""


class PreconditionError(ProxLRError, ValueError):
    """A solver precondition is violated (e.g. an infeasible initial point)."""


class NumericalFailureError(ProxLRError, RuntimeError):
    """An iterative routine failed in a way that signals a bug or bad data."""
