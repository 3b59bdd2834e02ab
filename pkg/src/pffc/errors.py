"""Exception hierarchy for the pffc package.

Input problems (bad shapes, inconsistent constants, malformed files) derive
from :class:`ValueError` as well as :class:`PffcError`, so callers that only
know about the builtin still catch them. Oracle breakdowns derive from
:class:`OracleFailure`.
"""

from __future__ import annotations


class PffcError(Exception):
    """Root of every error raised by pffc."""


class ShapeMismatchError(PffcError, ValueError):
    """Two Points (or a Point and a set) disagree on shape."""


class InvalidConstantsError(PffcError, ValueError):
    """A :class:`~pffc.core.ProblemConstants` record violates its invariants."""


class NonPositiveDiameterError(InvalidConstantsError):
    pass


class NegativeBudgetError(InvalidConstantsError):
    pass


class InconsistentGError(InvalidConstantsError):
    pass


class DegenerateConstantsError(PffcError, ValueError):
    """Constants make a schedule or a bound divide by zero."""


class NonPositiveEpsilonError(PffcError, ValueError):
    pass


class InvalidParametersError(PffcError, ValueError):
    """Solver or baseline parameters outside their admissible range."""


class BadDimsError(PffcError, ValueError):
    pass


class WrongFormulationError(PffcError, ValueError):
    pass


class ParseError(PffcError, ValueError):
    """A graph file or fixture could not be parsed."""


class InvalidNetworkError(PffcError, ValueError):
    """A flow network is cyclic, has repeated edges or bad node ids."""


class ConfigError(PffcError, ValueError):
    """A run configuration is incomplete or contradictory."""


class OracleFailure(PffcError, RuntimeError):
    """An oracle could not produce an answer."""


class SvdFailure(OracleFailure):
    pass


class OracleNotConvergedError(OracleFailure):
    pass


class ExactMinUnavailableError(PffcError):
    """The set cannot compute an exact linear minimum."""


class ProjectionUnavailableError(PffcError):
    """The set has no Euclidean projection oracle."""


class NoPathExistsError(PffcError):
    pass


class InfeasibleError(PffcError):
    """The flow demand cannot be routed within the capacities."""


__all__ = [
    "PffcError",
    "ShapeMismatchError",
    "InvalidConstantsError",
    "NonPositiveDiameterError",
    "NegativeBudgetError",
    "InconsistentGError",
    "DegenerateConstantsError",
    "NonPositiveEpsilonError",
    "InvalidParametersError",
    "BadDimsError",
    "WrongFormulationError",
    "ParseError",
    "InvalidNetworkError",
    "ConfigError",
    "OracleFailure",
    "SvdFailure",
    "OracleNotConvergedError",
    "ExactMinUnavailableError",
    "ProjectionUnavailableError",
    "NoPathExistsError",
    "InfeasibleError",
]
