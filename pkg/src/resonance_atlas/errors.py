"""Exception hierarchy.

Errors split into two families so the CLI can map them to exit codes:
:class:`HypothesisError` (the input violates a standing assumption, exit 1)
and :class:`NumericalError` (a solver did not deliver, exit 2).
"""


class ResonanceAtlasError(Exception):
    """Base class for all package errors."""


class HypothesisError(ResonanceAtlasError):
    pass


class NumericalError(ResonanceAtlasError):
    pass


class StripViolation(HypothesisError):
    """Complex evaluation point outside the analyticity domain of a term."""


class DegenerateTurningPoint(HypothesisError):
    pass


class TangentialCrossing(HypothesisError):
    pass


class CrossingAtTurning(HypothesisError):
    pass


class UnboundedInteraction(HypothesisError):
    pass


class TooCloseToVertex(ValueError, ResonanceAtlasError):
    pass


class NotPrCycle(ValueError, ResonanceAtlasError):
    pass


class TopologyUnsupported(ResonanceAtlasError):
    pass


class NoCycles(ResonanceAtlasError):
    pass


class QuadratureNonConvergence(NumericalError):
    pass


class ODEStepFailure(NumericalError):
    pass


class CycleBudgetExceeded(NumericalError):
    pass


class NewtonDivergence(NumericalError):
    pass


class ContourThroughZero(NumericalError):
    pass


class EigensolveFailure(NumericalError):
    pass


class ConfigError(ResonanceAtlasError):
    pass


class ParseError(ConfigError):
    def __init__(self, msg: str, line: int, column: int):
        super().__init__(f"{msg} (line {line}, column {column})")
        self.line = line
        self.column = column


class ValidationError(ConfigError):
    def __init__(self, field: str, msg: str):
        super().__init__(f"{field}: {msg}")
        self.field = field


class GridTooCoarse(UserWarning):
    """Fewer than 8 grid points per local wavelength at the reference energy."""
