"""Exception types raised across the package.

Every error derives from :class:`UpliftSGTError` so callers (the CLI in
particular) can map data problems to a single exit code.
"""


class UpliftSGTError(Exception):
    """Base class for all package errors."""


class InvalidConfig(UpliftSGTError, ValueError):
    pass


class NonFiniteScore(UpliftSGTError, ValueError):
    pass


class EmptyPopulation(UpliftSGTError, ValueError):
    pass


class DegenerateLabels(UpliftSGTError, ValueError):
    pass


class DimensionMismatch(UpliftSGTError, ValueError):
    pass


class MissingKpi(UpliftSGTError, ValueError):
    pass


class MissingEndFeatures(UpliftSGTError, ValueError):
    pass


class MissingTreatment(UpliftSGTError, ValueError):
    """Raised when an individual is re-scored before the campaign launched."""


class SizeMismatch(UpliftSGTError, ValueError):
    pass


class LengthMismatch(UpliftSGTError, ValueError):
    pass


class NonBinaryInput(UpliftSGTError, ValueError):
    pass


class EmptyGroup(UpliftSGTError, ValueError):
    pass


class ZeroDenominator(UpliftSGTError, ValueError):
    pass


class UndefinedRate(UpliftSGTError, ValueError):
    """A group rate has an empty denominator.

    Attributes:
      cell: name of the rate that could not be computed, e.g. ``"TPR[A=1]"``.
    """

    def __init__(self, cell: str, message: str | None = None):
        self.cell = cell
        super().__init__(message or f"undefined rate {cell}: empty denominator")


class DegenerateGap(UpliftSGTError, ValueError):
    pass


class MissingCounterfactuals(UpliftSGTError, ValueError):
    pass


class MissingModels(UpliftSGTError, ValueError):
    pass


class MalformedRow(UpliftSGTError, ValueError):
    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class MissingColumn(UpliftSGTError, ValueError):
    pass
