"""Exception hierarchy shared by every module."""


class FairselError(Exception):
    """Base class for all library errors."""

    kind = "error"


class ContractError(FairselError, ValueError):
    """A precondition on arguments was violated."""

    kind = "contract"


class StructuralError(FairselError, ValueError):
    """A graph or path is malformed (cycle, non-adjacent steps, bad roles)."""

    kind = "structural"


class LookupFailure(FairselError, KeyError):
    """An unknown variable name was referenced."""

    kind = "lookup"

    def __str__(self) -> str:  # KeyError quotes its message otherwise
        return str(self.args[0]) if self.args else ""


class SpecError(FairselError, ValueError):
    """An SCM specification is invalid."""

    kind = "spec"


class DegenerateDataError(FairselError, ValueError):
    """A column has zero variance or a rate has an empty denominator."""

    kind = "degenerate"


class InsufficientDataError(FairselError, ValueError):
    """Too few rows for the requested statistical procedure."""

    kind = "insufficient_data"


class TrainingError(FairselError, RuntimeError):
    """Gradient descent failed to make progress."""

    kind = "training"
