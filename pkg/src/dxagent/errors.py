"""Exception types shared across the package."""


class KbFormatError(ValueError):
    """Raised when a knowledge-base file cannot be parsed against the schema."""


class KbValidationError(ValueError):
    """Raised when a parsed knowledge base violates structural invariants.

    Carries the full validation report so callers can surface every problem
    at once instead of the first one hit.
    """

    def __init__(self, report):
        self.report = report
        super().__init__("invalid knowledge base:\n" + report.describe())


class SimulationError(ValueError):
    """Raised when a knowledge base cannot produce a legal patient."""


class DimensionError(ValueError):
    """Raised on state/model dimension mismatches."""


class ExhaustionError(RuntimeError):
    """Raised when every finding is already known and no inquiry is possible."""


class UpdateError(FloatingPointError):
    """Raised when a parameter update would apply non-finite values."""


class CheckpointError(ValueError):
    """Raised on unreadable, corrupt, or incompatible checkpoint files."""
