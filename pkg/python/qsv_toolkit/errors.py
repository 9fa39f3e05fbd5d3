"""Exception types raised by qsv_toolkit.

Each error subclasses the built-in exception that would otherwise have been
raised, so code catching ValueError/RuntimeError keeps working.
"""

from pathlib import Path


class DimensionCapError(ValueError):
    """Requested dense operator exceeds the supported dimension."""


class InvalidOperatorError(ValueError):
    """Operator is not a valid verification operator for the target."""


class InvalidStrategyError(ValueError):
    """Strategy violates the probability, effect or target-fixing invariants."""


class InvalidPOVMError(ValueError):
    """Measurement effects do not sum to the identity."""


class NonCommutingError(ValueError):
    """Stabilizer generators do not mutually commute."""


class StateNeverOccursError(ValueError):
    """Measurement outcome has zero probability on the target state."""


class UnverifiableError(ValueError):
    """Infidelity times spectral gap is zero, so no sample size suffices."""


class CannotRejectError(ValueError):
    """Observed frequency does not exceed the rejection threshold."""


class DivergentOverheadError(ValueError):
    """Adversarial overhead is infinite for the given spectrum."""


class NumericalIntegrityError(RuntimeError):
    """A computed probability or cross-check left its tolerance band."""


class SchemaError(ValueError):
    """Input file does not match the expected schema."""

    def __init__(self, message: str, path: Path | str | None = None):
        self.path = Path(path) if path is not None else None
        if self.path is not None:
            message = f"{self.path}: {message}"
        super().__init__(message)
