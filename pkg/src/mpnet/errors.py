"""Exception types shared across the toolkit."""


class MpnetError(Exception):
    """Base class for all toolkit errors."""


class SchemaError(MpnetError):
    """CSV header does not match the expected schema."""


class RowError(MpnetError):
    """A data row could not be parsed; carries the 1-based file line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class EnumerationError(RowError):
    """A categorical cell holds a token outside its allowed set."""


class MaterialLookupError(MpnetError, KeyError):
    """Material name absent from the registry."""


class PropertyCoverageError(MpnetError):
    """A material or element lacks a property required by an operation."""


class EncodingError(MpnetError):
    """A categorical value falls outside the fixed category set."""


class EmptyMatrixError(MpnetError):
    """Featurization left zero usable rows."""


class ShapeError(MpnetError):
    """Column sets or array shapes do not line up."""


class PhysicsDomainError(MpnetError, ValueError):
    """Physical inputs outside the domain of a formula (e.g. Tm <= T0)."""


class IdentifiabilityError(MpnetError):
    """Covariates lack the variation needed to pin down the model."""


class DegenerateLabelsError(MpnetError):
    """Fewer than two classes present in a classification target."""


class NumericalError(MpnetError):
    """A linear solve or factorization failed."""


class ModelKindError(MpnetError):
    """Operation applied to an incompatible model kind."""


class SearchError(MpnetError):
    """Hyperparameter search produced no successful trial."""


class ConfigError(MpnetError):
    """Run configuration failed validation."""
