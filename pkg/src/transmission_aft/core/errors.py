"""
Exception hierarchy for the transmission_aft package.

Every error raised on bad input derives from TransmissionError, which is a
ValueError so callers that already guard with ValueError keep working.
"""


class TransmissionError(ValueError):
    """Base class for all package errors."""


class DomainError(TransmissionError):
    """Argument outside the domain of a hazard function."""


class InconsistentDataError(TransmissionError):
    """Natural-history or infection records that contradict each other."""


class UnknownCovariateError(TransmissionError):
    """A formula term or profile names a covariate that does not exist."""


class LikelihoodEvaluationError(TransmissionError):
    """The log-likelihood cannot be evaluated at the requested parameters."""


class RankDeficientError(TransmissionError):
    """The design matrix does not have full column rank."""

    def __init__(self, message: str, columns: list[str]):
        super().__init__(message)
        self.columns = columns


class ConfigError(TransmissionError):
    """Invalid or unreadable configuration."""


class SchemaError(TransmissionError):
    """Input file that does not follow the documented schema."""
