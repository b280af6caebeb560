"""Exception hierarchy shared by every stage of the pipeline."""


class DualResearchError(Exception):
    """Base class for all pipeline errors."""


class PreconditionError(DualResearchError, ValueError):
    """An operation was called with inputs that violate its contract."""


class MalformedOutline(DualResearchError):
    """Outline markdown breaks the heading hierarchy or cite-tag grammar."""


class ProviderError(DualResearchError):
    pass


class ProviderUnavailable(ProviderError):
    """Network or authentication failure; the backend could not be reached."""


class ProviderRefused(ProviderError):
    """The backend answered with a non-2xx status."""

    def __init__(self, message: str, status_code: int | None = None):
        super().__init__(message)
        self.status_code = status_code


class ProviderTimeout(ProviderError):
    pass


class ParseFailure(DualResearchError):
    """Model output could not be coerced into the expected structure."""

    def __init__(self, message: str, raw: str | None = None):
        super().__init__(message)
        self.raw = raw


class UnknownId(DualResearchError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


class EmptyTrajectory(DualResearchError):
    pass


class PersistenceFailure(DualResearchError):
    pass


class MissingTrackedFile(DualResearchError, FileNotFoundError):
    pass


class LengthViolation(DualResearchError):
    pass


class UnknownCategory(DualResearchError):
    pass


class SectionFailure(DualResearchError):
    pass


class ConfigError(DualResearchError):
    pass


class PipelineError(DualResearchError):
    """An unrecoverable failure inside run_research; carries the partial trajectory."""

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class MutationFailed(DualResearchError):
    """The external mutation hook exited with an error."""
