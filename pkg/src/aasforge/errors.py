"""Exception types used across the package."""


class AasForgeError(Exception):
    """Base class for every error this package raises deliberately."""


class ValidationError(AasForgeError):
    """A value violates a domain invariant."""


class SanitizeError(AasForgeError):
    """No legal idShort character survives sanitization."""


class DuplicateIdError(AasForgeError):
    """Two elements claim the same identifier and suffixing is disabled."""


class ParseError(AasForgeError):
    """Input text is not parseable at all (e.g. malformed JSON)."""


class FormatError(AasForgeError):
    """A record in an input file is malformed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DuplicateEntryError(AasForgeError):
    """A dictionary entry id is already present."""


class DimensionMismatchError(AasForgeError):
    """Two vectors (or a vector and an index) disagree on dimension."""


class EmbeddingError(AasForgeError):
    """The embedding provider failed or produced an unusable vector."""


class MissingBindingError(AasForgeError):
    """A prompt placeholder has no binding."""

    def __init__(self, placeholder: str):
        self.placeholder = placeholder
        super().__init__(f"no binding for placeholder {placeholder!r}")


class TransportError(AasForgeError):
    """The provider endpoint could not be reached (after retries)."""


class AuthError(AasForgeError):
    """The provider rejected the request's credentials."""


class ProviderError(AasForgeError):
    """The provider answered with a non-success status."""

    def __init__(self, status_code: int, body: str):
        self.status_code = status_code
        self.body = body
        super().__init__(f"provider returned HTTP {status_code}: {body[:200]}")


class ExtractError(AasForgeError):
    """No JSON payload could be located in a model response."""


class SchemaError(AasForgeError):
    """A parsed payload does not match the expected schema."""


class StubMissError(AasForgeError):
    """The stub provider has no rule matching a prompt."""


class AgentError(AasForgeError):
    """An agent produced unusable output even after repair attempts."""


class EmptySampleError(AasForgeError):
    """A metric was requested over an empty rating sample."""


class InsufficientSampleError(AasForgeError):
    """A statistical test needs more observations than were given."""


class DegenerateVarianceError(AasForgeError):
    """Both samples have zero variance; conventional values attached.

    ``t``, ``df`` and ``p`` carry the convention: equal means give
    (0, n_a+n_b-2, 1), different means give (+/-inf, n_a+n_b-2, 0).
    """

    def __init__(self, message: str, t: float, df: float, p: float):
        self.t = t
        self.df = df
        self.p = p
        super().__init__(message)


class NotFoundError(AasForgeError):
    """A stored record does not exist."""


class CorruptRecordError(AasForgeError):
    """A stored record exists but cannot be read back."""

    def __init__(self, message: str, path: str | None = None):
        self.path = path
        if path is not None:
            message = f"{message} ({path})"
        super().__init__(message)


class AlreadyApprovedError(AasForgeError):
    """An enrichment candidate was approved before."""
