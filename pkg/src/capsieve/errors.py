"""Exception hierarchy shared across the package."""


class CapsieveError(Exception):
    """Base class for all errors raised by this package."""


class CorpusFormatError(CapsieveError):
    """Raised when a corpus file is unreadable or too malformed to trust."""


class ArtifactFormatError(CapsieveError):
    """Raised when a persisted artifact (TSV, binary model) fails to parse."""


class MismatchError(CapsieveError):
    """Raised when two artifacts that must describe the same data do not."""


class ConfigurationError(CapsieveError):
    """Raised for invalid parameter combinations or missing resources."""
