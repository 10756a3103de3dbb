"""Exception types shared across the package.

The CLI maps these onto distinct exit codes: configuration and manifest
problems, malformed data files, and network transport failures each get
their own code so scripted callers can react.
"""


class ConfigError(Exception):
    """Bad run configuration (unknown key, invalid value, missing input)."""


class ManifestError(ConfigError):
    """Split bookkeeping violated: unknown label, missing semantics, ..."""


class SplitViolationError(ManifestError):
    """Seen and unseen class sets overlap."""


class FormatError(Exception):
    """A data file does not follow its documented layout."""


class OutOfVocabularyError(FormatError):
    """No token of a text is present in the word-vector table."""


class TransportError(Exception):
    """Network or authentication failure while talking to an endpoint."""


class ProviderError(TransportError):
    """The endpoint answered, but with an unusable completion."""


class ContractError(ValueError):
    """An operation was called outside its documented contract."""


class ShapeError(ContractError):
    """Operands with incompatible shapes."""
