"""Exception hierarchy shared by every module.

Each error carries a human readable ``detail`` and the process ``exit_code``
the CLI returns when it escapes a command.
"""


class AsrError(Exception):
    exit_code = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class ConfigError(AsrError):
    exit_code = 2


class ArgumentError(AsrError, ValueError):
    pass


class ShapeError(ArgumentError):
    pass


class InputTooShortError(ArgumentError):
    pass


class StateError(AsrError):
    pass


class ManifestError(AsrError):
    pass


class ManifestNotFoundError(ManifestError):
    pass


class MalformedRecordError(ManifestError):
    pass


class DanglingReferenceError(ManifestError):
    pass


class AlignmentMismatchError(ManifestError):
    pass


class CorpusValidationError(ManifestError):
    pass


class IncompatibleCheckpointError(ConfigError):
    pass


class UnsupportedVariantError(ConfigError):
    pass


class MissingMasksError(ConfigError):
    pass


class DivergenceError(AsrError):
    pass


class LookupFailedError(AsrError):
    pass
