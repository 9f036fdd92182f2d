"""Shared exception types and process exit codes."""

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_RESOURCE = 4


class InvalidArgumentError(ValueError):
    """An operation was called with arguments that violate its preconditions."""


class SceneValidationError(InvalidArgumentError):
    """A scene document failed validation.

    Carries a machine-readable code and the dotted path of the offending
    field so callers (and the CLI) can report exactly what to fix.
    """

    def __init__(self, path: str, message: str, code: str = "E_VALIDATION"):
        self.path = path
        self.code = code
        super().__init__(f"{code} {path}: {message}")


class InputFormatError(ValueError):
    """A data file exists but its content cannot be parsed."""

    def __init__(self, path: str, message: str, code: str = "E_FORMAT"):
        self.path = str(path)
        self.code = code
        super().__init__(f"{code} {path}: {message}")


class ResourceLimitError(RuntimeError):
    """A requested computation exceeds the configured memory budget."""
