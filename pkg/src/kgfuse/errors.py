"""Exception hierarchy.

Everything user-facing derives from :class:`KgfuseError` so the CLI can map
bad input to exit code 2 while real bugs keep their traceback (exit 3).
"""


class KgfuseError(Exception):
    """Base class for errors caused by invalid input or configuration."""


class FormatError(KgfuseError):
    """Malformed input file. Carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnknownIdError(KgfuseError):
    """An entity, relation, or type id not present in the graph."""


class ConfigError(KgfuseError):
    """Model configuration violates an invariant."""


class CheckpointError(KgfuseError):
    """Checkpoint file is truncated or inconsistent with its manifest."""
