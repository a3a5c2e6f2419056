"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError/UsageError -> 1,
FormatError/ValidationError -> 2, NumericError -> 3.
"""


class SwingKitError(Exception):
    """Base class for all package errors."""


class ShapeError(SwingKitError):
    """An array has the wrong shape; the message names the offending axis."""


class ConfigError(SwingKitError):
    """Bad configuration: unknown key, wrong type, or missing mandatory value."""


class UsageError(SwingKitError):
    """Command-line misuse (unknown subcommand, bad flag)."""


class FormatError(SwingKitError):
    """A serialized file is corrupt or inconsistent; the message names the file."""


class ValidationError(SwingKitError):
    """Input data violates a documented precondition."""


class DegenerateRotationError(ValidationError):
    """A 6D rotation vector cannot be orthonormalized (parallel columns)."""


class NumericError(SwingKitError):
    """A numeric failure during training or evaluation (non-finite values)."""
