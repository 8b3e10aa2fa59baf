"""Exception types shared across the package."""


class CfkitError(Exception):
    """Base class for all cfkit-specific errors."""


class ParseError(CfkitError):
    """Malformed input file. Carries the offending line number."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class DuplicateRatingError(CfkitError):
    """The same (user, item) pair appears more than once."""


class RatingRangeError(CfkitError):
    """A rating value falls outside the accepted range."""


class ConfigError(CfkitError):
    """Invalid configuration value, preset name, or file."""


class NumericError(CfkitError):
    """A numerical routine failed (divergence, singularity, non-convergence)."""
