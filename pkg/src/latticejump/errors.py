"""Exception types shared across the package.

The CLI maps these onto distinct exit codes, so library code should raise
them rather than bare ValueError wherever the failure class matters.
"""


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


class DimensionCapError(ValueError):
    """Requested Hilbert-space dimension exceeds the configured cap."""


class NumericalFailure(RuntimeError):
    """Integration or linear algebra failed to meet its tolerances."""
