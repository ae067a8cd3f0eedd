"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument is outside the mathematical domain of an operation."""


class DegenerateCalibrationError(ValueError):
    """Exact-corrected calibration is undefined because the exact p-value
    is 0 or 1 (the normal quantile diverges)."""


class UsageError(ValueError):
    """Malformed request at the interface layer (CLI arguments, missing
    required options)."""
