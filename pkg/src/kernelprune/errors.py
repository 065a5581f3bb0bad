"""Shared exception types. The CLI maps any DataError to exit code 2."""


class DataError(Exception):
    """Invalid data or parameters detected during validation."""


class DimensionMismatch(DataError):
    """Input width does not match the fitted structure."""
