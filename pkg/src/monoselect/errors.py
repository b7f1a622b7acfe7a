class DataError(ValueError):
    """Malformed or inconsistent input data (CLI exit code 2)."""
