"""Exception types shared across the toolkit."""


class SenseAlignError(Exception):
    """Base class for all toolkit errors."""


class DataError(SenseAlignError):
    """An input file, record, or argument violates a format or value contract."""
