"""Exception hierarchy shared by all modules."""


class SolomonLabError(Exception):
    """Base class for all errors raised by this package."""


class PrecisionError(SolomonLabError):
    """A computation could not be completed within the available p-adic precision.

    Carries the resource that ran out so reports can mark the item
    'undetermined' instead of silently passing or failing.
    """

    def __init__(self, message, needed=None, available=None):
        super().__init__(message)
        self.needed = needed
        self.available = available


class NotTotallySplitError(SolomonLabError):
    """p is not totally split in the field, so the implemented theorems do not apply."""


class ContextTooSmallError(SolomonLabError):
    """The requested root of unity does not live in the current unramified ring."""

    def __init__(self, message, minimal_degree):
        super().__init__(message)
        self.minimal_degree = minimal_degree


class DataError(SolomonLabError):
    """Malformed catalog, units or tower-data input."""
