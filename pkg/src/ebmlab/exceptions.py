"""Exception hierarchy.

Every error carries an ``exit_code`` so the command-line front end can map
failures to process exit statuses without a lookup table.
"""


class EBMError(Exception):
    """Base class for all errors raised by ebmlab."""

    exit_code = 4


class InvalidParameters(EBMError, ValueError):
    exit_code = 2


class OutOfDomain(EBMError, ValueError):
    pass


class OutOfRange(EBMError, ValueError):
    exit_code = 2


class AnchorOnLine(EBMError, ValueError):
    pass


class DegenerateDomain(EBMError, ValueError):
    pass


class ImageEscapesDomain(EBMError):
    pass


class BadFold(EBMError, ValueError):
    """A fold sequence violates the good-fold condition at construction."""


class SingularDenominator(EBMError, ZeroDivisionError):
    pass


class SingularChange(EBMError, ZeroDivisionError):
    pass


class RegionMismatch(EBMError, ValueError):
    exit_code = 3


class UnsupportedRegion(EBMError, ValueError):
    exit_code = 3


class Unreachable(EBMError, ValueError):
    exit_code = 3


class NotFound(EBMError):
    exit_code = 3


class DegenerateOrbit(EBMError):
    pass


class EmptyAttractor(EBMError, ValueError):
    pass
