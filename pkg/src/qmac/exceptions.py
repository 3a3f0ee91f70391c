"""Exception hierarchy shared across the package."""


class QmacError(Exception):
    """Base class for all package errors."""


class ValidationError(QmacError, ValueError):
    """A parameter, configuration or input is outside its allowed domain."""


class PhysicalityError(QmacError, ValueError):
    """A covariance matrix or distribution violates a physical constraint."""


class CutoffError(QmacError):
    """The Fock truncation lost more probability than allowed."""


class ResourceError(QmacError):
    """A computation would exceed its grid or enumeration budget."""
