"""Exception hierarchy shared across the package."""


class NcergoError(Exception):
    """Base class for all package errors."""


class InvalidInputError(NcergoError):
    """Arguments violate a documented precondition."""


class NumericFailureError(NcergoError):
    """A numerical routine failed to reach its guaranteed accuracy."""


class PostconditionError(NumericFailureError):
    """A construction failed its asserted postcondition (tolerance diagnostics)."""


class NoLimitError(NcergoError):
    """A trace is not Cauchy at its tail; no candidate limit can be extracted."""
