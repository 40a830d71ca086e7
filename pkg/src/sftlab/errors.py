"""Exception types shared across the package."""


class SftLabError(Exception):
    """Base class for all package errors."""


class InputError(SftLabError, ValueError):
    """An argument violates an operation's precondition."""


class ResourceLimitError(SftLabError):
    """A computation would exceed a configured size cap.

    Attributes
    ----------
    cap : str
        Name of the cap that was hit.
    required : int
        Size the computation asked for.
    limit : int
        Configured bound.
    """

    def __init__(self, cap, required, limit):
        self.cap = cap
        self.required = required
        self.limit = limit
        super().__init__(f"{cap} exceeded: need {required}, limit is {limit}")


class ConvergenceError(SftLabError):
    """An iterative solver stopped without meeting its tolerance."""

    def __init__(self, message, last_iterate=None, diagnostics=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.diagnostics = diagnostics or {}
