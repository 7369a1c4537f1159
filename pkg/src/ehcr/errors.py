"""Exception types shared across the package."""


class EhcrError(Exception):
    """Base class for all package errors."""


class InstanceError(EhcrError, ValueError):
    """Malformed scenario, channel, schedule, or power data."""


class ConvergenceError(EhcrError, RuntimeError):
    """A solver hit its iteration cap before reaching tolerance.

    Carries the best iterate found so far in ``payload`` when available.
    """

    def __init__(self, message, payload=None):
        super().__init__(message)
        self.payload = payload


class CapacityError(EhcrError, ValueError):
    """An exhaustive enumeration guard was exceeded."""


class UnboundedLevelError(EhcrError, ValueError):
    """Water level is unbounded because a dual aggregate is nonpositive."""


class UsageError(EhcrError, ValueError):
    """An operation was called with structurally invalid arguments."""


class SweepError(EhcrError, RuntimeError):
    """A Monte-Carlo sweep aborted after repeated trial failures."""
