"""Exception types raised across the package."""


class MixedLRError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(MixedLRError, ValueError):
    pass


class NotSymmetric(MixedLRError, ValueError):
    pass


class NoConvergence(MixedLRError, RuntimeError):
    pass


class MissingLabels(MixedLRError, ValueError):
    pass


class UnsupportedK(MixedLRError, ValueError):
    pass


class InsufficientPoints(MixedLRError, ValueError):
    pass


class TooManyGroups(MixedLRError, ValueError):
    pass


class InvalidSpec(MixedLRError, ValueError):
    pass


class SolverError(MixedLRError, RuntimeError):
    """Raised when an iterative solver cannot produce a usable trace."""


class Divergence(SolverError):
    """GD iterates escaped: loss grew past the divergence cutoff.

    The partial trace up to the failing round is kept on ``trace``.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class NoStableStep(SolverError):
    pass


class RankDeficientWarning(UserWarning):
    """Least-squares design had effective rank below its column count."""
