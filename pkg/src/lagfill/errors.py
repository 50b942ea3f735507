"""Exception types raised by the verification toolkit."""


class DimensionMismatch(ValueError):
    """A map's codomain does not match the form it is paired with."""


class NonConvergence(RuntimeError):
    """An iterative solver failed to converge."""

    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket


class AmbiguousRoots(RuntimeError):
    """Two refined roots are too close to be told apart or merged safely."""


class UnwrapError(RuntimeError):
    """A complex path vanished, or could not be sampled finely enough to unwrap."""


class ToleranceExceeded(RuntimeError):
    """Two independent computations of the same quantity disagree."""


class CensusError(RuntimeError):
    """The double-point census did not return the expected configuration."""

    def __init__(self, message, census=None):
        super().__init__(message)
        self.census = census if census is not None else []
