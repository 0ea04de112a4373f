"""Exception hierarchy shared by all hypersync modules."""


class HypersyncError(Exception):
    """Base class for library errors."""


class VariantMismatchError(HypersyncError, ValueError):
    """Operands belong to different groups (SO2 vs SO3) or tuple orders differ."""


class DegenerateInputError(HypersyncError, ValueError):
    """A matrix is too close to rank deficient to be projected onto SO(d)."""


class DisconnectedError(HypersyncError):
    """A (hyper)graph that must be connected is not."""

    def __init__(self, message, components=None):
        super().__init__(message)
        self.components = components


class InconsistencyError(HypersyncError):
    """Noiseless synchronization found a hyperedge incompatible with the potential."""

    def __init__(self, message, hyperedge, residual, potential=None):
        super().__init__(message)
        self.hyperedge = hyperedge
        self.residual = residual
        self.potential = potential


class GoodCycleConditionError(HypersyncError):
    """Some hyperedge has no good cycle, so ideal weights are undefined."""

    def __init__(self, message, hyperedge):
        super().__init__(message)
        self.hyperedge = hyperedge


class ConvergenceError(HypersyncError):
    """An iterative numerical routine did not reach its tolerance."""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual
