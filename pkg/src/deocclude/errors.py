"""Exception types shared across the package."""


class DeoccludeError(Exception):
    """Base class for all package errors."""


class DimensionError(DeoccludeError):
    """Operands have incompatible shapes."""


class EmptyTargetError(DeoccludeError):
    """An operation that needs a nonempty mask got an empty one."""


class SamplingExhaustedError(DeoccludeError):
    """A rejection-sampling loop ran out of attempts."""


class SceneSpecError(DeoccludeError):
    """A scene specification violates its invariants."""


class LookupError_(DeoccludeError):
    """Unknown object or node id."""


class TrainingDivergedError(DeoccludeError):
    """Loss became non-finite during training."""

    def __init__(self, iteration, message=None):
        self.iteration = iteration
        super().__init__(message or f"loss became non-finite at iteration {iteration}")


class NoBoundaryError(DeoccludeError):
    """A fill region has no known pixels to anchor it."""


class UndefinedMetricError(DeoccludeError):
    """A metric has an empty denominator (e.g. no occluded pairs)."""


class EditError(DeoccludeError):
    """An edit script step referenced a bad id or argument."""

    def __init__(self, index, message):
        self.index = index
        super().__init__(f"edit {index}: {message}")
