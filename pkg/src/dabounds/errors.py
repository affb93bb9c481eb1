"""Exception types raised across the package."""


class DABoundsError(Exception):
    """Base class for all package errors."""


class InvalidDistribution(DABoundsError, ValueError):
    pass


class InvalidFunction(DABoundsError, ValueError):
    pass


class UndefinedOnSupport(DABoundsError):
    """A function or map is evaluated where it has no value but the distribution has mass."""


class NonInvertibleSegment(DABoundsError):
    """Distinct preimages with conflicting labels land on the same representation mass."""


class AbsoluteContinuityViolation(DABoundsError):
    pass


class NonBinaryClass(DABoundsError):
    pass


class NonBinaryFunctions(DABoundsError):
    pass


class ClassTooLarge(DABoundsError):
    pass


class SampleTooLargeForExact(DABoundsError):
    pass


class InvalidConfidence(DABoundsError, ValueError):
    pass


class UnequalSampleSizes(DABoundsError, ValueError):
    pass


class InsufficientPoints(DABoundsError):
    pass


class DivergedTraining(DABoundsError):
    def __init__(self, epoch: int, message: str = "loss became non-finite"):
        super().__init__(f"{message} at epoch {epoch}")
        self.epoch = epoch


class ConfigError(DABoundsError):
    pass
