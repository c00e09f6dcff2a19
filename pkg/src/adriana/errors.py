"""Exception hierarchy.

Every error raised on bad input derives from ``ValidationError`` so the CLI
can map it to exit code 1; anything else that escapes is a runtime failure.
"""


class AdrianaError(Exception):
    """Base class for all package errors."""


class ValidationError(AdrianaError, ValueError):
    """Input violates a documented precondition."""


class RuntimeFailure(AdrianaError, RuntimeError):
    """A computation failed on otherwise valid input."""


# data_ingest
class EmptyDocument(ValidationError):
    pass


class MalformedHeader(ValidationError):
    pass


class RaggedRow(ValidationError):
    pass


class NonNumericCount(ValidationError):
    pass


class CountryNotFound(ValidationError):
    pass


class DateGap(ValidationError):
    pass


# stationarity
class SeriesTooShort(ValidationError):
    pass


class MissingSeeds(ValidationError):
    pass


class ConstantSeries(ValidationError):
    pass


class SingularRegression(RuntimeFailure):
    pass


class DegenerateRange(ValidationError):
    pass


class EmptyPartition(ValidationError):
    pass


class TooFewSamples(ValidationError):
    pass


# seir
class ZeroGamma(ValidationError):
    pass


class StepProducedNaN(RuntimeFailure):
    pass


# hospital_des
class UnsortedArrivals(ValidationError):
    pass


# surrogates
class NonFiniteLoss(RuntimeFailure):
    pass


class EmptyTrainingSet(ValidationError):
    pass


class NotANeuralSpec(ValidationError):
    pass


class SingularDesign(ValidationError):
    pass


class HorizonTooLarge(ValidationError):
    pass


class WindowSizeMismatch(ValidationError):
    pass


class InvalidSpec(ValidationError):
    pass


# ga_optimizer / metrics
class LengthMismatch(ValidationError):
    pass


class ConstantActuals(ValidationError):
    pass


class MixedScales(ValidationError):
    pass


# pipeline
class IncompleteRun(ValidationError):
    pass


class StageError(RuntimeFailure):
    """Wraps a failure inside a pipeline stage; carries the stage name and partial manifest."""

    def __init__(self, stage, cause, manifest=None):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
        self.manifest = manifest
