"""Exception taxonomy shared by all pipeline stages."""


class BiokeyError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(BiokeyError):
    """Input data violates an operation's precondition."""


class InvalidParameterError(BiokeyError):
    """A tunable parameter is outside its valid range."""


class LocalizationError(BiokeyError):
    """Pupil or iris boundary could not be located."""


class InsufficientFeaturesError(BiokeyError):
    """Feature extraction produced no usable features."""


class StageFailure(BiokeyError):
    """A pipeline stage failed; carries the stage name and the original cause."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}': {cause}")
        self.stage = stage
        self.cause = cause
