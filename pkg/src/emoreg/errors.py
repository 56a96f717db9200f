"""Exception hierarchy.

``ValidationError`` subclasses map to CLI exit code 2, ``NumericalError``
subclasses to exit code 3.
"""


class EmoRegError(Exception):
    pass


class ValidationError(EmoRegError, ValueError):
    pass


class NumericalError(EmoRegError, ArithmeticError):
    pass


# tensorio
class BadMagicError(ValidationError):
    pass


class TruncatedError(ValidationError):
    pass


class NonFiniteError(ValidationError):
    pass


class ManifestError(ValidationError):
    pass


class LabelError(ValidationError):
    pass


class LengthMismatchError(ValidationError):
    pass


class DimensionMismatchError(ValidationError):
    pass


# gmm / dvm
class InsufficientDataError(ValidationError):
    pass


class DivergenceError(NumericalError):
    """EM produced a non-finite log-likelihood."""

    def __init__(self, iteration: int, message: str):
        self.iteration = iteration
        super().__init__(message)


class UnsupportedTransitionError(ValidationError):
    pass


class IntensityRangeError(ValidationError):
    pass


# diffusion
class SingularityError(ValidationError):
    pass


class NonFiniteStateError(NumericalError):
    def __init__(self, step: int, message: str | None = None):
        self.step = step
        super().__init__(message or f"non-finite state at reverse step {step}")


# melproc
class AlignmentError(ValidationError):
    pass


class MissingPhonemeError(ValidationError):
    def __init__(self, phoneme: str):
        self.phoneme = phoneme
        super().__init__(f"phoneme {phoneme!r} not present in table")


# metrics
class UndefinedSimilarityError(ValidationError):
    pass
