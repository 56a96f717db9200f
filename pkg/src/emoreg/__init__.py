"""Emotion-intensity regularization: direction-vector modeling over emotion
embeddings and a mean-reverting diffusion SDE over Mel-like sequences."""

__version__ = "0.1.0"

from .errors import EmoRegError, NumericalError, ValidationError
from .labels import ALL_EMOTIONS, TARGET_EMOTIONS, Emotion

__all__ = [
    "ALL_EMOTIONS",
    "TARGET_EMOTIONS",
    "EmoRegError",
    "Emotion",
    "NumericalError",
    "ValidationError",
    "__version__",
]
