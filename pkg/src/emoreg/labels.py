from __future__ import annotations

import enum

from .errors import LabelError


class Emotion(str, enum.Enum):
    NEUTRAL = "Neutral"
    HAPPY = "Happy"
    SAD = "Sad"
    ANGRY = "Angry"

    @classmethod
    def parse(cls, value: str | Emotion) -> Emotion:
        if isinstance(value, Emotion):
            return value
        for member in cls:
            if member.value == value:
                return member
        raise LabelError(f"unknown emotion label {value!r}; expected one of "
                         f"{[m.value for m in cls]}")

    def __str__(self) -> str:
        return self.value


ALL_EMOTIONS = (Emotion.NEUTRAL, Emotion.ANGRY, Emotion.HAPPY, Emotion.SAD)
TARGET_EMOTIONS = (Emotion.ANGRY, Emotion.HAPPY, Emotion.SAD)
