"""Average-voice construction.

Per-phoneme average Mel frames are pooled over a whole corpus; substituting
them frame by frame turns a Mel sequence into its average-voice target.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

from .errors import AlignmentError, DimensionMismatchError, MissingPhonemeError, NonFiniteError


class Segment(NamedTuple):
    phoneme: str
    start: int  # inclusive frame index
    end: int    # exclusive frame index


@dataclass(frozen=True)
class PhonemeAlignment:
    segments: tuple[Segment, ...]

    @property
    def n_frames(self) -> int:
        return self.segments[-1].end if self.segments else 0

    def validate(self, n_frames: int | None = None) -> None:
        if not self.segments:
            raise AlignmentError("alignment has no segments")
        expected = 0
        for seg in self.segments:
            if seg.start >= seg.end:
                raise AlignmentError(f"empty or reversed segment {tuple(seg)}")
            if seg.start < expected:
                raise AlignmentError(f"segment {tuple(seg)} overlaps previous segment ending at {expected}")
            if seg.start > expected:
                raise AlignmentError(f"gap between frame {expected} and segment {tuple(seg)}")
            expected = seg.end
        if n_frames is not None and expected != n_frames:
            kind = "out of bounds" if expected > n_frames else "does not cover"
            raise AlignmentError(f"alignment {kind} sequence: ends at {expected}, sequence has {n_frames} frames")

    def frame_ids(self) -> list[str]:
        out = []
        for seg in self.segments:
            out.extend([seg.phoneme] * (seg.end - seg.start))
        return out

    def to_json(self) -> list[list]:
        return [[s.phoneme, s.start, s.end] for s in self.segments]

    @classmethod
    def from_json(cls, raw) -> PhonemeAlignment:
        try:
            segs = tuple(Segment(str(p), int(s), int(e)) for p, s, e in raw)
        except (TypeError, ValueError) as exc:
            raise AlignmentError(f"alignment must be a list of [phoneme, start, end]: {exc}") from exc
        return cls(segs)


def load_alignment(path) -> PhonemeAlignment:
    return PhonemeAlignment.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def save_alignment(align: PhonemeAlignment, path) -> None:
    Path(path).write_text(json.dumps(align.to_json()) + "\n", encoding="utf-8")


@dataclass(frozen=True, eq=False)
class PhonemeTable:
    phonemes: tuple[str, ...]
    averages: np.ndarray        # (n_phonemes, channels)
    counts: tuple[int, ...]

    def __post_init__(self):
        if len(self.phonemes) != self.averages.shape[0] or len(self.counts) != len(self.phonemes):
            raise DimensionMismatchError("phoneme table fields disagree in length")
        if not np.all(np.isfinite(self.averages)):
            raise NonFiniteError("phoneme table contains non-finite averages")
        if any(c <= 0 for c in self.counts):
            raise AlignmentError("phoneme counts must be positive")

    @property
    def channels(self) -> int:
        return self.averages.shape[1]

    def index(self) -> dict[str, int]:
        return {p: i for i, p in enumerate(self.phonemes)}

    def __getitem__(self, phoneme: str) -> np.ndarray:
        try:
            return self.averages[self.index()[phoneme]]
        except KeyError:
            raise MissingPhonemeError(phoneme) from None


def _exact_mean(values: np.ndarray) -> float:
    """Mean with an exact sum and a corrected division (correctly rounded
    except in astronomically rare midpoint cases)."""
    n = values.shape[0]
    m = math.fsum(values) / n
    # TwoSum split: s + err == v - m exactly for every element
    s = values - m
    bb = s - values
    err = (values - (s - bb)) + (-m - bb)
    r = math.fsum(np.concatenate([s, err]))
    return m + r / n


def build_phoneme_table(corpus: Iterable[tuple[np.ndarray, PhonemeAlignment]]) -> PhonemeTable:
    """Mean of all frames assigned to each phoneme across *corpus*.

    Sums are exact (``math.fsum``), so the result does not depend on corpus
    order. Phonemes are listed in first-occurrence order.
    """
    buckets: dict[str, list[np.ndarray]] = {}
    channels = None
    for n, (mel, align) in enumerate(corpus):
        mel = np.asarray(mel, dtype=np.float64)
        if mel.ndim != 2:
            raise DimensionMismatchError(f"utterance {n}: Mel sequence must be 2-D, got {mel.shape}")
        if channels is None:
            channels = mel.shape[1]
        elif mel.shape[1] != channels:
            raise DimensionMismatchError(f"utterance {n}: {mel.shape[1]} channels, expected {channels}")
        try:
            align.validate(mel.shape[0])
        except AlignmentError as exc:
            raise AlignmentError(f"utterance {n}: {exc}") from None
        for seg in align.segments:
            buckets.setdefault(seg.phoneme, []).append(mel[seg.start:seg.end])
    if channels is None:
        raise AlignmentError("empty corpus")
    phonemes = tuple(buckets)
    averages = np.empty((len(phonemes), channels))
    counts = []
    for i, p in enumerate(phonemes):
        frames = np.concatenate(buckets[p], axis=0)
        counts.append(frames.shape[0])
        averages[i] = [_exact_mean(frames[:, c]) for c in range(channels)]
    return PhonemeTable(phonemes, averages, tuple(counts))


def substitute_average(mel: np.ndarray, align: PhonemeAlignment, table: PhonemeTable) -> np.ndarray:
    """Replace every frame with its phoneme's table average (shape preserved)."""
    mel = np.asarray(mel)
    if mel.ndim != 2:
        raise DimensionMismatchError(f"Mel sequence must be 2-D, got {mel.shape}")
    if mel.shape[1] != table.channels:
        raise DimensionMismatchError(f"Mel has {mel.shape[1]} channels, table has {table.channels}")
    align.validate(mel.shape[0])
    index = table.index()
    out = np.empty(mel.shape, dtype=np.float64)
    for seg in align.segments:
        if seg.phoneme not in index:
            raise MissingPhonemeError(seg.phoneme)
        out[seg.start:seg.end] = table.averages[index[seg.phoneme]]
    return out
