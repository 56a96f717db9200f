"""Seeded synthetic corpora: labeled emotion embeddings and phoneme-aligned
Mel-like sequences with planted structure."""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import Any, Sequence

import numpy as np

from .errors import ValidationError
from .labels import ALL_EMOTIONS, TARGET_EMOTIONS, Emotion
from .melproc import PhonemeAlignment, Segment
from .tensorio import EmbeddingSet

MEL_CHANNELS = 80


@dataclass(frozen=True)
class SynthConfig:
    dim: int = 256
    clusters_per_emotion: int = 4
    samples_per_emotion: int = 500
    separation: float = 6.0
    stddev: float = 0.5
    # norm of the offset between each cluster center and its emotion center
    cluster_spread: float = 1.5
    # Neutral anchor: anchor_norm * (random unit vector); 0 puts it at the origin
    anchor_norm: float = 12.0
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.dim < 2:
            raise ValidationError(f"dim must be >= 2, got {self.dim}")
        if self.clusters_per_emotion < 1:
            raise ValidationError(f"clusters_per_emotion must be >= 1, got {self.clusters_per_emotion}")
        if self.samples_per_emotion < self.clusters_per_emotion:
            raise ValidationError(
                f"samples_per_emotion ({self.samples_per_emotion}) must be >= "
                f"clusters_per_emotion ({self.clusters_per_emotion})")
        if not self.separation > 0:
            raise ValidationError(f"separation must be > 0, got {self.separation}")
        if not self.stddev > 0:
            raise ValidationError(f"stddev must be > 0, got {self.stddev}")
        if self.cluster_spread < 0:
            raise ValidationError(f"cluster_spread must be >= 0, got {self.cluster_spread}")
        if self.anchor_norm < 0:
            raise ValidationError(f"anchor_norm must be >= 0, got {self.anchor_norm}")
        if not 0 <= self.seed < 2**64:
            raise ValidationError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.dim < len(TARGET_EMOTIONS) + 1 and self.anchor_norm > 0:
            raise ValidationError(f"dim must be >= {len(TARGET_EMOTIONS) + 1} with a nonzero anchor")

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> SynthConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValidationError(f"unknown synth config fields {sorted(unknown)}")
        try:
            return cls(**raw)
        except TypeError as exc:
            raise ValidationError(str(exc)) from exc

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class PlantedGeometry:
    """Generator ground truth returned alongside the sampled set."""
    anchor: np.ndarray                      # Neutral emotion center
    directions: dict[Emotion, np.ndarray]   # unit vector per target emotion
    centers: dict[Emotion, np.ndarray]      # (clusters, dim) planted cluster centers


def _orthonormal_frame(rng: np.random.Generator, dim: int, count: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((dim, count)))
    return (q * np.sign(np.diag(r))).T  # rows orthonormal


def _cluster_sizes(n: int, k: int) -> np.ndarray:
    sizes = np.full(k, n // k)
    sizes[: n % k] += 1
    return sizes


def _sample_clusters(rng, centers: np.ndarray, n: int, stddev: float) -> np.ndarray:
    sizes = _cluster_sizes(n, centers.shape[0])
    blocks = [c + stddev * rng.standard_normal((s, centers.shape[1]))
              for c, s in zip(centers, sizes)]
    return np.concatenate(blocks, axis=0)


def _neutral_layout(cfg: SynthConfig, rng) -> tuple[np.ndarray, dict, np.ndarray]:
    frame = _orthonormal_frame(rng, cfg.dim, len(TARGET_EMOTIONS) + 1)
    anchor = cfg.anchor_norm * frame[0]
    directions = {e: frame[i + 1] for i, e in enumerate(TARGET_EMOTIONS)}
    offsets = rng.standard_normal((cfg.clusters_per_emotion, cfg.dim))
    offsets *= cfg.cluster_spread / np.linalg.norm(offsets, axis=1, keepdims=True)
    return anchor, directions, offsets


def _assemble(cfg: SynthConfig, rng, centers: dict[Emotion, np.ndarray]) -> EmbeddingSet:
    rows, labels = [], []
    for emotion in ALL_EMOTIONS:
        rows.append(_sample_clusters(rng, centers[emotion], cfg.samples_per_emotion, cfg.stddev))
        labels.extend([emotion] * cfg.samples_per_emotion)
    return EmbeddingSet(np.concatenate(rows, axis=0), tuple(labels))


def generate_embeddings_with_truth(cfg: SynthConfig) -> tuple[EmbeddingSet, PlantedGeometry]:
    rng = np.random.default_rng(cfg.seed)
    anchor, directions, _ = _neutral_layout(cfg, rng)
    centers = {}
    for emotion in ALL_EMOTIONS:
        center = anchor if emotion is Emotion.NEUTRAL else anchor + cfg.separation * directions[emotion]
        offsets = rng.standard_normal((cfg.clusters_per_emotion, cfg.dim))
        offsets *= cfg.cluster_spread / np.linalg.norm(offsets, axis=1, keepdims=True)
        centers[emotion] = center + offsets
    return _assemble(cfg, rng, centers), PlantedGeometry(anchor, directions, centers)


def generate_embeddings(cfg: SynthConfig) -> EmbeddingSet:
    """Four emotion blobs of ``clusters_per_emotion`` isotropic Gaussians each.

    Target emotion centers sit at ``separation`` from the Neutral anchor along
    mutually orthogonal directions that are also orthogonal to the anchor.
    """
    return generate_embeddings_with_truth(cfg)[0]


def generate_planted_direction(cfg: SynthConfig,
                               shifts: Sequence[float] | None = None) -> tuple[EmbeddingSet, PlantedGeometry]:
    """Every target cluster k is Neutral cluster k shifted by ``shifts[k] * u``.

    ``u`` is a fixed unit vector per target emotion. Shifts default to an even
    spread over ``[separation/3, 7*separation/3]`` so that the spread of the
    target local means along ``u`` dominates every other direction of the
    direction matrix.
    """
    k = cfg.clusters_per_emotion
    if shifts is None:
        shifts = np.linspace(cfg.separation / 3, 7 * cfg.separation / 3, k)
    shifts = np.asarray(shifts, dtype=np.float64)
    if shifts.shape != (k,):
        raise ValidationError(f"need {k} shifts, got {shifts.shape}")
    rng = np.random.default_rng(cfg.seed)
    anchor, directions, offsets = _neutral_layout(cfg, rng)
    neutral = anchor + offsets
    centers = {Emotion.NEUTRAL: neutral}
    for emotion in TARGET_EMOTIONS:
        centers[emotion] = neutral + shifts[:, None] * directions[emotion]
    return _assemble(cfg, rng, centers), PlantedGeometry(anchor, directions, centers)


# --------------------------------------------------------------------------
# Mel corpora


def generate_mel_corpus(seed: int, utterances: int, frames: tuple[int, int], inventory: int,
                        noise: float = 0.1, channels: int = MEL_CHANNELS,
                        segment_frames: tuple[int, int] = (3, 12),
                        return_prototypes: bool = False):
    """Toy phoneme-aligned Mel corpus.

    Each utterance has a length drawn from the inclusive ``frames`` range and
    is cut into contiguous segments of random phonemes ``P0..P{inventory-1}``.
    Every frame is its phoneme's prototype plus ``noise`` * N(0, 1).
    """
    lo, hi = frames
    if utterances < 1:
        raise ValidationError(f"utterances must be >= 1, got {utterances}")
    if not 1 <= lo <= hi:
        raise ValidationError(f"frames range must satisfy 1 <= lo <= hi, got {frames}")
    if inventory < 1:
        raise ValidationError(f"phoneme inventory must be >= 1, got {inventory}")
    if noise < 0:
        raise ValidationError(f"noise must be >= 0, got {noise}")
    smin, smax = segment_frames
    if not 1 <= smin <= smax:
        raise ValidationError(f"segment_frames must satisfy 1 <= lo <= hi, got {segment_frames}")

    rng = np.random.default_rng(seed)
    # log-Mel-like magnitudes
    prototypes = rng.normal(-4.0, 2.0, size=(inventory, channels))
    names = [f"P{i}" for i in range(inventory)]
    corpus = []
    for _ in range(utterances):
        T = int(rng.integers(lo, hi + 1))
        segments, start = [], 0
        while start < T:
            length = min(int(rng.integers(smin, smax + 1)), T - start)
            segments.append(Segment(names[int(rng.integers(inventory))], start, start + length))
            start += length
        ids = np.empty(T, dtype=np.int64)
        for seg in segments:
            ids[seg.start:seg.end] = int(seg.phoneme[1:])
        mel = prototypes[ids]
        if noise > 0:
            mel = mel + noise * rng.standard_normal(mel.shape)
        corpus.append((mel, PhonemeAlignment(tuple(segments))))
    if return_prototypes:
        return corpus, dict(zip(names, prototypes))
    return corpus
