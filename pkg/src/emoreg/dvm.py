"""Direction vector modeling.

Training: one GMM per emotion, then for each target emotion the matrix of
all pairwise differences between its local means and Neutral's local
means, then a PCA of that matrix. Inference: the difference between a
reference and a source embedding is pushed through the target's PCA and
back, scaled by the requested intensity and added to the source.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import (
    DimensionMismatchError,
    DivergenceError,
    InsufficientDataError,
    IntensityRangeError,
    UnsupportedTransitionError,
    ValidationError,
)
from .gmm import GmmFitConfig, GmmModel, fit_gmm
from .labels import ALL_EMOTIONS, TARGET_EMOTIONS, Emotion
from .pca import PcaModel, fit_pca, pca_inverse, pca_transform
from .tensorio import EmbeddingSet


@dataclass(frozen=True, eq=False)
class DirectionMatrix:
    target: Emotion
    source: Emotion
    rows: np.ndarray  # (K_t * K_s, D); row k*K_s + j = mu_target[k] - mu_source[j]
    k_target: int
    k_source: int


@dataclass(frozen=True, eq=False)
class DvmModel:
    pcas: dict[Emotion, PcaModel]
    dim: int
    metadata: dict[str, Any] = field(default_factory=dict)
    gmms: dict[Emotion, GmmModel] = field(default_factory=dict)

    def __post_init__(self):
        for target, pca in self.pcas.items():
            if pca.dim != self.dim:
                raise DimensionMismatchError(f"{target} PCA has dim {pca.dim}, model dim {self.dim}")

    def pca_for(self, target: Emotion | str) -> PcaModel:
        target = Emotion.parse(target)
        if target is Emotion.NEUTRAL:
            raise UnsupportedTransitionError("target emotion must not be Neutral")
        try:
            return self.pcas[target]
        except KeyError:
            raise ValidationError(f"model has no PCA for target {target}") from None


@dataclass(frozen=True, eq=False)
class IntensityRequest:
    source: np.ndarray     # e_s
    reference: np.ndarray  # e_r
    target: Emotion
    intensity: float

    def __post_init__(self):
        object.__setattr__(self, "target", Emotion.parse(self.target))
        if self.target is Emotion.NEUTRAL:
            raise UnsupportedTransitionError("target emotion must not be Neutral")
        i = float(self.intensity)
        if not 0.0 <= i <= 1.0:
            raise IntensityRangeError(f"intensity must lie in [0, 1], got {self.intensity}")
        object.__setattr__(self, "intensity", i)
        src = np.asarray(self.source, dtype=np.float64)
        ref = np.asarray(self.reference, dtype=np.float64)
        if src.ndim != 1 or src.shape != ref.shape:
            raise DimensionMismatchError(f"source {src.shape} and reference {ref.shape} must be equal-length vectors")
        object.__setattr__(self, "source", src)
        object.__setattr__(self, "reference", ref)


def build_direction_matrix(gmm_source: GmmModel, gmm_target: GmmModel,
                           source: Emotion | str = Emotion.NEUTRAL,
                           target: Emotion | str = Emotion.ANGRY) -> DirectionMatrix:
    source, target = Emotion.parse(source), Emotion.parse(target)
    if source is not Emotion.NEUTRAL:
        raise UnsupportedTransitionError(
            f"only Neutral-source transitions are supported, got {source} -> {target}")
    if target is Emotion.NEUTRAL:
        raise UnsupportedTransitionError("target emotion must not be Neutral")
    mu_s, mu_t = gmm_source.means, gmm_target.means
    if mu_s.shape[1] != mu_t.shape[1]:
        raise DimensionMismatchError(f"source dim {mu_s.shape[1]} != target dim {mu_t.shape[1]}")
    rows = (mu_t[:, None, :] - mu_s[None, :, :]).reshape(-1, mu_s.shape[1])
    return DirectionMatrix(target, source, rows, mu_t.shape[0], mu_s.shape[0])


def emotion_seeds(base_seed: int) -> dict[Emotion, int]:
    return {e: base_seed + i for i, e in enumerate(ALL_EMOTIONS)}


def check_components(n_components: int, k: int, dim: int) -> None:
    limit = min(k * k, dim)
    if not 1 <= n_components <= limit:
        raise ValidationError(
            f"n_components={n_components} must lie in [1, {limit}] for k={k}, dim={dim}")


def fit_dvm(embeddings: EmbeddingSet, gmm_cfg: GmmFitConfig = GmmFitConfig(),
            n_components: int = 128) -> DvmModel:
    """GMM per emotion (seed ``gmm_cfg.seed + emotion index``), Neutral -> target
    direction matrices, one PCA per target."""
    check_components(n_components, gmm_cfg.k, embeddings.dim)
    counts = embeddings.counts()
    for e in ALL_EMOTIONS:
        if counts[e] == 0:
            raise ValidationError(f"embedding set has no {e} rows")
        if counts[e] < gmm_cfg.k:
            raise InsufficientDataError(f"{e} has {counts[e]} rows, fewer than k={gmm_cfg.k}")
    seeds = emotion_seeds(gmm_cfg.seed)
    gmms = {}
    for e in ALL_EMOTIONS:
        cfg = GmmFitConfig(k=gmm_cfg.k, max_iters=gmm_cfg.max_iters, rel_tol=gmm_cfg.rel_tol,
                           cov_floor=gmm_cfg.cov_floor, seed=seeds[e], init=gmm_cfg.init)
        try:
            gmms[e] = fit_gmm(embeddings.select(e), cfg)
        except DivergenceError as exc:
            raise DivergenceError(exc.iteration, f"{e.value} GMM: {exc}") from None
    pcas = {}
    for t in TARGET_EMOTIONS:
        dm = build_direction_matrix(gmms[Emotion.NEUTRAL], gmms[t], Emotion.NEUTRAL, t)
        pcas[t] = fit_pca(dm.rows, n_components)
    meta = {"gmm_k": gmm_cfg.k, "gmm_seeds": {e.value: s for e, s in seeds.items()},
            "n_components": n_components, "source": Emotion.NEUTRAL.value}
    return DvmModel(pcas=pcas, dim=embeddings.dim, metadata=meta, gmms=gmms)


def direction_vector(model: DvmModel, source: np.ndarray, reference: np.ndarray,
                     target: Emotion | str) -> np.ndarray:
    """e_d: the reference-minus-source difference projected onto the target's
    PCA subspace (centered, so this is an affine projection)."""
    pca = model.pca_for(target)
    d = np.asarray(reference, dtype=np.float64) - np.asarray(source, dtype=np.float64)
    return pca_inverse(pca, pca_transform(pca, d))


def regularize(model: DvmModel, req: IntensityRequest) -> np.ndarray:
    """e_ir = e_s + i * e_d."""
    if req.source.shape[0] != model.dim:
        raise DimensionMismatchError(f"embedding dim {req.source.shape[0]} != model dim {model.dim}")
    e_d = direction_vector(model, req.source, req.reference, req.target)
    if req.intensity == 0.0:
        # e_s + 0*e_d would turn -0.0 entries into +0.0
        return req.source.copy()
    return req.source + req.intensity * e_d


def global_direction(embeddings: EmbeddingSet, target: Emotion | str) -> np.ndarray:
    target = Emotion.parse(target)
    return embeddings.centroid(target) - embeddings.centroid(Emotion.NEUTRAL)


def regularize_global(embeddings: EmbeddingSet, req: IntensityRequest) -> np.ndarray:
    """No-DVM ablation: move along the global target-minus-Neutral mean direction."""
    if req.source.shape[0] != embeddings.dim:
        raise DimensionMismatchError(f"embedding dim {req.source.shape[0]} != set dim {embeddings.dim}")
    g = global_direction(embeddings, req.target)
    if req.intensity == 0.0:
        return req.source.copy()
    return req.source + req.intensity * g
