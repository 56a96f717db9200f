"""Cosine emotion similarity and intensity-sweep monotonicity reports.

At desk scale the similarity anchor is a synthetic target-emotion centroid,
not the embedding of a pretrained emotion classifier; only the form of the
metric (cosine) is kept.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from .dvm import DvmModel, IntensityRequest, direction_vector, regularize
from .errors import UndefinedSimilarityError, ValidationError
from .labels import Emotion

MONOTONE_SLACK = 1e-9


def cosine_similarity(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise UndefinedSimilarityError("cosine similarity is undefined for a zero vector")
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


@dataclass
class MonotonicityReport:
    grid: list[float]
    similarities: list[float]
    spearman: float
    monotone: bool
    degenerate: bool = False

    def to_json(self) -> dict:
        return asdict(self)


def validate_grid(grid: Sequence[float]) -> list[float]:
    grid = [float(g) for g in grid]
    if not grid:
        raise ValidationError("intensity grid is empty")
    if any(not 0.0 <= g <= 1.0 for g in grid):
        raise ValidationError(f"intensity grid must lie within [0, 1]: {grid}")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValidationError(f"intensity grid must be strictly ascending: {grid}")
    return grid


def monotonicity_report(grid: Sequence[float], similarities: Sequence[float]) -> MonotonicityReport:
    grid = list(map(float, grid))
    sims = list(map(float, similarities))
    monotone = all(b >= a - MONOTONE_SLACK for a, b in zip(sims, sims[1:]))
    degenerate = len(sims) < 2 or max(sims) - min(sims) <= MONOTONE_SLACK
    if degenerate:
        rho = 0.0
    else:
        rho = float(stats.spearmanr(grid, sims).statistic)
        if math.isnan(rho):
            rho, degenerate = 0.0, True
    return MonotonicityReport(grid, sims, rho, monotone, degenerate)


def sweep_along(source: np.ndarray, direction: np.ndarray, anchor: np.ndarray,
                grid: Sequence[float]) -> MonotonicityReport:
    """Similarity of ``source + i * direction`` to *anchor* for each i."""
    grid = validate_grid(grid)
    sims = [cosine_similarity(source + i * direction, anchor) for i in grid]
    return monotonicity_report(grid, sims)


def intensity_sweep(model: DvmModel, e_s, e_r, target: Emotion | str, grid: Sequence[float],
                    anchor) -> MonotonicityReport:
    grid = validate_grid(grid)
    sims = [cosine_similarity(regularize(model, IntensityRequest(e_s, e_r, target, i)), anchor)
            for i in grid]
    return monotonicity_report(grid, sims)


def random_direction_trials(source: np.ndarray, direction: np.ndarray, anchor: np.ndarray,
                            grid: Sequence[float], n_trials: int = 100,
                            seed: int = 0) -> list[MonotonicityReport]:
    """Controls: *direction* replaced by an isotropic random vector of equal norm.

    Trial ``n`` draws from ``default_rng(seed + n)``.
    """
    source = np.asarray(source, dtype=np.float64)
    norm = float(np.linalg.norm(direction))
    reports = []
    for n in range(n_trials):
        r = np.random.default_rng(seed + n).standard_normal(source.shape[0])
        r *= norm / np.linalg.norm(r)
        reports.append(sweep_along(source, r, anchor, grid))
    return reports


def monotone_fraction(reports: Sequence[MonotonicityReport]) -> float:
    return sum(r.monotone for r in reports) / len(reports)


def dvm_direction(model: DvmModel, e_s, e_r, target) -> np.ndarray:
    return direction_vector(model, e_s, e_r, target)
