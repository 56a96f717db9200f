"""Euler-Maruyama integration of the reverse-time SDE."""
from __future__ import annotations

import math
from typing import Callable, Optional

import numpy as np

from ..errors import DimensionMismatchError, NonFiniteStateError, ValidationError
from .schedule import DEFAULT_T_MIN, NoiseSchedule, noise_at

# (x_t, xbar, t, condition) -> score estimate shaped like x_t
ScoreFunction = Callable[[np.ndarray, np.ndarray, float, Optional[np.ndarray]], np.ndarray]


def reverse_solve(x_T, xbar, score: ScoreFunction, s: NoiseSchedule = NoiseSchedule(),
                  n_steps: int = 100, t_min: float = DEFAULT_T_MIN,
                  seed: int | np.random.Generator | None = 0,
                  condition: np.ndarray | None = None) -> np.ndarray:
    """Integrate from t=1 down to t_min on a uniform grid of ``n_steps`` steps.

    Each step evaluates drift and score at the current (later) time t_k:

        X <- X - h * [0.5*beta(Xbar - X) - beta*score] + sqrt(beta*h) * z
    """
    if n_steps < 1:
        raise ValidationError(f"n_steps must be >= 1, got {n_steps}")
    if not 0.0 < t_min < 1.0:
        raise ValidationError(f"t_min must lie in (0, 1), got {t_min}")
    x = np.array(x_T, dtype=np.float64)
    xbar = np.asarray(xbar, dtype=np.float64)
    if x.shape != xbar.shape:
        raise DimensionMismatchError(f"X_T {x.shape} and Xbar {xbar.shape} differ in shape")
    rng = np.random.default_rng(seed)
    h = (1.0 - t_min) / n_steps
    for k in range(n_steps):
        t = 1.0 - k * h
        beta = noise_at(s, t)
        sc = np.asarray(score(x, xbar, t, condition), dtype=np.float64)
        if sc.shape != x.shape:
            raise DimensionMismatchError(f"score returned shape {sc.shape}, expected {x.shape}")
        if not np.all(np.isfinite(sc)):
            raise NonFiniteStateError(k, f"score returned non-finite values at step {k} (t={t:.6g})")
        with np.errstate(over="ignore", invalid="ignore"):  # caught just below
            x = x - h * (0.5 * beta * (xbar - x) - beta * sc) + math.sqrt(beta * h) * rng.standard_normal(x.shape)
        if not np.all(np.isfinite(x)):
            raise NonFiniteStateError(k, f"state became non-finite at step {k} (t={t:.6g})")
    return x


def reverse_solve_paths(n_paths: int, xbar, score: ScoreFunction, s: NoiseSchedule = NoiseSchedule(),
                        n_steps: int = 100, t_min: float = DEFAULT_T_MIN, seed: int = 0,
                        condition: np.ndarray | None = None) -> np.ndarray:
    """Independent paths started from X_T ~ N(Xbar, I); path p uses seed + p.

    Returns an array of shape ``(n_paths, *xbar.shape)``.
    """
    xbar = np.asarray(xbar, dtype=np.float64)
    out = np.empty((n_paths,) + xbar.shape)
    for p in range(n_paths):
        rng = np.random.default_rng(seed + p)
        x_T = xbar + rng.standard_normal(xbar.shape)
        out[p] = reverse_solve(x_T, xbar, score, s, n_steps, t_min, rng, condition)
    return out
