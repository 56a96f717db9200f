"""Linear noise schedule and the closed-form marginals of the forward SDE

    dX_t = 0.5 * beta_t * (Xbar - X_t) dt + sqrt(beta_t) dW_t,

whose solution from X_0 is Gaussian with mean Xbar + (X_0 - Xbar) * rho(t)
and isotropic variance 1 - rho(t)^2, rho(t) = exp(-0.5 * int_0^t beta_u du).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatchError, SingularityError, ValidationError

T_FLOOR = 1e-5
DEFAULT_T_MIN = 1e-3


@dataclass(frozen=True)
class NoiseSchedule:
    beta0: float = 0.05
    beta1: float = 20.0

    def __post_init__(self):
        if not 0 < self.beta0 <= self.beta1:
            raise ValidationError(f"need 0 < beta0 <= beta1, got beta0={self.beta0}, beta1={self.beta1}")


def _check_t(t: float) -> float:
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise ValidationError(f"diffusion time must lie in [0, 1], got {t}")
    return t


def noise_at(s: NoiseSchedule, t: float) -> float:
    """beta_t = beta0 + t * (beta1 - beta0)."""
    t = _check_t(t)
    return s.beta0 + t * (s.beta1 - s.beta0)


def noise_integral(s: NoiseSchedule, t: float) -> float:
    """int_0^t beta_u du = beta0*t + (beta1 - beta0)*t^2/2."""
    t = _check_t(t)
    return s.beta0 * t + 0.5 * (s.beta1 - s.beta0) * t * t


def mean_coefficient(s: NoiseSchedule, t: float) -> float:
    """rho(t), the weight that X_0 retains in the forward mean."""
    return math.exp(-0.5 * noise_integral(s, t))


def marginal_variance(s: NoiseSchedule, t: float) -> float:
    # 1 - exp(-I) without cancellation for small I
    return -math.expm1(-noise_integral(s, t))


def forward_marginal(x0, xbar, t: float, s: NoiseSchedule = NoiseSchedule()) -> tuple[np.ndarray, float]:
    x0 = np.asarray(x0, dtype=np.float64)
    xbar = np.asarray(xbar, dtype=np.float64)
    if x0.shape != xbar.shape:
        raise DimensionMismatchError(f"X0 {x0.shape} and Xbar {xbar.shape} differ in shape")
    rho = mean_coefficient(s, t)
    return xbar + (x0 - xbar) * rho, marginal_variance(s, t)


def sample_forward(x0, xbar, t: float, s: NoiseSchedule = NoiseSchedule(),
                   seed: int | np.random.Generator | None = None) -> np.ndarray:
    mean, var = forward_marginal(x0, xbar, t, s)
    if var == 0.0:
        return mean
    rng = np.random.default_rng(seed)
    return mean + math.sqrt(var) * rng.standard_normal(mean.shape)


def oracle_score(x_t, x0, xbar, t: float, s: NoiseSchedule = NoiseSchedule()) -> np.ndarray:
    """grad log p_t(x_t | Xbar) when the data distribution is a point mass at x0."""
    if float(t) <= T_FLOOR:
        raise SingularityError(f"oracle score is singular for t <= {T_FLOOR}, got t={t}")
    mean, var = forward_marginal(x0, xbar, t, s)
    x_t = np.asarray(x_t, dtype=np.float64)
    if x_t.shape != mean.shape:
        raise DimensionMismatchError(f"X_t {x_t.shape} does not match X0 {mean.shape}")
    return -(x_t - mean) / var


def oracle_score_fn(x0, s: NoiseSchedule = NoiseSchedule()):
    """Wrap :func:`oracle_score` in the ``(x_t, xbar, t, cond)`` score contract."""
    x0 = np.asarray(x0, dtype=np.float64)

    def score(x_t, xbar, t, cond=None):
        return oracle_score(x_t, x0, xbar, t, s)

    return score
