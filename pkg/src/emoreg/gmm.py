"""Diagonal-covariance Gaussian mixtures fitted by EM.

The component means are the "local mean vectors" of one emotion's
embedding distribution.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatchError,
    DivergenceError,
    InsufficientDataError,
    NonFiniteError,
    ValidationError,
)

log = logging.getLogger(__name__)

_LOG_2PI = math.log(2.0 * math.pi)
# rows per E-step chunk; statistics are reduced in ascending chunk order
CHUNK_ROWS = 2048


@dataclass(frozen=True)
class GmmFitConfig:
    k: int = 64
    max_iters: int = 200
    rel_tol: float = 1e-6
    cov_floor: float = 1e-6
    seed: int = 0
    init: str = "kmeans++"

    def __post_init__(self):
        if self.k < 1:
            raise ValidationError(f"k must be >= 1, got {self.k}")
        if self.max_iters < 1:
            raise ValidationError(f"max_iters must be >= 1, got {self.max_iters}")
        if not self.rel_tol > 0 or not self.cov_floor > 0:
            raise ValidationError("rel_tol and cov_floor must be > 0")
        if self.init != "kmeans++":
            raise ValidationError(f"unsupported init {self.init!r}")


@dataclass(frozen=True, eq=False)
class GmmModel:
    weights: np.ndarray        # (K,)
    means: np.ndarray          # (K, D)
    covariances: np.ndarray    # (K, D) diagonal variances
    log_likelihood_trace: tuple[float, ...] = ()
    seed: int = 0
    n_iter: int = 0
    converged: bool = False
    reseeds: tuple[tuple[int, int], ...] = field(default=())  # (iteration, component)

    @property
    def k(self) -> int:
        return self.means.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    @property
    def final_log_likelihood(self) -> float:
        return self.log_likelihood_trace[-1] if self.log_likelihood_trace else float("nan")


def _component_log_density(x: np.ndarray, means: np.ndarray, variances: np.ndarray) -> np.ndarray:
    """(N, K) matrix of log N(x_n | mu_k, diag(var_k))."""
    precision = 1.0 / variances
    const = -0.5 * (means.shape[1] * _LOG_2PI + np.log(variances).sum(axis=1))
    out = np.empty((x.shape[0], means.shape[0]))
    for k in range(means.shape[0]):
        diff = x - means[k]
        out[:, k] = (diff * diff) @ precision[k]
    return const - 0.5 * out


def _log_joint(x, weights, means, variances):
    with np.errstate(divide="ignore"):
        log_w = np.log(weights)
    return _component_log_density(x, means, variances) + log_w


def _logsumexp_rows(a: np.ndarray) -> np.ndarray:
    m = a.max(axis=1, keepdims=True)
    m[~np.isfinite(m)] = 0.0
    return (m + np.log(np.exp(a - m).sum(axis=1, keepdims=True)))[:, 0]


def _e_step(x, weights, means, variances):
    """Sufficient statistics, accumulated chunk by chunk in fixed order.

    Returns (total log-likelihood, Nk, sum_x, sum_xx, per-row log density).
    """
    K, D = means.shape
    total = 0.0
    nk = np.zeros(K)
    sx = np.zeros((K, D))
    sxx = np.zeros((K, D))
    row_ll = np.empty(x.shape[0])
    for lo in range(0, x.shape[0], CHUNK_ROWS):
        xc = x[lo:lo + CHUNK_ROWS]
        lj = _log_joint(xc, weights, means, variances)
        lse = _logsumexp_rows(lj)
        resp = np.exp(lj - lse[:, None])
        row_ll[lo:lo + CHUNK_ROWS] = lse
        total += math.fsum(lse)
        nk += resp.sum(axis=0)
        sx += resp.T @ xc
        sxx += resp.T @ (xc * xc)
    return total, nk, sx, sxx, row_ll


def responsibilities(model: GmmModel, data: np.ndarray) -> np.ndarray:
    data = _check_data(model, data)
    lj = _log_joint(data, model.weights, model.means, model.covariances)
    return np.exp(lj - _logsumexp_rows(lj)[:, None])


def _canonical_order(x: np.ndarray) -> np.ndarray:
    # lexicographic row order, so seeding ignores the caller's row order
    return np.lexsort(x.T[::-1])


def kmeans_plusplus(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Indices of k seeds chosen by D^2 sampling.

    The cumulative-sum inversion never lands on a zero-mass row, and equal
    candidates resolve to the lowest row index.
    """
    n = x.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = ((x - x[chosen[0]]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            # all remaining points coincide with a center; take the first unused
            used = set(chosen)
            idx = next(i for i in range(n) if i not in used)
        else:
            cdf = np.cumsum(d2)
            idx = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
            idx = min(idx, n - 1)
        chosen.append(idx)
        d2 = np.minimum(d2, ((x - x[idx]) ** 2).sum(axis=1))
    return np.asarray(chosen)


def fit_gmm(data: np.ndarray, cfg: GmmFitConfig = GmmFitConfig()) -> GmmModel:
    """EM for a K-component diagonal GMM.

    The trace holds the mean per-sample log-likelihood evaluated at the start
    of every iteration plus one final entry for the returned parameters.
    Iteration stops once the relative improvement drops below ``rel_tol``.
    """
    x = np.asarray(data, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionMismatchError(f"data must be 2-D, got {x.shape}")
    n, d = x.shape
    if n == 0:
        raise InsufficientDataError("empty data")
    if n < cfg.k:
        raise InsufficientDataError(f"need at least k={cfg.k} rows, got {n}")
    if not np.all(np.isfinite(x)):
        raise NonFiniteError("data contains NaN or Inf")

    rng = np.random.default_rng(cfg.seed)
    # EM on centered data limits cancellation in E[x^2] - mu^2
    shift = x.mean(axis=0)
    x = x - shift
    order = _canonical_order(x)
    seeds = order[kmeans_plusplus(x[order], cfg.k, rng)]
    global_var = np.maximum(x.var(axis=0), cfg.cov_floor)

    means = x[seeds].copy()
    variances = np.tile(global_var, (cfg.k, 1))
    weights = np.full(cfg.k, 1.0 / cfg.k)

    trace: list[float] = []
    reseeds: list[tuple[int, int]] = []
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        total, nk, sx, sxx, row_ll = _e_step(x, weights, means, variances)
        ll = total / n
        if not math.isfinite(ll):
            raise DivergenceError(it, f"log-likelihood became non-finite at iteration {it}")
        if trace and abs(ll - trace[-1]) < cfg.rel_tol * abs(trace[-1]):
            trace.append(ll)
            converged = True
            break
        trace.append(ll)

        # M-step
        weights = nk / n
        safe = np.maximum(nk, np.finfo(float).tiny)[:, None]
        means = sx / safe
        variances = np.maximum(sxx / safe - means * means, cfg.cov_floor)

        dead = np.flatnonzero(nk < 1e-10 * n)
        if dead.size:
            worst = np.argsort(row_ll, kind="stable")
            for j, comp in enumerate(dead):
                idx = int(worst[j % n])
                log.warning("gmm: component %d underflowed at iteration %d; re-seeded at row %d",
                            comp, it, idx)
                reseeds.append((it, int(comp)))
                means[comp] = x[idx]
                variances[comp] = global_var
                weights[comp] = 1.0 / n
            weights = weights / weights.sum()

    if not converged:
        total, *_ = _e_step(x, weights, means, variances)
        trace.append(total / n)

    return GmmModel(weights=weights, means=means + shift, covariances=variances,
                    log_likelihood_trace=tuple(trace), seed=cfg.seed, n_iter=it,
                    converged=converged, reseeds=tuple(reseeds))


def local_means(model: GmmModel) -> np.ndarray:
    return model.means.copy()


def _check_data(model: GmmModel, data) -> np.ndarray:
    x = np.asarray(data, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[0] == 0:
        raise InsufficientDataError("empty data")
    if x.shape[1] != model.dim:
        raise DimensionMismatchError(f"data has dim {x.shape[1]}, model has {model.dim}")
    return x


def log_likelihood(model: GmmModel, data: np.ndarray) -> float:
    """Mean per-sample log density under the mixture."""
    x = _check_data(model, data)
    lse = _logsumexp_rows(_log_joint(x, model.weights, model.means, model.covariances))
    return math.fsum(lse) / x.shape[0]


def gmm_from_arrays(weights, means, covariances, **kw) -> GmmModel:
    return GmmModel(np.asarray(weights, float).ravel(), np.asarray(means, float),
                    np.asarray(covariances, float), **kw)
