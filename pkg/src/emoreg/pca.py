"""Principal component analysis via SVD of the centered data."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, InsufficientDataError, ValidationError


@dataclass(frozen=True, eq=False)
class PcaModel:
    mean: np.ndarray          # (D,)
    components: np.ndarray    # (d, D), orthonormal rows
    eigenvalues: np.ndarray   # (d,), non-increasing
    total_variance: float

    @property
    def dim(self) -> int:
        return self.components.shape[1]

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    @property
    def explained_variance_ratio(self) -> float:
        if self.total_variance == 0:
            return 1.0
        return float(self.eigenvalues.sum() / self.total_variance)


def _fix_signs(components: np.ndarray) -> np.ndarray:
    # largest-|entry| of each row made positive; argmax returns the lowest index on ties
    pivot = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(components.shape[0]), pivot])
    signs[signs == 0] = 1.0
    return components * signs[:, None]


def fit_pca(data: np.ndarray, n_components: int) -> PcaModel:
    """Eigenvalues are squared singular values divided by N (biased covariance).

    Rank-deficient data is allowed: trailing eigenvalues come out as zero and
    the matching axes are still orthonormal.
    """
    x = np.asarray(data, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionMismatchError(f"data must be 2-D, got {x.shape}")
    n, d = x.shape
    if n < 2:
        raise InsufficientDataError(f"PCA needs at least 2 rows, got {n}")
    if not 1 <= n_components <= min(n, d):
        raise ValidationError(f"n_components={n_components} must lie in [1, min(N={n}, D={d})]")
    mean = x.mean(axis=0)
    centered = x - mean
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    eig = s * s / n
    components = _fix_signs(vt[:n_components])
    total = float((centered * centered).sum() / n)
    return PcaModel(mean=mean, components=components, eigenvalues=eig[:n_components].copy(),
                    total_variance=total)


def pca_transform(model: PcaModel, v: np.ndarray) -> np.ndarray:
    """components @ (v - mean); accepts a vector or a batch of row vectors."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] != model.dim:
        raise DimensionMismatchError(f"vector dim {v.shape[-1]} != PCA dim {model.dim}")
    return (v - model.mean) @ model.components.T


def pca_inverse(model: PcaModel, z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    if z.shape[-1] != model.n_components:
        raise DimensionMismatchError(f"code dim {z.shape[-1]} != n_components {model.n_components}")
    return model.mean + z @ model.components


def reconstruction_error(model: PcaModel, data: np.ndarray) -> float:
    """Mean per-sample squared error of inverse(transform(x))."""
    x = np.asarray(data, dtype=np.float64)
    r = pca_inverse(model, pca_transform(model, x)) - x
    return float((r * r).sum() / x.shape[0])
