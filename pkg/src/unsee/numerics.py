"""Dense-matrix primitives shared by the objectives and diagnostics.

Everything here is a pure function over float64 numpy arrays. Matrices are
row-major with rows = batch items and cols = feature dimensions.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateBatchError,
    NonFiniteError,
    ShapeMismatchError,
    SingularMatrixError,
    UndefinedCorrelationError,
)

EIGENVALUE_FLOOR = 1e-12


def as_matrix(data, name: str = "matrix") -> np.ndarray:
    """Validate and coerce to a finite 2-D float64 array."""
    m = np.asarray(data, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeMismatchError(f"{name}: expected 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NonFiniteError(f"{name}: contains NaN or Inf")
    return m


@dataclass
class SpectrumReport:
    """Covariance-spectrum summary of an embedding batch.

    effective_rank is exp(entropy) of the normalized eigenvalue
    distribution: 1.0 for a fully collapsed batch, up to the feature
    dimension for isotropic embeddings.
    """

    eigenvalues: np.ndarray  # descending, non-negative
    effective_rank: float
    mean_dim_std: float


def column_standardize(m, eps: float) -> np.ndarray:
    """Zero-mean each column and divide by (population std + eps)."""
    m = as_matrix(m)
    if m.shape[0] < 2:
        raise DegenerateBatchError(f"need >= 2 rows to standardize, got {m.shape[0]}")
    centered = m - m.mean(axis=0)
    std = m.std(axis=0)  # population (B denominator)
    return centered / (std + eps)


def cross_correlation(za, zb) -> np.ndarray:
    """C = (1/B) Za^T Zb for already-standardized views."""
    za = as_matrix(za, "Za")
    zb = as_matrix(zb, "Zb")
    if za.shape != zb.shape:
        raise ShapeMismatchError(f"view shapes differ: {za.shape} vs {zb.shape}")
    return za.T @ zb / za.shape[0]


def covariance(z) -> np.ndarray:
    """Sample covariance (B-1 denominator), symmetrized against roundoff."""
    z = as_matrix(z)
    if z.shape[0] < 2:
        raise DegenerateBatchError(f"need >= 2 rows for covariance, got {z.shape[0]}")
    centered = z - z.mean(axis=0)
    cov = centered.T @ centered / (z.shape[0] - 1)
    return (cov + cov.T) / 2.0


def cholesky_lower(m: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor; names the failing pivot on breakdown."""
    n = m.shape[0]
    L = np.zeros_like(m)
    for j in range(n):
        pivot = m[j, j] - L[j, :j] @ L[j, :j]
        if pivot <= 0.0 or not np.isfinite(pivot):
            raise SingularMatrixError(
                f"Cholesky pivot {j} not positive (got {pivot:.6e})"
            )
        L[j, j] = np.sqrt(pivot)
        if j + 1 < n:
            L[j + 1 :, j] = (m[j + 1 :, j] - L[j + 1 :, :j] @ L[j, :j]) / L[j, j]
    return L


def logdet_psd(m, eps: float) -> float:
    """log det(M + eps*I) via Cholesky."""
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise ShapeMismatchError(f"expected square matrix, got {m.shape}")
    L = cholesky_lower(m + eps * np.eye(m.shape[0]))
    return float(2.0 * np.sum(np.log(np.diag(L))))


def effective_rank(z) -> SpectrumReport:
    """Spectrum report: covariance eigenvalues, entropy rank, mean column std.

    Eigenvalues below 1e-12 are dropped from the entropy; an all-zero
    covariance reports effective_rank 1 (fully collapsed).
    """
    z = as_matrix(z)
    cov = covariance(z)
    eigs = np.linalg.eigvalsh(cov)[::-1]
    eigs = np.clip(eigs, 0.0, None)
    mean_dim_std = float(z.std(axis=0).mean())
    kept = eigs[eigs >= EIGENVALUE_FLOOR]
    if kept.size == 0:
        return SpectrumReport(eigs, 1.0, mean_dim_std)
    p = kept / kept.sum()
    entropy = float(-(p * np.log(p)).sum())
    return SpectrumReport(eigs, float(np.exp(entropy)), mean_dim_std)


def average_ranks(x) -> np.ndarray:
    """Fractional ranks (1-based); ties get the mean of their rank span."""
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(len(x))
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and x[order[j + 1]] == x[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(x, y) -> float:
    """Spearman rank correlation with average-rank tie handling."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ShapeMismatchError(f"inputs must be equal-length 1-D, got {x.shape} vs {y.shape}")
    if len(x) < 2:
        raise DegenerateBatchError("need >= 2 observations")
    rx = average_ranks(x)
    ry = average_ranks(y)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    nx = np.sqrt((dx * dx).sum())
    ny = np.sqrt((dy * dy).sum())
    if nx == 0.0 or ny == 0.0:
        raise UndefinedCorrelationError("zero rank variance; correlation undefined")
    return float((dx * dy).sum() / (nx * ny))


def finite_diff_grad(f, x, h: float) -> np.ndarray:
    """Central-difference gradient of a scalar function over a matrix."""
    x = as_matrix(x)
    grad = np.zeros_like(x)
    for idx in np.ndindex(*x.shape):
        xp = x.copy()
        xp[idx] += h
        xm = x.copy()
        xm[idx] -= h
        fp, fm = f(xp), f(xm)
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise NonFiniteError(f"non-finite function value at perturbed index {idx}")
        grad[idx] = (fp - fm) / (2.0 * h)
    return grad
