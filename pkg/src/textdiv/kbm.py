"""Kernel and moment based set metrics on sentence embeddings.

Two classic ways to compare the candidate cloud with the reference cloud in
embedding space: a Gaussian-approximation distance built from means and
covariances, and a kernel mean discrepancy with an RBF kernel whose width
comes from the median pairwise distance.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientSamplesError, MissingEmbeddingError


def text_key(raw: str) -> str:
    """Lookup key for a text: lowercase hex SHA-256 of its UTF-8 bytes."""
    return hashlib.sha256(raw.encode("utf-8")).hexdigest()


@dataclass
class EmbeddingTable:
    """Precomputed sentence embeddings keyed by text hash.

    Vectors are float64, unit L2 norm within 1e-4 (enforced at load time).
    """

    dim: int
    encoder_name: str
    pooling: str
    vectors: dict[str, np.ndarray]

    def __len__(self) -> int:
        return len(self.vectors)

    def vector_for_key(self, key: str) -> np.ndarray | None:
        return self.vectors.get(key)

    def vector_for_text(self, raw: str) -> np.ndarray:
        key = text_key(raw)
        vec = self.vectors.get(key)
        if vec is None:
            raise MissingEmbeddingError(key, raw)
        return vec


@dataclass(frozen=True)
class GaussianSummary:
    """Mean and covariance of a vector set."""

    mean: np.ndarray
    cov: np.ndarray
    count: int


def summarize(vectors: np.ndarray, eps: float = 1e-6) -> GaussianSummary:
    """Gaussian summary of a set of vectors.

    Uses the n-1 covariance denominator plus ``eps`` times the identity as
    shrinkage so the covariance stays invertible for small sets; the result
    is symmetrized exactly.

    Args:
        vectors: (k, d) array, k >= 2.
        eps: Diagonal shrinkage weight.

    Returns:
        A :class:`GaussianSummary` with count k.
    """
    arr = np.asarray(vectors, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a (k, d) array, got shape {arr.shape}")
    k, d = arr.shape
    if k < 2:
        raise InsufficientSamplesError(
            f"a covariance summary needs at least 2 vectors, got {k}"
        )
    if not np.isfinite(arr).all():
        raise ValueError("vectors must be finite")
    mean = arr.mean(axis=0)
    centered = arr - mean
    cov = centered.T @ centered / (k - 1) + eps * np.eye(d)
    cov = (cov + cov.T) * 0.5
    return GaussianSummary(mean=mean, cov=cov, count=k)


def matrix_sqrt_psd(mat: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition.

    Negative eigenvalues (roundoff) clamp to zero; the input must be
    symmetric within 1e-8.
    """
    m = np.asarray(mat, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if m.size and float(np.abs(m - m.T).max()) > 1e-8:
        raise ValueError("matrix is not symmetric (tolerance 1e-8)")
    w, v = np.linalg.eigh(m)
    w = np.maximum(w, 0.0)
    root = (v * np.sqrt(w)) @ v.T
    return (root + root.T) * 0.5


def frechet_distance(a: GaussianSummary, b: GaussianSummary) -> float:
    """Squared mean gap plus the covariance alignment term.

    ||mu_a - mu_b||^2 + tr(Ca + Cb - 2 (Ca^1/2 Cb Ca^1/2)^1/2), computed
    with the symmetric product form so only PSD square roots are needed.
    Clamped at 0 against roundoff; identical summaries give ~1e-14.
    """
    if a.mean.shape != b.mean.shape:
        raise ValueError(
            f"summaries have different dimensions: {a.mean.shape} vs {b.mean.shape}"
        )
    diff = a.mean - b.mean
    root_a = matrix_sqrt_psd(a.cov)
    inner = root_a @ b.cov @ root_a
    inner = (inner + inner.T) * 0.5
    cross = float(np.trace(matrix_sqrt_psd(inner)))
    total = float(diff @ diff) + float(np.trace(a.cov)) + float(np.trace(b.cov)) - 2.0 * cross
    return max(total, 0.0)


def median_heuristic(vectors: np.ndarray) -> float:
    """RBF width: half the median pairwise Euclidean distance.

    Falls back to 1.0 when the median is zero (e.g. all points identical).
    """
    arr = np.asarray(vectors, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 2:
        raise InsufficientSamplesError("the median heuristic needs at least 2 vectors")
    iu, ju = np.triu_indices(arr.shape[0], k=1)
    dists = np.sqrt(((arr[iu] - arr[ju]) ** 2).sum(axis=1))
    med = float(np.median(dists))
    return med / 2.0 if med > 0.0 else 1.0


def rbf_kernel(a: np.ndarray, b: np.ndarray, sigma: float) -> np.ndarray:
    """exp(-||x - y||^2 / (2 sigma^2)) for every pair of rows."""
    sq = ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=-1)
    return np.exp(-sq / (2.0 * sigma * sigma))


def mmd_rbf(
    candidates: np.ndarray, references: np.ndarray, sigma: float | None = None
) -> float:
    """Biased squared maximum mean discrepancy with an RBF kernel.

    mean(Kcc) + mean(Krr) - 2 mean(Kcr); ``sigma`` defaults to the median
    heuristic over the joint set.  Identical sets give exactly 0.

    Args:
        candidates: (n, d) array, n >= 1.
        references: (m, d) array, m >= 1.
        sigma: Kernel width; must be > 0 when given.
    """
    x = np.asarray(candidates, dtype=np.float64)
    y = np.asarray(references, dtype=np.float64)
    if x.ndim != 2 or y.ndim != 2 or x.shape[1] != y.shape[1]:
        raise ValueError(
            f"expected (n, d) and (m, d) arrays, got {x.shape} and {y.shape}"
        )
    if x.shape[0] < 1 or y.shape[0] < 1:
        raise InsufficientSamplesError("mmd needs at least one vector per side")
    if sigma is None:
        sigma = median_heuristic(np.vstack([x, y]))
    if not sigma > 0.0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    value = (
        float(rbf_kernel(x, x, sigma).mean())
        + float(rbf_kernel(y, y, sigma).mean())
        - 2.0 * float(rbf_kernel(x, y, sigma).mean())
    )
    return max(value, 0.0)
