"""Sample estimators of the H-functional  H = integral f log f  (negative entropy).

Both estimators return ``(H, sigma)`` where ``sigma`` is the standard error
of the mean of the per-sample log-density terms, std / sqrt(N).
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import digamma, gammaln

from .errors import ConfigurationError


def _as_2d(samples) -> np.ndarray:
    x = np.asarray(samples, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] < 2:
        raise ConfigurationError("need at least two samples arranged as (N, dim)")
    return x


def scott_widths(x: np.ndarray) -> np.ndarray:
    n, d = x.shape
    sd = x.std(axis=0, ddof=1)
    return 3.49 * sd * n ** (-1.0 / (d + 2))


def histogram_h(samples, bins=None) -> tuple[float, float]:
    """Plug-in histogram estimate; empty cells are simply absent (a known bias).

    ``bins`` is a per-axis bin count (int or sequence); default is Scott's
    rule h_j = 3.49 s_j N^(-1/(d+2)).
    """
    x = _as_2d(samples)
    n, d = x.shape
    lo = x.min(axis=0)
    if bins is None:
        h = scott_widths(x)
    else:
        counts = np.broadcast_to(np.asarray(bins, dtype=float), (d,))
        h = (x.max(axis=0) - lo) / counts
    if np.any(~(h > 0)):
        raise ConfigurationError("degenerate sample spread; cannot bin")
    idx = np.floor((x - lo) / h).astype(np.int64)
    if bins is not None:
        idx = np.minimum(idx, counts.astype(np.int64) - 1)
    _, inverse, cell_counts = np.unique(idx, axis=0, return_inverse=True, return_counts=True)
    inverse = np.ravel(inverse)
    log_density = np.log(cell_counts[inverse] / (n * np.prod(h)))
    return float(log_density.mean()), float(log_density.std(ddof=1) / np.sqrt(n))


def knn_h(samples, k: int = 4) -> tuple[float, float]:
    """Kozachenko-Leonenko k-nearest-neighbour estimate (Euclidean metric)."""
    x = _as_2d(samples)
    n, d = x.shape
    if k < 1 or k >= n:
        raise ConfigurationError("k must satisfy 1 <= k < N")
    tree = cKDTree(x)
    dist, _ = tree.query(x, k=k + 1)
    eps = dist[:, -1]
    if np.any(eps <= 0):
        raise ConfigurationError("duplicate samples: k-NN distances vanish")
    log_unit_ball = 0.5 * d * np.log(np.pi) - gammaln(0.5 * d + 1.0)
    terms = -(digamma(n) - digamma(k) + log_unit_ball + d * np.log(eps))
    return float(terms.mean()), float(terms.std(ddof=1) / np.sqrt(n))


def estimate_h(samples, estimator: str = "auto", bins=None, k: int = 4) -> tuple[float, float]:
    x = _as_2d(samples)
    if estimator == "auto":
        estimator = "histogram" if x.shape[1] <= 3 else "knn"
    if estimator == "histogram":
        return histogram_h(x, bins)
    if estimator == "knn":
        return knn_h(x, k)
    raise ConfigurationError(f"unknown entropy estimator {estimator!r}")
