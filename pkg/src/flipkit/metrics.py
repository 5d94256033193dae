"""Histogram distances and the generalized histogram intersection kernel."""
from __future__ import annotations

import enum

import numpy as np

from .errors import InvalidInputError


class MetricKind(enum.Enum):
    CHI_SQUARE = "chi_square"
    HIST_INTERSECT = "hist_intersect"
    PEARSON = "pearson"
    COSINE = "cosine"
    L1 = "l1"
    L2 = "l2"

    def __str__(self):
        return self.value

    @classmethod
    def parse(cls, name) -> "MetricKind":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("-", "_")
        key = _ALIASES.get(key, key)
        try:
            return cls(key)
        except ValueError:
            choices = ", ".join(k.value for k in cls)
            raise InvalidInputError(f"unknown metric {name!r} (choose from {choices})") from None


_ALIASES = {
    "chi2": "chi_square",
    "chisquare": "chi_square",
    "histint": "hist_intersect",
    "intersection": "hist_intersect",
    "correlation": "pearson",
}


def _chi_square(q, X):
    num = (X - q) ** 2
    den = X + q
    # bins empty in both histograms contribute nothing
    safe = np.where(den > 0, den, 1.0)
    return np.where(den > 0, num / safe, 0.0).sum(axis=1)


def _hist_intersect(q, X):
    return 1.0 - np.minimum(X, q).sum(axis=1)


def _pearson(q, X):
    qc = q - q.mean()
    Xc = X - X.mean(axis=1, keepdims=True)
    sq = (qc * qc).sum()
    sx = (Xc * Xc).sum(axis=1)
    denom = np.sqrt(sq * sx)
    ok = denom > 0
    r = np.where(ok, (Xc * qc).sum(axis=1) / np.where(ok, denom, 1.0), 0.0)
    return np.where(ok, 1.0 - r, 1.0)


def _cosine(q, X):
    denom = np.sqrt((q * q).sum() * (X * X).sum(axis=1))
    ok = denom > 0
    sim = np.where(ok, (X * q).sum(axis=1) / np.where(ok, denom, 1.0), 0.0)
    return np.where(ok, 1.0 - sim, 1.0)


def _l1(q, X):
    return np.abs(X - q).sum(axis=1)


def _l2(q, X):
    return np.sqrt(((X - q) ** 2).sum(axis=1))


_DISTANCES = {
    MetricKind.CHI_SQUARE: _chi_square,
    MetricKind.HIST_INTERSECT: _hist_intersect,
    MetricKind.PEARSON: _pearson,
    MetricKind.COSINE: _cosine,
    MetricKind.L1: _l1,
    MetricKind.L2: _l2,
}


def distances_to(query, matrix, kind) -> np.ndarray:
    """Distance from ``query`` to every row of ``matrix``.

    Each row is reduced independently, so a row's distance does not depend on
    which other rows are present. Results are clipped at zero.

    ``CHI_SQUARE`` and ``HIST_INTERSECT`` assume L1-normalized inputs.
    ``PEARSON`` and ``COSINE`` return 1 when either side has zero variance or
    zero norm.
    """
    kind = MetricKind.parse(kind)
    q = np.asarray(query, dtype=np.float64)
    X = np.asarray(matrix, dtype=np.float64)
    if X.ndim != 2 or q.ndim != 1:
        raise InvalidInputError("query must be 1-D and matrix 2-D")
    if X.shape[1] != q.shape[0]:
        raise InvalidInputError(
            f"length mismatch: query has {q.shape[0]} entries, rows have {X.shape[1]}")
    if q.shape[0] < 1:
        raise InvalidInputError("descriptors must be non-empty")
    return np.maximum(_DISTANCES[kind](q, X), 0.0)


def distance(a, b, kind) -> float:
    """Distance between two descriptor vectors under ``kind``."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise InvalidInputError(f"length mismatch: {a.shape} vs {b.shape}")
    return float(distances_to(a, b[None, :], kind)[0])


def _check_beta(beta: float) -> float:
    if not beta > 0:
        raise InvalidInputError(f"kernel exponent beta must be positive, got {beta}")
    return float(beta)


def _nonneg(x, what="descriptor"):
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0):
        raise InvalidInputError(f"{what} has negative entries; the kernel needs histograms")
    return x


def ghi_kernel(a, b, beta: float = 1.0) -> float:
    """Generalized histogram intersection ``sum_i min(a_i**beta, b_i**beta)``."""
    beta = _check_beta(beta)
    a, b = _nonneg(a), _nonneg(b)
    if a.shape != b.shape:
        raise InvalidInputError(f"length mismatch: {a.shape} vs {b.shape}")
    return float(np.minimum(a ** beta, b ** beta).sum())


def gram_matrix(descriptors, beta: float = 1.0) -> np.ndarray:
    """Kernel matrix ``G[i, j] = ghi_kernel(d_i, d_j, beta)``.

    Suitable as a precomputed kernel for an external SVM solver.
    """
    beta = _check_beta(beta)
    try:
        X = _nonneg(np.asarray(descriptors, dtype=np.float64))
    except ValueError as exc:
        if isinstance(exc, InvalidInputError):
            raise
        raise InvalidInputError("descriptors must all have the same length") from exc
    if X.size == 0:
        return np.zeros((0, 0))
    if X.ndim != 2:
        raise InvalidInputError("descriptors must all have the same length")
    Xb = X ** beta
    G = np.empty((len(Xb), len(Xb)))
    for i in range(len(Xb)):
        G[i] = np.minimum(Xb[i], Xb).sum(axis=1)
    return G
