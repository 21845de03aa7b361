"""Locality graph, graph Laplacian and attention-based landmark weights."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, NumericError

_DENOM_TOL = 1e-12


@dataclass(frozen=True)
class Laplacian:
    l: np.ndarray


@dataclass(frozen=True)
class AttentionMatrix:
    b: np.ndarray
    neighbor_count: int


def cosine_similarity(features: np.ndarray) -> np.ndarray:
    """Pairwise cosine of columns; all-zero columns are similar to nothing."""
    norms = np.linalg.norm(features, axis=0)
    safe = np.where(norms > 0, norms, 1.0)
    unit = features / safe
    sim = unit.T @ unit
    dead = norms == 0
    sim[dead, :] = 0.0
    sim[:, dead] = 0.0
    return np.clip(sim, -1.0, 1.0)


def nearest_by_similarity(sim: np.ndarray, k: int) -> np.ndarray:
    """Indices of the ``k`` most similar other samples for each column.

    Row ``j`` of the result lists the neighbors of sample ``j``, most similar
    first, ties resolved by ascending index.
    """
    n = sim.shape[0]
    if not 1 <= k < n:
        raise ConfigError(f"neighbor count {k} must satisfy 1 <= k < N={n}")
    idx = np.arange(n)
    out = np.empty((n, k), dtype=np.int64)
    for j in range(n):
        others = idx[idx != j]
        # lexsort: last key is primary
        order = np.lexsort((others, -sim[others, j]))
        out[j] = others[order[:k]]
    return out


def knn_cosine_graph(features: np.ndarray, k: int) -> sp.csr_array:
    """Symmetric kNN cosine graph: an edge when either end is in the other's kNN.

    Negative cosines are clamped to zero so the Laplacian stays PSD.
    """
    sim = cosine_similarity(features)
    nbrs = nearest_by_similarity(sim, k)
    n = sim.shape[0]
    mask = np.zeros((n, n), dtype=bool)
    mask[nbrs.ravel(), np.repeat(np.arange(n), k)] = True
    mask |= mask.T
    g = np.where(mask, np.maximum(sim, 0.0), 0.0)
    return sp.csr_array(g)


def laplacian(similarity) -> Laplacian:
    g = similarity.toarray() if sp.issparse(similarity) else np.asarray(similarity, float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise NumericError("similarity matrix must be square")
    if not np.allclose(g, g.T, rtol=0, atol=1e-12):
        raise NumericError("similarity matrix must be symmetric")
    return Laplacian(np.diag(g.sum(axis=1)) - g)


def normalize_attention(a: np.ndarray, neighbor_count: int) -> AttentionMatrix:
    """Column-normalize attention coefficients; empty columns fall back to e_j."""
    a = np.asarray(a, dtype=float)
    denom = a.sum(axis=0)
    ok = denom >= _DENOM_TOL
    b = np.zeros_like(a)
    b[:, ok] = a[:, ok] / denom[ok]
    bad = np.flatnonzero(~ok)
    b[bad, bad] = 1.0
    return AttentionMatrix(b, neighbor_count)


def identity_attention(n: int, neighbor_count: int = 0) -> AttentionMatrix:
    return normalize_attention(np.eye(n), neighbor_count)


def attention_coefficients(projected: np.ndarray, k: int) -> np.ndarray:
    """Raw coefficients A for projected features ``u_i`` (columns).

    ``A[i, j]`` is the clamped cosine of ``u_i`` and ``u_j`` when ``i`` is
    ``j`` itself or one of the ``k`` nearest to ``u_j``.
    """
    sim = cosine_similarity(projected)
    nbrs = nearest_by_similarity(sim, k)
    n = sim.shape[0]
    a = np.zeros((n, n))
    cols = np.repeat(np.arange(n), k)
    a[nbrs.ravel(), cols] = np.maximum(sim[nbrs.ravel(), cols], 0.0)
    a[np.arange(n), np.arange(n)] = np.maximum(np.diag(sim), 0.0)
    return a


def attention_matrix(projection: np.ndarray, kernel: np.ndarray, k: int) -> AttentionMatrix:
    """Landmark attention B from the projected kernel columns ``P^T k_i``."""
    projected = projection.T @ kernel
    if not np.any(projected):
        raise NumericError("projection maps every sample to zero")
    return normalize_attention(attention_coefficients(projected, k), k)


def aggregate(projection: np.ndarray, kernel: np.ndarray,
              attention: AttentionMatrix | np.ndarray) -> np.ndarray:
    """Output features ``Y = P^T K B``; column j mixes its landmarks."""
    b = attention.b if isinstance(attention, AttentionMatrix) else attention
    return projection.T @ (kernel @ b)
