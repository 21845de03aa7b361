"""RKHS kernel matrices over manifold features."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import NumericError

MEDIAN = "median"


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus bandwidth.

    ``bandwidth`` is sigma for ``rbf`` (or ``"median"`` before fitting) and is
    ignored for ``linear``.
    """

    kind: str = "rbf"
    bandwidth: float | str = MEDIAN

    def __post_init__(self):
        if self.kind not in ("rbf", "linear"):
            raise NumericError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "rbf" and self.bandwidth != MEDIAN:
            bw = float(self.bandwidth)
            if not (np.isfinite(bw) and bw > 0):
                raise NumericError("rbf bandwidth must be positive")
            object.__setattr__(self, "bandwidth", bw)

    @property
    def resolved(self) -> bool:
        return self.kind == "linear" or self.bandwidth != MEDIAN


@dataclass(frozen=True)
class KernelMatrix:
    k: np.ndarray
    source_count: int
    spec: KernelSpec


def _sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return cdist(a.T, b.T, "sqeuclidean")


def median_bandwidth(features: np.ndarray) -> float:
    """sigma such that sigma^2 is the median nonzero squared pairwise distance."""
    d2 = _sq_dists(features, features).ravel()
    d2 = d2[d2 > 0]
    if d2.size == 0:
        return 1.0
    return float(np.sqrt(np.median(d2)))


def resolve(spec: KernelSpec, features: np.ndarray) -> KernelSpec:
    if spec.resolved:
        return spec
    return KernelSpec("rbf", median_bandwidth(features))


def _check_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NumericError("kernel input contains non-finite entries")


def kernel_matrix(features: np.ndarray, spec: KernelSpec = KernelSpec(),
                  source_count: int = 0) -> KernelMatrix:
    _check_finite(features)
    spec = resolve(spec, features)
    if spec.kind == "linear":
        k = features.T @ features
    else:
        k = np.exp(-_sq_dists(features, features) / (2 * spec.bandwidth ** 2))
    k = (k + k.T) / 2
    return KernelMatrix(k, source_count, spec)


def kernel_cross(train_features: np.ndarray, new_features: np.ndarray,
                 spec: KernelSpec) -> np.ndarray:
    """N x M kernel between stored samples and new samples."""
    _check_finite(train_features, new_features)
    if train_features.shape[0] != new_features.shape[0]:
        raise NumericError("feature dimension mismatch between stored and new samples")
    if not spec.resolved:
        raise NumericError("cross kernel needs the bandwidth frozen at training time")
    if spec.kind == "linear":
        return train_features.T @ new_features
    return np.exp(-_sq_dists(train_features, new_features) / (2 * spec.bandwidth ** 2))
