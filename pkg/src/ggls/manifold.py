"""Grassmannian feature learning with the geodesic flow kernel.

Each domain is summarized by a PCA subspace. The kernel ``Q`` integrates the
projector onto every subspace along the geodesic joining the two, and
manifold features are ``Z = Q^(1/2) X``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataFormatError, InvalidSubspaceError

_ORTHO_TOL = 1e-10
_SMALL_ANGLE = 1e-8
_EIG_CLAMP = 1e-12


def _fix_signs(basis: np.ndarray) -> np.ndarray:
    """Flip columns so the largest-magnitude entry of each is positive."""
    idx = np.argmax(np.abs(basis), axis=0)
    signs = np.sign(basis[idx, np.arange(basis.shape[1])])
    signs[signs == 0] = 1.0
    return basis * signs


@dataclass(frozen=True)
class Subspace:
    basis: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float)
        if b.ndim != 2 or b.shape[1] > b.shape[0]:
            raise InvalidSubspaceError("basis must be D x d with d <= D")
        err = np.abs(b.T @ b - np.eye(b.shape[1])).max()
        if err > _ORTHO_TOL:
            raise InvalidSubspaceError(f"basis columns not orthonormal (error {err:.2e})")
        object.__setattr__(self, "basis", b)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]


@dataclass(frozen=True)
class GeodesicKernel:
    q: np.ndarray
    q_sqrt: np.ndarray
    angles: np.ndarray


def pca_subspace(features: np.ndarray, dim: int) -> Subspace:
    """Top-``dim`` principal directions of the mean-centered columns."""
    d_amb, n = features.shape
    if not 1 <= dim <= min(d_amb, n):
        raise ConfigError(f"subspace dimension {dim} outside 1..{min(d_amb, n)}")
    centered = features - features.mean(axis=1, keepdims=True)
    cov = centered @ centered.T / n
    evals, evecs = np.linalg.eigh((cov + cov.T) / 2)
    order = np.argsort(evals, kind="stable")[::-1][:dim]
    basis = _fix_signs(evecs[:, order])
    # eigh output is orthonormal to ~1e-15; re-orthonormalize anyway
    q, r = np.linalg.qr(basis)
    return Subspace(_fix_signs(q * np.sign(np.diag(r))))


def orthogonal_complement(sub: Subspace) -> np.ndarray:
    """D x (D-d) orthonormal basis of the complement, via complete QR."""
    q, _ = np.linalg.qr(sub.basis, mode="complete")
    return _fix_signs(q[:, sub.dim:])


def principal_angles(source_sub: Subspace, target_sub: Subspace) -> np.ndarray:
    s = np.linalg.svd(source_sub.basis.T @ target_sub.basis, compute_uv=False)
    return np.arccos(np.clip(s, 0.0, 1.0))


def _flow_weights(theta: np.ndarray):
    """Diagonal blocks of the integral of Phi(t) Phi(t)^T over [0, 1].

    Returns the integrals of cos^2(t theta), -cos(t theta) sin(t theta) and
    sin^2(t theta), with their theta -> 0 limits 1, 0, 0.
    """
    small = np.abs(theta) < _SMALL_ANGLE
    t = np.where(small, 1.0, theta)
    sinc2 = np.sin(2 * t) / (2 * t)
    w1 = np.where(small, 1.0, 0.5 * (1 + sinc2))
    w2 = np.where(small, 0.0, (np.cos(2 * t) - 1) / (4 * t))
    w3 = np.where(small, 0.0, 0.5 * (1 - sinc2))
    return w1, w2, w3


def psd_sqrt(q: np.ndarray) -> np.ndarray:
    evals, evecs = np.linalg.eigh(q)
    cutoff = _EIG_CLAMP * max(evals.max(), 0.0)
    evals = np.where(evals > cutoff, evals, 0.0)
    root = (evecs * np.sqrt(evals)) @ evecs.T
    return (root + root.T) / 2


def geodesic_kernel(source_sub: Subspace, target_sub: Subspace) -> GeodesicKernel:
    """Closed-form geodesic flow kernel between two d-dimensional subspaces."""
    ss, st = source_sub.basis, target_sub.basis
    if ss.shape != st.shape:
        raise ConfigError("source and target subspaces must have the same shape")
    d_amb, d = ss.shape
    if 2 * d > d_amb:
        raise ConfigError(f"subspace dimension {d} exceeds half the ambient dimension {d_amb}")
    rs = orthogonal_complement(source_sub)

    u1, gamma, vt = np.linalg.svd(ss.T @ st)
    v = vt.T
    # R_s^T S_t = -U2 Sigma V^T shares V with the first SVD
    cross = rs.T @ st @ v
    sigma = np.linalg.norm(cross, axis=0)
    u2 = np.zeros_like(cross)
    nz = sigma > 1e-14
    u2[:, nz] = -cross[:, nz] / sigma[nz]
    # arctan2 keeps accuracy for angles near 0 and pi/2
    theta = np.arctan2(sigma, np.clip(gamma, 0.0, None))

    w1, w2, w3 = _flow_weights(theta)
    a = ss @ u1
    b = rs @ u2
    q = (a * w1) @ a.T + (a * w2) @ b.T + (b * w2) @ a.T + (b * w3) @ b.T
    q = (q + q.T) / 2
    return GeodesicKernel(q, psd_sqrt(q), theta)


def manifold_transform(kernel: GeodesicKernel, features: np.ndarray) -> np.ndarray:
    if features.shape[0] != kernel.q_sqrt.shape[1]:
        raise DataFormatError("feature dimension does not match the kernel")
    return kernel.q_sqrt @ features
