"""Independent reference computations used by several test modules."""

import numpy as np
from scipy.integrate import trapezoid


def geodesic_quadrature(ss, st, points=10_001):
    """Trapezoid integral of the projector along the Grassmann geodesic.

    The geodesic is built from the log map ``(I - Ss Ss^T) St (Ss^T St)^-1``
    rather than the SVD pair used by the library.
    """
    d_amb = ss.shape[0]
    delta = (np.eye(d_amb) - ss @ ss.T) @ st @ np.linalg.inv(ss.T @ st)
    u, s, vt = np.linalg.svd(delta, full_matrices=False)
    theta = np.arctan(s)
    ts = np.linspace(0.0, 1.0, points)
    proj = np.empty((points, d_amb, d_amb))
    for i, t in enumerate(ts):
        y = ss @ vt.T * np.cos(t * theta) + u * np.sin(t * theta)
        proj[i] = y @ y.T
    return trapezoid(proj, ts, axis=0)


def random_subspace(rng, d_amb, d):
    q, _ = np.linalg.qr(rng.standard_normal((d_amb, d)))
    return q


def knn_brute_force(features, k):
    """Neighbor sets by full enumeration: top-k cosine, ties to lower index."""
    n = features.shape[1]
    out = []
    for j in range(n):
        scores = []
        for i in range(n):
            if i == j:
                continue
            a, b = features[:, i], features[:, j]
            na, nb = np.sqrt(a @ a), np.sqrt(b @ b)
            cos = 0.0 if na == 0 or nb == 0 else (a @ b) / (na * nb)
            scores.append((-cos, i))
        scores.sort()
        out.append({i for _, i in scores[:k]})
    return out


def cosine(a, b):
    na, nb = np.sqrt(a @ a), np.sqrt(b @ b)
    return 0.0 if na == 0 or nb == 0 else float(a @ b / (na * nb))
