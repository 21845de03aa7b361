"""Marginal and class-conditional MMD matrices and the balance factor mu."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError

log = logging.getLogger(__name__)

_TRACE_TOL = 1e-15


@dataclass(frozen=True)
class MmdMatrix:
    m0: np.ndarray
    m_class: list = field(repr=False)
    combined: np.ndarray = field(repr=False)
    mu: float = 0.5


def _indicator_outer(e: np.ndarray) -> np.ndarray:
    return np.outer(e, e)


def mmd_m0(ns: int, nt: int) -> np.ndarray:
    """Marginal MMD matrix: ``e e^T`` with ``e = [1/Ns ..., -1/Nt ...]``."""
    e = np.concatenate([np.full(ns, 1.0 / ns), np.full(nt, -1.0 / nt)])
    return _indicator_outer(e)


def mmd_mc(source_labels, target_pseudo_labels, class_id: int) -> np.ndarray:
    """Class-conditional MMD matrix; zero when either domain lacks the class."""
    ls = np.asarray(source_labels).ravel()
    lt = np.asarray(target_pseudo_labels).ravel()
    in_s = ls == class_id
    in_t = lt == class_id
    n_sc, n_tc = int(in_s.sum()), int(in_t.sum())
    n = ls.size + lt.size
    if n_sc == 0 or n_tc == 0:
        return np.zeros((n, n))
    e = np.concatenate([in_s / n_sc, -(in_t / n_tc)])
    return _indicator_outer(e)


def combine(m0: np.ndarray, m_class, mu: float) -> MmdMatrix:
    if not 0.0 <= mu <= 1.0:
        raise NumericError(f"mu={mu} outside [0, 1]")
    mc_sum = np.sum(m_class, axis=0) if len(m_class) else np.zeros_like(m0)
    return MmdMatrix(m0, list(m_class), (1 - mu) * m0 + mu * mc_sum, float(mu))


def build(source_labels, target_pseudo_labels, class_count: int, mu: float) -> MmdMatrix:
    ns = np.asarray(source_labels).size
    nt = np.asarray(target_pseudo_labels).size
    mcs = [mmd_mc(source_labels, target_pseudo_labels, c)
           for c in range(1, class_count + 1)]
    return combine(mmd_m0(ns, nt), mcs, mu)


def estimate_mu(embedded: np.ndarray, m0: np.ndarray, m_combined: np.ndarray,
                previous: float = 0.5) -> tuple[float, bool]:
    """Balance factor ``1 - tr(Y M0 Y^T) / tr(Y M Y^T)`` clamped to [0, 1].

    ``embedded`` is the C x N matrix ``Y = P^T K B``. Returns ``(mu,
    degenerate)``; a vanishing denominator keeps ``previous``.
    """
    num = float(np.einsum("ij,jk,ik->", embedded, m0, embedded))
    den = float(np.einsum("ij,jk,ik->", embedded, m_combined, embedded))
    if den <= _TRACE_TOL:
        log.debug("degenerate MMD trace %.3e, keeping mu=%.4f", den, previous)
        return previous, True
    return float(np.clip(1.0 - num / den, 0.0, 1.0)), False
