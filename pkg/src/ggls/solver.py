"""Objective, closed-form projection update, training loop and test path."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial.distance import cdist

from . import graph, mmd
from .config import MU_AFTER, MU_BEFORE, GglsConfig
from .data import DomainDataset, Normalizer, one_hot
from .errors import ConfigError, DataFormatError, SingularSystemError
from .kernel import KernelMatrix, KernelSpec, kernel_cross, kernel_matrix
from .manifold import GeodesicKernel, geodesic_kernel, manifold_transform, pca_subspace

log = logging.getLogger(__name__)

_ZERO_ROW = 1e-12
_MAX_COND = 1e12
_JITTER = 1e-8
_REL_TOL = 1e-6


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    objective: float
    mu: float
    accuracy: float | None = None
    labels_changed: int = 0


@dataclass
class AdaptationState:
    """Everything one iteration of the solver reads or writes.

    ``subgradient`` and ``indicator`` hold the diagonals of F and R.
    ``labels`` is the C x N matrix H whose target columns are zero.
    """

    kernel: np.ndarray
    laplacian: np.ndarray
    labels: np.ndarray
    indicator: np.ndarray
    attention: np.ndarray
    mmd: mmd.MmdMatrix
    projection: np.ndarray | None = None
    subgradient: np.ndarray | None = None
    pseudo_labels: np.ndarray | None = None
    trace: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.kernel.shape[0]


@dataclass(frozen=True)
class FittedModel:
    config: GglsConfig
    class_count: int
    normalizer: Normalizer | None
    geodesic: GeodesicKernel | None
    kernel_spec: KernelSpec
    z_all: np.ndarray
    n_source: int
    projection: np.ndarray
    attention: np.ndarray
    embedded: np.ndarray
    source_labels: np.ndarray
    pseudo_labels: np.ndarray
    trace: tuple

    @property
    def z_source(self) -> np.ndarray:
        return self.z_all[:, :self.n_source]

    @property
    def y_source(self) -> np.ndarray:
        return self.embedded[:, :self.n_source]

    @property
    def iterations(self) -> int:
        return len(self.trace)


def l21_norm(p: np.ndarray) -> float:
    return float(np.linalg.norm(p, axis=1).sum())


def objective(state: AdaptationState, config: GglsConfig,
              projection: np.ndarray | None = None) -> float:
    """Value of the full model at ``projection`` (default: the state's)."""
    p = state.projection if projection is None else projection
    kb = state.kernel @ state.attention
    y = p.T @ kb
    smooth = state.mmd.combined + config.beta * state.laplacian
    fit_term = float(np.einsum("ij,jk,ik->", y, smooth, y))
    src = state.indicator > 0
    resid = (state.labels - y)[:, src] * state.indicator[src]
    label_term = config.gamma * float(np.sum(resid ** 2))
    ridge = config.lambda2 * float(np.einsum("ji,jk,ki->", p, state.kernel, p))
    return fit_term + label_term + config.lambda1 * l21_norm(p) + ridge


def system_matrix(state: AdaptationState, config: GglsConfig) -> np.ndarray:
    kb = state.kernel @ state.attention
    u = state.mmd.combined + config.beta * state.laplacian + config.gamma * np.diag(state.indicator)
    f = np.ones(state.n) if state.subgradient is None else state.subgradient
    a = kb @ u @ kb.T + config.lambda1 * np.diag(f) + config.lambda2 * state.kernel
    return (a + a.T) / 2


def update_projection(state: AdaptationState, config: GglsConfig) -> np.ndarray:
    """Zero-gradient solution ``P = gamma (K B U B^T K + l1 F + l2 K)^-1 K B R H^T``."""
    kb = state.kernel @ state.attention
    rhs = config.gamma * (kb * state.indicator) @ state.labels.T
    p = np.zeros_like(rhs)
    # F_ii = 0 marks a row that already collapsed; it is the limit of an
    # infinite reweight, so the row stays at zero instead of being released
    live = np.ones(state.n, dtype=bool)
    if config.lambda1 > 0 and state.subgradient is not None:
        live = state.subgradient > 0
    if not np.any(rhs[live]):
        return p
    a = system_matrix(state, config)[np.ix_(live, live)]
    if np.linalg.cond(a) > _MAX_COND:
        eps = _JITTER * np.trace(a) / a.shape[0]
        log.debug("ill-conditioned projection system, adding jitter %.3e", eps)
        a = a + eps * np.eye(a.shape[0])
    try:
        p[live] = np.linalg.solve(a, rhs[live])
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"solver: projection system is singular ({exc})") from None
    if not np.all(np.isfinite(p)):
        raise SingularSystemError("solver: projection system produced non-finite values")
    return p


def update_subgradient(p: np.ndarray) -> np.ndarray:
    """Diagonal of F: ``1 / (2 ||p^i||)``, or 0 for (numerically) zero rows."""
    norms = np.linalg.norm(p, axis=1)
    out = np.zeros_like(norms)
    live = norms >= _ZERO_ROW
    out[live] = 1.0 / (2.0 * norms[live])
    return out


def nearest_neighbor(train: np.ndarray, train_labels: np.ndarray,
                     query: np.ndarray) -> np.ndarray:
    """1-NN by Euclidean distance over columns; ties go to the lowest index."""
    d = cdist(query.T, train.T, "sqeuclidean")
    return np.asarray(train_labels)[np.argmin(d, axis=1)]


def manifold_features(x: np.ndarray, n_source: int, config: GglsConfig):
    if config.no_manifold:
        return x, None
    d = config.subspace_dim
    gk = geodesic_kernel(pca_subspace(x[:, :n_source], d), pca_subspace(x[:, n_source:], d))
    return manifold_transform(gk, x), gk


def _accuracy(pred, truth):
    return None if truth is None else float(np.mean(pred == truth))


def initial_state(dataset: DomainDataset, config: GglsConfig):
    """Lines before the main loop: features, kernel, graph, first pseudo-labels."""
    ns, nt, c = dataset.n_source, dataset.n_target, dataset.class_count
    n = ns + nt
    if config.neighbor_count >= n:
        raise ConfigError(f"neighbor count {config.neighbor_count} must be below N={n}")
    x = dataset.features
    normalizer = None
    if config.normalize:
        normalizer = Normalizer.fit(x)
        x = normalizer.apply(x)
    z, gk = manifold_features(x, ns, config)
    km: KernelMatrix = kernel_matrix(z, config.kernel_spec(), ns)
    lap = graph.laplacian(graph.knn_cosine_graph(z, config.neighbor_count))
    pseudo = nearest_neighbor(z[:, :ns], dataset.source_labels, z[:, ns:])
    state = AdaptationState(
        kernel=km.k,
        laplacian=lap.l,
        labels=one_hot(dataset.source_labels, c, n, 0),
        indicator=np.concatenate([np.ones(ns), np.zeros(nt)]),
        attention=graph.identity_attention(n).b,
        mmd=mmd.build(dataset.source_labels, pseudo, c, config.initial_mu),
        subgradient=np.ones(n),
        pseudo_labels=pseudo,
    )
    return state, z, gk, km.spec, normalizer


def fit(dataset: DomainDataset, config: GglsConfig = GglsConfig()) -> FittedModel:
    """Alternate MMD, mu, projection, subgradient, attention and pseudo-labels."""
    state, z, gk, spec, normalizer = initial_state(dataset, config)
    ns, c = dataset.n_source, dataset.class_count
    truth = dataset.target_labels
    mu = config.initial_mu
    prev_obj = None
    y = None
    for it in range(1, config.max_iterations + 1):
        m0 = mmd.mmd_m0(ns, dataset.n_target)
        mcs = [mmd.mmd_mc(dataset.source_labels, state.pseudo_labels, k) for k in range(1, c + 1)]
        if config.estimate_mu and config.mu_update_order == MU_BEFORE \
                and state.projection is not None:
            y_prev = graph.aggregate(state.projection, state.kernel, state.attention)
            mu, _ = mmd.estimate_mu(y_prev, m0, mmd.combine(m0, mcs, mu).combined, mu)
        state.mmd = mmd.combine(m0, mcs, mu)
        state.projection = update_projection(state, config)
        obj = objective(state, config)
        if config.estimate_mu and config.mu_update_order == MU_AFTER:
            y_new = graph.aggregate(state.projection, state.kernel, state.attention)
            mu, _ = mmd.estimate_mu(y_new, m0, state.mmd.combined, mu)
        state.subgradient = update_subgradient(state.projection)
        if not config.no_landmark:
            state.attention = graph.attention_matrix(
                state.projection, state.kernel, config.neighbor_count).b
        y = graph.aggregate(state.projection, state.kernel, state.attention)
        pseudo = nearest_neighbor(y[:, :ns], dataset.source_labels, y[:, ns:])
        changed = int(np.sum(pseudo != state.pseudo_labels))
        state.pseudo_labels = pseudo
        rec = TraceRecord(it, obj, state.mmd.mu, _accuracy(pseudo, truth), changed)
        state.trace.append(rec)
        log.info("iter %d objective=%.6g mu=%.4f changed=%d", it, obj, rec.mu, changed)
        if changed == 0 and prev_obj is not None and \
                abs(obj - prev_obj) <= _REL_TOL * max(abs(prev_obj), 1e-300):
            break
        prev_obj = obj

    return FittedModel(
        config=config,
        class_count=c,
        normalizer=normalizer,
        geodesic=gk,
        kernel_spec=spec,
        z_all=z,
        n_source=ns,
        projection=state.projection,
        attention=state.attention,
        embedded=y,
        source_labels=dataset.source_labels,
        pseudo_labels=state.pseudo_labels,
        trace=tuple(state.trace),
    )


def embed(model: FittedModel, new_target: np.ndarray) -> np.ndarray:
    """Output features of new target samples, C x M."""
    new_target = np.asarray(new_target, dtype=float)
    if new_target.ndim != 2 or new_target.shape[0] != model.z_all.shape[0]:
        raise DataFormatError("new target features do not match the training dimension")
    x = model.normalizer.apply(new_target) if model.normalizer else new_target
    z_new = manifold_transform(model.geodesic, x) if model.geodesic else x
    joint = np.hstack([model.z_source, z_new])
    u = model.projection.T @ kernel_cross(model.z_all, joint, model.kernel_spec)
    if not model.config.no_landmark:
        a = graph.attention_coefficients(u, model.config.neighbor_count)
        u = u @ graph.normalize_attention(a, model.config.neighbor_count).b
    return u[:, model.n_source:]


def predict(model: FittedModel, new_target: np.ndarray) -> np.ndarray:
    return nearest_neighbor(model.y_source, model.source_labels, embed(model, new_target))


def frozen_descent(state: AdaptationState, config: GglsConfig, steps: int) -> list[float]:
    """Alternate projection / subgradient updates with M, B, L fixed.

    Returns the objective after each projection update.
    """
    state = replace(state, trace=[])
    values = []
    for _ in range(steps):
        state.projection = update_projection(state, config)
        values.append(objective(state, config))
        state.subgradient = update_subgradient(state.projection)
    return values
