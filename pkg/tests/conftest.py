import numpy as np
import pytest

from ggls import graph, mmd
from ggls.config import GglsConfig
from ggls.data import one_hot
from ggls.kernel import KernelSpec, kernel_matrix
from ggls.solver import AdaptationState


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def random_state(rng, n=40, dim=8, classes=3, k=3, landmarks=True, kernel="rbf"):
    """A consistent solver state on random data, roughly half source."""
    ns = n // 2
    nt = n - ns
    x = rng.standard_normal((dim, n))
    ls = np.concatenate([np.arange(1, classes + 1), rng.integers(1, classes + 1, ns - classes)])
    pseudo = rng.integers(1, classes + 1, nt)
    km = kernel_matrix(x, KernelSpec(kernel), ns)
    lap = graph.laplacian(graph.knn_cosine_graph(x, k)).l
    if landmarks:
        p0 = rng.standard_normal((n, classes))
        b = graph.attention_matrix(p0, km.k, k).b
    else:
        b = np.eye(n)
    return AdaptationState(
        kernel=km.k,
        laplacian=lap,
        labels=one_hot(ls, classes, n, 0),
        indicator=np.concatenate([np.ones(ns), np.zeros(nt)]),
        attention=b,
        mmd=mmd.build(ls, pseudo, classes, 0.5),
        subgradient=np.ones(n),
        pseudo_labels=pseudo,
    )


def smoothed_objective(p, state, config):
    """Objective with the l2,1 term replaced by lambda1 tr(P^T F P), by plain loops."""
    n, c = p.shape
    kb = state.kernel @ state.attention
    y = p.T @ kb
    u = state.mmd.combined + config.beta * state.laplacian
    total = 0.0
    for a in range(c):
        total += y[a] @ u @ y[a]
    for j in range(n):
        if state.indicator[j]:
            total += config.gamma * np.sum((state.labels[:, j] - y[:, j]) ** 2)
    for i in range(n):
        total += config.lambda1 * state.subgradient[i] * np.sum(p[i] ** 2)
    for a in range(c):
        total += config.lambda2 * p[:, a] @ state.kernel @ p[:, a]
    return float(total)


DEFAULT = GglsConfig()


def smoothed_objective_fast(p, state, config):
    """Same value as ``smoothed_objective`` written with traces."""
    kb = state.kernel @ state.attention
    y = p.T @ kb
    u = state.mmd.combined + config.beta * state.laplacian
    r = np.diag(state.indicator)
    resid = (state.labels - y) @ r
    return float(np.trace(y @ u @ y.T) + config.gamma * np.trace(resid @ resid.T)
                 + config.lambda1 * np.trace(p.T @ np.diag(state.subgradient) @ p)
                 + config.lambda2 * np.trace(p.T @ state.kernel @ p))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
