"""Target accuracy, the raw 1-NN baseline and the ablation harness."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .config import GglsConfig
from .data import DomainDataset, normalize
from .errors import DataFormatError, EvalError
from .solver import fit, nearest_neighbor

VARIANTS = (
    ("GGLS", {}),
    ("GGLS-noLS", {"no_landmark": True}),
    ("GGLS-noMFL", {"no_manifold": True}),
    ("GGLS-noLSMFL", {"no_landmark": True, "no_manifold": True}),
    ("GGLS-noLSMFLKF", {"no_landmark": True, "no_manifold": True, "no_kernel": True}),
)


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    per_class_accuracy: np.ndarray
    confusion: np.ndarray
    predictions: np.ndarray
    config: dict = field(default_factory=dict)
    trace: tuple = ()
    dataset_digest: str = ""
    duration_seconds: float = 0.0


def accuracy(predicted, truth) -> float:
    predicted = np.asarray(predicted).ravel()
    truth = np.asarray(truth).ravel()
    if predicted.shape != truth.shape:
        raise DataFormatError(f"length mismatch: {predicted.size} predictions vs {truth.size} labels")
    if truth.size == 0:
        raise DataFormatError("need at least one label")
    return float(np.mean(predicted == truth))


def confusion_matrix(predicted, truth, class_count: int) -> np.ndarray:
    """Rows are true classes, columns predicted classes (ids 1..C)."""
    cm = np.zeros((class_count, class_count), dtype=np.int64)
    np.add.at(cm, (np.asarray(truth) - 1, np.asarray(predicted) - 1), 1)
    return cm


def report(predicted, truth, class_count: int, **extra) -> EvalReport:
    acc = accuracy(predicted, truth)
    cm = confusion_matrix(predicted, truth, class_count)
    support = cm.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        per_class = np.where(support > 0, np.diag(cm) / np.maximum(support, 1), np.nan)
    return EvalReport(acc, per_class, cm, np.asarray(predicted), **extra)


def _require_truth(dataset: DomainDataset):
    if dataset.target_labels is None:
        raise EvalError("evaluation needs target labels")
    return dataset.target_labels


def baseline_1nn(dataset: DomainDataset, normalized: bool = True) -> EvalReport:
    """1-NN from source to target on the (normalized) raw features."""
    truth = _require_truth(dataset)
    d = normalize(dataset) if normalized else dataset
    start = time.perf_counter()
    pred = nearest_neighbor(d.source_features, d.source_labels, d.target_features)
    return report(pred, truth, dataset.class_count, config={"method": "1NN"},
                  dataset_digest=dataset.digest(),
                  duration_seconds=time.perf_counter() - start)


def evaluate_fit(dataset: DomainDataset, config: GglsConfig) -> EvalReport:
    truth = _require_truth(dataset)
    start = time.perf_counter()
    model = fit(dataset, config)
    elapsed = time.perf_counter() - start
    return report(model.pseudo_labels, truth, dataset.class_count,
                  config=config.to_dict(), trace=model.trace,
                  dataset_digest=dataset.digest(), duration_seconds=elapsed)


def ablation_suite(dataset: DomainDataset, base_config: GglsConfig = GglsConfig()):
    """Run the five named variants; returns ``[(name, EvalReport), ...]``."""
    _require_truth(dataset)
    return [(name, evaluate_fit(dataset, base_config.with_overrides(**flags)))
            for name, flags in VARIANTS]
