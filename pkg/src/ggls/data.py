"""Domain datasets: CSV ingestion, normalization and synthetic shifted domains.

Feature matrices are stored column-major in the mathematical sense: shape
``(D, N)``, one column per sample. Class ids are contiguous integers
``1..C``; ``-1`` marks an unlabeled row in a feature CSV.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataFormatError

UNLABELED = -1


@dataclass(frozen=True)
class DomainDataset:
    """Labeled source features, unlabeled target features and the class count.

    ``target_labels`` is only ever used for evaluation.
    """

    source_features: np.ndarray
    source_labels: np.ndarray
    target_features: np.ndarray
    class_count: int
    target_labels: np.ndarray | None = None

    def __post_init__(self):
        xs = np.asarray(self.source_features, dtype=float)
        xt = np.asarray(self.target_features, dtype=float)
        ls = np.asarray(self.source_labels, dtype=np.int64).ravel()
        if xs.ndim != 2 or xt.ndim != 2:
            raise DataFormatError("feature matrices must be two-dimensional")
        if xs.shape[0] != xt.shape[0]:
            raise DataFormatError(
                f"source dimension {xs.shape[0]} != target dimension {xt.shape[0]}")
        if ls.shape[0] != xs.shape[1]:
            raise DataFormatError("source label count does not match source samples")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(xt))):
            raise DataFormatError("feature entries must be finite")
        c = int(self.class_count)
        if c < 1 or xs.shape[1] < c or xt.shape[1] < 1:
            raise DataFormatError("need Ns >= C >= 1 and Nt >= 1")
        if ls.min() < 1 or ls.max() > c:
            raise DataFormatError(f"source labels must lie in 1..{c}")
        if np.unique(ls).size != c:
            raise DataFormatError("every class must appear in the source labels")
        lt = self.target_labels
        if lt is not None:
            lt = np.asarray(lt, dtype=np.int64).ravel()
            if lt.shape[0] != xt.shape[1]:
                raise DataFormatError("target label count does not match target samples")
            if lt.min() < 1 or lt.max() > c:
                raise DataFormatError(f"target labels must lie in 1..{c}")
            lt.flags.writeable = False
        for a in (xs, xt, ls):
            a.flags.writeable = False
        object.__setattr__(self, "source_features", xs)
        object.__setattr__(self, "target_features", xt)
        object.__setattr__(self, "source_labels", ls)
        object.__setattr__(self, "target_labels", lt)
        object.__setattr__(self, "class_count", c)

    @property
    def dim(self) -> int:
        return self.source_features.shape[0]

    @property
    def n_source(self) -> int:
        return self.source_features.shape[1]

    @property
    def n_target(self) -> int:
        return self.target_features.shape[1]

    @property
    def features(self) -> np.ndarray:
        """Pooled ``[Xs, Xt]`` matrix, source columns first."""
        return np.hstack([self.source_features, self.target_features])

    def digest(self) -> str:
        """Stable content hash of features and labels."""
        h = hashlib.sha256()
        for a in (self.source_features, self.source_labels, self.target_features):
            h.update(np.ascontiguousarray(a).tobytes())
        if self.target_labels is not None:
            h.update(np.ascontiguousarray(self.target_labels).tobytes())
        return h.hexdigest()


@dataclass(frozen=True)
class SyntheticShiftSpec:
    class_count: int = 3
    samples_per_class_source: int = 20
    samples_per_class_target: int = 20
    dimension: int = 10
    rotation_angle_degrees: float = 30.0
    translation_magnitude: float = 1.0
    noise_sigma: float = 0.3
    seed: int = 7

    def __post_init__(self):
        if not 0.0 <= self.rotation_angle_degrees < 180.0:
            raise ConfigError("rotation angle must lie in [0, 180)")
        if min(self.class_count, self.samples_per_class_source,
               self.samples_per_class_target) < 1:
            raise ConfigError("class and sample counts must be positive")
        if self.dimension < 2:
            raise ConfigError("dimension must be at least 2")
        if self.noise_sigma < 0 or self.translation_magnitude < 0:
            raise ConfigError("noise and translation must be non-negative")


@dataclass(frozen=True)
class Normalizer:
    """Pooled z-score followed by per-sample unit norm, frozen at fit time."""

    mean: np.ndarray
    scale: np.ndarray = field(repr=False)

    @classmethod
    def fit(cls, features: np.ndarray) -> "Normalizer":
        mean = features.mean(axis=1)
        std = features.std(axis=1)
        # zero-variance features stay centered at 0
        scale = np.where(std > 0, std, 1.0)
        return cls(mean, scale)

    def apply(self, features: np.ndarray) -> np.ndarray:
        z = (features - self.mean[:, None]) / self.scale[:, None]
        norms = np.linalg.norm(z, axis=0)
        safe = np.where(norms > 0, norms, 1.0)
        return z / safe


def one_hot(labels, class_count: int, total: int, offset: int = 0) -> np.ndarray:
    """C x N indicator matrix with sample ``offset + n`` marked by ``labels[n]``."""
    labels = np.asarray(labels, dtype=np.int64).ravel()
    if labels.size and (labels.min() < 1 or labels.max() > class_count):
        raise DataFormatError(f"labels must lie in 1..{class_count}")
    if offset < 0 or offset + labels.size > total:
        raise DataFormatError("label block does not fit in the requested width")
    h = np.zeros((class_count, total))
    h[labels - 1, offset + np.arange(labels.size)] = 1.0
    return h


def normalize(dataset: DomainDataset) -> DomainDataset:
    norm = Normalizer.fit(dataset.features)
    ns = dataset.n_source
    x = norm.apply(dataset.features)
    return DomainDataset(x[:, :ns], dataset.source_labels, x[:, ns:],
                         dataset.class_count, dataset.target_labels)


def _read_feature_csv(path) -> tuple[np.ndarray, np.ndarray]:
    path = Path(path)
    if not path.is_file():
        raise DataFormatError(f"no such file: {path}")
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            try:
                label = int(fields[0])
                values = [float(v) for v in fields[1:]]
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: {exc}") from None
            rows.append((label, values))
    if not rows:
        raise DataFormatError(f"{path}: empty feature file")
    width = len(rows[0][1])
    if width == 0 or any(len(v) != width for _, v in rows):
        raise DataFormatError(f"{path}: rows have inconsistent feature counts")
    labels = np.array([r[0] for r in rows], dtype=np.int64)
    x = np.array([r[1] for r in rows], dtype=float).T
    if not np.all(np.isfinite(x)):
        raise DataFormatError(f"{path}: non-finite feature entries")
    return labels, x


def load_dataset(source_path, target_path) -> DomainDataset:
    ls, xs = _read_feature_csv(source_path)
    lt, xt = _read_feature_csv(target_path)
    if xs.shape[0] != xt.shape[0]:
        raise DataFormatError(
            f"source has {xs.shape[0]} features but target has {xt.shape[0]}")
    if np.any(ls < 1):
        raise DataFormatError("source rows must all be labeled")
    classes = np.unique(ls)
    if not np.array_equal(classes, np.arange(1, classes.size + 1)):
        raise DataFormatError(f"source class ids must be contiguous 1..C, got {classes}")
    c = int(classes.size)
    target_labels = None
    if np.any(lt != UNLABELED):
        if np.any(lt == UNLABELED):
            raise DataFormatError("target labels must be all present or all -1")
        if lt.min() < 1 or lt.max() > c:
            raise DataFormatError(f"target labels must lie in 1..{c}")
        target_labels = lt
    return DomainDataset(xs, ls, xt, c, target_labels)


def write_feature_csv(path, features: np.ndarray, labels=None) -> None:
    """Write one sample per row: ``label,f1,...,fD`` with 17 significant digits."""
    n = features.shape[1]
    labels = np.full(n, UNLABELED) if labels is None else np.asarray(labels)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for j in range(n):
            fh.write(",".join([str(int(labels[j]))]
                              + [f"{v:.17g}" for v in features[:, j]]) + "\n")


def class_means(spec: SyntheticShiftSpec) -> np.ndarray:
    """D x C matrix of class centers, ``4 * e_(c mod D)`` for c = 1..C."""
    means = np.zeros((spec.dimension, spec.class_count))
    for c in range(1, spec.class_count + 1):
        means[c % spec.dimension, c - 1] = 4.0
    return means


def generate_synthetic(spec: SyntheticShiftSpec) -> DomainDataset:
    """Gaussian classes in the source; rotated and translated copy as target."""
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    means = class_means(spec)
    d, c = spec.dimension, spec.class_count

    def draw(per_class):
        labels = np.repeat(np.arange(1, c + 1), per_class)
        noise = rng.standard_normal((d, labels.size)) * spec.noise_sigma
        return means[:, labels - 1] + noise, labels

    xs, ls = draw(spec.samples_per_class_source)
    xt, lt = draw(spec.samples_per_class_target)
    theta = np.deg2rad(spec.rotation_angle_degrees)
    rot = np.array([[np.cos(theta), -np.sin(theta)],
                    [np.sin(theta), np.cos(theta)]])
    xt[:2] = rot @ xt[:2]
    direction = np.ones(d) / np.sqrt(d)
    xt = xt + spec.translation_magnitude * direction[:, None]
    return DomainDataset(xs, ls, xt, c, lt)
