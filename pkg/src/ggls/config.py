"""Hyperparameters for fitting, with a flat ``key = value`` file format."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .errors import ConfigError
from .kernel import MEDIAN, KernelSpec

MU_BEFORE = "before"
MU_AFTER = "after"


@dataclass(frozen=True)
class GglsConfig:
    """All hyperparameters of a run.

    Defaults are the Office-Caltech SURF settings: beta = gamma = 0.1,
    lambda1 = 0.001, lambda2 = 0.01, d = 30, k = 3, T = 10.

    ``mu_update_order`` selects when the balance factor is re-estimated:
    ``"before"`` the projection solve (from the previous projection) or
    ``"after"`` it (taking effect on the next iteration). With
    ``estimate_mu`` off, mu stays at ``initial_mu`` throughout.
    """

    beta: float = 0.1
    gamma: float = 0.1
    lambda1: float = 0.001
    lambda2: float = 0.01
    subspace_dim: int = 30
    neighbor_count: int = 3
    max_iterations: int = 10
    kernel: str = "rbf"
    bandwidth: float | str = MEDIAN
    no_landmark: bool = False
    no_manifold: bool = False
    no_kernel: bool = False
    mu_update_order: str = MU_BEFORE
    estimate_mu: bool = True
    initial_mu: float = 0.5
    normalize: bool = True
    seed: int = 0

    def __post_init__(self):
        for name in ("beta", "gamma", "lambda1", "lambda2"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v >= 0):
                raise ConfigError(f"{name} must be finite and non-negative, got {v!r}")
        for name in ("subspace_dim", "neighbor_count", "max_iterations"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be at least 1")
        if self.mu_update_order not in (MU_BEFORE, MU_AFTER):
            raise ConfigError(f"mu_update_order must be {MU_BEFORE!r} or {MU_AFTER!r}")
        if not 0.0 <= self.initial_mu <= 1.0:
            raise ConfigError("initial_mu must lie in [0, 1]")
        try:
            self.kernel_spec()
        except Exception as exc:
            raise ConfigError(str(exc)) from None

    def kernel_spec(self) -> KernelSpec:
        if self.no_kernel:
            return KernelSpec("linear")
        return KernelSpec(self.kernel, self.bandwidth)

    def with_overrides(self, **kw) -> "GglsConfig":
        return replace(self, **kw)

    def to_dict(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return "".join(f"{k} = {_format(v)}\n" for k, v in self.to_dict().items())


def _format(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _coerce(name: str, raw: str, default):
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            low = raw.lower()
            if low in ("true", "1", "yes", "on"):
                return True
            if low in ("false", "0", "no", "off"):
                return False
            raise ValueError(raw)
        if name == "bandwidth":
            return MEDIAN if raw == MEDIAN else float(raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment; unknown keys fail."""
    defaults = {f.name: f.default for f in fields(GglsConfig)}
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in defaults:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        out[key] = _coerce(key, value, defaults[key])
    return out


def load_config(path) -> GglsConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return GglsConfig(**parse_config_text(text))
