"""Command-line front end: ``ggls adapt``, ``ggls ablate`` and ``ggls synth``.

Exit status is 0 on success, 2 for configuration errors, 3 for data errors
and 4 for numeric failures.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import os
import sys
import tempfile
import time
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import __version__
from .config import GglsConfig, load_config
from .data import (DomainDataset, SyntheticShiftSpec, generate_synthetic,
                   load_dataset, write_feature_csv)
from .errors import ConfigError, DataFormatError, EvalError, GglsError
from .evaluation import VARIANTS, accuracy, evaluate_fit
from .solver import fit

log = logging.getLogger("ggls")

EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 2, 3, 4

_SYNTH_ALIASES = {
    "classes": "class_count",
    "source_per_class": "samples_per_class_source",
    "target_per_class": "samples_per_class_target",
    "per_class": ("samples_per_class_source", "samples_per_class_target"),
    "dim": "dimension",
    "angle": "rotation_angle_degrees",
    "translation": "translation_magnitude",
    "noise": "noise_sigma",
}

# flag dest -> config field
_FLAG_FIELDS = {
    "beta": "beta", "gamma": "gamma", "lambda1": "lambda1", "lambda2": "lambda2",
    "dim": "subspace_dim", "neighbors": "neighbor_count", "iterations": "max_iterations",
    "kernel": "kernel", "bandwidth": "bandwidth", "no_landmark": "no_landmark",
    "no_manifold": "no_manifold", "no_kernel": "no_kernel", "seed": "seed",
    "mu_order": "mu_update_order", "no_normalize": "normalize",
}


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def parse_synthetic(text: str, seed: int | None = None) -> SyntheticShiftSpec:
    """``key=value`` pairs separated by commas; unspecified keys keep defaults."""
    valid = {f.name: f.type for f in fields(SyntheticShiftSpec)}
    kw = {}
    for item in filter(None, (s.strip() for s in (text or "").split(","))):
        if "=" not in item:
            raise ConfigError(f"bad synthetic spec item {item!r}")
        key, value = (s.strip() for s in item.split("=", 1))
        names = _SYNTH_ALIASES.get(key, key)
        for name in (names if isinstance(names, tuple) else (names,)):
            if name not in valid:
                raise ConfigError(f"unknown synthetic spec key {key!r}")
            try:
                kw[name] = float(value) if valid[name] == "float" else int(value)
            except ValueError:
                raise ConfigError(f"bad value for {key}: {value!r}") from None
    if seed is not None and "seed" not in kw:
        kw["seed"] = seed
    return SyntheticShiftSpec(**kw)


def format_synthetic(spec: SyntheticShiftSpec) -> str:
    return ",".join(f"{f.name}={getattr(spec, f.name)}" for f in fields(spec))


def _bandwidth(text: str):
    if text == "median":
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("bandwidth must be 'median' or a float") from None


def build_config(args) -> GglsConfig:
    base = load_config(args.config) if args.config else GglsConfig()
    overrides = {}
    for dest, name in _FLAG_FIELDS.items():
        value = getattr(args, dest, None)
        if value is None or value is False:
            continue
        overrides[name] = False if dest == "no_normalize" else value
    return base.with_overrides(**overrides)


def _digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def load_inputs(args):
    """Dataset plus manifest entries describing where it came from."""
    if args.synthetic is not None:
        spec = parse_synthetic(args.synthetic, args.seed)
        ds = generate_synthetic(spec)
        return ds, {"synthetic": format_synthetic(spec), "dataset_sha256": ds.digest()}
    if not (args.source and args.target):
        raise ConfigError("need --source and --target, or --synthetic")
    ds = load_dataset(args.source, args.target)
    return ds, {
        "source": str(args.source), "source_sha256": _digest(args.source),
        "target": str(args.target), "target_sha256": _digest(args.target),
    }


def atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_predictions(path: Path, labels) -> None:
    lines = ["index,label"] + [f"{i},{int(v)}" for i, v in enumerate(labels)]
    atomic_write(path, "\n".join(lines) + "\n")


def read_predictions(path) -> np.ndarray:
    rows = Path(path).read_text(encoding="utf-8").splitlines()[1:]
    return np.array([int(r.split(",")[1]) for r in rows if r.strip()], dtype=np.int64)


def write_trace(path: Path, trace) -> None:
    lines = ["iteration,objective,mu,accuracy"]
    for r in trace:
        acc = "" if r.accuracy is None else _fmt(r.accuracy)
        lines.append(f"{r.iteration},{_fmt(r.objective)},{_fmt(r.mu)},{acc}")
    atomic_write(path, "\n".join(lines) + "\n")


def write_embeddings(path: Path, model, dataset: DomainDataset) -> None:
    y = model.embedded
    c = y.shape[0]
    lines = ["domain,index,label," + ",".join(f"y{i + 1}" for i in range(c))]
    ns = dataset.n_source
    for j in range(y.shape[1]):
        if j < ns:
            dom, idx, lab = "source", j, dataset.source_labels[j]
        else:
            dom, idx = "target", j - ns
            lab = -1 if dataset.target_labels is None else dataset.target_labels[idx]
        lines.append(f"{dom},{idx},{int(lab)}," + ",".join(_fmt(v) for v in y[:, j]))
    atomic_write(path, "\n".join(lines) + "\n")


def write_manifest(path: Path, entries: dict) -> None:
    atomic_write(path, "".join(f"{k} = {v}\n" for k, v in entries.items()))


def _prepare_out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def fit_subspace_dim(config: GglsConfig, dataset: DomainDataset, args) -> GglsConfig:
    """Cap an implicit subspace dimension at D/2 for synthetic data."""
    if args.synthetic is None or args.dim is not None or config.no_manifold:
        return config
    cap = max(1, dataset.dim // 2)
    if config.subspace_dim > cap:
        log.info("synthetic data has D=%d; using subspace_dim=%d", dataset.dim, cap)
        return config.with_overrides(subspace_dim=cap)
    return config


def cmd_adapt(args) -> int:
    start = time.perf_counter()
    config = build_config(args)
    dataset, inputs = load_inputs(args)
    config = fit_subspace_dim(config, dataset, args)
    out = _prepare_out(args)
    model = fit(dataset, config)
    paths = {"predictions": out / "predictions.csv", "trace": out / "trace.csv",
             "config": out / "config.txt"}
    write_predictions(paths["predictions"], model.pseudo_labels)
    write_trace(paths["trace"], model.trace)
    atomic_write(paths["config"], config.dumps())
    if args.emit_embeddings:
        paths["embeddings"] = out / "embeddings.csv"
        write_embeddings(paths["embeddings"], model, dataset)
    manifest = {"version": __version__, "command": "adapt", **inputs}
    manifest.update({f"config.{k}": v for k, v in
                     (line.split(" = ", 1) for line in config.dumps().splitlines())})
    manifest.update({f"output.{k}": str(p) for k, p in paths.items()})
    manifest["iterations"] = model.iterations
    if dataset.target_labels is not None:
        acc = accuracy(model.pseudo_labels, dataset.target_labels)
        manifest["accuracy"] = _fmt(acc)
        print(f"accuracy {acc * 100:.2f}%")
    manifest["duration_seconds"] = f"{time.perf_counter() - start:.3f}"
    write_manifest(out / "manifest.txt", manifest)
    return 0


def cmd_ablate(args) -> int:
    start = time.perf_counter()
    config = build_config(args)
    dataset, inputs = load_inputs(args)
    config = fit_subspace_dim(config, dataset, args)
    if dataset.target_labels is None:
        raise EvalError("ablation needs labeled target rows")
    out = _prepare_out(args)
    lines = ["variant,accuracy,duration_seconds"]
    manifest = {"version": __version__, "command": "ablate", **inputs}
    manifest.update({f"config.{k}": v for k, v in
                     (line.split(" = ", 1) for line in config.dumps().splitlines())})
    for name, flags in VARIANTS:
        rep = evaluate_fit(dataset, config.with_overrides(**flags))
        pred_path = out / f"predictions_{name}.csv"
        write_predictions(pred_path, rep.predictions)
        lines.append(f"{name},{_fmt(rep.accuracy)},{rep.duration_seconds:.3f}")
        manifest[f"output.predictions.{name}"] = str(pred_path)
        print(f"{name:16s} {rep.accuracy * 100:6.2f}%")
    atomic_write(out / "summary.csv", "\n".join(lines) + "\n")
    manifest["output.summary"] = str(out / "summary.csv")
    manifest["duration_seconds"] = f"{time.perf_counter() - start:.3f}"
    write_manifest(out / "manifest.txt", manifest)
    return 0


def cmd_synth(args) -> int:
    spec = parse_synthetic(args.spec or "", args.seed)
    ds = generate_synthetic(spec)
    out = _prepare_out(args)
    write_feature_csv(out / "source.csv", ds.source_features, ds.source_labels)
    write_feature_csv(out / "target.csv", ds.target_features, ds.target_labels)
    print(f"wrote {out / 'source.csv'} and {out / 'target.csv'}")
    return 0


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--source", type=Path)
    p.add_argument("--target", type=Path)
    p.add_argument("--config", type=Path, help="flat 'key = value' config file")
    p.add_argument("--out", type=Path, default=Path("ggls-out"))
    p.add_argument("--beta", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--lambda1", type=float)
    p.add_argument("--lambda2", type=float)
    p.add_argument("--dim", type=int, help="subspace dimension d")
    p.add_argument("--neighbors", type=int, help="neighbor count k")
    p.add_argument("--iterations", type=int, help="maximum iterations T")
    p.add_argument("--kernel", choices=("rbf", "linear"))
    p.add_argument("--bandwidth", type=_bandwidth)
    p.add_argument("--no-landmark", action="store_true")
    p.add_argument("--no-manifold", action="store_true")
    p.add_argument("--no-kernel", action="store_true")
    p.add_argument("--no-normalize", action="store_true")
    p.add_argument("--mu-order", choices=("before", "after"))
    p.add_argument("--synthetic", metavar="SPEC",
                   help="generate data instead of reading CSVs, e.g. 'seed=7,angle=45'")
    p.add_argument("--seed", type=int)
    p.add_argument("--emit-embeddings", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ggls", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("adapt", help="fit on source/target and label the target")
    _add_run_flags(p)
    p.set_defaults(func=cmd_adapt)

    p = sub.add_parser("ablate", help="run the five ablation variants")
    _add_run_flags(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("synth", help="write a synthetic shifted source/target pair")
    p.add_argument("--spec", default="", help="e.g. 'classes=3,dim=10,angle=30'")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path, default=Path("."))
    p.set_defaults(func=cmd_synth)
    return parser


def _origin(exc: BaseException) -> str:
    tb = exc.__traceback__
    name = "ggls"
    while tb is not None:
        mod = tb.tb_frame.f_globals.get("__name__", "")
        if mod.startswith("ggls."):
            name = mod
        tb = tb.tb_next
    return name


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except GglsError as exc:
        if isinstance(exc, ConfigError):
            code = EXIT_CONFIG
        elif isinstance(exc, (DataFormatError, EvalError)):
            code = EXIT_DATA
        else:
            code = EXIT_NUMERIC
        print(f"error [{_origin(exc)}]: {exc}", file=sys.stderr)
        return code

if __name__ == "__main__":
    sys.exit(main())
