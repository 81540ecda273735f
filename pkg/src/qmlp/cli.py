"""Command-line experiments: train, noise-sweep, compare, gen-data, plot.

Every command reads an optional JSON config (``--config``), lets flags
override it, and writes deterministic CSV/JSON artifacts under ``--out``.
Exit codes: 0 success, 1 usage/config/input error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .circuit import CircuitError
from .data import (
    FAMILIES,
    TWO_PI,
    DataError,
    Dataset,
    SyntheticSpec,
    generate_synthetic,
    load_iris,
    scale_features,
    train_test_split,
    write_csv,
)
from .model import HybridModel, ModelError, evaluate, init_model, train
from .plot import PlotError, render_svg
from .simulator import NoiseConfig, SimulationError

DEFAULT_SCALES = [0.25, 0.5, 1.0, 2.0, 4.0]


class ConfigError(ValueError):
    pass


USER_ERRORS = (ConfigError, DataError, ModelError, PlotError, CircuitError, SimulationError)


def _defaults() -> dict:
    return {
        "dataset": {"family": "R1_sq", "samples_per_class": None, "seed": 0},
        "architecture": {"kind": "qmlp", "layers": [4]},
        "training": {"epochs": 50, "batch_size": 30, "learning_rate": 0.5, "seeds": [0]},
        "noise_sweep": {"p1": 0.001, "p2": 0.01, "scales": list(DEFAULT_SCALES), "shots": None, "seed": 0},
        "out": "runs",
    }


@dataclass
class ExperimentConfig:
    dataset: dict
    architecture: dict
    training: dict
    noise_sweep: dict
    out: str

    @classmethod
    def from_dict(cls, raw: Optional[dict] = None) -> "ExperimentConfig":
        cfg = _defaults()
        raw = raw or {}
        unknown = set(raw) - set(cfg)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key in ("architecture", "training", "noise_sweep"):
            cfg[key].update(raw.get(key, {}))
        if "dataset" in raw:
            cfg["dataset"] = dict(raw["dataset"])
        if "out" in raw:
            cfg["out"] = raw["out"]
        conf = cls(**cfg)
        conf.validate()
        return conf

    @classmethod
    def load(cls, path: Optional[str]) -> "ExperimentConfig":
        if path is None:
            return cls.from_dict({})
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        try:
            return cls.from_dict(json.loads(p.read_text()))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{p}: invalid JSON ({exc})") from None

    def to_dict(self) -> dict:
        """Resolved config as echoed into reports (the output location is left out)."""
        return {
            "dataset": self.dataset,
            "architecture": self.architecture,
            "training": self.training,
            "noise_sweep": self.noise_sweep,
        }

    def validate(self) -> None:
        ds = self.dataset
        if "iris" in ds:
            if set(ds) - {"iris"}:
                raise ConfigError("an iris dataset takes only the 'iris' key (path or null)")
        else:
            ds.setdefault("seed", 0)
            ds.setdefault("samples_per_class", None)
            if ds.get("family") not in FAMILIES:
                raise ConfigError(f"dataset family must be one of {sorted(FAMILIES)}, got {ds.get('family')!r}")
            if ds["samples_per_class"] is None:
                ds["samples_per_class"] = SyntheticSpec(ds["family"]).samples_per_class
        arch = self.architecture
        if arch.get("kind") not in ("qmlp", "deepqmlp"):
            raise ConfigError(f"architecture kind must be 'qmlp' or 'deepqmlp', got {arch.get('kind')!r}")
        layers = arch.get("layers")
        if not isinstance(layers, list) or not layers or not all(isinstance(L, int) and L >= 1 for L in layers):
            raise ConfigError(f"architecture layers must be a list of positive ints, got {layers!r}")
        if arch["kind"] == "qmlp" and len(layers) != 1:
            raise ConfigError("a qmlp has exactly one hidden layer")
        if arch["kind"] == "deepqmlp" and len(layers) < 2:
            raise ConfigError("a deepqmlp has at least two hidden layers")
        tr = self.training
        for key in ("epochs", "batch_size"):
            if not isinstance(tr[key], int) or tr[key] < (0 if key == "epochs" else 1):
                raise ConfigError(f"training.{key} invalid: {tr[key]!r}")
        if not tr["learning_rate"] > 0:
            raise ConfigError("training.learning_rate must be positive")
        if not tr["seeds"] or not all(isinstance(s, int) for s in tr["seeds"]):
            raise ConfigError(f"training.seeds must be a non-empty list of ints, got {tr['seeds']!r}")
        ns = self.noise_sweep
        try:
            for s in ns["scales"]:
                NoiseConfig(ns["p1"], ns["p2"], s, ns["shots"])
        except (SimulationError, TypeError) as exc:
            raise ConfigError(f"noise_sweep invalid: {exc}") from None


# -- dataset resolution ------------------------------------------------------


def load_datasets(ds_conf: dict) -> tuple[Dataset, Optional[Dataset], str]:
    """(scaled train set, scaled test set or None, dataset name)."""
    if "iris" in ds_conf:
        raw = load_iris(ds_conf["iris"])
        return scale_features(raw, TWO_PI), None, "iris"
    spec = SyntheticSpec(ds_conf["family"], ds_conf["samples_per_class"], ds_conf["seed"])
    train_set, test_set = train_test_split(spec)
    return train_set, test_set, spec.family


def model_id(kind: str, dataset_name: str, layers: list[int], seed: int) -> str:
    return f"{kind}_{dataset_name}_L{'-'.join(map(str, layers))}_s{seed}"


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_rows(path: Path, header: list[str], rows: list[list]) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


# -- commands ----------------------------------------------------------------


def run_train(config: ExperimentConfig) -> list[Path]:
    """Train one model per seed; write ``<id>.model.json``, ``<id>_history.csv`` and ``train_report.json``."""
    train_set, test_set, name = load_datasets(config.dataset)
    arch, tr = config.architecture, config.training
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    written, runs = [], []
    for seed in tr["seeds"]:
        model = init_model(train_set.n_features, arch["layers"], train_set.n_classes, seed, train_set.scaling)
        mid = model_id(arch["kind"], name, arch["layers"], seed)
        model.metadata = {"model_id": mid, "dataset": config.dataset}
        history = train(model, train_set, tr["epochs"], min(tr["batch_size"], len(train_set)), seed, tr["learning_rate"])
        mpath, hpath = out / f"{mid}.model.json", out / f"{mid}_history.csv"
        model.save(mpath)
        _write_rows(hpath, ["epoch", "loss", "accuracy"], [[h.epoch, _fmt(h.loss), _fmt(h.accuracy)] for h in history])
        run = {
            "model_id": mid,
            "seed": seed,
            "trainables": model.n_trainable,
            "history": [[h.epoch, h.loss, h.accuracy] for h in history],
        }
        run["train"] = dict(zip(("loss", "accuracy"), evaluate(model, train_set)))
        if test_set is not None:
            run["test"] = dict(zip(("loss", "accuracy"), evaluate(model, test_set)))
        runs.append(run)
        written += [mpath, hpath]
    rpath = out / "train_report.json"
    _write_json(rpath, {"config": config.to_dict(), "runs": runs})
    return written + [rpath]


def _sweep_scales(config: ExperimentConfig) -> list[float]:
    return sorted({0.0, *map(float, config.noise_sweep["scales"])})


def _noise(config: ExperimentConfig, scale: float) -> NoiseConfig:
    ns = config.noise_sweep
    return NoiseConfig(ns["p1"], ns["p2"], scale, ns["shots"])


def _model_datasets(model: HybridModel, config: ExperimentConfig, cache: dict):
    ds_conf = model.metadata.get("dataset", config.dataset)
    key = json.dumps(ds_conf, sort_keys=True)
    if key not in cache:
        cache[key] = load_datasets(ds_conf)
    return cache[key]


def _evaluate_scales(model, datasets, config) -> dict:
    train_set, test_set, _ = datasets
    seed = config.noise_sweep["seed"]
    res = {}
    for scale in _sweep_scales(config):
        noise = _noise(config, scale)
        entry = {"train": dict(zip(("loss", "accuracy"), evaluate(model, train_set, noise, seed)))}
        if test_set is not None:
            entry["test"] = dict(zip(("loss", "accuracy"), evaluate(model, test_set, noise, seed)))
        res[repr(scale)] = entry
    return res


def _load_models(paths: list[str]) -> list[tuple[str, HybridModel]]:
    out = []
    for p in paths:
        m = HybridModel.load(p)
        out.append((m.metadata.get("model_id", Path(p).name.split(".")[0]), m))
    return out


def run_noise_sweep(config: ExperimentConfig, model_paths: list[str]) -> list[Path]:
    """Evaluate each model at scale 0 and every configured scale on its training data."""
    if not model_paths:
        raise ConfigError("noise-sweep needs at least one model file")
    models = _load_models(model_paths)
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    cache: dict = {}
    rows, report = [], {}
    for mid, model in models:
        res = _evaluate_scales(model, _model_datasets(model, config, cache), config)
        report[mid] = res
        for scale, entry in res.items():
            rows.append([mid, float(scale), entry["train"]["loss"], entry["train"]["accuracy"]])
    rows.sort(key=lambda r: (r[0], r[1]))
    spath = out / "sweep.csv"
    _write_rows(spath, ["model_id", "scale", "loss", "accuracy"], [[r[0], _fmt(r[1]), _fmt(r[2]), _fmt(r[3])] for r in rows])
    rpath = out / "sweep_report.json"
    _write_json(rpath, {"config": config.to_dict(), "models": report})
    return [spath, rpath]


def compare_pairs(pairs, config: ExperimentConfig) -> dict:
    """Per-scale mean training loss/accuracy per architecture, plus DeepQMLP - QMLP deltas."""
    cache: dict = {}
    per_scale: dict = {}
    pair_info = []
    for (qid, q), (did, d) in pairs:
        if q.kind != "qmlp" or d.kind != "deepqmlp":
            raise ConfigError(f"pair ({qid}, {did}) must be (qmlp, deepqmlp)")
        if q.n_trainable != d.n_trainable:
            raise ConfigError(f"pair ({qid}, {did}) has {q.n_trainable} vs {d.n_trainable} trainables")
        if q.metadata.get("dataset") != d.metadata.get("dataset"):
            raise ConfigError(f"pair ({qid}, {did}) was trained on different datasets")
        pair_info.append({"qmlp": qid, "deepqmlp": did, "trainables": q.n_trainable})
        for arch, m in (("qmlp", q), ("deepqmlp", d)):
            res = _evaluate_scales(m, _model_datasets(m, config, cache), config)
            for scale, entry in res.items():
                per_scale.setdefault(scale, {"qmlp": [], "deepqmlp": []})[arch].append(entry["train"])
    scales = {}
    for scale in sorted(per_scale, key=float):
        block = {}
        for arch in ("qmlp", "deepqmlp"):
            vals = per_scale[scale][arch]
            block[arch] = {
                "loss": float(np.mean([v["loss"] for v in vals])),
                "accuracy": float(np.mean([v["accuracy"] for v in vals])),
            }
        ql, dl = block["qmlp"]["loss"], block["deepqmlp"]["loss"]
        block["delta"] = {
            "loss": dl - ql,
            "accuracy": block["deepqmlp"]["accuracy"] - block["qmlp"]["accuracy"],
            "relative_loss": (dl - ql) / ql if ql > 0 else 0.0,
        }
        scales[scale] = block
    return {"config": config.to_dict(), "pairs": pair_info, "scales": scales}


def run_compare(config: ExperimentConfig, qmlp_paths: list[str], deep_paths: list[str]) -> Path:
    if not qmlp_paths or len(qmlp_paths) != len(deep_paths):
        raise ConfigError(f"need equal, non-zero numbers of qmlp and deepqmlp models ({len(qmlp_paths)} vs {len(deep_paths)})")
    pairs = list(zip(_load_models(qmlp_paths), _load_models(deep_paths)))
    report = compare_pairs(pairs, config)
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "compare.json"
    _write_json(path, report)
    return path


def run_gen_data(family: str, samples_per_class: Optional[int], seed: int, out: str) -> Path:
    spec = SyntheticSpec(family, samples_per_class or 0, seed)
    path = Path(out)
    write_csv(generate_synthetic(spec), path)
    return path


# -- argument parsing ----------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _seed_list(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qmlp", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", help="JSON experiment config")
        sp.add_argument("--out", help="output directory (overrides config 'out')")
        sp.add_argument("--seed", type=_seed_list, help="comma-separated seeds (overrides config)")

    t = sub.add_parser("train", help="train one model per seed")
    common(t)
    t.add_argument("--family", choices=sorted(FAMILIES))
    t.add_argument("--iris", nargs="?", const="", metavar="CSV", help="use Iris (bundled table if no path)")
    t.add_argument("--arch", choices=["qmlp", "deepqmlp"])
    t.add_argument("--layers", type=_seed_list, help="parametric layers per hidden layer, e.g. 2,2")
    t.add_argument("--epochs", type=int)

    s = sub.add_parser("noise-sweep", help="evaluate trained models under scaled depolarizing noise")
    common(s)
    s.add_argument("models", nargs="+", help="model JSON files")
    s.add_argument("--p1", type=float)
    s.add_argument("--p2", type=float)
    s.add_argument("--scales", type=_float_list)
    s.add_argument("--shots", type=int)

    c = sub.add_parser("compare", help="paired QMLP vs DeepQMLP noise comparison")
    common(c)
    c.add_argument("--qmlp", nargs="+", required=True, help="QMLP model files")
    c.add_argument("--deep", nargs="+", required=True, help="DeepQMLP model files, same order")
    c.add_argument("--scales", type=_float_list)
    c.add_argument("--shots", type=int)

    g = sub.add_parser("gen-data", help="write a synthetic dataset CSV")
    g.add_argument("--family", required=True)
    g.add_argument("--samples-per-class", type=int)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="output CSV path")

    pl = sub.add_parser("plot", help="render history or sweep CSVs as SVG")
    pl.add_argument("csvs", nargs="+")
    pl.add_argument("--out", required=True, help="output SVG path")
    return p


def _resolve_config(args) -> ExperimentConfig:
    raw = {}
    if args.config:
        p = Path(args.config)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        try:
            raw = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{p}: invalid JSON ({exc})") from None
    raw = copy.deepcopy(raw)
    if args.out:
        raw["out"] = args.out
    if args.seed:
        raw.setdefault("training", {})["seeds"] = args.seed
        raw.setdefault("noise_sweep", {})["seed"] = args.seed[0]
    if args.command == "train":
        if args.family:
            raw["dataset"] = {"family": args.family, "seed": raw.get("dataset", {}).get("seed", 0)}
        if args.iris is not None:
            raw["dataset"] = {"iris": args.iris or None}
        if args.arch:
            raw.setdefault("architecture", {})["kind"] = args.arch
        if args.layers:
            raw.setdefault("architecture", {})["layers"] = args.layers
        if args.epochs is not None:
            raw.setdefault("training", {})["epochs"] = args.epochs
    for key in ("p1", "p2", "scales", "shots"):
        val = getattr(args, key, None)
        if val is not None:
            raw.setdefault("noise_sweep", {})[key] = val
    return ExperimentConfig.from_dict(raw)


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "gen-data":
            path = run_gen_data(args.family, args.samples_per_class, args.seed, args.out)
            print(path)
        elif args.command == "plot":
            render_svg(args.csvs, args.out)
            print(args.out)
        else:
            config = _resolve_config(args)
            if args.command == "train":
                paths = run_train(config)
            elif args.command == "noise-sweep":
                paths = run_noise_sweep(config, args.models)
            else:
                paths = [run_compare(config, args.qmlp, args.deep)]
            for p in paths:
                print(p)
    except USER_ERRORS as exc:
        print(f"qmlp {args.command}: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"qmlp {args.command}: runtime failure: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
