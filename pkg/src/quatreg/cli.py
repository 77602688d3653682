"""Experiment runner: build a dictionary, corrupt the test split, classify, report.

Usage::

    python -m quatreg --config experiment.cfg [--solver rnqmr] [--seed 0]
                      [--threads 4] [--out results/] [--deterministic]

The config file is flat ``key = value`` text (``#`` starts a comment). Numeric
solver parameters may be comma-separated lists; all combinations are then
run and the best recognition rate is reported with its parameters.

Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import csv
import itertools
import json
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .classify import LabeledDictionary, classify_nqmr, classify_rnqmr
from .dataio import CorruptionRecipe, corrupt, load_image, read_manifest, synth_dataset
from .errors import ConfigError
from .nqmr import NqmrConfig
from .quat_core import QuaternionMatrix
from .rnqmr import RnqmrConfig

log = logging.getLogger("quatreg")

NQMR_PARAMS = {"lambda": "lam", "mu": "mu", "eps_rel": "eps_rel", "max_iter": "max_iter"}
RNQMR_PARAMS = {
    "omega": "omega", "alpha": "alpha", "beta": "beta", "eta": "eta", "mu": "mu",
    "epsilon_log": "epsilon_log", "eps_rel": "eps_rel", "max_iter": "max_iter",
}
OTHER_KEYS = {
    "manifest", "image_size", "synth_classes", "synth_per_class", "synth_test_per_class",
    "synth_size", "synth_noise", "solver", "final_weights", "block_fraction", "block_source",
    "block_image", "sp_probability", "gaussian_variance", "seed", "threads", "out", "deterministic",
}
CSV_COLUMNS = ["queryId", "trueClass", "predictedClass", "correct", "iterations", "wallTimeMs"]


@dataclass
class ExperimentConfig:
    solver: str = "nqmr"
    manifest: Optional[str] = None
    image_size: Optional[tuple[int, int]] = None
    synth_classes: Optional[int] = None
    synth_per_class: int = 4
    synth_test_per_class: int = 2
    synth_size: tuple[int, int] = (8, 8)
    synth_noise: float = 0.02
    # parameter name -> list of values; more than one value means a sweep
    params: dict[str, list[float]] = field(default_factory=dict)
    final_weights: str = "last"
    recipe: CorruptionRecipe = field(default_factory=CorruptionRecipe)
    seed: int = 0
    threads: int = 1
    out: str = "results"
    deterministic: bool = False

    def validate(self) -> None:
        if self.solver not in ("nqmr", "rnqmr"):
            raise ConfigError(f"solver must be nqmr or rnqmr, got {self.solver!r}")
        if (self.manifest is None) == (self.synth_classes is None):
            raise ConfigError("exactly one data source is required: `manifest` or `synth_classes`")
        if self.manifest is not None and self.image_size is None:
            raise ConfigError("`image_size` is required with a manifest")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.final_weights not in ("last", "recompute"):
            raise ConfigError("final_weights must be 'last' or 'recompute'")
        allowed = NQMR_PARAMS if self.solver == "nqmr" else RNQMR_PARAMS
        for name, values in self.params.items():
            if name not in allowed:
                raise ConfigError(f"parameter {name!r} does not apply to solver {self.solver}")
            if not values:
                raise ConfigError(f"parameter {name!r} has an empty value list")
        for combo in self.grid():
            try:
                self.solver_config(combo)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None

    def grid(self) -> list[dict[str, float]]:
        names = sorted(self.params)
        return [dict(zip(names, vals)) for vals in itertools.product(*(self.params[n] for n in names))]

    def solver_config(self, combo: dict[str, float]):
        if self.solver == "nqmr":
            kw = {NQMR_PARAMS[k]: v for k, v in combo.items()}
            if "max_iter" in kw:
                kw["max_iter"] = int(kw["max_iter"])
            return NqmrConfig(**kw)
        kw = {RNQMR_PARAMS[k]: v for k, v in combo.items()}
        if "max_iter" in kw:
            kw["max_iter"] = int(kw["max_iter"])
        return RnqmrConfig(**kw)

    def echo(self) -> dict:
        d = asdict(self)
        d["recipe"] = asdict(self.recipe)
        return d


def _size(text: str) -> tuple[int, int]:
    try:
        m, n = (int(t) for t in text.lower().replace(" ", "").split("x"))
    except ValueError:
        raise ConfigError(f"size must look like 42x30, got {text!r}") from None
    if m < 1 or n < 1:
        raise ConfigError(f"size must be positive, got {text!r}")
    return m, n


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def parse_config_text(text: str, base_dir: Path = Path(".")) -> ExperimentConfig:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in OTHER_KEYS and key not in NQMR_PARAMS and key not in RNQMR_PARAMS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value
    return config_from_mapping(raw, base_dir)


def config_from_mapping(raw: dict[str, str], base_dir: Path = Path(".")) -> ExperimentConfig:
    cfg = ExperimentConfig()
    try:
        if "solver" in raw:
            cfg.solver = raw["solver"]
        if "manifest" in raw:
            p = Path(raw["manifest"])
            cfg.manifest = str(p if p.is_absolute() else base_dir / p)
        if "image_size" in raw:
            cfg.image_size = _size(raw["image_size"])
        if "synth_classes" in raw:
            cfg.synth_classes = int(raw["synth_classes"])
        if "synth_per_class" in raw:
            cfg.synth_per_class = int(raw["synth_per_class"])
        if "synth_test_per_class" in raw:
            cfg.synth_test_per_class = int(raw["synth_test_per_class"])
        if "synth_size" in raw:
            cfg.synth_size = _size(raw["synth_size"])
        if "synth_noise" in raw:
            cfg.synth_noise = float(raw["synth_noise"])
        if "final_weights" in raw:
            cfg.final_weights = raw["final_weights"]
        if "seed" in raw:
            cfg.seed = int(raw["seed"])
        if "threads" in raw:
            cfg.threads = int(raw["threads"])
        if "out" in raw:
            cfg.out = raw["out"]
        if "deterministic" in raw:
            cfg.deterministic = _bool(raw["deterministic"])
        rk = {}
        for key in ("block_fraction", "sp_probability", "gaussian_variance"):
            if key in raw:
                rk[key] = float(raw[key])
        if "block_source" in raw:
            rk["block_source"] = raw["block_source"]
        if "block_image" in raw:
            p = Path(raw["block_image"])
            rk["block_image"] = str(p if p.is_absolute() else base_dir / p)
        cfg.recipe = CorruptionRecipe(seed=cfg.seed, **rk)
        for key in set(NQMR_PARAMS) | set(RNQMR_PARAMS):
            if key in raw:
                cfg.params[key] = [float(v) for v in raw[key].split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


@dataclass
class QueryResult:
    query_id: int
    true_class: int
    predicted_class: int
    per_class_error: list[float]
    iterations: int
    wall_time_ms: float
    trace: list[float]

    @property
    def correct(self) -> bool:
        return self.true_class == self.predicted_class


@dataclass
class ResultsRecord:
    params: dict[str, float]
    queries: list[QueryResult]

    @property
    def total(self) -> int:
        return len(self.queries)

    @property
    def n_correct(self) -> int:
        return sum(q.correct for q in self.queries)

    @property
    def rate(self) -> float:
        return self.n_correct / self.total


@dataclass
class ExperimentOutcome:
    best: ResultsRecord
    sweep: list[ResultsRecord]

    @property
    def rate(self) -> float:
        return self.best.rate


def load_data(cfg: ExperimentConfig) -> tuple[LabeledDictionary, list[tuple[QuaternionMatrix, int]]]:
    if cfg.synth_classes is not None:
        ds = synth_dataset(cfg.synth_classes, cfg.synth_per_class, cfg.synth_size, cfg.seed,
                           test_per_class=cfg.synth_test_per_class, noise=cfg.synth_noise)
        return ds.dictionary, ds.test
    manifest = read_manifest(cfg.manifest, cfg.image_size)
    train = manifest.split("train")
    n_classes = max(e.class_id for e in manifest.entries)
    images = [load_image(e.path, manifest.image_size) for e in train]
    dictionary = LabeledDictionary(images, [e.class_id for e in train], n_classes)
    test = [(load_image(e.path, manifest.image_size), e.class_id) for e in manifest.split("test")]
    return dictionary, test


def corrupt_queries(queries, recipe: CorruptionRecipe) -> list[tuple[QuaternionMatrix, int]]:
    """Corrupt queries in order with one generator seeded from the recipe."""
    if recipe.is_clean:
        return list(queries)
    rng = np.random.default_rng([recipe.seed, 0x5EED])
    patch = load_image(recipe.block_image) if recipe.block_image else None
    return [(corrupt(b, recipe, rng, patch), k) for b, k in queries]


def _classify_one(cfg: ExperimentConfig, solver_cfg, dictionary, qid: int, b, k: int) -> QueryResult:
    t0 = time.perf_counter()
    if cfg.solver == "nqmr":
        res = classify_nqmr(dictionary, b, solver_cfg)
    else:
        res = classify_rnqmr(dictionary, b, solver_cfg, cfg.final_weights)
    wall = (time.perf_counter() - t0) * 1000.0
    return QueryResult(qid, k, res.predicted, [float(e) for e in res.per_class_error],
                       res.iterations, wall, [float(t) for t in res.trace])


def run_experiment(cfg: ExperimentConfig) -> ExperimentOutcome:
    cfg.validate()
    dictionary, test = load_data(cfg)
    if not test:
        raise ConfigError("test split is empty; recognition rate is undefined")
    queries = corrupt_queries(test, cfg.recipe)
    sweep = []
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        for combo in cfg.grid():
            solver_cfg = cfg.solver_config(combo)
            results = list(pool.map(
                lambda item: _classify_one(cfg, solver_cfg, dictionary, item[0], *item[1]),
                enumerate(queries),
            ))
            rec = ResultsRecord(combo, sorted(results, key=lambda q: q.query_id))
            log.info("%s %s: rate %.4f", cfg.solver, combo, rec.rate)
            sweep.append(rec)
    # first combination (in grid order) wins ties
    best = max(sweep, key=lambda r: r.rate)
    return ExperimentOutcome(best, sweep)


def report(outcome: ExperimentOutcome, cfg: ExperimentConfig, out_dir=None) -> Path:
    """Write results.csv, results.json, traces.csv and (for sweeps) sweep.csv."""
    out = Path(out_dir if out_dir is not None else cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    best = outcome.best
    with open(out / "results.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for q in best.queries:
            wall = "" if cfg.deterministic else f"{q.wall_time_ms:.3f}"
            w.writerow([q.query_id, q.true_class, q.predicted_class, int(q.correct), q.iterations, wall])
    with open(out / "traces.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["queryId", "iteration", "dual"])
        for q in best.queries:
            for i, d in enumerate(q.trace, start=1):
                w.writerow([q.query_id, i, repr(d)])
    if len(outcome.sweep) > 1:
        names = sorted(best.params)
        with open(out / "sweep.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(names + ["correct", "total", "rate"])
            for rec in outcome.sweep:
                w.writerow([rec.params[n] for n in names] + [rec.n_correct, rec.total, f"{rec.rate:.6f}"])
    payload = {
        "config": cfg.echo(),
        "aggregate": {"correct": best.n_correct, "total": best.total, "rate": best.rate,
                      "params": best.params},
        "sweep": [{"params": r.params, "rate": r.rate} for r in outcome.sweep],
        "queries": [
            {"queryId": q.query_id, "trueClass": q.true_class, "predictedClass": q.predicted_class,
             "perClassError": q.per_class_error, "iterations": q.iterations,
             **({} if cfg.deterministic else {"wallTimeMs": q.wall_time_ms})}
            for q in best.queries
        ],
    }
    with open(out / "results.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, default=list)
        fh.write("\n")
    return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="quatreg", description="Run an NQMR / R-NQMR color image classification experiment.")
    p.add_argument("--config", required=True, help="flat key = value experiment file")
    p.add_argument("--solver", choices=["nqmr", "rnqmr"])
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--out")
    p.add_argument("--deterministic", action="store_true",
                   help="leave wall times out of results so reruns are byte-identical")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(message)s")
        path = Path(args.config)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        cfg = parse_config_text(text, path.parent)
        if args.solver:
            cfg.solver = args.solver
        if args.seed is not None:
            cfg.seed = args.seed
            cfg.recipe = replace(cfg.recipe, seed=args.seed)
        if args.threads is not None:
            cfg.threads = args.threads
        if args.out:
            cfg.out = args.out
        if args.deterministic:
            cfg.deterministic = True
        cfg.validate()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        outcome = run_experiment(cfg)
        out = report(outcome, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - any runtime failure maps to exit code 2
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    best = outcome.best
    print(f"{cfg.solver}: {best.n_correct}/{best.total} correct, rate {best.rate:.4f} "
          f"params {best.params} -> {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
