"""Experiment orchestration: configs, seeded runs, sweeps, and result files.

A run executes the continual protocol for each seed: build the stream,
initialize the network, measure the random-init baseline, train task by
task while evaluating every task's test set after each one, then aggregate
the four metrics over seeds. Results land in one CSV (per-cell accuracies)
and one JSON summary per run.
"""

from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import nn
from .errors import ConfigError, NumericError
from .memory import MemoryBuffer
from .metrics import ResultMatrix
from .replay import STRATEGY_KINDS, Strategy, default_policy, train_step
from .streams import load_idx, make_synthetic, split_stream

BENCHMARKS = ("split_mnist", "split_fmnist", "split_synthetic")
SWEEP_AXES = {"memory_M": "memory_size", "tau": "tau", "lambda": "lam"}

# Per-benchmark presets applied when the config leaves the field null:
# training-set size per task for the published splits, and a desk-scale
# network for the synthetic stand-in.
BENCHMARK_TRAIN_PER_TASK = {"split_mnist": 1000, "split_fmnist": 1200,
                            "split_synthetic": 2000}
BENCHMARK_HIDDEN_DIM = {"split_mnist": 400, "split_fmnist": 400,
                        "split_synthetic": 120}

# JSON key -> attribute name ("lambda" is reserved in Python).
_KEY_TO_ATTR = {"lambda": "lam"}
_ATTR_TO_KEY = {v: k for k, v in _KEY_TO_ATTR.items()}


@dataclass
class RunConfig:
    """Everything one experiment needs; JSON config keys match these fields
    (with the imbalance ratio spelled "lambda" in files)."""

    benchmark: str = "split_synthetic"
    strategy: str = "adaer"
    num_tasks: int = 5
    classes_per_task: int = 2
    train_per_task: int | None = None
    batch_size: int = 20
    replay_size: int = 20
    memory_size: int = 100
    alpha: float = 0.05
    tau: float = 0.5
    lam: float = 0.0
    iters_per_batch: int = 1
    seeds: list = field(default_factory=lambda: [1, 2, 3, 4, 5])
    hidden_dim: int | None = None
    synthetic_dim: int = 16
    synthetic_scale: float = 3.5
    test_per_class: int | None = None
    joint_epochs: int = 5
    separate_replay_loss: bool = False
    train_images: str | None = None
    train_labels: str | None = None
    test_images: str | None = None
    test_labels: str | None = None
    output_dir: str = "results"
    run_name: str | None = None

    def __post_init__(self):
        if self.benchmark not in BENCHMARKS:
            raise ConfigError(f"benchmark must be one of {BENCHMARKS}, got {self.benchmark!r}")
        if self.strategy not in STRATEGY_KINDS:
            raise ConfigError(f"strategy must be one of {STRATEGY_KINDS}, got {self.strategy!r}")
        if self.train_per_task is None:
            self.train_per_task = BENCHMARK_TRAIN_PER_TASK[self.benchmark]
        if self.hidden_dim is None:
            self.hidden_dim = BENCHMARK_HIDDEN_DIM[self.benchmark]
        for name in ("num_tasks", "classes_per_task", "train_per_task", "batch_size",
                     "replay_size", "memory_size", "iters_per_batch", "hidden_dim",
                     "synthetic_dim", "joint_epochs"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if self.alpha < 0:
            raise ConfigError(f"alpha must be nonnegative, got {self.alpha}")
        if self.synthetic_scale <= 0:
            raise ConfigError(f"synthetic_scale must be positive, got {self.synthetic_scale}")
        if not 0 < self.tau <= 1:
            raise ConfigError(f"tau must lie in (0, 1], got {self.tau}")
        if not 0 <= self.lam < 1:
            raise ConfigError(f"lambda must lie in [0, 1), got {self.lam}")
        if not self.seeds or not all(
                isinstance(s, int) and not isinstance(s, bool) for s in self.seeds):
            raise ConfigError("seeds must be a nonempty list of integers")
        if self.benchmark != "split_synthetic":
            missing = [k for k in ("train_images", "train_labels", "test_images", "test_labels")
                       if getattr(self, k) is None]
            if missing:
                raise ConfigError(
                    f"benchmark {self.benchmark} needs IDX paths: missing {missing}")
        if self.test_per_class is not None and (
                not isinstance(self.test_per_class, int) or self.test_per_class < 1):
            raise ConfigError("test_per_class must be a positive integer or null")

    @property
    def name(self):
        return self.run_name or f"{self.benchmark}_{self.strategy}"

    def to_dict(self):
        """JSON-ready echo of the resolved config, field order fixed."""
        out = {}
        for f in dataclasses.fields(self):
            out[_ATTR_TO_KEY.get(f.name, f.name)] = getattr(self, f.name)
        return out


def config_from_dict(raw):
    """Build a RunConfig from parsed JSON; unknown keys are an error."""
    if not isinstance(raw, dict):
        raise ConfigError(f"config root must be an object, got {type(raw).__name__}")
    known = {f.name for f in dataclasses.fields(RunConfig)} - set(_ATTR_TO_KEY.values())
    known |= set(_KEY_TO_ATTR)
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    kwargs = {_KEY_TO_ATTR.get(k, k): v for k, v in raw.items()}
    try:
        return RunConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path):
    """Read and validate a JSON config file."""
    try:
        with open(path) as f:
            raw = json.load(f)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return config_from_dict(raw)


def _child_seeds(seed, n):
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(n)]


def build_stream(config, seed):
    """Materialize the benchmark stream for one seed."""
    data_seed, split_seed = _child_seeds(seed, 2)
    num_classes = config.num_tasks * config.classes_per_task
    if config.benchmark == "split_synthetic":
        test_pc = config.test_per_class or 200
        per_class = config.train_per_task + test_pc
        X, y = make_synthetic(num_classes, config.synthetic_dim, per_class, data_seed,
                              scale=config.synthetic_scale)
        return split_stream(
            X, y, config.num_tasks, config.classes_per_task, config.train_per_task,
            lam=config.lam, batch_size=config.batch_size, seed=split_seed,
            test_per_class=test_pc)
    X, y = load_idx(config.train_images, config.train_labels)
    test_X, test_y = load_idx(config.test_images, config.test_labels)
    stream = split_stream(
        X, y, config.num_tasks, config.classes_per_task, config.train_per_task,
        lam=config.lam, batch_size=config.batch_size, seed=split_seed,
        test_X=test_X, test_y=test_y, test_per_class=config.test_per_class)
    for spec in stream.tasks:
        if any(c >= num_classes for c in spec.classes):
            raise ConfigError(
                f"class labels {spec.classes} exceed the {num_classes}-way output head")
    return stream


@dataclass
class SeedResult:
    seed: int
    matrix: ResultMatrix | None
    wall_clock_sec: float
    error: str | None = None

    def metric_summary(self):
        if self.matrix is None:
            return {"acc": None, "forget": None, "bwt": None, "fwt": None}
        return self.matrix.summary()


@dataclass
class RunRecord:
    """Config echo plus per-seed matrices and aggregate statistics."""

    config: RunConfig
    seed_results: list
    joint: bool = False

    METRICS = ("acc", "forget", "bwt", "fwt")

    def aggregate(self):
        """Mean and standard deviation per metric over successful seeds."""
        out = {}
        for m in self.METRICS:
            if self.joint and m != "acc":
                out[m] = {"mean": None, "std": None}
                continue
            values = []
            for r in self.seed_results:
                if r.matrix is None:
                    continue
                values.append(r.matrix.average_accuracy() if m == "acc"
                              else r.matrix.summary()[m])
            if values:
                out[m] = {"mean": float(np.mean(values)), "std": float(np.std(values))}
            else:
                out[m] = {"mean": None, "std": None}
        return out

    def failures(self):
        return [r for r in self.seed_results if r.error is not None]


def _evaluate_all(params, stream):
    return [nn.accuracy(params, spec.test_X, spec.test_y) for spec in stream.tasks]


def _run_seed(config, seed):
    """One deterministic pass over the task sequence for one seed."""
    stream_seed, net_seed, buffer_seed, replay_seed = _child_seeds(seed, 4)
    stream = build_stream(config, stream_seed)
    input_dim = stream.tasks[0].train_X.shape[1]
    num_classes = config.num_tasks * config.classes_per_task
    params = nn.init_network(input_dim, config.hidden_dim, num_classes, net_seed)
    strategy = Strategy(config.strategy, replay_size=config.replay_size, tau=config.tau,
                        separate_replay_loss=config.separate_replay_loss)
    policy = default_policy(strategy.kind)
    buffer = None if policy is None else MemoryBuffer(
        config.memory_size, policy=policy, seed=buffer_seed)
    rng = np.random.default_rng(replay_seed)

    matrix = ResultMatrix(config.num_tasks)
    matrix.set_baseline(_evaluate_all(params, stream))
    step = 0
    for spec in stream.tasks:
        for X, y in stream.batches(spec.task_id):
            for _ in range(config.iters_per_batch):
                params = train_step(params, X, y, buffer, strategy,
                                    config.alpha, rng, spec.task_id)
                step += 1
                if not params.is_finite():
                    raise NumericError(
                        f"non-finite parameters at seed {seed}, task {spec.task_id}, "
                        f"step {step}")
        matrix.record_row(spec.task_id, _evaluate_all(params, stream))
    return matrix


def run_experiment(config):
    """Run every seed; numeric blow-ups abort the seed, not the run."""
    results = []
    for seed in config.seeds:
        start = time.perf_counter()
        try:
            matrix = _run_seed(config, seed)
            results.append(SeedResult(seed, matrix, time.perf_counter() - start))
        except NumericError as exc:
            results.append(SeedResult(seed, None, time.perf_counter() - start, str(exc)))
    return RunRecord(config, results)


def _run_joint_seed(config, seed):
    """Train on the union of all tasks, shuffled, for joint_epochs epochs."""
    stream_seed, net_seed, _, shuffle_seed = _child_seeds(seed, 4)
    stream = build_stream(config, stream_seed)
    X = np.concatenate([spec.train_X for spec in stream.tasks])
    y = np.concatenate([spec.train_y for spec in stream.tasks])
    input_dim = X.shape[1]
    num_classes = config.num_tasks * config.classes_per_task
    params = nn.init_network(input_dim, config.hidden_dim, num_classes, net_seed)
    rng = np.random.default_rng(shuffle_seed)
    matrix = ResultMatrix(config.num_tasks)
    matrix.set_baseline(_evaluate_all(params, stream))
    step = 0
    for _ in range(config.joint_epochs):
        order = rng.permutation(len(y))
        for start in range(0, len(order), config.batch_size):
            idx = order[start:start + config.batch_size]
            params = nn.sgd_step(params, nn.backward(params, X[idx], y[idx]), config.alpha)
            step += 1
            if not params.is_finite():
                raise NumericError(f"non-finite parameters at seed {seed}, step {step}")
    matrix.record_row(config.num_tasks, _evaluate_all(params, stream))
    return matrix


def run_joint(config):
    """Upper-bound reference: all tasks trained as one dataset (Acc only)."""
    results = []
    for seed in config.seeds:
        start = time.perf_counter()
        try:
            matrix = _run_joint_seed(config, seed)
            results.append(SeedResult(seed, matrix, time.perf_counter() - start))
        except NumericError as exc:
            results.append(SeedResult(seed, None, time.perf_counter() - start, str(exc)))
    return RunRecord(config, results, joint=True)


def sweep(config, axis, values):
    """One run per axis value, same seeds throughout for paired comparison."""
    if axis not in SWEEP_AXES:
        raise ConfigError(f"axis must be one of {sorted(SWEEP_AXES)}, got {axis!r}")
    attr = SWEEP_AXES[axis]
    records = []
    for value in values:
        name = f"{config.name}_{axis}_{value}"
        cfg = dataclasses.replace(config, **{attr: value, "run_name": name})
        records.append(run_experiment(cfg))
    return records


def first_task_curve(record):
    """Mean accuracy on task 1 after each task, averaged over seeds."""
    rows = []
    for r in record.seed_results:
        if r.matrix is None:
            continue
        r.matrix._require_complete()
        rows.append(r.matrix.matrix[:, 0])
    if not rows:
        raise ValueError("record holds no completed seeds")
    return np.mean(rows, axis=0)


def _summary_payload(record):
    per_seed = []
    for r in record.seed_results:
        entry = {"seed": r.seed}
        if record.joint:
            acc = None if r.matrix is None else r.matrix.average_accuracy()
            entry.update({"acc": acc, "forget": None, "bwt": None, "fwt": None})
        else:
            entry.update(r.metric_summary())
        entry["wall_clock_sec"] = r.wall_clock_sec
        entry["error"] = r.error
        if r.matrix is not None and not record.joint:
            entry["matrix"] = [[round(v, 10) for v in row] for row in r.matrix.matrix]
            entry["baseline"] = [round(v, 10) for v in r.matrix.baseline]
        per_seed.append(entry)
    return {
        "config": record.config.to_dict(),
        "joint": record.joint,
        "per_seed": per_seed,
        "aggregate": record.aggregate(),
    }


def write_results(record, output_dir=None):
    """Write <name>_results.csv and <name>_summary.json; returns their paths."""
    out = Path(output_dir if output_dir is not None else record.config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    name = record.config.name
    csv_path = out / f"{name}_results.csv"
    json_path = out / f"{name}_summary.json"
    lines = ["seed,task_learned,task_evaluated,accuracy"]
    for r in record.seed_results:
        if r.matrix is None:
            continue
        matrix = r.matrix.matrix
        for i in range(record.config.num_tasks):
            if record.joint and i + 1 != record.config.num_tasks:
                continue
            for j in range(record.config.num_tasks):
                lines.append(f"{r.seed},{i + 1},{j + 1},{matrix[i, j]:.10f}")
    csv_path.write_text("\n".join(lines) + "\n")
    json_path.write_text(json.dumps(_summary_payload(record), indent=2) + "\n")
    return csv_path, json_path
