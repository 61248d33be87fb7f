"""Building and running experiments from an :class:`ExperimentConfig`."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .checkpoint import save_checkpoint
from .config import ExperimentConfig
from .data import (Dataset, load_cifar_binary, load_idx, neighboring_dataset, synthetic_blobs,
                   train_eval_split)
from .diagnostics import MetricsRecord, write_metrics_csv
from .errors import ConfigError
from .nn import init_network
from .optim import Optimizer
from .training import TrainingRun, train_pair

__all__ = ["load_dataset", "build_run", "run_train", "run_stability_pair", "variance_report",
           "Result"]


@dataclass
class Result:
    records: list[MetricsRecord]
    runs: list[TrainingRun]


def load_dataset(spec: dict) -> Dataset:
    kind = spec["kind"]
    if kind == "blobs":
        return synthetic_blobs(spec["classes"], spec["per_class"], spec["dims"],
                               spec["spread"], spec["seed"])
    if kind == "idx":
        return load_idx(spec["images"], spec["labels"], standardize=spec["standardize"],
                        limit=spec["limit"])
    return load_cifar_binary(spec["path"], standardize=spec["standardize"])


def build_run(cfg: ExperimentConfig, train: Dataset, eval_set: Dataset | None,
              keep_snapshots: bool = False) -> TrainingRun:
    input_shape = cfg.input_shape or train.sample_shape
    if int(np.prod(input_shape)) != train.inputs.shape[1]:
        raise ConfigError(f"model.input {input_shape} does not match data width "
                          f"{train.inputs.shape[1]}", field="model.input")
    net = init_network(cfg.layers, cfg.seed, input_shape)
    if net.num_classes < train.class_count:
        raise ConfigError(f"network emits {net.num_classes} logits for {train.class_count} classes",
                          field="model.layers")
    if cfg.batch_size > len(train):
        raise ConfigError(f"run.batch_size {cfg.batch_size} exceeds {len(train)} training examples",
                          field="run.batch_size")
    steps_per_epoch = math.ceil(len(train) / cfg.batch_size)
    total = cfg.steps if cfg.steps is not None else cfg.epochs * steps_per_epoch
    hp = replace(cfg.hp, total_steps=total)
    opt = Optimizer(cfg.optimizer, hp, net.thetas, cfg.schedule)
    return TrainingRun(net, opt, train, cfg.batch_size, cfg.seed, eval_set, keep_snapshots)


def _total_steps(cfg: ExperimentConfig, run: TrainingRun) -> int:
    return cfg.steps if cfg.steps is not None else cfg.epochs * run.steps_per_epoch


def run_train(cfg: ExperimentConfig, keep_snapshots: bool = False) -> Result:
    """Train one model, writing the metrics CSV and final checkpoint if configured."""
    ds = load_dataset(cfg.dataset)
    train, held = train_eval_split(ds, cfg.eval_fraction, cfg.seed)
    run = build_run(cfg, train, held, keep_snapshots)
    records = [run.step() for _ in range(_total_steps(cfg, run))]
    n_layers = len(run.net.params) - 1
    if cfg.out:
        write_metrics_csv(records, cfg.out, n_layers)
    ckpt = cfg.checkpoint or (cfg.out + ".ckpt" if cfg.out else None)
    if ckpt:
        save_checkpoint(ckpt, run.net, run.optimizer)
    return Result(records, [run])


def stability_datasets(cfg: ExperimentConfig) -> tuple[Dataset, Dataset, Dataset | None]:
    ds = load_dataset(cfg.dataset)
    train, held = train_eval_split(ds, cfg.eval_fraction, cfg.seed)
    if cfg.replace_index is None:
        other = train
    else:
        if cfg.replace_index >= len(train):
            raise ConfigError(f"run.replace_index {cfg.replace_index} outside training set "
                              f"of {len(train)}", field="run.replace_index")
        other = neighboring_dataset(train, cfg.replace_index, cfg.replace_seed)
    return train, other, held


def run_stability_pair(cfg: ExperimentConfig) -> Result:
    """Train two coupled runs on neighbouring datasets and log their distances.

    Both runs share initialization, hyperparameters and batch order, so the
    replaced example is the only source of divergence.
    """
    train, other, held = stability_datasets(cfg)
    run_a = build_run(cfg, train, held)
    run_b = build_run(cfg, other, held)
    records = train_pair(run_a, run_b, _total_steps(cfg, run_a))
    if cfg.out:
        write_metrics_csv(records, cfg.out, len(run_a.net.params) - 1)
    if cfg.checkpoint:
        save_checkpoint(cfg.checkpoint + ".a", run_a.net, run_a.optimizer)
        save_checkpoint(cfg.checkpoint + ".b", run_b.net, run_b.optimizer)
    return Result(records, [run_a, run_b])


def variance_report(records: list[MetricsRecord]) -> dict:
    """Per-layer activation variance averaged over all logged steps, and its layer mean."""
    rows = [r.actvar for r in records if r.actvar and all(a is not None for a in r.actvar)]
    if not rows:
        return {"layers": [], "mean": float("nan"), "steps": 0}
    per_layer = np.mean(np.array(rows), axis=0)
    return {"layers": [float(v) for v in per_layer], "mean": float(per_layer.mean()),
            "steps": len(rows)}
