"""Training loop with per-step diagnostics.

A :class:`TrainingRun` advances one minibatch at a time. The batch for global
step ``t`` depends only on ``(seed, t)``, so a run restored from a checkpoint
continues on exactly the same batch sequence.
"""

from __future__ import annotations

import math

import numpy as np

from .data import Dataset, minibatches
from .diagnostics import (BoundMonitor, MetricsRecord, effective_stepsize_delta,
                          record_activation_variance, stability_pair_step)
from .errors import DivergenceError, NumericError
from .nn import Network
from .optim import Optimizer

__all__ = ["TrainingRun", "accuracy", "train_pair"]


def accuracy(net: Network, ds: Dataset) -> float:
    return float(np.mean(net.predict(ds.inputs) == ds.labels))


class TrainingRun:
    def __init__(self, net: Network, optimizer: Optimizer, train: Dataset, batch_size: int,
                 seed: int, eval_set: Dataset | None = None, keep_snapshots: bool = False):
        self.net = net
        self.optimizer = optimizer
        self.train = train
        self.eval_set = eval_set
        self.batch_size = batch_size
        self.seed = seed
        self.steps_per_epoch = math.ceil(len(train) / batch_size)
        self.monitor = BoundMonitor()
        self.snapshots: list[list[np.ndarray]] | None = [] if keep_snapshots else None
        self._batches: tuple[int, list[np.ndarray]] | None = None
        self._prev_v_hat = None
        self._prev_eta = None

    @property
    def t(self) -> int:
        return self.optimizer.t

    @property
    def epoch(self) -> int:
        return self.t // self.steps_per_epoch

    def batch_indices(self, t: int) -> np.ndarray:
        epoch, k = divmod(t, self.steps_per_epoch)
        if self._batches is None or self._batches[0] != epoch:
            self._batches = (epoch, minibatches(len(self.train), self.batch_size, self.seed, epoch))
        return self._batches[1][k]

    def step(self) -> MetricsRecord:
        """Run one minibatch update and return its diagnostics row."""
        epoch = self.epoch
        idx = self.batch_indices(self.t)
        x, y = self.train.inputs[idx], self.train.labels[idx]
        logits = self.net.forward(x)
        loss, grads = self.net.backward(logits, y)
        step = self.t + 1
        if not math.isfinite(loss):
            raise DivergenceError(f"non-finite loss at step {step}", step=step)
        actvar = record_activation_variance(self.net) if idx.size > 1 else []
        try:
            eta = self.optimizer.step(self.net, grads)
        except NumericError as exc:
            raise DivergenceError(f"step {step}: {exc}", step=step) from exc
        rec = MetricsRecord(step=step, epoch=epoch, loss=loss, actvar=actvar)
        v_hat = self.optimizer.v_hat()
        if v_hat is not None:
            self.monitor.update(v_hat)
            if self.snapshots is not None:
                self.snapshots.append([v.copy() for v in v_hat])
            if self._prev_v_hat is not None:
                rec.eff_delta_l1, rec.eff_delta_linf = effective_stepsize_delta(
                    v_hat, self._prev_v_hat, eta, self._prev_eta, self.optimizer.hp)
            self._prev_v_hat = [v.copy() for v in v_hat]
            self._prev_eta = eta
        if self.t % self.steps_per_epoch == 0 and self.eval_set is not None:
            rec.acc = accuracy(self.net, self.eval_set)
        return rec

    def run(self, epochs: int) -> list[MetricsRecord]:
        return [self.step() for _ in range(epochs * self.steps_per_epoch - self.t)]

    def restore_diagnostics(self, prev_v_hat, prev_eta) -> None:
        """Seed the step-to-step state after loading a checkpoint."""
        self._prev_v_hat = prev_v_hat
        self._prev_eta = prev_eta


def train_pair(run_a: TrainingRun, run_b: TrainingRun, steps: int) -> list[MetricsRecord]:
    """Advance two runs in lockstep, recording run A's row plus the pair distances."""
    records = []
    for _ in range(steps):
        rec = run_a.step()
        run_b.step()
        rec.delta_t, rec.term_a = stability_pair_step(run_a, run_b)
        records.append(rec)
    return records
