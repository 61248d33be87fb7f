"""Per-step measurements taken while training.

* averaged centered activation variance of every hidden layer;
* the change of AdaAct's effective stepsizes ``eta / (v_hat**p + eps)``
  between consecutive steps;
* running extrema of ``v_hat`` (boundedness of the preconditioner);
* for two runs trained on datasets differing in one example: the parameter
  distance and the distance between their inverse preconditioners.

Everything here reads logged state and never mutates it.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CacheError, StateError, SyncError
from .nn import Network, activation_variance
from .optim import AdaActState, Hyperparams, preconditioner

__all__ = [
    "MetricsRecord",
    "record_activation_variance",
    "effective_stepsizes",
    "effective_stepsize_delta",
    "BoundMonitor",
    "assumption_a4_monitor",
    "stability_pair_step",
    "csv_header",
    "write_metrics_csv",
    "read_metrics_csv",
]


@dataclass
class MetricsRecord:
    step: int
    epoch: int
    loss: float
    acc: float | None = None
    actvar: list[float] = field(default_factory=list)
    eff_delta_l1: float | None = None
    eff_delta_linf: float | None = None
    delta_t: float | None = None
    term_a: float | None = None


def record_activation_variance(net: Network) -> list[float]:
    """Mean centered variance of each hidden layer's activations.

    One value per parametric layer whose input is a hidden activation (the
    first parametric layer reads raw data and is skipped). The bias column
    is excluded from the mean.
    """
    out = []
    for layer in net.params[1:]:
        if layer.cache is None:
            raise CacheError("forward has not populated the activation caches")
        out.append(float(np.mean(activation_variance(layer.cache)[:-1])))
    return out


def _v_hats(snapshot, hp: Hyperparams):
    if isinstance(snapshot, AdaActState):
        return snapshot.v_hat(hp)
    return snapshot


def effective_stepsizes(v_hats, eta: float, hp: Hyperparams) -> np.ndarray:
    """``eta / (v_hat**p + eps)`` for every column of every layer, concatenated."""
    return np.concatenate([eta / preconditioner(v, hp) for v in v_hats])


def effective_stepsize_delta(state, prev_snapshot, eta_t: float, eta_prev: float,
                             hp: Hyperparams) -> tuple[float, float]:
    """(L1, L-inf) norms of the change in effective stepsizes between two steps.

    ``state`` and ``prev_snapshot`` may be :class:`AdaActState` objects or
    lists of per-layer ``v_hat`` vectors.
    """
    if prev_snapshot is None or (isinstance(prev_snapshot, AdaActState) and prev_snapshot.t == 0):
        raise StateError("no previous v_hat snapshot to difference against")
    cur = effective_stepsizes(_v_hats(state, hp), eta_t, hp)
    prev = effective_stepsizes(_v_hats(prev_snapshot, hp), eta_prev, hp)
    if cur.shape != prev.shape:
        raise StateError(f"snapshot sizes differ: {cur.shape} vs {prev.shape}")
    d = np.abs(cur - prev)
    return float(d.sum()), float(d.max())


class BoundMonitor:
    """Running minimum and maximum over every ``v_hat`` entry ever seen."""

    def __init__(self):
        self.lo = math.inf
        self.hi = -math.inf

    def update(self, v_hats) -> None:
        for v in v_hats:
            self.lo = min(self.lo, float(v.min()))
            self.hi = max(self.hi, float(v.max()))

    @property
    def extrema(self) -> tuple[float, float]:
        return self.lo, self.hi


def assumption_a4_monitor(run) -> tuple[float, float]:
    """(min, max) of all preconditioner entries observed so far by ``run``."""
    return run.monitor.extrema


def stability_pair_step(run_a, run_b) -> tuple[float, float | None]:
    """Parameter distance and inverse-preconditioner distance of two runs.

    Returns ``(delta_t, term_a)``; ``term_a`` is ``None`` unless both runs
    use AdaAct, and 0 before the first step.
    """
    if run_a.t != run_b.t:
        raise SyncError(f"runs are at different steps: {run_a.t} vs {run_b.t}")
    delta = float(np.linalg.norm(run_a.net.get_flat() - run_b.net.get_flat()))
    opt_a, opt_b = run_a.optimizer, run_b.optimizer
    if opt_a.kind != "adaact" or opt_b.kind != "adaact":
        return delta, None
    if run_a.t == 0:
        return delta, 0.0
    inv_a = np.concatenate([1.0 / preconditioner(v, opt_a.hp) for v in opt_a.v_hat()])
    inv_b = np.concatenate([1.0 / preconditioner(v, opt_b.hp) for v in opt_b.v_hat()])
    return delta, float(np.linalg.norm(inv_a - inv_b))


def csv_header(n_layers: int) -> list[str]:
    return (["step", "epoch", "loss", "acc"]
            + [f"actvar_L{i}" for i in range(n_layers)]
            + ["eff_delta_l1", "eff_delta_linf", "delta_t", "term_a"])


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def write_metrics_csv(records, stream_or_path, n_layers: int | None = None) -> None:
    """Write records as CSV; floats use shortest round-trip repr, absent fields are empty."""
    records = list(records)
    if n_layers is None:
        n_layers = len(records[0].actvar) if records else 0
    if isinstance(stream_or_path, io.TextIOBase):
        _write(records, stream_or_path, n_layers)
    else:
        with open(stream_or_path, "w", newline="") as f:
            _write(records, f, n_layers)


def _write(records, f, n_layers):
    w = csv.writer(f, lineterminator="\n")
    w.writerow(csv_header(n_layers))
    for r in records:
        actvar = list(r.actvar) + [None] * (n_layers - len(r.actvar))
        w.writerow([str(r.step), str(r.epoch), _fmt(r.loss), _fmt(r.acc)]
                   + [_fmt(a) for a in actvar]
                   + [_fmt(r.eff_delta_l1), _fmt(r.eff_delta_linf), _fmt(r.delta_t), _fmt(r.term_a)])


def read_metrics_csv(path) -> list[MetricsRecord]:
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))

    def num(s):
        return None if s in ("", None) else float(s)

    out = []
    for row in rows:
        layers = sorted((k for k in row if k.startswith("actvar_L")), key=lambda k: int(k[8:]))
        out.append(MetricsRecord(
            step=int(row["step"]), epoch=int(row["epoch"]), loss=num(row["loss"]),
            acc=num(row["acc"]), actvar=[num(row[k]) for k in layers],
            eff_delta_l1=num(row["eff_delta_l1"]), eff_delta_linf=num(row["eff_delta_linf"]),
            delta_t=num(row["delta_t"]), term_a=num(row["term_a"])))
    return out
