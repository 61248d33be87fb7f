"""Optimizers: AdaAct and the first-order baselines it is compared against.

AdaAct keeps an exponential moving average of the (uncentered) second moment
of each layer's augmented input activations, one entry per input feature,
and divides every column of the bias-corrected gradient EMA by
``v_hat ** p + eps``. All output neurons that read the same input feature
therefore share one learning rate.

The ``*_step`` functions are the per-step kernels and operate on lists of
per-layer arrays; the ``Optimizer`` classes wrap them around a
:class:`~adaact.nn.Network`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DimensionError, EmptyReductionError, NumericError, ParameterError, ScheduleRangeError

__all__ = [
    "Hyperparams",
    "DEFAULTS",
    "AdaActState",
    "BaselineState",
    "activation_second_moment",
    "preconditioner",
    "adaact_step",
    "sgd_momentum_step",
    "adam_step",
    "adamw_step",
    "cosine_lr",
    "Optimizer",
    "make_optimizer",
]


@dataclass(frozen=True)
class Hyperparams:
    eta_max: float = 0.1
    eta_min: float = 0.0
    beta1: float = 0.9
    beta2: float = 0.999
    weight_decay: float = 0.0
    eps: float = 1e-8
    p: float = 0.5
    clip: tuple[float, float] | None = None
    total_steps: int = 1
    coupled_decay: bool = False  # SGD only: fold weight_decay * theta into the gradient

    def __post_init__(self):
        if not 0 <= self.beta1 < 1:
            raise ParameterError(f"beta1 must be in [0, 1), got {self.beta1}")
        if not 0 <= self.beta2 < 1:
            raise ParameterError(f"beta2 must be in [0, 1), got {self.beta2}")
        if not self.eps >= 0:
            raise ParameterError(f"eps must be non-negative, got {self.eps}")
        if not self.weight_decay >= 0:
            raise ParameterError(f"weight_decay must be non-negative, got {self.weight_decay}")
        if not 0 < self.p <= 1:
            raise ParameterError(f"p must be in (0, 1], got {self.p}")
        if not self.eta_max >= self.eta_min >= 0:
            raise ParameterError(f"need eta_max >= eta_min >= 0, got {self.eta_max}, {self.eta_min}")
        if self.total_steps < 1:
            raise ParameterError(f"total_steps must be >= 1, got {self.total_steps}")
        if self.clip is not None:
            lo, hi = self.clip
            if not 0 < lo <= hi:
                raise ParameterError(f"clip bounds must satisfy 0 < c_L <= c_U, got {self.clip}")
            object.__setattr__(self, "clip", (float(lo), float(hi)))


# Per-optimizer defaults used for the CIFAR runs (learning rate, momentum /
# beta1, beta2, weight decay, eps).
DEFAULTS: dict[str, Hyperparams] = {
    "adaact": Hyperparams(eta_max=0.1, beta1=0.9, beta2=0.999, weight_decay=2e-3, eps=1e-8),
    "sgd": Hyperparams(eta_max=0.1, beta1=0.9, weight_decay=5e-4),
    "adam": Hyperparams(eta_max=0.001, beta1=0.9, beta2=0.999, weight_decay=5e-4, eps=1e-8),
    "adamw": Hyperparams(eta_max=0.001, beta1=0.9, beta2=0.999, weight_decay=1e-2, eps=1e-8),
}


def _check_finite(name: str, arrays) -> None:
    for i, a in enumerate(arrays):
        if not np.all(np.isfinite(a)):
            raise NumericError(f"non-finite values in {name}[{i}]")


def _check_shapes(thetas, grads) -> None:
    if len(thetas) != len(grads):
        raise DimensionError(f"{len(thetas)} parameter tensors but {len(grads)} gradients")
    for i, (th, g) in enumerate(zip(thetas, grads)):
        if th.shape != g.shape:
            raise DimensionError(f"layer {i}: gradient shape {g.shape} != parameter shape {th.shape}")


def activation_second_moment(a_tilde: np.ndarray) -> np.ndarray:
    """Mean over rows of ``a_tilde ** 2``: the diagonal of the minibatch
    average of ``a a^T``. The bias entry comes out as exactly 1."""
    a = np.asarray(a_tilde, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionError(f"expected a matrix of augmented activations, got {a.shape}")
    if a.shape[0] == 0:
        raise EmptyReductionError("second moment of an empty batch")
    return (a * a).sum(axis=0) / a.shape[0]


@dataclass
class AdaActState:
    M: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0
    # bias-corrected v of the latest step, as used by the update
    last_v_hat: list[np.ndarray] | None = field(default=None, repr=False, compare=False)

    @classmethod
    def zeros_like(cls, thetas) -> "AdaActState":
        return cls([np.zeros_like(th) for th in thetas],
                   [np.zeros(th.shape[1]) for th in thetas])

    def v_hat(self, hp: Hyperparams) -> list[np.ndarray]:
        if self.t == 0:
            raise ParameterError("v_hat is undefined before the first step")
        if self.last_v_hat is not None:
            return self.last_v_hat
        corr = 1.0 - hp.beta2 ** self.t
        out = [v / corr for v in self.v]
        if hp.clip is not None:
            # convex combination of clipped values; clamp away rounding drift
            out = [np.clip(v, hp.clip[0], hp.clip[1]) for v in out]
        return out

    def copy(self) -> "AdaActState":
        cached = None if self.last_v_hat is None else [v.copy() for v in self.last_v_hat]
        return AdaActState([m.copy() for m in self.M], [v.copy() for v in self.v], self.t, cached)


def preconditioner(v_hat: np.ndarray, hp: Hyperparams) -> np.ndarray:
    """Per-column divisor ``v_hat ** p + eps``."""
    if hp.p == 0.5:
        root = np.sqrt(v_hat)
    elif hp.p == 1.0:
        root = v_hat
    else:
        root = np.power(v_hat, hp.p)
    return root + hp.eps


def adaact_step(state: AdaActState, thetas, grads, a_stats, hp: Hyperparams, eta: float):
    """One AdaAct update for every layer; returns the new parameter list.

    ``state`` is advanced in place (step counter, M, v). ``a_stats`` holds the
    per-layer activation second moments from :func:`activation_second_moment`.
    """
    _check_shapes(thetas, grads)
    if len(a_stats) != len(thetas):
        raise DimensionError(f"{len(thetas)} layers but {len(a_stats)} activation statistics")
    for i, (th, a) in enumerate(zip(thetas, a_stats)):
        if a.shape != (th.shape[1],):
            raise DimensionError(f"layer {i}: activation stats shape {a.shape}, expected ({th.shape[1]},)")
    _check_finite("grad", grads)
    _check_finite("activation stats", a_stats)

    state.t += 1
    t = state.t
    b1, b2 = hp.beta1, hp.beta2
    corr1 = 1.0 - b1 ** t
    corr2 = 1.0 - b2 ** t
    new, v_hats = [], []
    for i, (th, g, a) in enumerate(zip(thetas, grads, a_stats)):
        if hp.clip is not None:
            a = np.clip(a, hp.clip[0], hp.clip[1])
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * a
        state.M[i] = b1 * state.M[i] + (1.0 - b1) * g
        if t == 1:
            # the bias correction cancels exactly; skip the lossy round trip
            v_hat, m_hat = np.array(a, dtype=np.float64), np.array(g, dtype=np.float64)
        else:
            v_hat = state.v[i] / corr2
            m_hat = state.M[i] / corr1
        if hp.clip is not None:
            # convex combination of clipped values; clamp away rounding drift
            v_hat = np.clip(v_hat, hp.clip[0], hp.clip[1])
        g_hat = m_hat / preconditioner(v_hat, hp)[None, :]
        new.append(th - eta * (g_hat + hp.weight_decay * th))
        v_hats.append(v_hat)
    state.last_v_hat = v_hats
    return new


@dataclass
class BaselineState:
    m: list[np.ndarray]
    v: list[np.ndarray] = field(default_factory=list)
    t: int = 0

    @classmethod
    def zeros_like(cls, thetas, second_moment: bool = True) -> "BaselineState":
        return cls([np.zeros_like(th) for th in thetas],
                   [np.zeros_like(th) for th in thetas] if second_moment else [])

    def copy(self) -> "BaselineState":
        return BaselineState([m.copy() for m in self.m], [v.copy() for v in self.v], self.t)


def sgd_momentum_step(state: BaselineState, thetas, grads, hp: Hyperparams, eta: float):
    """Heavy-ball SGD: ``buf = beta1 * buf + g``; ``theta -= eta * (buf + wd * theta)``.

    With ``hp.coupled_decay`` the decay term is added to the gradient before it
    enters the buffer instead.
    """
    _check_shapes(thetas, grads)
    _check_finite("grad", grads)
    state.t += 1
    new = []
    for i, (th, g) in enumerate(zip(thetas, grads)):
        if hp.coupled_decay:
            state.m[i] = hp.beta1 * state.m[i] + (g + hp.weight_decay * th)
            new.append(th - eta * state.m[i])
        else:
            state.m[i] = hp.beta1 * state.m[i] + g
            new.append(th - eta * (state.m[i] + hp.weight_decay * th))
    return new


def _adam(state: BaselineState, thetas, grads, hp, eta, l2: float, decoupled: float):
    _check_shapes(thetas, grads)
    _check_finite("grad", grads)
    state.t += 1
    corr1 = 1.0 - hp.beta1 ** state.t
    corr2 = 1.0 - hp.beta2 ** state.t
    new = []
    for i, (th, g) in enumerate(zip(thetas, grads)):
        if l2:
            g = g + l2 * th
        state.m[i] = hp.beta1 * state.m[i] + (1.0 - hp.beta1) * g
        state.v[i] = hp.beta2 * state.v[i] + (1.0 - hp.beta2) * (g * g)
        update = (state.m[i] / corr1) / (np.sqrt(state.v[i] / corr2) + hp.eps)
        new.append(th - eta * (update + decoupled * th))
    return new


def adam_step(state: BaselineState, thetas, grads, hp: Hyperparams, eta: float):
    """Adam with weight decay applied as an L2 term inside the gradient."""
    return _adam(state, thetas, grads, hp, eta, l2=hp.weight_decay, decoupled=0.0)


def adamw_step(state: BaselineState, thetas, grads, hp: Hyperparams, eta: float):
    """Adam with decoupled weight decay."""
    return _adam(state, thetas, grads, hp, eta, l2=0.0, decoupled=hp.weight_decay)


def cosine_lr(t: int, hp: Hyperparams) -> float:
    if not 0 <= t <= hp.total_steps:
        raise ScheduleRangeError(f"step {t} outside schedule range [0, {hp.total_steps}]")
    return hp.eta_min + 0.5 * (hp.eta_max - hp.eta_min) * (1.0 + math.cos(math.pi * t / hp.total_steps))


class Optimizer:
    """Binds a step kernel and its state to a network.

    ``schedule`` is ``"cosine"`` or ``"constant"``. The learning rate used for
    step ``t`` (1-based) is the schedule evaluated at ``t - 1``.
    """

    KINDS = ("adaact", "sgd", "adam", "adamw")

    def __init__(self, kind: str, hp: Hyperparams, thetas, schedule: str = "cosine"):
        if kind not in self.KINDS:
            raise ParameterError(f"unknown optimizer {kind!r}; expected one of {self.KINDS}")
        if schedule not in ("cosine", "constant"):
            raise ParameterError(f"unknown schedule {schedule!r}")
        self.kind = kind
        self.hp = hp
        self.schedule = schedule
        if kind == "adaact":
            self.state = AdaActState.zeros_like(thetas)
        else:
            self.state = BaselineState.zeros_like(thetas, second_moment=kind != "sgd")
        self.last_eta: float | None = None

    @property
    def t(self) -> int:
        return self.state.t

    def lr(self, t: int) -> float:
        if self.schedule == "constant":
            return self.hp.eta_max
        return cosine_lr(min(t, self.hp.total_steps), self.hp)

    def step(self, net, grads) -> float:
        """Update ``net`` in place from ``grads`` and its cached activations."""
        eta = self.lr(self.state.t)
        thetas = net.thetas
        if self.kind == "adaact":
            stats = [activation_second_moment(c.a_tilde) for c in net.caches]
            new = adaact_step(self.state, thetas, grads, stats, self.hp, eta)
        elif self.kind == "sgd":
            new = sgd_momentum_step(self.state, thetas, grads, self.hp, eta)
        elif self.kind == "adam":
            new = adam_step(self.state, thetas, grads, self.hp, eta)
        else:
            new = adamw_step(self.state, thetas, grads, self.hp, eta)
        for layer, th in zip(net.params, new):
            layer.theta = th
        self.last_eta = eta
        return eta

    def v_hat(self) -> list[np.ndarray] | None:
        if self.kind != "adaact" or self.state.t == 0:
            return None
        return self.state.v_hat(self.hp)


def make_optimizer(kind: str, thetas, schedule: str = "cosine", **overrides) -> Optimizer:
    """Optimizer with the per-kind defaults, selectively overridden."""
    if kind not in DEFAULTS:
        raise ParameterError(f"unknown optimizer {kind!r}")
    return Optimizer(kind, replace(DEFAULTS[kind], **overrides), thetas, schedule)
