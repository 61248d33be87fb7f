"""Experiment configuration: a flat TOML document with four sections.

Example::

    [dataset]
    kind = "blobs"
    classes = 4
    per_class = 500
    dims = 20
    spread = 0.5
    seed = 7

    [model]
    layers = ["dense:64", "relu", "dense:64", "relu", "dense:4"]

    [optim]
    kind = "adaact"            # adaact | sgd | adam | adamw

    [run]
    epochs = 30
    batch_size = 128
    seed = 0

Unset optimizer fields fall back to the per-optimizer defaults in
:data:`adaact.optim.DEFAULTS`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import tomli

from .errors import ConfigError, ParameterError
from .optim import DEFAULTS, Hyperparams

__all__ = ["ExperimentConfig", "parse_config", "load_config", "DEFAULT_STABILITY_CONFIG"]

_KEYS = {
    "dataset": {"kind", "classes", "per_class", "dims", "spread", "seed",
                "images", "labels", "path", "limit", "standardize"},
    "model": {"layers", "input"},
    "optim": {"kind", "lr", "lr_min", "beta1", "beta2", "weight_decay", "eps", "p",
              "clip", "schedule", "coupled_decay"},
    "run": {"mode", "epochs", "steps", "batch_size", "seed", "eval_fraction", "out",
            "checkpoint", "replace_index", "replace_seed"},
}
_OPTIM_FIELDS = {"lr": "eta_max", "lr_min": "eta_min", "beta1": "beta1", "beta2": "beta2",
                 "weight_decay": "weight_decay", "eps": "eps", "p": "p", "clip": "clip",
                 "coupled_decay": "coupled_decay"}
MODES = ("train", "stability-pair", "variance-report")


@dataclass
class ExperimentConfig:
    dataset: dict
    layers: list[str]
    input_shape: tuple[int, ...] | None
    optimizer: str
    hp: Hyperparams
    schedule: str = "cosine"
    mode: str = "train"
    epochs: int = 1
    steps: int | None = None
    batch_size: int = 128
    seed: int = 0
    eval_fraction: float = 0.2
    out: str | None = None
    checkpoint: str | None = None
    replace_index: int | None = None
    replace_seed: int = 0
    base_dir: Path = field(default_factory=Path)


def _type(section, key, value, types, name):
    if isinstance(value, bool) and bool not in types:
        raise ConfigError(f"{section}.{key} must be {name}, got {value!r}", field=f"{section}.{key}")
    if not isinstance(value, types):
        raise ConfigError(f"{section}.{key} must be {name}, got {value!r}", field=f"{section}.{key}")
    return value


def _int(sec, doc, key, default=None, minimum=None):
    if key not in doc:
        return default
    v = _type(sec, key, doc[key], (int,), "an integer")
    if minimum is not None and v < minimum:
        raise ConfigError(f"{sec}.{key} must be >= {minimum}, got {v}", field=f"{sec}.{key}")
    return v


def _float(sec, doc, key, default=None):
    if key not in doc:
        return default
    return float(_type(sec, key, doc[key], (int, float), "a number"))


def _str(sec, doc, key, default=None):
    if key not in doc:
        return default
    return _type(sec, key, doc[key], (str,), "a string")


def parse_config(text: str, overrides: dict | None = None, base_dir=".") -> ExperimentConfig:
    """Parse and validate a config document.

    ``overrides`` maps dotted keys (``"run.seed"``) to values applied after
    parsing; a value of ``None`` removes the key. Relative file paths resolve against ``base_dir``.
    """
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        line = int(m.group(1)) if m else None
        raise ConfigError(f"parse error: {exc}", line=line) from None
    for dotted, value in (overrides or {}).items():
        sec, key = dotted.split(".", 1)
        if value is None:
            doc.get(sec, {}).pop(key, None)
        else:
            doc.setdefault(sec, {})[key] = value

    for sec, body in doc.items():
        if sec not in _KEYS:
            raise ConfigError(f"unknown section [{sec}]", field=sec)
        if not isinstance(body, dict):
            raise ConfigError(f"{sec} must be a section", field=sec)
        for key in body:
            if key not in _KEYS[sec]:
                raise ConfigError(f"unknown key {sec}.{key}", field=f"{sec}.{key}")
    for sec in ("dataset", "model"):
        if sec not in doc:
            raise ConfigError(f"missing section [{sec}]", field=sec)
    base = Path(base_dir)
    ds, model = doc["dataset"], doc["model"]
    optim, run = doc.get("optim", {}), doc.get("run", {})

    dataset = _dataset(ds, base)

    layers = model.get("layers")
    if not isinstance(layers, list) or not layers or not all(isinstance(s, str) for s in layers):
        raise ConfigError("model.layers must be a non-empty list of strings", field="model.layers")
    input_shape = None
    if "input" in model:
        shp = model["input"]
        if not isinstance(shp, list) or not shp or not all(
                isinstance(s, int) and not isinstance(s, bool) and s > 0 for s in shp):
            raise ConfigError("model.input must be a list of positive integers", field="model.input")
        input_shape = tuple(shp)

    kind = _str("optim", optim, "kind", "adaact")
    if kind not in DEFAULTS:
        raise ConfigError(f"optim.kind must be one of {sorted(DEFAULTS)}, got {kind!r}", field="optim.kind")
    schedule = _str("optim", optim, "schedule", "cosine")
    if schedule not in ("cosine", "constant"):
        raise ConfigError(f"optim.schedule must be 'cosine' or 'constant', got {schedule!r}",
                          field="optim.schedule")
    changes = {}
    for key, attr in _OPTIM_FIELDS.items():
        if key not in optim:
            continue
        if key == "clip":
            c = optim[key]
            if not (isinstance(c, list) and len(c) == 2
                    and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in c)):
                raise ConfigError("optim.clip must be a [low, high] pair", field="optim.clip")
            changes[attr] = (float(c[0]), float(c[1]))
        elif key == "coupled_decay":
            changes[attr] = _type("optim", key, optim[key], (bool,), "a boolean")
        else:
            changes[attr] = _float("optim", optim, key)
    try:
        hp = replace(DEFAULTS[kind], **changes)
    except ParameterError as exc:
        raise ConfigError(f"optim: {exc}", field="optim") from None

    mode = _str("run", run, "mode", "train")
    if mode not in MODES:
        raise ConfigError(f"run.mode must be one of {MODES}, got {mode!r}", field="run.mode")
    if "seed" not in run:
        raise ConfigError("run.seed is required", field="run.seed")
    eval_fraction = _float("run", run, "eval_fraction", 0.2)
    if not 0 <= eval_fraction < 1:
        raise ConfigError(f"run.eval_fraction must be in [0, 1), got {eval_fraction}",
                          field="run.eval_fraction")

    def _path(key):
        v = _str("run", run, key)
        return None if v is None else str(base / v)

    return ExperimentConfig(
        dataset=dataset, layers=layers, input_shape=input_shape, optimizer=kind, hp=hp,
        schedule=schedule, mode=mode,
        epochs=_int("run", run, "epochs", 1, minimum=1),
        steps=_int("run", run, "steps", None, minimum=1),
        batch_size=_int("run", run, "batch_size", 128, minimum=1),
        seed=_int("run", run, "seed"),
        eval_fraction=eval_fraction,
        out=_path("out"), checkpoint=_path("checkpoint"),
        replace_index=_int("run", run, "replace_index", None, minimum=0),
        replace_seed=_int("run", run, "replace_seed", 0),
        base_dir=base,
    )


def _dataset(ds: dict, base: Path) -> dict:
    kind = _str("dataset", ds, "kind")
    if kind is None:
        raise ConfigError("dataset.kind is required", field="dataset.kind")
    allowed = {
        "blobs": {"kind", "classes", "per_class", "dims", "spread", "seed"},
        "idx": {"kind", "images", "labels", "limit", "standardize"},
        "cifar": {"kind", "path", "standardize"},
    }
    if kind not in allowed:
        raise ConfigError(f"dataset.kind must be one of {sorted(allowed)}, got {kind!r}",
                          field="dataset.kind")
    for key in ds:
        if key not in allowed[kind]:
            raise ConfigError(f"dataset.{key} does not apply to kind {kind!r}", field=f"dataset.{key}")
    out = {"kind": kind}
    if kind == "blobs":
        for key in ("classes", "per_class", "dims"):
            if key not in ds:
                raise ConfigError(f"dataset.{key} is required for blobs", field=f"dataset.{key}")
            out[key] = _int("dataset", ds, key, minimum=1)
        out["spread"] = _float("dataset", ds, "spread", 0.5)
        if not out["spread"] > 0:
            raise ConfigError("dataset.spread must be positive", field="dataset.spread")
        out["seed"] = _int("dataset", ds, "seed", 0)
        return out
    keys = ("images", "labels") if kind == "idx" else ("path",)
    for key in keys:
        value = _str("dataset", ds, key)
        if value is None:
            raise ConfigError(f"dataset.{key} is required for {kind}", field=f"dataset.{key}")
        p = base / value
        if not p.is_file():
            raise ConfigError(f"dataset.{key}: no such file {p}", field=f"dataset.{key}")
        out[key] = str(p)
    if kind == "idx":
        out["limit"] = _int("dataset", ds, "limit", None, minimum=1)
    out["standardize"] = bool(_type("dataset", "standardize", ds.get("standardize", False),
                                    (bool,), "a boolean"))
    return out


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, overrides, base_dir=path.parent)


DEFAULT_STABILITY_CONFIG = """\
[dataset]
kind = "blobs"
classes = 4
per_class = 500
dims = 20
spread = 0.5
seed = 7

[model]
layers = ["dense:64", "relu", "dense:64", "relu", "dense:4"]

[optim]
kind = "adaact"
schedule = "constant"

[run]
mode = "stability-pair"
steps = 500
batch_size = 128
eval_fraction = 0.2
seed = 0
replace_index = 0
"""
