"""Dataset loading, synthetic generators and minibatch iteration."""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import FormatError, ParameterError

__all__ = [
    "Dataset",
    "load_idx",
    "write_idx",
    "load_cifar_binary",
    "synthetic_blobs",
    "synthetic_glyphs",
    "minibatches",
    "train_eval_split",
    "neighboring_dataset",
]

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801
CIFAR_RECORD = 1 + 3 * 32 * 32


@dataclass(frozen=True)
class Dataset:
    inputs: np.ndarray          # (N, dims) float64
    labels: np.ndarray          # (N,) int64
    class_count: int
    sample_shape: tuple[int, ...] = ()
    # generative description, set only for synthetic blobs
    centers: np.ndarray | None = None
    spread: float | None = None

    def __post_init__(self):
        inputs = np.ascontiguousarray(self.inputs, dtype=np.float64)
        labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if inputs.ndim != 2 or labels.shape != (inputs.shape[0],):
            raise ParameterError(f"inputs {inputs.shape} and labels {labels.shape} do not align")
        if labels.size and (labels.min() < 0 or labels.max() >= self.class_count):
            raise ParameterError(f"labels must lie in [0, {self.class_count})")
        inputs.flags.writeable = False
        labels.flags.writeable = False
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "labels", labels)
        if not self.sample_shape:
            object.__setattr__(self, "sample_shape", (inputs.shape[1],))

    def __len__(self) -> int:
        return self.inputs.shape[0]

    def subset(self, index) -> "Dataset":
        return replace(self, inputs=self.inputs[index], labels=self.labels[index])


def _standardize(x: np.ndarray, channels: int) -> np.ndarray:
    per = x.reshape(x.shape[0], channels, -1)
    mean = per.mean(axis=(0, 2), keepdims=True)
    std = per.std(axis=(0, 2), keepdims=True)
    std[std == 0] = 1.0
    return ((per - mean) / std).reshape(x.shape)


def _read_idx(path, magic: int, ndim: int) -> tuple[tuple[int, ...], np.ndarray]:
    raw = Path(path).read_bytes()
    header = 4 + 4 * ndim
    if len(raw) < 4:
        raise FormatError(f"{path}: file too short for IDX magic", offset=len(raw))
    (got,) = struct.unpack(">I", raw[:4])
    if got != magic:
        raise FormatError(f"{path}: bad IDX magic 0x{got:08x}, expected 0x{magic:08x}", offset=0)
    if len(raw) < header:
        raise FormatError(f"{path}: truncated IDX header", offset=len(raw))
    dims = struct.unpack(f">{ndim}I", raw[4:header])
    need = header + int(np.prod(dims))
    if len(raw) < need:
        raise FormatError(f"{path}: truncated payload, expected {need} bytes, got {len(raw)}",
                          offset=len(raw))
    if len(raw) > need:
        raise FormatError(f"{path}: {len(raw) - need} trailing bytes after payload", offset=need)
    return dims, np.frombuffer(raw, dtype=np.uint8, offset=header)


def load_idx(images_path, labels_path, standardize: bool = False,
             limit: int | None = None, class_count: int | None = None) -> Dataset:
    """Load an IDX image/label pair (MNIST layout) with pixels scaled to [0, 1]."""
    (n, rows, cols), pixels = _read_idx(images_path, IDX_IMAGES_MAGIC, 3)
    (m,), labels = _read_idx(labels_path, IDX_LABELS_MAGIC, 1)
    if n != m:
        raise FormatError(f"{n} images but {m} labels", offset=4)
    x = pixels.reshape(n, rows * cols).astype(np.float64) / 255.0
    y = labels.astype(np.int64)
    if limit is not None:
        x, y = x[:limit], y[:limit]
    if standardize:
        x = _standardize(x, 1)
    k = class_count if class_count is not None else (int(y.max()) + 1 if y.size else 1)
    return Dataset(x, y, k, (1, rows, cols))


def write_idx(images_path, labels_path, images: np.ndarray, labels) -> None:
    """Write uint8 images of shape (N, rows, cols) and labels as IDX files."""
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    n, rows, cols = images.shape
    Path(images_path).write_bytes(struct.pack(">4I", IDX_IMAGES_MAGIC, n, rows, cols) + images.tobytes())
    Path(labels_path).write_bytes(struct.pack(">2I", IDX_LABELS_MAGIC, n) + labels.tobytes())


def load_cifar_binary(path, standardize: bool = False, class_count: int = 10) -> Dataset:
    """Load a CIFAR-10 binary batch: records of 1 label byte + 3x32x32 pixels."""
    raw = Path(path).read_bytes()
    if len(raw) == 0 or len(raw) % CIFAR_RECORD:
        whole = len(raw) // CIFAR_RECORD * CIFAR_RECORD
        raise FormatError(f"{path}: length {len(raw)} is not a multiple of {CIFAR_RECORD}",
                          offset=whole)
    rec = np.frombuffer(raw, dtype=np.uint8).reshape(-1, CIFAR_RECORD)
    y = rec[:, 0].astype(np.int64)
    if y.max() >= class_count:
        bad = int(np.argmax(y >= class_count))
        raise FormatError(f"{path}: label {y[bad]} out of range", offset=bad * CIFAR_RECORD)
    x = rec[:, 1:].astype(np.float64) / 255.0
    if standardize:
        x = _standardize(x, 3)
    return Dataset(x, y, class_count, (3, 32, 32))


def synthetic_blobs(classes: int, per_class: int, dims: int, spread: float, seed: int) -> Dataset:
    """Gaussian clusters around random unit-sphere centers scaled by 3.

    Rows are ordered class by class.
    """
    if classes < 1 or per_class < 1 or dims < 1 or not spread > 0:
        raise ParameterError(
            f"need classes, per_class, dims >= 1 and spread > 0; got "
            f"{classes}, {per_class}, {dims}, {spread}")
    rng = np.random.default_rng(seed)
    centers = rng.standard_normal((classes, dims))
    centers = 3.0 * centers / np.linalg.norm(centers, axis=1, keepdims=True)
    noise = rng.standard_normal((classes, per_class, dims))
    x = (centers[:, None, :] + spread * noise).reshape(classes * per_class, dims)
    y = np.repeat(np.arange(classes), per_class)
    return Dataset(x, y, classes, (dims,), centers=centers, spread=float(spread))


def synthetic_glyphs(n: int, seed: int, size: int = 28, classes: int = 10) -> tuple[np.ndarray, np.ndarray]:
    """Procedural grayscale glyph images, returned as uint8 (n, size, size) and labels.

    Each class is a fixed stroke pattern (bars, crosses, boxes, diagonals,
    rings) drawn with random shift, rotation, scale, thickness and intensity,
    overlaid with a random distractor bar and Gaussian pixel noise.
    Meant as a stand-in for small IDX image corpora.
    """
    if n < 1 or classes < 1 or classes > 10:
        raise ParameterError("need n >= 1 and 1 <= classes <= 10")
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    labels = rng.integers(0, classes, size=n)
    images = np.empty((n, size, size), dtype=np.uint8)
    c = (size - 1) / 2.0
    for i, k in enumerate(labels):
        dy, dx = rng.uniform(-3, 3, size=2)
        angle = rng.uniform(-0.45, 0.45)
        scale = rng.uniform(0.75, 1.15)
        w = rng.uniform(1.0, 2.6)
        y0, x0 = yy - c - dy, xx - c - dx
        u = (np.cos(angle) * y0 - np.sin(angle) * x0) / scale
        v = (np.sin(angle) * y0 + np.cos(angle) * x0) / scale
        r = 0.65 * c
        rad = np.hypot(u, v)
        box = (np.abs(u) < r) & (np.abs(v) < r)
        strokes = {
            0: np.abs(u) < w,
            1: np.abs(v) < w,
            2: (np.abs(u) < w) | (np.abs(v) < w),
            3: np.abs(u - v) < 1.4 * w,
            4: np.abs(u + v) < 1.4 * w,
            5: (np.abs(u - v) < 1.4 * w) | (np.abs(u + v) < 1.4 * w),
            6: np.abs(rad - r) < w,
            7: box & ((np.abs(np.abs(u) - r) < 1.5 * w) | (np.abs(np.abs(v) - r) < 1.5 * w)),
            8: (rad < r) & (u < 0),
            9: (np.abs(rad - r) < w) | (rad < 0.35 * r),
        }[int(k)]
        shape = strokes & (rad < 1.3 * c)
        # a random distractor bar shared by no class
        t = rng.uniform(0, np.pi)
        off = rng.uniform(-c, c)
        bar = np.abs(np.cos(t) * (yy - c) + np.sin(t) * (xx - c) - off) < 1.0
        img = (shape * rng.uniform(0.5, 1.0) + bar * rng.uniform(0.0, 0.6)
               + rng.normal(0.0, 0.3, (size, size)))
        images[i] = np.clip(img * 255.0, 0, 255).astype(np.uint8)
    return images, labels.astype(np.uint8)


def minibatches(n: int | Dataset, batch_size: int, seed: int, epoch: int) -> list[np.ndarray]:
    """Index slices of a seeded permutation of ``range(n)``; last batch may be short."""
    if isinstance(n, Dataset):
        n = len(n)
    if batch_size < 1:
        raise ParameterError(f"batch_size must be >= 1, got {batch_size}")
    if batch_size > n:
        raise ParameterError(f"batch_size {batch_size} exceeds dataset size {n}")
    perm = np.random.default_rng([seed, epoch]).permutation(n)
    return [perm[i:i + batch_size] for i in range(0, n, batch_size)]


def train_eval_split(ds: Dataset, eval_fraction: float, seed: int) -> tuple[Dataset, Dataset | None]:
    if not 0 <= eval_fraction < 1:
        raise ParameterError(f"eval_fraction must be in [0, 1), got {eval_fraction}")
    n_eval = int(round(len(ds) * eval_fraction))
    if n_eval == 0:
        return ds, None
    perm = np.random.default_rng([seed, 0xE7A1]).permutation(len(ds))
    return ds.subset(np.sort(perm[n_eval:])), ds.subset(np.sort(perm[:n_eval]))


def neighboring_dataset(ds: Dataset, index: int, seed: int) -> Dataset:
    """Copy of ``ds`` with example ``index`` replaced.

    Synthetic blobs get a fresh draw from the generating mixture; other
    datasets get a duplicate of a uniformly chosen different example.
    """
    n = len(ds)
    if not 0 <= index < n:
        raise IndexError(f"replace index {index} out of range [0, {n})")
    rng = np.random.default_rng([seed, index])
    x = ds.inputs.copy()
    y = ds.labels.copy()
    if ds.centers is not None:
        k = int(rng.integers(ds.class_count))
        x[index] = ds.centers[k] + ds.spread * rng.standard_normal(x.shape[1])
        y[index] = k
    else:
        if n < 2:
            raise ParameterError("need at least two examples to pick a replacement")
        j = int(rng.integers(n - 1))
        j += j >= index
        x[index] = ds.inputs[j]
        y[index] = ds.labels[j]
    return replace(ds, inputs=x, labels=y)
