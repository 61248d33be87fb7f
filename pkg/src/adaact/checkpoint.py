"""Binary checkpoints for networks and optimizer state.

Layout (all integers little-endian)::

    b"AAKT1"
    u32  layer count
    per layer:   u8 kind tag, u8 rank, rank x u32 extents, f64 data
    u32  buffer count            (0 when no optimizer state is stored)
    per buffer:  u8 buffer tag, u8 rank, rank x u32 extents, f64 data

Parameter-free layers (relu, flatten) are written with rank 0 and no data.
Optimizer buffers follow layer order; the step counter is a rank-1 buffer of
length one.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import DimensionError, FormatError
from .nn import Network

MAGIC = b"AAKT1"

LAYER_TAGS = {"dense": 1, "conv": 2, "relu": 3, "flatten": 4}
TAG_STEP = 0x20
BUFFER_TAGS = {
    "adaact": (("M", 0x21), ("v", 0x22)),
    "sgd": (("m", 0x23),),
    "adam": (("m", 0x24), ("v", 0x25)),
    "adamw": (("m", 0x26), ("v", 0x27)),
}


def _pack(tag: int, arr: np.ndarray | None) -> bytes:
    if arr is None:
        return struct.pack("<BB", tag, 0)
    arr = np.ascontiguousarray(arr, dtype="<f8")
    return (struct.pack("<BB", tag, arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape)
            + arr.tobytes())


def _optimizer_buffers(optimizer):
    state = optimizer.state
    yield TAG_STEP, np.array([float(state.t)])
    names = BUFFER_TAGS[optimizer.kind]
    for i in range(len(state.m if hasattr(state, "m") else state.M)):
        for name, tag in names:
            yield tag, getattr(state, name)[i]


def save_checkpoint(path, net: Network, optimizer=None) -> None:
    parts = [MAGIC, struct.pack("<I", len(net.layers))]
    for layer in net.layers:
        parts.append(_pack(LAYER_TAGS[layer.kind], layer.theta))
    buffers = list(_optimizer_buffers(optimizer)) if optimizer is not None else []
    parts.append(struct.pack("<I", len(buffers)))
    parts.extend(_pack(tag, arr) for tag, arr in buffers)
    Path(path).write_bytes(b"".join(parts))


class _Reader:
    def __init__(self, raw: bytes):
        self.raw = raw
        self.pos = 0

    def take(self, fmt: str):
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.raw):
            raise FormatError("truncated checkpoint", offset=self.pos)
        out = struct.unpack_from(fmt, self.raw, self.pos)
        self.pos += size
        return out

    def record(self):
        tag, rank = self.take("<BB")
        if rank == 0:
            return tag, None
        shape = self.take(f"<{rank}I")
        count = int(np.prod(shape))
        if self.pos + 8 * count > len(self.raw):
            raise FormatError("truncated checkpoint payload", offset=self.pos)
        arr = np.frombuffer(self.raw, dtype="<f8", count=count, offset=self.pos).reshape(shape)
        self.pos += 8 * count
        return tag, arr.astype(np.float64)


def load_checkpoint(path, net: Network, optimizer=None) -> None:
    """Load parameters (and optimizer state, if given) into existing objects.

    The network must have the same architecture as the one saved.
    """
    raw = Path(path).read_bytes()
    if raw[:len(MAGIC)] != MAGIC:
        raise FormatError(f"{path}: bad checkpoint magic", offset=0)
    r = _Reader(raw)
    r.pos = len(MAGIC)
    (n_layers,) = r.take("<I")
    if n_layers != len(net.layers):
        raise DimensionError(f"checkpoint has {n_layers} layers, network has {len(net.layers)}")
    thetas = []
    for i, layer in enumerate(net.layers):
        at = r.pos
        tag, arr = r.record()
        if tag != LAYER_TAGS[layer.kind]:
            raise FormatError(f"layer {i}: kind tag {tag} does not match {layer.kind!r}", offset=at)
        if layer.has_params:
            if arr is None or arr.shape != layer.theta.shape:
                raise DimensionError(f"layer {i}: stored shape does not match {layer.theta.shape}")
            thetas.append(arr)
    (n_buffers,) = r.take("<I")
    buffers = [r.record() for _ in range(n_buffers)]
    if r.pos != len(raw):
        raise FormatError(f"{len(raw) - r.pos} trailing bytes in checkpoint", offset=r.pos)
    net.set_thetas(thetas)
    if optimizer is None:
        return
    if not buffers or buffers[0][0] != TAG_STEP:
        raise FormatError("checkpoint carries no optimizer state")
    names = BUFFER_TAGS[optimizer.kind]
    expected = 1 + len(names) * len(thetas)
    if len(buffers) != expected:
        raise FormatError(f"expected {expected} {optimizer.kind} buffers, found {len(buffers)}")
    state = optimizer.state
    state.t = int(buffers[0][1][0])
    if hasattr(state, "last_v_hat"):
        state.last_v_hat = None
    it = iter(buffers[1:])
    for i in range(len(thetas)):
        for name, tag in names:
            got, arr = next(it)
            if got != tag:
                raise FormatError(f"layer {i}: buffer tag {got:#x}, expected {tag:#x}")
            getattr(state, name)[i] = arr
