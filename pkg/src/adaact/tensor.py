"""Dense float64 array kernels.

Arrays are plain ``numpy.ndarray`` objects with ``dtype=float64``; this module
adds the shape/domain checking that the rest of the package relies on, plus
the im2col/col2im pair used to lower convolutions to matrix products.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import DimensionError, EmptyReductionError, GeometryError, NumericDomainError

__all__ = [
    "as_tensor",
    "matmul",
    "elementwise",
    "reduce_mean",
    "ConvGeometry",
    "conv_geometry",
    "im2col",
    "col2im",
]


def as_tensor(x) -> np.ndarray:
    return np.ascontiguousarray(x, dtype=np.float64)


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = as_tensor(a)
    b = as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply shapes {a.shape} and {b.shape}")
    return a @ b


def _first_bad(mask: np.ndarray):
    flat = int(np.flatnonzero(mask)[0])
    return tuple(int(i) for i in np.unravel_index(flat, mask.shape))


def elementwise(t: np.ndarray, op: str, arg: float | None = None) -> np.ndarray:
    """Apply one of a fixed set of elementwise functions.

    ``op`` is one of ``add``, ``mul`` (both take ``arg``), ``sqrt``, ``pow``
    (exponent in ``arg``), ``reciprocal`` and ``square``.
    """
    t = as_tensor(t)
    if op == "add":
        return t + float(arg)
    if op == "mul":
        return t * float(arg)
    if op == "square":
        return t * t
    if op == "sqrt":
        bad = t < 0
        if bad.any():
            idx = _first_bad(bad)
            raise NumericDomainError(f"sqrt of negative value at index {idx}", idx)
        return np.sqrt(t)
    if op == "pow":
        p = float(arg)
        if not p.is_integer():
            bad = t < 0
            if bad.any():
                idx = _first_bad(bad)
                raise NumericDomainError(f"fractional power of negative value at index {idx}", idx)
        if p == 1.0:
            return t.copy()
        if p == 0.5:
            return np.sqrt(t)
        return np.power(t, p)
    if op == "reciprocal":
        bad = t <= 0
        if bad.any():
            idx = _first_bad(bad)
            raise NumericDomainError(f"reciprocal of non-positive value at index {idx}", idx)
        return 1.0 / t
    raise ValueError(f"unknown elementwise op {op!r}")


def reduce_mean(t: np.ndarray, axis: str) -> np.ndarray:
    """Mean of a 2-D array over ``"rows"`` (result per column) or ``"cols"``."""
    t = as_tensor(t)
    if t.ndim != 2:
        raise DimensionError(f"reduce_mean expects a matrix, got shape {t.shape}")
    if axis == "rows":
        n, ax = t.shape[0], 0
    elif axis == "cols":
        n, ax = t.shape[1], 1
    else:
        raise ValueError(f"axis must be 'rows' or 'cols', got {axis!r}")
    if n == 0:
        raise EmptyReductionError(f"mean over empty {axis} of shape {t.shape}")
    return t.sum(axis=ax) / n


class ConvGeometry(NamedTuple):
    channels: int
    height: int
    width: int
    kernel_h: int
    kernel_w: int
    stride: int
    padding: int
    out_h: int
    out_w: int

    @property
    def patch_size(self) -> int:
        return self.channels * self.kernel_h * self.kernel_w


def conv_geometry(channels, height, width, kernel, stride=1, padding=0) -> ConvGeometry:
    kh, kw = (kernel, kernel) if isinstance(kernel, int) else kernel
    if min(channels, height, width, kh, kw, stride) < 1 or padding < 0:
        raise GeometryError(
            f"invalid conv parameters C={channels} H={height} W={width} "
            f"kernel={kh}x{kw} stride={stride} padding={padding}"
        )
    span_h = height + 2 * padding - kh
    span_w = width + 2 * padding - kw
    if span_h < 0 or span_w < 0 or span_h % stride or span_w % stride:
        raise GeometryError(
            f"kernel {kh}x{kw}, stride {stride}, padding {padding} does not tile "
            f"a {height}x{width} input into an integer output extent"
        )
    return ConvGeometry(channels, height, width, kh, kw, stride, padding,
                        span_h // stride + 1, span_w // stride + 1)


def _check_input(x: np.ndarray, g: ConvGeometry) -> None:
    if x.ndim != 4 or x.shape[1:] != (g.channels, g.height, g.width):
        raise GeometryError(
            f"input shape {x.shape} does not match geometry "
            f"(B, {g.channels}, {g.height}, {g.width})"
        )


def im2col(x: np.ndarray, kernel, stride: int = 1, padding: int = 0) -> np.ndarray:
    """Unfold ``x`` of shape (B, C, H, W) into a patch matrix.

    Rows run over (batch, out_row, out_col) lexicographically; columns over
    (channel, kernel_row, kernel_col). Padding contributes zeros.
    """
    x = as_tensor(x)
    if x.ndim != 4:
        raise GeometryError(f"im2col expects a 4-D input, got shape {x.shape}")
    g = conv_geometry(x.shape[1], x.shape[2], x.shape[3], kernel, stride, padding)
    return _im2col(x, g)


def _im2col(x: np.ndarray, g: ConvGeometry) -> np.ndarray:
    _check_input(x, g)
    b = x.shape[0]
    p, s = g.padding, g.stride
    if p:
        x = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
    cols = np.empty((b, g.channels, g.kernel_h, g.kernel_w, g.out_h, g.out_w))
    for i in range(g.kernel_h):
        for j in range(g.kernel_w):
            cols[:, :, i, j] = x[:, :, i:i + s * g.out_h:s, j:j + s * g.out_w:s]
    # (B, C, kh, kw, Ho, Wo) -> (B, Ho, Wo, C, kh, kw)
    return np.ascontiguousarray(cols.transpose(0, 4, 5, 1, 2, 3)).reshape(
        b * g.out_h * g.out_w, g.patch_size)


def col2im(cols: np.ndarray, geometry: ConvGeometry) -> np.ndarray:
    """Scatter-add transpose of :func:`im2col` for the given geometry."""
    g = geometry
    cols = as_tensor(cols)
    locs = g.out_h * g.out_w
    if cols.ndim != 2 or cols.shape[1] != g.patch_size or cols.shape[0] % locs:
        raise GeometryError(f"cols shape {cols.shape} inconsistent with geometry {g}")
    b = cols.shape[0] // locs
    p, s = g.padding, g.stride
    patches = cols.reshape(b, g.out_h, g.out_w, g.channels, g.kernel_h, g.kernel_w)
    patches = patches.transpose(0, 3, 4, 5, 1, 2)
    out = np.zeros((b, g.channels, g.height + 2 * p, g.width + 2 * p))
    for i in range(g.kernel_h):
        for j in range(g.kernel_w):
            out[:, :, i:i + s * g.out_h:s, j:j + s * g.out_w:s] += patches[:, :, i, j]
    if p:
        out = out[:, :, p:-p, p:-p]
    return np.ascontiguousarray(out)
