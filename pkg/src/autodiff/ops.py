"""Layer operations with their reverse-mode rules.

Spatial ops take ``[B, C, H, W]`` or unbatched ``[C, H, W]`` tensors.
Convolution and fully connected layers evaluate every sample on its own, so
a sample's activations are bit-identical whatever batch it is computed in.
"""

from typing import Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from src.autodiff.tensor import Tensor, record
from src.utils.exceptions import ShapeMismatchError, ValidationError


def _batched(x: Tensor) -> Tuple[np.ndarray, bool]:
    if x.ndim == 4:
        return x.data, False
    if x.ndim == 3:
        return x.data[None], True
    raise ShapeMismatchError(f"expected [B,C,H,W] or [C,H,W], got shape {x.shape}")


def relu(x: Tensor) -> Tensor:
    """Elementwise ``max(0, x)``."""
    positive = x.data > 0
    out = np.where(positive, x.data, 0.0).astype(x.data.dtype, copy=False)

    def _backward(grad):
        return (np.where(positive, grad, 0.0),)

    return record("relu", (x,), out, _backward)


def _im2col(sample: np.ndarray, kh: int, kw: int, stride: int) -> np.ndarray:
    """Rows are output positions (row-major), columns are (channel, ky, kx)."""
    windows = sliding_window_view(sample, (kh, kw), axis=(1, 2))[:, ::stride, ::stride]
    channels, out_h, out_w = windows.shape[:3]
    return windows.transpose(1, 2, 0, 3, 4).reshape(out_h * out_w, channels * kh * kw)


def conv2d(x: Tensor, w: Tensor, b: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    """2-D cross-correlation.

    Args:
        x: Input ``[B, C_in, H, W]`` or ``[C_in, H, W]``
        w: Kernel ``[C_out, C_in, kH, kW]``
        b: Bias ``[C_out]``
        stride: Step between windows, >= 1
        padding: Zero padding added on every side

    Returns:
        Output with extent ``floor((H + 2*padding - kH) / stride) + 1``

    Raises:
        ShapeMismatchError: If channel counts differ or the kernel exceeds the input
    """
    data, unbatched = _batched(x)
    batch, channels, height, width = data.shape
    out_channels, in_channels, kh, kw = w.shape
    if channels != in_channels:
        raise ShapeMismatchError(
            f"conv2d: input has {channels} channels, kernel expects {in_channels}"
        )
    if b.shape != (out_channels,):
        raise ShapeMismatchError(f"conv2d: bias shape {b.shape} != ({out_channels},)")
    if stride < 1:
        raise ValidationError("conv2d: stride must be >= 1")
    if kh > height + 2 * padding or kw > width + 2 * padding:
        raise ShapeMismatchError(f"conv2d: kernel {kh}x{kw} exceeds padded input {height}x{width}")

    padded = np.pad(data, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    out_h = (height + 2 * padding - kh) // stride + 1
    out_w = (width + 2 * padding - kw) // stride + 1
    kernel = w.data.reshape(out_channels, -1).T

    out = np.empty((batch, out_channels, out_h, out_w), dtype=data.dtype)
    for i in range(batch):
        cols = _im2col(padded[i], kh, kw, stride)
        out[i] = (cols @ kernel + b.data).T.reshape(out_channels, out_h, out_w)

    def _backward(grad):
        grad = grad.reshape(batch, out_channels, out_h, out_w)
        grad_x = np.zeros_like(padded)
        grad_kernel = np.zeros_like(kernel)
        grad_b = np.zeros_like(b.data)
        for i in range(batch):
            rows = grad[i].reshape(out_channels, -1).T
            grad_kernel += _im2col(padded[i], kh, kw, stride).T @ rows
            grad_b += rows.sum(axis=0)
            dcols = (rows @ kernel.T).reshape(out_h, out_w, channels, kh, kw)
            for ky in range(kh):
                for kx in range(kw):
                    grad_x[i, :, ky:ky + stride * (out_h - 1) + 1:stride,
                           kx:kx + stride * (out_w - 1) + 1:stride] += (
                        dcols[:, :, :, ky, kx].transpose(2, 0, 1)
                    )
        grad_x = grad_x[:, :, padding:padding + height, padding:padding + width]
        if unbatched:
            grad_x = grad_x[0]
        return grad_x, grad_kernel.T.reshape(w.shape), grad_b

    if unbatched:
        out = out[0]
    return record("conv2d", (x, w, b), out, _backward)


def maxpool2d(x: Tensor, k: int, stride: int = None) -> Tensor:
    """Windowed maximum with floor semantics at the edges.

    The first index in scan order wins ties and receives the whole gradient.
    """
    stride = stride or k
    data, unbatched = _batched(x)
    batch, channels, height, width = data.shape
    if k > height or k > width:
        raise ShapeMismatchError(f"maxpool2d: window {k} exceeds input {height}x{width}")

    windows = sliding_window_view(data, (k, k), axis=(2, 3))[:, :, ::stride, ::stride]
    out_h, out_w = windows.shape[2:4]
    flat = windows.reshape(batch, channels, out_h, out_w, k * k)
    argmax = flat.argmax(axis=-1)
    out = np.take_along_axis(flat, argmax[..., None], axis=-1)[..., 0]

    def _backward(grad):
        grad = grad.reshape(batch, channels, out_h, out_w)
        grad_x = np.zeros_like(data)
        bi, ci, hi, wi = np.indices(argmax.shape)
        dy, dx = np.divmod(argmax, k)
        np.add.at(grad_x, (bi, ci, hi * stride + dy, wi * stride + dx), grad)
        return (grad_x[0] if unbatched else grad_x,)

    if unbatched:
        out = out[0]
    return record("maxpool2d", (x,), np.ascontiguousarray(out), _backward,
                  saved_elements=argmax.size)


def nearest_upsample(x: Tensor, factor: int) -> Tensor:
    """Replicate every cell into a ``factor x factor`` block."""
    if factor < 1:
        raise ValidationError("nearest_upsample: factor must be >= 1")
    out = np.repeat(np.repeat(x.data, factor, axis=-2), factor, axis=-1)

    def _backward(grad):
        shape = x.shape[:-2] + (x.shape[-2], factor, x.shape[-1], factor)
        return (grad.reshape(shape).sum(axis=(-3, -1)),)

    return record("nearest_upsample", (x,), out, _backward)


def concat_channels(a: Tensor, b: Tensor) -> Tensor:
    """Concatenate along the channel axis (the skip connection join)."""
    if a.ndim != b.ndim or a.shape[:-3] != b.shape[:-3] or a.shape[-2:] != b.shape[-2:]:
        raise ShapeMismatchError(f"concat_channels: spatial mismatch {a.shape} vs {b.shape}")
    split = a.shape[-3]
    out = np.concatenate([a.data, b.data], axis=-3)

    def _backward(grad):
        return grad[..., :split, :, :], grad[..., split:, :, :]

    return record("concat_channels", (a, b), out, _backward)


def fully_connected(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """``x @ W + b`` for ``x`` of shape ``[B, F]`` or ``[F]``."""
    rows = x.data[None] if x.ndim == 1 else x.data
    if rows.ndim != 2 or w.ndim != 2 or rows.shape[1] != w.shape[0]:
        raise ShapeMismatchError(f"fully_connected: cannot multiply {x.shape} by {w.shape}")
    if b.shape != (w.shape[1],):
        raise ShapeMismatchError(f"fully_connected: bias shape {b.shape} != ({w.shape[1]},)")

    out = np.empty((rows.shape[0], w.shape[1]), dtype=rows.dtype)
    for i in range(rows.shape[0]):
        out[i] = rows[i] @ w.data + b.data

    def _backward(grad):
        grad = grad.reshape(out.shape)
        grad_x = np.empty_like(rows)
        grad_w = np.zeros_like(w.data)
        grad_b = np.zeros_like(b.data)
        for i in range(rows.shape[0]):
            grad_x[i] = w.data @ grad[i]
            grad_w += np.outer(rows[i], grad[i])
            grad_b += grad[i]
        return (grad_x[0] if x.ndim == 1 else grad_x), grad_w, grad_b

    if x.ndim == 1:
        out = out[0]
    return record("fully_connected", (x, w, b), out, _backward)


def flatten(x: Tensor) -> Tensor:
    """``[B, ...] -> [B, prod(...)]``."""
    out = x.data.reshape(x.shape[0], -1)

    def _backward(grad):
        return (grad.reshape(x.shape),)

    return record("flatten", (x,), out, _backward)


def channels_to_rows(x: Tensor) -> Tensor:
    """``[B, C, H, W] -> [B*H*W, C]``, one row per map cell in row-major order."""
    data, _ = _batched(x)
    batch, channels, height, width = data.shape
    out = np.ascontiguousarray(data.transpose(0, 2, 3, 1).reshape(-1, channels))

    def _backward(grad):
        grad = grad.reshape(batch, height, width, channels).transpose(0, 3, 1, 2)
        return (np.ascontiguousarray(grad).reshape(x.shape),)

    return record("channels_to_rows", (x,), out, _backward)


def scatter_cells(
    x: Tensor,
    cells: Tuple[np.ndarray, np.ndarray, np.ndarray],
    shape: Sequence[int],
) -> Tensor:
    """Write feature rows into a zero map.

    Args:
        x: Rows ``[N, D]``
        cells: ``(map_index, row, col)`` arrays of length N, pairwise distinct
        shape: Output shape ``[B, D, H, W]``

    Returns:
        Map whose unaddressed cells are exactly zero
    """
    map_index, rows, cols = (np.asarray(c, dtype=np.intp) for c in cells)
    if x.ndim != 2 or len(map_index) != x.shape[0] or x.shape[1] != shape[1]:
        raise ShapeMismatchError(f"scatter_cells: {x.shape} rows for {len(map_index)} cells")
    out = np.zeros(tuple(shape), dtype=x.data.dtype)
    out[map_index, :, rows, cols] = x.data

    def _backward(grad):
        return (grad[map_index, :, rows, cols],)

    return record("scatter_cells", (x,), out, _backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product of equally shaped tensors."""
    if a.shape != b.shape:
        raise ShapeMismatchError(f"mul: {a.shape} vs {b.shape}")
    out = a.data * b.data

    def _backward(grad):
        return grad * b.data, grad * a.data

    return record("mul", (a, b), out, _backward)


def total(x: Tensor) -> Tensor:
    """Sum of all elements as a scalar tensor."""
    out = np.asarray(x.data.sum(), dtype=x.data.dtype)

    def _backward(grad):
        return (np.full(x.shape, grad, dtype=x.data.dtype),)

    return record("sum", (x,), out, _backward)


def select_rows(x: Tensor, index: np.ndarray) -> Tensor:
    """Rows ``x[index]`` of a ``[N, ...]`` tensor; index entries must be distinct."""
    index = np.asarray(index, dtype=np.intp)
    out = x.data[index]

    def _backward(grad):
        grad_x = np.zeros_like(x.data)
        grad_x[index] = grad
        return (grad_x,)

    return record("select_rows", (x,), out, _backward)
