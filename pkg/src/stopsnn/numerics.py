"""Dense float64 tensor kernels.

Matrix multiply, 2-D convolution with its exact adjoints, and average
pooling; every higher-level operation in the package is expressed through
these. All kernels are pure functions over C-contiguous float64 arrays.
Convolution is cross-correlation (no kernel flip) with zero padding.
"""
from __future__ import annotations

import numpy as np

from .errors import ShapeError

Tensor = np.ndarray


def as_tensor(values) -> Tensor:
    """Coerce to a C-contiguous float64 array."""
    return np.ascontiguousarray(values, dtype=np.float64)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product a @ b; b may be a vector (treated as a column)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim not in (1, 2):
        raise ShapeError(f"matmul expects 2-D a and 1/2-D b, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"inner dimensions disagree: {a.shape} vs {b.shape}")
    return a @ b


def _conv_out_len(size: int, kernel: int, stride: int, padding: int) -> int:
    span = size + 2 * padding - kernel
    if span < 0 or span % stride != 0:
        raise ShapeError(
            f"convolution output size not integral: size={size} kernel={kernel} "
            f"stride={stride} padding={padding}"
        )
    return span // stride + 1


def _pad2d(x: Tensor, padding: int) -> Tensor:
    if padding == 0:
        return x
    return np.pad(x, ((0, 0), (padding, padding), (padding, padding)))


def _im2col(padded: Tensor, kh: int, kw: int, stride: int, h_out: int, w_out: int) -> Tensor:
    """Patch matrix of shape (Cin*kh*kw, h_out*w_out) from a padded input."""
    c = padded.shape[0]
    sc, sh, sw = padded.strides
    view = np.lib.stride_tricks.as_strided(
        padded,
        shape=(c, kh, kw, h_out, w_out),
        strides=(sc, sh, sw, stride * sh, stride * sw),
        writeable=False,
    )
    return view.reshape(c * kh * kw, h_out * w_out)


def conv2d(inp: Tensor, kernels: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    """Cross-correlate a (Cin,H,W) input with (Cout,Cin,kh,kw) kernels."""
    inp = np.asarray(inp, dtype=np.float64)
    kernels = np.asarray(kernels, dtype=np.float64)
    if inp.ndim != 3 or kernels.ndim != 4:
        raise ShapeError(f"conv2d expects 3-D input and 4-D kernels, got {inp.shape}, {kernels.shape}")
    cin, h, w = inp.shape
    cout, cin_k, kh, kw = kernels.shape
    if cin != cin_k:
        raise ShapeError(f"input channels {cin} do not match kernel channels {cin_k}")
    h_out = _conv_out_len(h, kh, stride, padding)
    w_out = _conv_out_len(w, kw, stride, padding)
    cols = _im2col(_pad2d(inp, padding), kh, kw, stride, h_out, w_out)
    out = kernels.reshape(cout, cin * kh * kw) @ cols
    return out.reshape(cout, h_out, w_out)


def conv2d_adjoint_input(deltas: Tensor, kernels: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    """Exact adjoint of conv2d as a linear map in its input.

    Satisfies <conv2d(x, k), d> == <x, conv2d_adjoint_input(d, k)> for all x, d.
    """
    deltas = np.asarray(deltas, dtype=np.float64)
    kernels = np.asarray(kernels, dtype=np.float64)
    if deltas.ndim != 3 or kernels.ndim != 4:
        raise ShapeError(f"expected 3-D deltas and 4-D kernels, got {deltas.shape}, {kernels.shape}")
    cout, h_out, w_out = deltas.shape
    cout_k, cin, kh, kw = kernels.shape
    if cout != cout_k:
        raise ShapeError(f"delta channels {cout} do not match kernel count {cout_k}")
    hp = (h_out - 1) * stride + kh
    wp = (w_out - 1) * stride + kw
    if hp <= 2 * padding or wp <= 2 * padding:
        raise ShapeError("padding exceeds reconstructed input size")
    # one GEMM back to patch space, then scatter-add patches into place
    gcols = (kernels.reshape(cout, cin * kh * kw).T @ deltas.reshape(cout, h_out * w_out)).reshape(
        cin, kh, kw, h_out, w_out
    )
    grad_padded = np.zeros((cin, hp, wp))
    for ki in range(kh):
        for kj in range(kw):
            grad_padded[:, ki : ki + stride * h_out : stride, kj : kj + stride * w_out : stride] += gcols[
                :, ki, kj
            ]
    if padding == 0:
        return grad_padded
    return grad_padded[:, padding:-padding, padding:-padding].copy()


def conv2d_weight_grad(traces: Tensor, deltas: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    """Gradient of <conv2d(traces, kernels), deltas> with respect to the kernels.

    Each shared kernel element accumulates the delta/trace product over all
    spatial positions it touches.
    """
    traces = np.asarray(traces, dtype=np.float64)
    deltas = np.asarray(deltas, dtype=np.float64)
    if traces.ndim != 3 or deltas.ndim != 3:
        raise ShapeError(f"expected 3-D traces and deltas, got {traces.shape}, {deltas.shape}")
    cin, h, w = traces.shape
    cout, h_out, w_out = deltas.shape
    kh = h + 2 * padding - (h_out - 1) * stride
    kw = w + 2 * padding - (w_out - 1) * stride
    if kh < 1 or kw < 1:
        raise ShapeError(f"inconsistent shapes for weight gradient: {traces.shape} vs {deltas.shape}")
    cols = _im2col(_pad2d(traces, padding), kh, kw, stride, h_out, w_out)
    grad = deltas.reshape(cout, h_out * w_out) @ cols.T
    return grad.reshape(cout, cin, kh, kw)


def avgpool2d(inp: Tensor, window: int) -> Tensor:
    """Non-overlapping window mean over each (H,W) map."""
    inp = np.asarray(inp, dtype=np.float64)
    if inp.ndim != 3:
        raise ShapeError(f"avgpool2d expects a 3-D input, got {inp.shape}")
    c, h, w = inp.shape
    if window < 1 or h % window != 0 or w % window != 0:
        raise ShapeError(f"spatial dims {h}x{w} not divisible by window {window}")
    return inp.reshape(c, h // window, window, w // window, window).mean(axis=(2, 4))


def avgpool2d_adjoint(deltas: Tensor, window: int) -> Tensor:
    """Adjoint of avgpool2d: spreads each delta uniformly as delta/window^2."""
    deltas = np.asarray(deltas, dtype=np.float64)
    if deltas.ndim != 3:
        raise ShapeError(f"avgpool2d_adjoint expects a 3-D input, got {deltas.shape}")
    spread = np.repeat(np.repeat(deltas, window, axis=1), window, axis=2)
    return spread / float(window * window)
