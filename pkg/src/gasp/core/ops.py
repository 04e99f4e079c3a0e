"""Differentiable array operators used by the saliency network."""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .tensor import ShapeError, Tensor, as_tensor

POINTWISE = ("tanh", "sigmoid", "relu")


def pointwise(kind: str, x: Tensor) -> Tensor:
    if kind not in POINTWISE:
        raise ValueError(f"unknown pointwise kind {kind!r}; expected one of {POINTWISE}")
    return getattr(as_tensor(x), kind)()


def _im2col(xp: np.ndarray, k: int, stride: int, ho: int, wo: int) -> np.ndarray:
    """Patches of a padded NCHW array as a (B*ho*wo, C*k*k) matrix."""
    b, c = xp.shape[:2]
    win = sliding_window_view(xp, (k, k), axis=(2, 3))
    win = win[:, :, : stride * (ho - 1) + 1 : stride, : stride * (wo - 1) + 1 : stride]
    return win.transpose(0, 2, 3, 1, 4, 5).reshape(b * ho * wo, c * k * k)


def _col2im(cols: np.ndarray, out_shape: tuple, k: int, stride: int) -> np.ndarray:
    """Scatter-add (B, ho, wo, C, k, k) patches back onto an NCHW canvas."""
    b, ho, wo, c = cols.shape[:4]
    canvas = np.zeros(out_shape)
    cols = np.ascontiguousarray(cols.transpose(4, 5, 0, 3, 1, 2))
    for i in range(k):
        for j in range(k):
            canvas[:, :, i : i + stride * (ho - 1) + 1 : stride, j : j + stride * (wo - 1) + 1 : stride] += cols[i, j]
    return canvas


def conv2d(x: Tensor, weight: Tensor, bias: Tensor | None = None, padding: int = 0, stride: int = 1) -> Tensor:
    """2D cross-correlation over NCHW input with a (Cout, Cin, k, k) kernel."""
    x, weight = as_tensor(x), as_tensor(weight)
    if x.ndim != 4 or weight.ndim != 4:
        raise ShapeError(f"conv2d expects 4D input and weight, got {x.shape} and {weight.shape}")
    b, cin, h, w = x.shape
    cout, wcin, k, k2 = weight.shape
    if wcin != cin or k != k2:
        raise ShapeError(f"conv2d weight {weight.shape} incompatible with input {x.shape}")
    if k < 1 or stride < 1 or padding < 0:
        raise ShapeError("conv2d needs k >= 1, stride >= 1, padding >= 0")
    if h + 2 * padding < k or w + 2 * padding < k:
        raise ShapeError(f"kernel {k} larger than padded input {h + 2 * padding}x{w + 2 * padding}")
    if bias is not None and as_tensor(bias).shape != (cout,):
        raise ShapeError(f"conv2d bias shape {as_tensor(bias).shape} != ({cout},)")
    ho = (h + 2 * padding - k) // stride + 1
    wo = (w + 2 * padding - k) // stride + 1

    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding), (padding, padding))) if padding else x.data
    cols = _im2col(xp, k, stride, ho, wo)
    wmat = weight.data.reshape(cout, -1)
    out = cols @ wmat.T
    if bias is not None:
        out += as_tensor(bias).data
    out = np.ascontiguousarray(out.reshape(b, ho, wo, cout).transpose(0, 3, 1, 2))
    xp_shape = xp.shape

    def backward(g):
        gm = g.transpose(0, 2, 3, 1).reshape(-1, cout)
        gw = (gm.T @ cols).reshape(weight.shape) if weight.requires_grad else None
        gx = None
        if x.requires_grad and stride == 1 and padding <= k - 1:
            # stride-1 input gradient is a full correlation with the flipped kernel
            q = k - 1 - padding
            gp = np.pad(g, ((0, 0), (0, 0), (q, q), (q, q))) if q else g
            flipped = weight.data[:, :, ::-1, ::-1].transpose(1, 0, 2, 3).reshape(cin, -1)
            gx = _im2col(gp, k, 1, h, w) @ flipped.T
            gx = np.ascontiguousarray(gx.reshape(b, h, w, cin).transpose(0, 3, 1, 2))
        elif x.requires_grad:
            dcols = (gm @ wmat).reshape(b, ho, wo, cin, k, k)
            gx = _col2im(dcols, xp_shape, k, stride)
            if padding:
                gx = gx[:, :, padding:-padding, padding:-padding]
        grads = [gx, gw]
        if bias is not None:
            grads.append(gm.sum(axis=0))
        return tuple(grads)

    parents = (x, weight) if bias is None else (x, weight, as_tensor(bias))
    return Tensor._result(out, parents, backward, "conv2d")


def conv_transpose2d(x: Tensor, weight: Tensor, bias: Tensor | None = None, stride: int = 1, padding: int = 0) -> Tensor:
    """Transposed convolution with a (Cin, Cout, k, k) kernel.

    Output size is ``(H - 1) * stride - 2 * padding + k`` per spatial axis.
    """
    x, weight = as_tensor(x), as_tensor(weight)
    if x.ndim != 4 or weight.ndim != 4:
        raise ShapeError(f"conv_transpose2d expects 4D input and weight, got {x.shape} and {weight.shape}")
    b, cin, h, w = x.shape
    wcin, cout, k, k2 = weight.shape
    if wcin != cin or k != k2:
        raise ShapeError(f"conv_transpose2d weight {weight.shape} incompatible with input {x.shape}")
    if bias is not None and as_tensor(bias).shape != (cout,):
        raise ShapeError(f"conv_transpose2d bias shape {as_tensor(bias).shape} != ({cout},)")
    hf, wf = (h - 1) * stride + k, (w - 1) * stride + k
    ho, wo = hf - 2 * padding, wf - 2 * padding
    if ho < 1 or wo < 1:
        raise ShapeError("conv_transpose2d padding removes the whole output")

    xm = x.data.transpose(0, 2, 3, 1).reshape(-1, cin)
    wmat = weight.data.reshape(cin, cout * k * k)
    cols = (xm @ wmat).reshape(b, h, w, cout, k, k)
    full = _col2im(cols, (b, cout, hf, wf), k, stride)
    out = full[:, :, padding : padding + ho, padding : padding + wo]
    if bias is not None:
        out = out + as_tensor(bias).data[None, :, None, None]
    out = np.ascontiguousarray(out)

    def backward(g):
        gfull = np.pad(g, ((0, 0), (0, 0), (padding, padding), (padding, padding))) if padding else g
        gcols = _im2col(gfull, k, stride, h, w)
        gx = None
        if x.requires_grad:
            gx = np.ascontiguousarray((gcols @ wmat.T).reshape(b, h, w, cin).transpose(0, 3, 1, 2))
        gw = (xm.T @ gcols).reshape(weight.shape) if weight.requires_grad else None
        grads = [gx, gw]
        if bias is not None:
            grads.append(g.sum(axis=(0, 2, 3)))
        return tuple(grads)

    parents = (x, weight) if bias is None else (x, weight, as_tensor(bias))
    return Tensor._result(out, parents, backward, "conv_transpose2d")


def maxpool2d(x: Tensor, window: int = 2) -> tuple[Tensor, np.ndarray]:
    """Non-overlapping max pooling.

    Returns the pooled tensor and the flat in-window argmax indices; ties
    resolve to the first element in row-major window order.
    """
    x = as_tensor(x)
    if x.ndim != 4:
        raise ShapeError(f"maxpool2d expects NCHW input, got {x.shape}")
    b, c, h, w = x.shape
    if h % window or w % window:
        raise ShapeError(f"maxpool2d needs spatial dims divisible by {window}, got {h}x{w}")
    hh, ww = h // window, w // window
    win = x.data.reshape(b, c, hh, window, ww, window).transpose(0, 1, 2, 4, 3, 5).reshape(b, c, hh, ww, window * window)
    idx = win.argmax(axis=-1)
    out = np.take_along_axis(win, idx[..., None], axis=-1)[..., 0]

    def backward(g):
        gw = np.zeros((b, c, hh, ww, window * window))
        np.put_along_axis(gw, idx[..., None], g[..., None], axis=-1)
        gx = gw.reshape(b, c, hh, ww, window, window).transpose(0, 1, 2, 4, 3, 5).reshape(b, c, h, w)
        return (gx,)

    return Tensor._result(out, (x,), backward, "maxpool2d"), idx


def softmax_spatial(x: Tensor) -> Tensor:
    """Softmax over the last two (spatial) axes of every leading slice."""
    x = as_tensor(x)
    if x.ndim < 2:
        raise ShapeError("softmax_spatial needs at least 2 dims")
    z = x.data - x.data.max(axis=(-2, -1), keepdims=True)
    e = np.exp(z)
    out = e / e.sum(axis=(-2, -1), keepdims=True)

    def backward(g):
        return (out * (g - (g * out).sum(axis=(-2, -1), keepdims=True)),)

    return Tensor._result(out, (x,), backward, "softmax_spatial")


def log_softmax_spatial(x: Tensor) -> Tensor:
    x = as_tensor(x)
    if x.ndim < 2:
        raise ShapeError("log_softmax_spatial needs at least 2 dims")
    z = x.data - x.data.max(axis=(-2, -1), keepdims=True)
    lse = np.log(np.exp(z).sum(axis=(-2, -1), keepdims=True))
    out = z - lse

    def backward(g):
        soft = np.exp(out)
        return (g - soft * g.sum(axis=(-2, -1), keepdims=True),)

    return Tensor._result(out, (x,), backward, "log_softmax_spatial")


def linear(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """``x @ weight.T + bias`` for 2D ``x``."""
    x, weight = as_tensor(x), as_tensor(weight)
    if x.ndim != 2 or weight.ndim != 2 or x.shape[1] != weight.shape[1]:
        raise ShapeError(f"linear: input {x.shape} incompatible with weight {weight.shape}")
    out = x.data @ weight.data.T
    if bias is not None:
        out = out + as_tensor(bias).data

    def backward(g):
        grads = [g @ weight.data, g.T @ x.data]
        if bias is not None:
            grads.append(g.sum(axis=0))
        return tuple(grads)

    parents = (x, weight) if bias is None else (x, weight, as_tensor(bias))
    return Tensor._result(out, parents, backward, "linear")


def batchnorm_temporal(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    training: bool,
    momentum: float = 0.1,
    eps: float = 1e-5,
) -> Tensor:
    """Per-channel normalisation of a (B, T, C, H, W) sequence over B, T, H, W.

    In training mode the running statistics are updated in place.
    """
    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    if x.ndim != 5:
        raise ShapeError(f"batchnorm_temporal expects (B, T, C, H, W), got {x.shape}")
    c = x.shape[2]
    if gamma.shape != (c,) or beta.shape != (c,):
        raise ShapeError("batchnorm_temporal affine parameters must have shape (C,)")
    axes = (0, 1, 3, 4)
    shape = (1, 1, c, 1, 1)
    n = x.size // c
    if training:
        mean = x.data.mean(axis=axes)
        var = x.data.var(axis=axes)
        running_mean *= 1.0 - momentum
        running_mean += momentum * mean
        running_var *= 1.0 - momentum
        running_var += momentum * var * (n / max(n - 1, 1))
    else:
        mean, var = running_mean.copy(), running_var.copy()
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mean.reshape(shape)) * inv.reshape(shape)
    out = xhat * gamma.data.reshape(shape) + beta.data.reshape(shape)

    def backward(g):
        gg = (g * xhat).sum(axis=axes)
        gb = g.sum(axis=axes)
        gxhat = g * gamma.data.reshape(shape)
        if training:
            gx = (inv.reshape(shape) / n) * (
                n * gxhat
                - gxhat.sum(axis=axes).reshape(shape)
                - xhat * (gxhat * xhat).sum(axis=axes).reshape(shape)
            )
        else:
            gx = gxhat * inv.reshape(shape)
        return gx, gg, gb

    return Tensor._result(out, (x, gamma, beta), backward, "batchnorm_temporal")


def standardize(x: Tensor, axes: tuple, eps: float = 1e-12) -> Tensor:
    """Zero-mean, unit (population) variance over ``axes``."""
    x = as_tensor(x)
    centered = x - x.mean(axis=axes, keepdims=True)
    var = (centered * centered).mean(axis=axes, keepdims=True)
    return centered / (var + eps).sqrt()
