"""Differentiable primitives for channels-first (C, H, W) feature maps."""

from __future__ import annotations

import numpy as np

from .tensor import DiffTensor, ShapeError, from_op


def _require_chw(x: DiffTensor, name: str) -> None:
    if x.values.ndim != 3:
        raise ShapeError(f"{name} expects a (C, H, W) tensor, got shape {x.shape}")


# ---------------------------------------------------------------------------
# Convolution
# ---------------------------------------------------------------------------


def _im2col(padded: np.ndarray, k: int, h: int, w: int) -> np.ndarray:
    """(C, H+k-1, W+k-1) -> (C*k*k, H*W) patch matrix."""
    c = padded.shape[0]
    s0, s1, s2 = padded.strides
    view = np.lib.stride_tricks.as_strided(
        padded, shape=(c, k, k, h, w), strides=(s0, s1, s2, s1, s2)
    )
    return view.reshape(c * k * k, h * w)


def conv2d(x: DiffTensor, kernel: DiffTensor, bias: DiffTensor) -> DiffTensor:
    """Same-size convolution: stride 1, zero padding (k-1)/2, odd k."""
    _require_chw(x, "conv2d")
    if kernel.values.ndim != 4:
        raise ShapeError(f"kernel must be (C_out, C_in, k, k), got {kernel.shape}")
    c_out, c_in, kh, kw = kernel.shape
    if kh != kw or kh % 2 != 1:
        raise ShapeError(f"kernel must be square with odd size, got {kh}x{kw}")
    if x.shape[0] != c_in:
        raise ShapeError(
            f"input has {x.shape[0]} channels but kernel expects {c_in}"
        )
    if bias.shape != (c_out,):
        raise ShapeError(f"bias must have shape ({c_out},), got {bias.shape}")

    k = kh
    pad = (k - 1) // 2
    _, h, w = x.shape
    if pad:
        padded = np.zeros((c_in, h + 2 * pad, w + 2 * pad))
        padded[:, pad : pad + h, pad : pad + w] = x.values
    else:
        padded = x.values
    cols = _im2col(padded, k, h, w)
    w_mat = kernel.values.reshape(c_out, c_in * k * k)
    out = (w_mat @ cols + bias.values[:, None]).reshape(c_out, h, w)

    def vjp(g):
        g_mat = g.reshape(c_out, h * w)
        g_kernel = (g_mat @ cols.T).reshape(c_out, c_in, k, k)
        g_bias = g_mat.sum(axis=1)
        # dx: scatter W^T @ g back through the patch extraction.
        g_cols = (w_mat.T @ g_mat).reshape(c_in, k, k, h, w)
        g_pad = np.zeros((c_in, h + 2 * pad, w + 2 * pad))
        for di in range(k):
            for dj in range(k):
                g_pad[:, di : di + h, dj : dj + w] += g_cols[:, di, dj]
        g_x = g_pad[:, pad : pad + h, pad : pad + w] if pad else g_pad
        return g_x, g_kernel, g_bias

    return from_op(out, (x, kernel, bias), vjp)


# ---------------------------------------------------------------------------
# Activations
# ---------------------------------------------------------------------------


def relu(x: DiffTensor) -> DiffTensor:
    mask = x.values > 0  # subgradient at 0 is 0
    return from_op(x.values * mask, (x,), lambda g: (g * mask,))


def softmax_channels(x: DiffTensor) -> DiffTensor:
    """Per-pixel softmax over the channel axis of a (C, H, W) map."""
    _require_chw(x, "softmax_channels")
    shifted = x.values - x.values.max(axis=0, keepdims=True)
    e = np.exp(shifted)
    s = e / e.sum(axis=0, keepdims=True)

    def vjp(g):
        dot = (g * s).sum(axis=0, keepdims=True)
        return (s * (g - dot),)

    return from_op(s, (x,), vjp)


# ---------------------------------------------------------------------------
# Resampling
# ---------------------------------------------------------------------------

_INTERP_CACHE: dict[tuple[int, int], np.ndarray] = {}


def _interp_matrix(n_out: int, n_in: int) -> np.ndarray:
    """Row-stochastic 1-D bilinear interpolation matrix, align-corners false.

    Output sample i reads input coordinate (i + 0.5) * n_in / n_out - 0.5,
    clamped to the valid range at the borders.
    """
    key = (n_out, n_in)
    mat = _INTERP_CACHE.get(key)
    if mat is not None:
        return mat
    mat = np.zeros((n_out, n_in))
    scale = n_in / n_out
    for i in range(n_out):
        pos = (i + 0.5) * scale - 0.5
        lo = int(np.floor(pos))
        frac = pos - lo
        lo_c = min(max(lo, 0), n_in - 1)
        hi_c = min(max(lo + 1, 0), n_in - 1)
        mat[i, lo_c] += 1.0 - frac
        mat[i, hi_c] += frac
    _INTERP_CACHE[key] = mat
    return mat


def bilinear_resize(x: DiffTensor, factor: int, up: bool) -> DiffTensor:
    """Resize H and W by a power-of-two factor (up or down)."""
    _require_chw(x, "bilinear_resize")
    if factor < 1 or factor & (factor - 1):
        raise ShapeError(f"factor must be a power of two, got {factor}")
    _, h, w = x.shape
    if up:
        h_out, w_out = h * factor, w * factor
    else:
        if h % factor or w % factor:
            raise ShapeError(
                f"extents ({h}, {w}) not divisible by downsample factor {factor}"
            )
        h_out, w_out = h // factor, w // factor
    a_h = _interp_matrix(h_out, h)
    a_w = _interp_matrix(w_out, w)
    out = np.matmul(np.matmul(a_h, x.values), a_w.T)

    def vjp(g):
        return (np.matmul(np.matmul(a_h.T, g), a_w),)

    return from_op(out, (x,), vjp)


# ---------------------------------------------------------------------------
# Pooling / shaping
# ---------------------------------------------------------------------------


def global_avg_pool(x: DiffTensor) -> DiffTensor:
    """(C, H, W) -> (C,) spatial mean per channel."""
    _require_chw(x, "global_avg_pool")
    c, h, w = x.shape
    out = x.values.mean(axis=(1, 2))

    def vjp(g):
        return (np.broadcast_to(g[:, None, None] / (h * w), (c, h, w)).copy(),)

    return from_op(out, (x,), vjp)


def concat_channels(a: DiffTensor, b: DiffTensor) -> DiffTensor:
    _require_chw(a, "concat_channels")
    _require_chw(b, "concat_channels")
    if a.shape[1:] != b.shape[1:]:
        raise ShapeError(
            f"spatial extents differ: {a.shape[1:]} vs {b.shape[1:]}"
        )
    ca = a.shape[0]
    out = np.concatenate([a.values, b.values], axis=0)
    return from_op(out, (a, b), lambda g: (g[:ca], g[ca:]))


def broadcast_spatial(z: DiffTensor, h: int, w: int) -> DiffTensor:
    """(N,) latent -> (N, H, W) map of constant planes."""
    if z.values.ndim != 1:
        raise ShapeError(f"broadcast_spatial expects a vector, got {z.shape}")
    n = z.size
    out = np.broadcast_to(z.values[:, None, None], (n, h, w)).copy()
    return from_op(out, (z,), lambda g: (g.sum(axis=(1, 2)),))


# ---------------------------------------------------------------------------
# Stochastic regularization
# ---------------------------------------------------------------------------


def dropout(x: DiffTensor, p: float, rng) -> DiffTensor:
    """Inverted dropout; active whenever called (no inference switch)."""
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout probability must be in [0, 1), got {p}")
    if p == 0.0:
        return from_op(x.values.copy(), (x,), lambda g: (g,))
    keep = rng.uniform(x.shape) >= p
    scale = keep / (1.0 - p)
    return from_op(x.values * scale, (x,), lambda g: (g * scale,))


# ---------------------------------------------------------------------------
# Loss
# ---------------------------------------------------------------------------


def cross_entropy_masked(logits: DiffTensor, target, ignore=None) -> DiffTensor:
    """Mean negative log softmax-probability of the target class.

    `target` is an (H, W) integer class map; `ignore` an optional (H, W)
    boolean mask of pixels excluded from the mean.  All-ignored input
    yields 0 by convention.
    """
    _require_chw(logits, "cross_entropy_masked")
    c, h, w = logits.shape
    target = np.asarray(target)
    if target.shape != (h, w):
        raise ShapeError(f"target shape {target.shape} != spatial {(h, w)}")
    if target.min() < 0 or target.max() >= c:
        raise ValueError(
            f"target classes must lie in [0, {c}), got range "
            f"[{target.min()}, {target.max()}]"
        )
    if ignore is None:
        valid = np.ones((h, w), dtype=bool)
    else:
        ignore = np.asarray(ignore, dtype=bool)
        if ignore.shape != (h, w):
            raise ShapeError(f"ignore shape {ignore.shape} != spatial {(h, w)}")
        valid = ~ignore
    n_valid = int(valid.sum())
    if n_valid == 0:
        return from_op(np.asarray(0.0), (logits,), lambda g: (np.zeros((c, h, w)),))

    shifted = logits.values - logits.values.max(axis=0, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=0))
    rows, cols_idx = np.indices((h, w))
    logp_target = shifted[target, rows, cols_idx] - lse
    loss = -(logp_target * valid).sum() / n_valid

    def vjp(g):
        softmax = np.exp(shifted - lse)
        softmax[target, rows, cols_idx] -= 1.0
        softmax *= valid / n_valid
        return (float(g) * softmax,)

    return from_op(np.asarray(loss), (logits,), vjp)
