"""Separable interpolation kernels shared by detection and warping.

Coordinate convention throughout: destination index d maps to source
coordinate d / factor (plain index scaling), so integer upsampling places
source node i exactly at destination factor * i.
"""

from __future__ import annotations

import numpy as np


def _catmull_rom_weights(t: np.ndarray) -> np.ndarray:
    """Weights of the 4 taps (offsets -1, 0, 1, 2) for fractional t in [0, 1).

    Cubic convolution kernel with a = -0.5 (Catmull-Rom): interpolating,
    reproduces constants and linear ramps exactly.
    """
    a = -0.5
    # tap distances: |t+1|, |t|, |1-t|, |2-t|
    d = np.stack([t + 1.0, t, 1.0 - t, 2.0 - t], axis=-1)
    d = np.abs(d)
    w = np.where(
        d <= 1.0,
        (a + 2.0) * d**3 - (a + 3.0) * d**2 + 1.0,
        a * d**3 - 5.0 * a * d**2 + 8.0 * a * d - 4.0 * a,
    )
    return w


def _bicubic_axis(arr: np.ndarray, factor: int, axis: int) -> np.ndarray:
    n = arr.shape[axis]
    out_n = n * factor
    coords = np.arange(out_n, dtype=float) / factor
    base = np.floor(coords).astype(int)
    t = coords - base
    w = _catmull_rom_weights(t)                       # (out_n, 4)
    taps = base[:, None] + np.array([-1, 0, 1, 2])    # (out_n, 4)
    taps = np.clip(taps, 0, n - 1)

    moved = np.moveaxis(arr, axis, 0)
    out = np.einsum("ok,ok...->o...", w, moved[taps])
    return np.moveaxis(out, 0, axis)


def bicubic_upsample(arr: np.ndarray, factor: int) -> np.ndarray:
    """Upsample a 2-D map by an integer factor with Catmull-Rom bicubic."""
    if factor < 1:
        raise ValueError("factor must be >= 1")
    if factor == 1:
        return np.array(arr, dtype=float)
    out = _bicubic_axis(np.asarray(arr, dtype=float), factor, axis=0)
    return _bicubic_axis(out, factor, axis=1)


def sample_bilinear(img: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Bilinear samples of ``img`` at float coordinates, clamped at edges.

    ``img`` may be (H, W) or (H, W, C); output matches the shape of xs
    with a trailing channel axis for multi-channel input.
    """
    h, w = img.shape[:2]
    xs = np.clip(xs, 0.0, w - 1.0)
    ys = np.clip(ys, 0.0, h - 1.0)
    x0 = np.floor(xs).astype(int)
    y0 = np.floor(ys).astype(int)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = xs - x0
    fy = ys - y0
    if img.ndim == 3:
        fx = fx[..., None]
        fy = fy[..., None]
    v = img.astype(float)
    top = v[y0, x0] * (1.0 - fx) + v[y0, x1] * fx
    bot = v[y1, x0] * (1.0 - fx) + v[y1, x1] * fx
    return top * (1.0 - fy) + bot * fy


def resize_bilinear(img: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Resize with bilinear sampling under the d / s coordinate mapping.

    The scale factors out/in are exactly the factors used for coordinate
    back-mapping, so resized_point = s * original_point holds.
    """
    h, w = img.shape[:2]
    if (out_w, out_h) == (w, h):
        return img.copy()
    sx = out_w / w
    sy = out_h / h
    xs = np.arange(out_w, dtype=float) / sx
    ys = np.arange(out_h, dtype=float) / sy
    gx, gy = np.meshgrid(xs, ys)
    vals = sample_bilinear(img, gx, gy)
    if img.dtype == np.uint8:
        return np.clip(np.rint(vals), 0, 255).astype(np.uint8)
    return vals
