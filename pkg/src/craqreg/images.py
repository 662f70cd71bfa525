"""8-bit image buffers: decoding, encoding, luma, validation.

Images are numpy uint8 arrays, shape (H, W) for grayscale or (H, W, 3)
for RGB, row-major.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np
from PIL import Image

# Rec.601 luma coefficients
_LUMA = np.array([0.299, 0.587, 0.114])

_GRAY_MODES = {"1", "L", "I", "I;16", "I;16B", "I;16L", "F"}


def ensure_image(arr: np.ndarray) -> np.ndarray:
    """Validate an 8-bit image buffer and return it as a C-contiguous array."""
    arr = np.asarray(arr)
    if arr.dtype != np.uint8:
        raise ValueError(f"expected uint8 image, got dtype {arr.dtype}")
    if arr.ndim == 2:
        pass
    elif arr.ndim == 3 and arr.shape[2] == 3:
        pass
    else:
        raise ValueError(f"expected (H, W) or (H, W, 3) image, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError("image must be at least 1x1")
    return np.ascontiguousarray(arr)


def _from_pil(im: Image.Image) -> np.ndarray:
    if im.mode in _GRAY_MODES:
        im = im.convert("L")
    elif im.mode != "RGB":
        im = im.convert("RGB")
    return ensure_image(np.asarray(im))


def load_image(path: str | Path) -> np.ndarray:
    """Decode PNG/JPEG/TIFF into a uint8 grayscale or RGB buffer."""
    with Image.open(path) as im:
        return _from_pil(im)


def decode_image(data: bytes) -> np.ndarray:
    with Image.open(io.BytesIO(data)) as im:
        return _from_pil(im)


def image_size(data: bytes) -> tuple[int, int]:
    """(width, height) from the header only, without full decode."""
    with Image.open(io.BytesIO(data)) as im:
        return im.size


def save_png(path: str | Path, arr: np.ndarray) -> None:
    Image.fromarray(ensure_image(arr)).save(path, format="PNG")


def encode_png(arr: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(ensure_image(arr)).save(buf, format="PNG")
    return buf.getvalue()


def luma(arr: np.ndarray) -> np.ndarray:
    """Rec.601 luma as float64 in [0, 255]; grayscale passes through."""
    if arr.ndim == 2:
        return arr.astype(float)
    return arr.astype(float) @ _LUMA


def to_u8(values: np.ndarray) -> np.ndarray:
    """Round float intensities to uint8 with clipping."""
    return np.clip(np.rint(values), 0, 255).astype(np.uint8)


def to_rgb(arr: np.ndarray) -> np.ndarray:
    """Grayscale -> RGB; RGB passes through."""
    arr = ensure_image(arr)
    if arr.ndim == 3:
        return arr
    return np.repeat(arr[:, :, None], 3, axis=2)
