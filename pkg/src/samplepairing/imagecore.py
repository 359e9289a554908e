"""Pixel-level image primitives: mix, crop, flip.

Images are numpy arrays of shape (H, W, C) holding intensities in [0, 1].
Every function here is pure: inputs are never modified and randomness comes
only from the ``rng`` argument.
"""

from __future__ import annotations

import numpy as np


class ShapeError(ValueError):
    """Raised when image dimensions are incompatible with an operation."""


def as_image(data, height: int, width: int, channels: int, dtype=np.float64) -> np.ndarray:
    """Build an (H, W, C) image from a flat row-major buffer."""
    arr = np.asarray(data, dtype=dtype)
    if arr.size != height * width * channels:
        raise ShapeError(
            f"buffer of {arr.size} values does not fit {height}x{width}x{channels}"
        )
    return arr.reshape(height, width, channels)


def from_uint8(data: np.ndarray, dtype=np.float32) -> np.ndarray:
    return np.asarray(data, dtype=dtype) / dtype(255.0)


def to_uint8(img: np.ndarray) -> np.ndarray:
    return np.rint(np.asarray(img, dtype=np.float64) * 255.0).astype(np.uint8)


def mix_images(a: np.ndarray, b: np.ndarray, w: float) -> np.ndarray:
    """Return ``w * a + (1 - w) * b`` elementwise.

    Evaluated as ``mean + (w - 1/2) * (a - b)`` so that mixing an image with
    itself returns it unchanged and the equal-weight mix is exactly
    symmetric in its arguments. The result is clamped into the elementwise
    hull of ``a`` and ``b`` to absorb rounding at the range boundaries.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ShapeError(f"cannot mix images of shape {a.shape} and {b.shape}")
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"mix weight must lie in [0, 1], got {w}")
    if w == 1.0:
        return a.copy()
    if w == 0.0:
        return b.copy()
    half = a.dtype.type(0.5) if a.dtype.kind == "f" else 0.5
    out = (a + b) * half + (w - 0.5) * (a - b)
    out = out.astype(np.result_type(a, b), copy=False)
    return np.clip(out, np.minimum(a, b), np.maximum(a, b))


def crop(img: np.ndarray, top: int, left: int, out_h: int, out_w: int) -> np.ndarray:
    h, w = img.shape[:2]
    if out_h > h or out_w > w or out_h < 1 or out_w < 1:
        raise ShapeError(f"cannot crop {out_h}x{out_w} from {h}x{w}")
    if not (0 <= top <= h - out_h and 0 <= left <= w - out_w):
        raise ShapeError(f"crop offset ({top}, {left}) out of range")
    return img[top : top + out_h, left : left + out_w]


def random_crop_offset(
    height: int, width: int, out_h: int, out_w: int, rng: np.random.Generator
) -> tuple[int, int]:
    if out_h > height or out_w > width:
        raise ShapeError(f"cannot crop {out_h}x{out_w} from {height}x{width}")
    top = int(rng.integers(0, height - out_h + 1))
    left = int(rng.integers(0, width - out_w + 1))
    return top, left


def random_crop(img: np.ndarray, out_h: int, out_w: int, rng: np.random.Generator) -> np.ndarray:
    """Crop an ``out_h`` x ``out_w`` window at a uniformly drawn offset."""
    top, left = random_crop_offset(img.shape[0], img.shape[1], out_h, out_w, rng)
    return crop(img, top, left, out_h, out_w)


def center_crop_offset(height: int, width: int, out_h: int, out_w: int) -> tuple[int, int]:
    # odd margins round toward the top-left corner
    if out_h > height or out_w > width:
        raise ShapeError(f"cannot crop {out_h}x{out_w} from {height}x{width}")
    return (height - out_h) // 2, (width - out_w) // 2


def center_crop(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    top, left = center_crop_offset(img.shape[0], img.shape[1], out_h, out_w)
    return crop(img, top, left, out_h, out_w)


def horizontal_flip(img: np.ndarray) -> np.ndarray:
    return img[:, ::-1]
