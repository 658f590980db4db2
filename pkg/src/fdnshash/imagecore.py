"""Image representation and the preprocessing stages of the hashing pipeline.

Images are plain numpy arrays of ``float64``:

* a *gray image* is a 2-D array of shape ``(height, width)``;
* an *RGB image* is a 3-D array of shape ``(height, width, 3)``.

Values live in ``[0, 255]``. Every operation here returns a fresh array and
clamps its output to that range.
"""

from __future__ import annotations

import os
from typing import Union

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import InvalidInputError

PathLike = Union[str, "os.PathLike[str]"]

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


def as_gray(img) -> np.ndarray:
    """Validate ``img`` as a gray image and return it as a float64 array."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidInputError(f"gray image must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidInputError(f"gray image has a zero dimension: {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("gray image contains non-finite values")
    return arr


def as_rgb(img) -> np.ndarray:
    """Validate ``img`` as an RGB image and return it as a float64 array."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise InvalidInputError(f"RGB image must have shape (h, w, 3), got {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidInputError(f"RGB image has a zero dimension: {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("RGB image contains non-finite values")
    return arr


def clamp(img: np.ndarray) -> np.ndarray:
    return np.clip(img, 0.0, 255.0)


def to_grayscale(img) -> np.ndarray:
    """Convert an RGB image to luma with BT.601 weights.

    A 2-D input is taken to be gray already and is returned as a copy.
    """
    if np.ndim(img) == 2:
        return clamp(as_gray(img))
    rgb = as_rgb(img)
    r, g, b = LUMA_WEIGHTS
    luma = r * rgb[..., 0] + g * rgb[..., 1] + b * rgb[..., 2]
    return clamp(luma)


def _axis_coords(n_in: int, n_out: int):
    # half-pixel-centre convention, clamped to the edge samples
    src = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    lo = np.floor(src).astype(np.intp)
    hi = np.minimum(lo + 1, n_in - 1)
    frac = src - lo
    return lo, hi, frac


def resize_bilinear(img, out_w: int, out_h: int) -> np.ndarray:
    """Bilinear resize with edge clamping.

    Sample positions follow the half-pixel-centre convention used by PIL and
    OpenCV: output pixel ``u`` reads source coordinate
    ``(u + 0.5) * in / out - 0.5``, clamped to ``[0, in - 1]``.

    A target dimension below 2 is rejected unless it equals the source
    dimension along that axis (no resampling happens there).
    """
    src = as_gray(img)
    h, w = src.shape
    for name, out, cur in (("out_w", out_w, w), ("out_h", out_h, h)):
        if int(out) != out:
            raise InvalidInputError(f"{name} must be an integer, got {out!r}")
        if out < 2 and out != cur:
            raise InvalidInputError(f"{name} must be >= 2, got {out}")
    out_w, out_h = int(out_w), int(out_h)
    if (out_w, out_h) == (w, h):
        return clamp(src.copy())

    x0, x1, fx = _axis_coords(w, out_w)
    y0, y1, fy = _axis_coords(h, out_h)
    rows = src[:, x0] * (1.0 - fx) + src[:, x1] * fx
    out = rows[y0, :] * (1.0 - fy)[:, None] + rows[y1, :] * fy[:, None]
    return clamp(out)


def gaussian_kernel(kernel_size: int, sigma: float) -> np.ndarray:
    """Normalized 2-D Gaussian kernel of shape ``(kernel_size, kernel_size)``."""
    if int(kernel_size) != kernel_size or kernel_size < 1 or kernel_size % 2 == 0:
        raise InvalidInputError(f"kernel_size must be a positive odd integer, got {kernel_size!r}")
    if not sigma > 0:
        raise InvalidInputError(f"sigma must be positive, got {sigma!r}")
    r = int(kernel_size) // 2
    d = np.arange(-r, r + 1, dtype=np.float64)
    k = np.exp(-(d[:, None] ** 2 + d[None, :] ** 2) / (2.0 * sigma * sigma))
    return k / k.sum()


def gaussian_smooth(img, kernel_size: int = 3, sigma: float = 1.0) -> np.ndarray:
    """Convolve with a normalized Gaussian kernel, replicating edge pixels."""
    src = as_gray(img)
    kernel = gaussian_kernel(kernel_size, sigma)
    if kernel.shape == (1, 1):
        return clamp(src.copy())
    out = ndimage.correlate(src, kernel, mode="nearest")
    return clamp(out)


def load_image(path: PathLike) -> np.ndarray:
    """Decode a PNG/JPEG file into a float64 RGB or gray array.

    Palette, alpha and 16-bit modes are converted to 8-bit RGB or L first.
    Raises ``OSError`` (or a subclass) when the file is missing or undecodable.
    """
    with Image.open(path) as im:
        im.load()
        if im.mode in ("L", "1", "I;16", "I", "F"):
            if im.mode in ("I;16", "I", "F"):
                arr = np.asarray(im, dtype=np.float64)
                scale = 255.0 / 65535.0 if im.mode != "F" else 1.0
                return clamp(arr * scale)
            im = im.convert("L")
        elif im.mode != "RGB":
            im = im.convert("RGB")
        return np.asarray(im, dtype=np.float64)


def to_uint8(img) -> np.ndarray:
    """Round and clamp an image to 8-bit samples."""
    return np.clip(np.rint(np.asarray(img, dtype=np.float64)), 0, 255).astype(np.uint8)


def save_image(img, path: PathLike) -> None:
    """Write a gray or RGB image; the format follows the file extension."""
    Image.fromarray(to_uint8(img)).save(path)
