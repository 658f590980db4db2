"""Content-preserving operations for robustness experiments.

Each operation takes a gray image (2-D float array in ``[0, 255]``) and
returns a new one. Stochastic operations draw from a generator seeded per
call, so ``(image, parameter, seed)`` fully determines the output.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from PIL import Image

from . import imagecore
from .errors import AttackParseError, InvalidParameterError


def _check_range(name: str, value: float, lo: float, hi: float, *, lo_open: bool = False) -> float:
    value = float(value)
    ok = math.isfinite(value) and (lo < value if lo_open else lo <= value) and value <= hi
    if not ok:
        bracket = "(" if lo_open else "["
        raise InvalidParameterError(f"{name} must lie in {bracket}{lo}, {hi}], got {value}")
    return value


def brightness(img, delta: float) -> np.ndarray:
    """Add ``delta`` to every pixel, ``delta`` in [-64, 64]."""
    delta = _check_range("delta", delta, -64, 64)
    return imagecore.clamp(imagecore.as_gray(img) + delta)


def contrast(img, delta: float) -> np.ndarray:
    """Stretch around mid-gray: ``(p - 128) * (1 + delta / 128) + 128``."""
    delta = _check_range("delta", delta, -64, 64)
    src = imagecore.as_gray(img)
    if delta == 0:
        return imagecore.clamp(src.copy())
    return imagecore.clamp((src - 128.0) * (1.0 + delta / 128.0) + 128.0)


def gamma(img, g: float) -> np.ndarray:
    """Gamma curve ``255 * (p / 255) ** g`` with ``g`` in [0.5, 2.0]."""
    g = _check_range("gamma", g, 0.5, 2.0)
    src = imagecore.as_gray(img)
    if g == 1.0:
        return imagecore.clamp(src.copy())
    return imagecore.clamp(255.0 * np.power(src / 255.0, g))


def salt_pepper(img, density: float, seed: int) -> np.ndarray:
    """Replace each pixel by 0 or 255 with probability ``density`` (at most 0.1)."""
    density = _check_range("density", density, 0.0, 0.1)
    out = imagecore.as_gray(img).copy()
    if density == 0:
        return imagecore.clamp(out)
    rng = np.random.default_rng(seed)
    hit = rng.random(out.shape) < density
    salt = rng.random(out.shape) < 0.5
    out[hit] = np.where(salt[hit], 255.0, 0.0)
    return out


def speckle(img, variance: float, seed: int) -> np.ndarray:
    """Multiplicative noise ``p * (1 + n)`` with ``n ~ Normal(0, variance)``."""
    variance = _check_range("variance", variance, 0.0, 0.05)
    src = imagecore.as_gray(img)
    if variance == 0:
        return imagecore.clamp(src.copy())
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, math.sqrt(variance), size=src.shape)
    return imagecore.clamp(src * (1.0 + noise))


def gaussian_filter_attack(img, sigma: float) -> np.ndarray:
    """3x3 Gaussian blur, ``sigma`` in (0, 2]."""
    sigma = _check_range("sigma", sigma, 0.0, 2.0, lo_open=True)
    return imagecore.gaussian_smooth(img, 3, sigma)


def jpeg_compress(img, quality: int) -> np.ndarray:
    """Round-trip through an 8-bit baseline JPEG at ``quality`` (10..100)."""
    if int(quality) != quality:
        raise InvalidParameterError(f"quality must be an integer, got {quality!r}")
    quality = int(_check_range("quality", quality, 10, 100))
    pixels = imagecore.to_uint8(imagecore.as_gray(img))
    buf = io.BytesIO()
    Image.fromarray(pixels).save(buf, format="JPEG", quality=quality, subsampling=0)
    buf.seek(0)
    with Image.open(buf) as im:
        return np.asarray(im.convert("L"), dtype=np.float64)


def scale(img, ratio: float) -> np.ndarray:
    """Bilinear resize by ``ratio`` in [0.5, 2.0]."""
    ratio = _check_range("ratio", ratio, 0.5, 2.0)
    src = imagecore.as_gray(img)
    h, w = src.shape
    out_w = max(1, int(round(w * ratio)))
    out_h = max(1, int(round(h * ratio)))
    return imagecore.resize_bilinear(src, out_w, out_h)


def _crop_scale(w: int, h: int, theta: float) -> float:
    # largest centred axis-aligned w:h rectangle inside the w x h rectangle rotated by theta
    c, s = abs(math.cos(theta)), abs(math.sin(theta))
    return min(w / (w * c + h * s), h / (w * s + h * c))


def _crop_dims(w: int, h: int, factor: float):
    # tiny slack keeps exact fits (factor == 1) from rounding down
    cw = max(1, int(math.floor(w * factor + 1e-9)))
    ch = max(1, int(math.floor(h * factor + 1e-9)))
    return cw, ch


def _center_crop(img: np.ndarray, cw: int, ch: int) -> np.ndarray:
    h, w = img.shape
    top = (h - ch) // 2
    left = (w - cw) // 2
    return img[top : top + ch, left : left + cw]


def rotate(img, degrees: float) -> np.ndarray:
    """Rotate about the image centre and crop away everything outside the content.

    Positive angles turn the picture counter-clockwise as displayed. The
    output is the largest centred rectangle with the input's aspect ratio
    that fits inside the rotated picture, so it contains no fill pixels.
    Multiples of 90 degrees are exact index permutations.
    """
    degrees = _check_range("degrees", degrees, -90, 90)
    src = imagecore.as_gray(img)
    h, w = src.shape
    if degrees == 0:
        return imagecore.clamp(src.copy())
    if abs(degrees) == 90:
        turned = np.rot90(src, 1 if degrees > 0 else -1)
        cw, ch = _crop_dims(w, h, _crop_scale(w, h, math.pi / 2))
        return imagecore.clamp(_center_crop(turned, cw, ch).copy())

    theta = math.radians(degrees)
    cw, ch = _crop_dims(w, h, _crop_scale(w, h, theta))
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    u = np.arange(cw, dtype=np.float64) - (cw - 1) / 2.0
    v = np.arange(ch, dtype=np.float64) - (ch - 1) / 2.0
    uu, vv = np.meshgrid(u, v)
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    # inverse mapping, y axis pointing down
    xs = np.clip(cx + cos_t * uu - sin_t * vv, 0.0, w - 1)
    ys = np.clip(cy + sin_t * uu + cos_t * vv, 0.0, h - 1)
    x0 = np.floor(xs).astype(np.intp)
    y0 = np.floor(ys).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = xs - x0
    fy = ys - y0
    top = src[y0, x0] * (1 - fx) + src[y0, x1] * fx
    bottom = src[y1, x0] * (1 - fx) + src[y1, x1] * fx
    return imagecore.clamp(top * (1 - fy) + bottom * fy)


# 5x7 glyphs for the built-in watermark text
_GLYPHS = {
    "M": ["10001", "11011", "10101", "10101", "10001", "10001", "10001"],
    "A": ["01110", "10001", "10001", "11111", "10001", "10001", "10001"],
    "R": ["11110", "10001", "10001", "11110", "10100", "10010", "10001"],
    "K": ["10001", "10010", "10100", "11000", "10100", "10010", "10001"],
}
WATERMARK_TEXT = "MARK"
WATERMARK_SHAPE = (16, 48)


def watermark_bitmap():
    """The built-in 48x16 mark.

    Returns ``(mark, mask)``: white glyphs of the text ``MARK`` and the boolean
    mask of glyph pixels. Only masked pixels are blended.
    """
    mask = np.zeros(WATERMARK_SHAPE, dtype=bool)
    x = 2
    for ch in WATERMARK_TEXT:
        glyph = np.array([[c == "1" for c in row] for row in _GLYPHS[ch]], dtype=bool)
        big = np.kron(glyph, np.ones((2, 2), dtype=bool))
        mask[1 : 1 + big.shape[0], x : x + big.shape[1]] = big
        x += big.shape[1] + 2
    mark = np.where(mask, 255.0, 0.0)
    return mark, mask


def watermark(img, opacity: float) -> np.ndarray:
    """Alpha-blend the built-in text mark into the bottom-right corner.

    ``p' = (1 - opacity) * p + opacity * 255`` on glyph pixels; everything
    else is untouched. Images smaller than 48x16 receive the bottom-right
    part of the mark.
    """
    opacity = _check_range("opacity", opacity, 0.0, 1.0, lo_open=True)
    out = imagecore.as_gray(img).copy()
    mark, mask = watermark_bitmap()
    mh = min(mark.shape[0], out.shape[0])
    mw = min(mark.shape[1], out.shape[1])
    mark = mark[mark.shape[0] - mh :, mark.shape[1] - mw :]
    mask = mask[mask.shape[0] - mh :, mask.shape[1] - mw :]
    region = out[out.shape[0] - mh :, out.shape[1] - mw :]
    region[mask] = (1.0 - opacity) * region[mask] + opacity * mark[mask]
    return imagecore.clamp(out)


@dataclass(frozen=True)
class _Kind:
    name: str
    func: Callable
    stochastic: bool = False
    integer: bool = False


KINDS = {
    k.name: k
    for k in (
        _Kind("brightness", brightness),
        _Kind("contrast", contrast),
        _Kind("gamma", gamma),
        _Kind("saltpepper", salt_pepper, stochastic=True),
        _Kind("speckle", speckle, stochastic=True),
        _Kind("gaussian", gaussian_filter_attack),
        _Kind("jpeg", jpeg_compress, integer=True),
        _Kind("scaling", scale),
        _Kind("rotation", rotate),
        _Kind("watermark", watermark),
    )
}

_ALIASES = {
    "salt_pepper": "saltpepper",
    "salt-pepper": "saltpepper",
    "multiplicative": "speckle",
    "gaussianfilter": "gaussian",
    "gaussian_filter": "gaussian",
    "jpegcompression": "jpeg",
    "jpeg_compression": "jpeg",
    "scale": "scaling",
    "rotate": "rotation",
}

# Parameter at which each operation leaves the image untouched (JPEG has none).
IDENTITY_PARAMETER = {
    "brightness": 0.0,
    "contrast": 0.0,
    "gamma": 1.0,
    "saltpepper": 0.0,
    "speckle": 0.0,
    "scaling": 1.0,
    "rotation": 0.0,
}


@dataclass(frozen=True)
class AttackSpec:
    """One attack: kind, its parameter, and a seed for the stochastic kinds.

    The text form is ``kind:parameter[:seed]``, e.g. ``rotation:5`` or
    ``saltpepper:0.01:42``.
    """

    kind: str
    parameter: float
    seed: Optional[int] = None

    def __post_init__(self):
        kind = _ALIASES.get(self.kind.lower(), self.kind.lower())
        if kind not in KINDS:
            raise AttackParseError(f"unknown attack kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "parameter", float(self.parameter))
        spec = KINDS[kind]
        if spec.stochastic and self.seed is None:
            raise AttackParseError(f"attack {kind!r} needs a seed")
        if self.seed is not None:
            if int(self.seed) != self.seed or self.seed < 0:
                raise AttackParseError(f"seed must be an unsigned integer, got {self.seed!r}")
            object.__setattr__(self, "seed", int(self.seed))
        if spec.integer and not self.parameter.is_integer():
            raise AttackParseError(f"attack {kind!r} needs an integer parameter, got {self.parameter}")

    @classmethod
    def parse(cls, text: str, default_seed: Optional[int] = None) -> "AttackSpec":
        parts = text.strip().split(":")
        if len(parts) not in (2, 3) or not parts[0]:
            raise AttackParseError(f"expected kind:parameter[:seed], got {text!r}")
        try:
            parameter = float(parts[1])
        except ValueError:
            raise AttackParseError(f"bad attack parameter {parts[1]!r} in {text!r}") from None
        seed = default_seed
        if len(parts) == 3:
            try:
                seed = int(parts[2])
            except ValueError:
                raise AttackParseError(f"bad seed {parts[2]!r} in {text!r}") from None
        if not math.isfinite(parameter):
            raise AttackParseError(f"bad attack parameter {parts[1]!r} in {text!r}")
        kind = _ALIASES.get(parts[0].lower(), parts[0].lower())
        if kind in KINDS and not KINDS[kind].stochastic:
            seed = None
        return cls(parts[0], parameter, seed)

    def format(self) -> str:
        p = int(self.parameter) if KINDS[self.kind].integer else self.parameter
        text = f"{self.kind}:{p!r}"
        if self.seed is not None:
            text += f":{self.seed}"
        return text

    __str__ = format

    @property
    def is_identity(self) -> bool:
        return IDENTITY_PARAMETER.get(self.kind) == self.parameter

    def apply(self, img) -> np.ndarray:
        spec = KINDS[self.kind]
        param = int(self.parameter) if spec.integer else self.parameter
        if spec.stochastic:
            return spec.func(img, param, self.seed)
        return spec.func(img, param)


def apply_attack(img, spec) -> np.ndarray:
    """Apply an :class:`AttackSpec` (or its text form) to a gray image."""
    if isinstance(spec, str):
        spec = AttackSpec.parse(spec)
    return spec.apply(img)


def _grid(kind, values, seed=None):
    return [AttackSpec(kind, v, seed) for v in values]


DEFAULT_GRID = (
    _grid("brightness", (-20, -10, 10, 20))
    + _grid("contrast", (-20, -10, 10, 20))
    + _grid("gamma", (0.75, 0.9, 1.1, 1.25))
    + _grid("saltpepper", (0.001, 0.005, 0.01), seed=0)
    + _grid("speckle", (0.001, 0.005, 0.01), seed=0)
    + _grid("gaussian", (0.5, 1.0))
    + _grid("jpeg", (30, 50, 70, 90))
    + _grid("scaling", (0.5, 0.75, 1.5, 2.0))
    + _grid("rotation", (-90, -45, -10, -5, -1, 1, 5, 10, 45, 90))
    + _grid("watermark", (0.3, 0.6))
)

MILD_GRID = (
    _grid("brightness", (-20, -10, 10, 20))
    + _grid("contrast", (-20, -10, 10, 20))
    + _grid("gamma", (0.75, 0.9, 1.1, 1.25))
    + _grid("saltpepper", (0.001, 0.005, 0.01), seed=0)
    + _grid("speckle", (0.001, 0.005, 0.01), seed=0)
    + _grid("gaussian", (0.5, 1.0))
    + _grid("jpeg", (50, 70, 90))
    + _grid("scaling", (0.5, 0.75, 1.5, 2.0))
    + _grid("rotation", (-5, -1, 1, 5))
    + _grid("watermark", (0.3, 0.6))
)
