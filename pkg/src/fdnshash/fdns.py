"""F-DNS hash core.

The hash is built from the 2-D DCT of a preprocessed image. For every
central coefficient, the dominant neighborhood structure (DNS) records the
Euclidean distance between the ``M x M`` patch around the centre and the
patch around each position of the ``N x N`` searching window. Averaging the
per-pixel maps gives the global map (F-GNS); dropping its first row and
column leaves the 64-value hash.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import fft

from . import imagecore
from .errors import (
    IncompatibleHashError,
    InvalidInputError,
    InvalidParameterError,
    OutOfBoundsError,
    UnsupportedParameterError,
)

HASH_LENGTH = 64
ALGORITHM = "f-dns"

_DEGENERATE_VAR = 1e-12
_DEGENERATE_DIFF = 1e-9


@dataclass(frozen=True)
class FdnsParams:
    """Every knob of the hashing pipeline.

    Two hashes are only comparable when their ``fingerprint`` agrees.
    """

    canonical_w: int = 256
    canonical_h: int = 256
    gaussian_kernel: int = 3
    gaussian_sigma: float = 1.0
    search_window: int = 9
    neighborhood_window: int = 3

    def __post_init__(self):
        for name in ("canonical_w", "canonical_h", "gaussian_kernel", "search_window", "neighborhood_window"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value:
                raise InvalidParameterError(f"{name} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        object.__setattr__(self, "gaussian_sigma", float(self.gaussian_sigma))

        n, m = self.search_window, self.neighborhood_window
        if n < 3 or n % 2 == 0:
            raise InvalidParameterError(f"search_window must be odd and >= 3, got {n}")
        if m < 1 or m % 2 == 0:
            raise InvalidParameterError(f"neighborhood_window must be odd and >= 1, got {m}")
        if m >= n:
            raise InvalidParameterError(f"neighborhood_window ({m}) must be smaller than search_window ({n})")
        if self.gaussian_kernel < 1 or self.gaussian_kernel % 2 == 0:
            raise InvalidParameterError(f"gaussian_kernel must be odd and >= 1, got {self.gaussian_kernel}")
        if not (np.isfinite(self.gaussian_sigma) and self.gaussian_sigma > 0):
            raise InvalidParameterError(f"gaussian_sigma must be positive, got {self.gaussian_sigma}")
        if min(self.canonical_w, self.canonical_h) < n + m:
            raise InvalidParameterError(
                f"canonical size {self.canonical_w}x{self.canonical_h} must be at least N+M={n + m}"
            )

    @property
    def margin(self) -> int:
        """Distance from the border of the first valid central pixel."""
        return self.search_window // 2 + self.neighborhood_window // 2

    def as_dict(self) -> dict:
        return asdict(self)

    @property
    def fingerprint(self) -> str:
        payload = json.dumps({"algorithm": ALGORITHM, **self.as_dict()}, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("ascii")).hexdigest()[:16]


DEFAULT_PARAMS = FdnsParams()


@dataclass(frozen=True, eq=False)
class HashVector:
    """A 64-value F-DNS hash tagged with the fingerprint of its parameters."""

    values: np.ndarray
    params_fingerprint: str

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64).reshape(-1)
        if values.shape != (HASH_LENGTH,):
            raise InvalidInputError(f"hash must hold exactly {HASH_LENGTH} values, got {values.size}")
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("hash contains non-finite values")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return HASH_LENGTH

    def __eq__(self, other):
        if not isinstance(other, HashVector):
            return NotImplemented
        return self.params_fingerprint == other.params_fingerprint and np.array_equal(self.values, other.values)

    __hash__ = None


def _check_matrix(coeffs) -> np.ndarray:
    arr = np.asarray(coeffs, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidInputError(f"expected a non-empty 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("matrix contains non-finite values")
    return arr


def dct2(img) -> np.ndarray:
    """Orthonormal 2-D DCT-II.

    >>> dct2(np.ones((2, 2)))
    array([[2., 0.],
           [0., 0.]])
    """
    arr = imagecore.as_gray(img)
    return fft.dctn(arr, type=2, norm="ortho")


def dns_at(coeffs, center, params: FdnsParams = DEFAULT_PARAMS) -> np.ndarray:
    """DNS map of one central pixel.

    Parameters
    ----------
    coeffs : array_like, shape (H, W)
        Coefficient matrix.
    center : tuple of int
        ``(row, col)`` of the central pixel. It must lie at least
        ``params.margin`` away from every edge.
    params : FdnsParams
        Only the window sizes are read.

    Returns
    -------
    ndarray, shape (N, N)
        Entry ``(i, j)`` is the distance between the patch around the centre
        and the patch around the pixel at offset ``(i - N//2, j - N//2)``.
    """
    c = _check_matrix(coeffs)
    r, col = (int(v) for v in center)
    m = params.margin
    h, w = c.shape
    if not (m <= r < h - m and m <= col < w - m):
        raise OutOfBoundsError(
            f"center {(r, col)} is closer than {m} pixels to the border of a {h}x{w} matrix"
        )
    half_n = params.search_window // 2
    half_m = params.neighborhood_window // 2
    # every patch the searching window touches, indexed by its offset
    region = c[r - m : r + m + 1, col - m : col + m + 1]
    patches = sliding_window_view(region, (params.neighborhood_window,) * 2)
    ref = c[r - half_m : r + half_m + 1, col - half_m : col + half_m + 1]
    diff = patches - ref
    out = np.sqrt(np.einsum("ijkl,ijkl->ij", diff, diff))
    out[half_n, half_n] = 0.0
    return out


def _box_sum(plane: np.ndarray, size: int) -> np.ndarray:
    if size == 1:
        return plane
    cols = sliding_window_view(plane, size, axis=1).sum(axis=-1)
    return sliding_window_view(cols, size, axis=0).sum(axis=-1)


def fgns(coeffs, params: FdnsParams = DEFAULT_PARAMS) -> np.ndarray:
    """Mean of :func:`dns_at` over every valid central pixel.

    Computed offset by offset: the squared-difference plane between the
    matrix and its shifted copy is box-summed over the neighborhood window,
    which yields the squared patch distance of every centre at once.
    """
    c = _check_matrix(coeffs)
    n, mw = params.search_window, params.neighborhood_window
    need = n + mw - 1
    h, w = c.shape
    if h < need or w < need:
        raise InvalidInputError(f"matrix {h}x{w} is smaller than N+M-1={need} in some dimension")
    half_n, half_m = n // 2, mw // 2
    m = params.margin
    n_rows, n_cols = h - 2 * m, w - 2 * m
    count = n_rows * n_cols

    # patch pixels around valid centres span [m - half_m, h - m + half_m)
    base = c[m - half_m : h - m + half_m, m - half_m : w - m + half_m]
    ph, pw = base.shape
    out = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        di = i - half_n
        for j in range(n):
            dj = j - half_n
            if di == 0 and dj == 0:
                continue
            shifted = c[m - half_m + di : m - half_m + di + ph, m - half_m + dj : m - half_m + dj + pw]
            sq = base - shifted
            sq *= sq
            dist = np.sqrt(_box_sum(sq, mw))
            out[i, j] = dist.sum() / count
    return out


def extract_hash(gns, params: FdnsParams = DEFAULT_PARAMS) -> HashVector:
    """Drop the first row and column of the 9x9 global map and flatten it."""
    g = _check_matrix(gns)
    n = params.search_window
    if (n - 1) ** 2 != HASH_LENGTH:
        raise UnsupportedParameterError(f"hash extraction needs search_window=9, got {n}")
    if g.shape != (n, n):
        raise InvalidInputError(f"expected a {n}x{n} map, got shape {g.shape}")
    return HashVector(g[1:, 1:].reshape(-1).copy(), params.fingerprint)


def preprocess(img, params: FdnsParams = DEFAULT_PARAMS) -> np.ndarray:
    """Grayscale, resize to the canonical size and smooth."""
    gray = imagecore.to_grayscale(img)
    gray = imagecore.resize_bilinear(gray, params.canonical_w, params.canonical_h)
    return imagecore.gaussian_smooth(gray, params.gaussian_kernel, params.gaussian_sigma)


def hash_image(img, params: FdnsParams = DEFAULT_PARAMS) -> HashVector:
    """Full pipeline: preprocess, DCT, F-GNS, hash extraction.

    ``img`` is an RGB array, a gray array or a path to an image file.
    """
    if isinstance(img, (str, bytes)) or hasattr(img, "__fspath__"):
        img = imagecore.load_image(img)
    smoothed = preprocess(img, params)
    return extract_hash(fgns(dct2(smoothed), params), params)


def _check_compatible(a: HashVector, b: HashVector) -> None:
    if a.params_fingerprint != b.params_fingerprint:
        raise IncompatibleHashError(
            f"hash fingerprints differ: {a.params_fingerprint} vs {b.params_fingerprint}"
        )


def pearson(a, b) -> float:
    """Pearson correlation of two equal-length vectors with the degenerate-case rule.

    If both vectors are (numerically) constant they correlate 1.0 when equal
    and 0.0 otherwise; if only one is constant the result is 0.0.
    """
    x = np.asarray(a, dtype=np.float64).reshape(-1)
    y = np.asarray(b, dtype=np.float64).reshape(-1)
    if x.shape != y.shape:
        raise InvalidInputError(f"vector lengths differ: {x.size} vs {y.size}")
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(np.dot(xc, xc))
    syy = float(np.dot(yc, yc))
    x_flat = sxx / x.size < _DEGENERATE_VAR
    y_flat = syy / y.size < _DEGENERATE_VAR
    if x_flat and y_flat:
        return 1.0 if float(np.max(np.abs(x - y))) < _DEGENERATE_DIFF else 0.0
    if x_flat or y_flat:
        return 0.0
    r = float(np.dot(xc, yc)) / np.sqrt(sxx * syy)
    return float(min(1.0, max(-1.0, r)))


def correlation(a: HashVector, b: HashVector) -> float:
    """Pearson correlation between two compatible hashes."""
    _check_compatible(a, b)
    return pearson(a.values, b.values)
