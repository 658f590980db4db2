"""Synthetic structured images for self-contained experiments.

The generators are deterministic: the same arguments always give the same
pixels. They stand in for photographs and screenshots when no external
corpus is available.
"""

from __future__ import annotations

import numpy as np

from . import attacks

DESK_SIZE = (192, 256)  # (height, width)


def _grid(shape):
    h, w = shape
    return np.mgrid[0:h, 0:w].astype(np.float64)


def banded_gradient(shape=DESK_SIZE, period: float = 64.0, angle_deg: float = 30.0,
                    lo: float = 30.0, hi: float = 220.0) -> np.ndarray:
    """Sawtooth ramp: a linear gradient that restarts every ``period`` pixels.

    A plain linear ramp along one axis is constant along the other, so all of
    its DCT energy sits in the first row or column and its hash is zero.
    """
    yy, xx = _grid(shape)
    t = np.cos(np.radians(angle_deg)) * xx + np.sin(np.radians(angle_deg)) * yy
    return lo + (hi - lo) * ((t % period) / period)


def gradient_tiles(shape=DESK_SIZE, n: int = 4) -> np.ndarray:
    """``n x n`` tiles, each holding a linear ramp with its own direction."""
    h, w = shape
    yy, xx = _grid(shape)
    img = np.zeros(shape)
    for i in range(n):
        for j in range(n):
            rows = slice(i * h // n, (i + 1) * h // n)
            cols = slice(j * w // n, (j + 1) * w // n)
            a = np.radians((i * n + j) * 37 % 180)
            t = np.cos(a) * (xx[rows, cols] - xx[rows, cols].min()) + np.sin(a) * (yy[rows, cols] - yy[rows, cols].min())
            img[rows, cols] = 40.0 + 170.0 * (t - t.min()) / max(t.max() - t.min(), 1e-9)
    return img


def ring_gradient(shape=DESK_SIZE, period: float = 40.0, center=(0.4, 0.6)) -> np.ndarray:
    """Radial sawtooth rings around ``center`` (fractions of height, width)."""
    h, w = shape
    yy, xx = _grid(shape)
    r = np.hypot(yy - center[0] * h, xx - center[1] * w)
    return 30.0 + 190.0 * ((r % period) / period)


def checkerboard(shape=DESK_SIZE, cell: int = 16, phase=(0, 0), lo: float = 40.0, hi: float = 215.0) -> np.ndarray:
    """Checkerboard of ``cell``-pixel squares, shifted by ``phase`` pixels."""
    h, w = shape
    yy, xx = np.mgrid[0:h, 0:w]
    on = (((yy + phase[0]) // cell) + ((xx + phase[1]) // cell)) % 2 == 1
    return np.where(on, hi, lo).astype(np.float64)


def webpage(shape=DESK_SIZE, seed: int = 0, columns: int = 2, header: float = 0.15, dark: bool = False) -> np.ndarray:
    """Block layout resembling a web page screenshot.

    A header bar, a navigation strip, ``columns`` content columns filled
    with text-like lines, and a few image boxes. ``seed`` drives line
    lengths and box placement.
    """
    rng = np.random.default_rng(seed)
    h, w = shape
    bg, fg = (30.0, 200.0) if dark else (245.0, 60.0)
    img = np.full(shape, bg)
    hh = int(h * header)
    img[:hh, :] = 90.0 if not dark else 150.0
    img[hh : hh + 8, :] = 180.0 if not dark else 70.0
    img[hh // 4 : hh - hh // 4, 8 : 8 + w // 6] = 250.0 if not dark else 20.0

    top = hh + 14
    gutter = 10
    col_w = (w - gutter * (columns + 1)) // columns
    for c in range(columns):
        x0 = gutter + c * (col_w + gutter)
        y = top
        while y < h - 12:
            if rng.random() < 0.15:
                box_h = int(rng.integers(20, 45))
                img[y : min(h - 4, y + box_h), x0 : x0 + col_w] = float(rng.uniform(100, 180))
                y += box_h + 6
                continue
            length = int(col_w * rng.uniform(0.5, 1.0))
            img[y : y + 3, x0 : x0 + length] = fg
            y += 7
    return img


def thumbnail_page(shape=DESK_SIZE, seed: int = 0, per_row: int = 4, dark: bool = False) -> np.ndarray:
    """Header plus a 3-row grid of picture thumbnails with captions."""
    rng = np.random.default_rng(seed)
    h, w = shape
    img = np.full(shape, 20.0 if dark else 250.0)
    top = h // 7
    img[:top] = 120.0
    cell_h = (h - top - 10) // 3
    cell_w = (w - 10) // per_row
    for i in range(3):
        for j in range(per_row):
            y = top + 10 + i * cell_h
            x = 10 + j * cell_w
            img[y : y + cell_h - 12, x : x + cell_w - 10] = rng.uniform(60, 200)
            cap = int((cell_w - 10) * rng.uniform(0.4, 1.0))
            img[y + cell_h - 10 : y + cell_h - 7, x : x + cap] = 200.0 if dark else 50.0
    return img


def login_page(shape=DESK_SIZE) -> np.ndarray:
    """Dark top bar and a centred framed form with two fields and a button."""
    h, w = shape
    img = np.full(shape, 235.0)
    img[: h // 8] = 50.0
    x0, x1 = w // 2 - 60, w // 2 + 60
    y0, y1 = h // 2 - 50, h // 2 + 50
    img[y0:y1, x0:x1] = 120.0
    img[y0 + 2 : y1 - 2, x0 + 2 : x1 - 2] = 255.0
    for y in (y0 + 20, y0 + 45):
        img[y : y + 14, x0 + 12 : x1 - 12] = 200.0
    img[y0 + 72 : y0 + 88, x0 + 30 : x1 - 30] = 40.0
    return img


def desk_corpus(shape=DESK_SIZE) -> dict:
    """Ten structured gray images keyed by a descriptive name."""
    return {
        "banded_gradient": banded_gradient(shape),
        "gradient_tiles": gradient_tiles(shape),
        "ring_gradient": ring_gradient(shape),
        "checker_16_p0": checkerboard(shape, 16, (0, 0)),
        "checker_24_p6": checkerboard(shape, 24, (6, 6)),
        "checker_32_p8": checkerboard(shape, 32, (8, 0)),
        "web_two_col": webpage(shape, seed=1, columns=2),
        "web_thumbnails": thumbnail_page(shape, seed=2),
        "web_dark": webpage(shape, seed=3, columns=2, header=0.2, dark=True),
        "web_login": login_page(shape),
    }


def template_families(shape=DESK_SIZE) -> dict:
    """Five distinct page designs used as classification templates."""
    return {
        "forum": webpage(shape, seed=11, columns=3, header=0.12),
        "market": webpage(shape, seed=12, columns=2, header=0.22, dark=True),
        "blog": webpage(shape, seed=13, columns=1, header=0.3),
        "wiki": webpage(shape, seed=14, columns=2, header=0.08),
        "gallery": thumbnail_page(shape, seed=15, per_row=3, dark=True),
    }


def variants(img, count: int, seed: int = 0, grid=None) -> list:
    """``count`` perturbed copies of ``img``, each from one attack of ``grid``.

    Attacks are drawn with a seeded generator; stochastic attacks get a
    fresh seed per copy.
    """
    grid = list(attacks.MILD_GRID if grid is None else grid)
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        spec = grid[int(rng.integers(len(grid)))]
        if attacks.KINDS[spec.kind].stochastic:
            spec = attacks.AttackSpec(spec.kind, spec.parameter, int(rng.integers(2**31)))
        out.append(spec.apply(img))
    return out
