"""Global and local binarization plus binary morphology.

All methods classify a pixel white when its value is strictly greater than
the (global or per-pixel) threshold; for the local methods a pixel already
at full intensity is always background (Wolf's threshold equals the pixel
value on zero-variance windows, which would otherwise turn a blank page
black). Local thresholds are computed over an odd square window with
mirror padding, in exact integer window sums, so the outputs can be
checked verbatim against a per-pixel reference.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .raster import Raster, RasterError

METHODS = ("fixed", "otsu", "adaptive_mean", "sauvola", "wolf")


@dataclass
class BinarizeParams:
    method: str = "fixed"
    tau: int = 160
    window: int = 31
    k: float = 0.2
    R: float = 128.0
    offset: float = 10.0

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"unknown binarization method {self.method!r}")
        if not 0 <= self.tau <= 255:
            raise ValueError("tau must be in [0, 255]")
        if self.window < 3 or self.window % 2 == 0:
            raise ValueError("window must be odd and >= 3")


def binarize(img: Raster, params: BinarizeParams) -> Raster:
    if img.channels != 1:
        raise RasterError("binarize requires a grayscale raster")
    params.validate()
    v = img.data
    method = params.method
    if method == "fixed":
        out = np.where(v > params.tau, 255, 0)
    elif method == "otsu":
        out = np.where(v > otsu_threshold(img), 255, 0)
    else:
        t = _local_threshold(v, params)
        out = np.where((v > t) | (v == 255), 255, 0)
    return Raster(out.astype(np.uint8))


def otsu_threshold(img: Raster) -> int:
    """Threshold minimizing intra-class variance, smallest value on ties.

    Evaluated for every tau in 0..255 over the partition {v <= tau} /
    {v > tau}, in exact rational arithmetic: no float comparisons, so the
    argmin is unambiguous.
    """
    if img.channels != 1:
        raise RasterError("otsu requires a grayscale raster")
    hist = np.bincount(img.data.ravel(), minlength=256)[:256].astype(object)
    levels = np.arange(256, dtype=object)
    n_total = int(hist.sum())
    s1_total = int((hist * levels).sum())
    s2_total = int((hist * levels * levels).sum())

    best_tau = 0
    best_score: Fraction | None = None
    n0 = s1_0 = s2_0 = 0
    for tau in range(256):
        n0 += int(hist[tau])
        s1_0 += tau * int(hist[tau])
        s2_0 += tau * tau * int(hist[tau])
        n1 = n_total - n0
        s1_1 = s1_total - s1_0
        s2_1 = s2_total - s2_0
        # N * intra-class variance; an empty class contributes zero.
        score = Fraction(0)
        if n0:
            score += Fraction(s2_0) - Fraction(s1_0 * s1_0, n0)
        if n1:
            score += Fraction(s2_1) - Fraction(s1_1 * s1_1, n1)
        if best_score is None or score < best_score:
            best_score = score
            best_tau = tau
    return best_tau


def _window_sums(v: np.ndarray, window: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact int64 window sums of values and squared values, mirror-padded
    (symmetric: the border pixel is repeated into the pad)."""
    r = window // 2
    padded = np.pad(v.astype(np.int64), r, mode="symmetric")

    def sums(a: np.ndarray) -> np.ndarray:
        sat = np.zeros((a.shape[0] + 1, a.shape[1] + 1), dtype=np.int64)
        sat[1:, 1:] = a.cumsum(0).cumsum(1)
        return (sat[window:, window:] - sat[:-window, window:]
                - sat[window:, :-window] + sat[:-window, :-window])

    return sums(padded), sums(padded * padded)


def _local_threshold(v: np.ndarray, params: BinarizeParams) -> np.ndarray:
    s1, s2 = _window_sums(v, params.window)
    n = float(params.window * params.window)
    m = s1 / n
    if params.method == "adaptive_mean":
        return m - params.offset
    meansq = s2 / n
    var = meansq - m * m
    var = np.maximum(var, 0.0)
    s = np.sqrt(var)
    k = params.k
    if params.method == "sauvola":
        return m * (1.0 + k * (s / params.R - 1.0))
    if params.method == "wolf":
        big_m = float(v.min())
        s_max = float(s.max())
        ratio = s / s_max if s_max > 0.0 else np.zeros_like(s)
        return (1.0 - k) * m + k * big_m + k * ratio * (m - big_m)
    raise ValueError(params.method)


def invert(img: Raster) -> Raster:
    return Raster((255 - img.data.astype(np.int16)).astype(np.uint8))


def morphology(img: Raster, op: str, kernel: tuple[int, int] = (3, 3), iterations: int = 1) -> Raster:
    """Binary erosion (min filter) or dilation (max filter) of the white
    foreground with a w x h rectangular kernel.

    Erosion pads with white and dilation with black, which preserves the
    duality erode(x) == invert(dilate(invert(x))) for every kernel shape.
    """
    if op not in ("erode", "dilate"):
        raise ValueError(f"unknown morphology op {op!r}")
    if not img.is_binary:
        raise RasterError("morphology requires a binary raster")
    kw, kh = kernel
    if kw < 1 or kh < 1:
        raise ValueError("kernel must be at least (1, 1)")
    if iterations < 0:
        raise ValueError("iterations must be >= 0")

    data = img.data
    pad_val = 255 if op == "erode" else 0
    left, right = kw // 2, kw - 1 - kw // 2
    top, bottom = kh // 2, kh - 1 - kh // 2
    for _ in range(iterations):
        padded = np.pad(data, ((top, bottom), (left, right)), mode="constant", constant_values=pad_val)
        windows = np.lib.stride_tricks.sliding_window_view(padded, (kh, kw))
        data = windows.min(axis=(2, 3)) if op == "erode" else windows.max(axis=(2, 3))
    return Raster(np.ascontiguousarray(data))
