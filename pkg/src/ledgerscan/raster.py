"""8-bit raster images and global/local contrast correction.

Pixel convention throughout the package: 0 is black, 255 is white.
Grayscale rasters have shape (h, w); color rasters (h, w, 3) in RGB order.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image


class RasterError(ValueError):
    pass


@dataclass
class Raster:
    """Owned 8-bit image, 1 (gray/binary) or 3 (RGB) channels."""

    data: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.data)
        if a.dtype != np.uint8:
            raise RasterError(f"raster data must be uint8, got {a.dtype}")
        if a.ndim == 2:
            pass
        elif a.ndim == 3 and a.shape[2] == 3:
            pass
        else:
            raise RasterError(f"raster shape must be (h,w) or (h,w,3), got {a.shape}")
        self.data = a

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.data.ndim == 2 else 3

    @property
    def is_binary(self) -> bool:
        if self.channels != 1:
            return False
        return bool(np.isin(self.data, (0, 255)).all())

    def copy(self) -> "Raster":
        return Raster(self.data.copy())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Raster):
            return NotImplemented
        return self.data.shape == other.data.shape and bool((self.data == other.data).all())

    @classmethod
    def from_pil(cls, img: Image.Image) -> "Raster":
        if img.mode in ("L", "1"):
            return cls(np.asarray(img.convert("L"), dtype=np.uint8))
        return cls(np.asarray(img.convert("RGB"), dtype=np.uint8))

    def to_pil(self) -> Image.Image:
        return Image.fromarray(self.data, mode="L" if self.channels == 1 else "RGB")

    @classmethod
    def load(cls, path) -> "Raster":
        with Image.open(path) as img:
            return cls.from_pil(img)

    @classmethod
    def from_png_bytes(cls, payload: bytes) -> "Raster":
        with Image.open(io.BytesIO(payload)) as img:
            return cls.from_pil(img)

    def save(self, path) -> None:
        self.to_pil().save(path, format="PNG")

    def png_bytes(self) -> bytes:
        buf = io.BytesIO()
        self.to_pil().save(buf, format="PNG")
        return buf.getvalue()


def to_grayscale(img: Raster) -> Raster:
    """Luminance conversion 0.299 R + 0.587 G + 0.114 B, rounded half-up.

    Computed in exact integer arithmetic so results are reproducible
    bit-for-bit across platforms.
    """
    if img.channels != 3:
        raise RasterError("already grayscale")
    rgb = img.data.astype(np.int64)
    lum_milli = 299 * rgb[:, :, 0] + 587 * rgb[:, :, 1] + 114 * rgb[:, :, 2]
    gray = (lum_milli + 500) // 1000
    return Raster(gray.astype(np.uint8))


def ensure_gray(img: Raster) -> Raster:
    return img if img.channels == 1 else to_grayscale(img)


def intensity_histogram(img: Raster) -> np.ndarray:
    """256-bin intensity histogram; bins sum to the pixel count."""
    if img.channels != 1:
        raise RasterError("histogram requires a grayscale raster")
    return np.bincount(img.data.ravel(), minlength=256)[:256]


def _equalize_lut(hist: np.ndarray) -> np.ndarray:
    """CDF remap table for one histogram.

    out(v) = round(255 * (cdf(v) - cdf(0)) / (N - cdf(0))), where cdf counts
    pixels <= v. Anchoring at the zero bin keeps pure black fixed; a
    histogram concentrated on a single level maps to itself (identity).
    Rounding is half-up, in integer arithmetic.
    """
    cdf = np.cumsum(hist.astype(np.int64))
    n = int(cdf[-1])
    cdf_min = int(hist[0])
    denom = n - cdf_min
    if denom <= 0:
        return np.arange(256, dtype=np.uint8)
    num = 255 * (cdf - cdf_min)
    lut = (2 * num + denom) // (2 * denom)
    return np.clip(lut, 0, 255).astype(np.uint8)


def equalize(img: Raster) -> Raster:
    """Global histogram equalization via CDF remapping."""
    if img.channels != 1:
        raise RasterError("equalize requires a grayscale raster")
    lut = _equalize_lut(intensity_histogram(img))
    return Raster(lut[img.data])


def _clip_histogram(hist: np.ndarray, clip_limit: float) -> np.ndarray:
    """Clip bins at clip_limit * mean bin height, redistributing the excess.

    The excess is spread uniformly; any indivisible remainder goes one count
    per bin starting from bin 0 so the result is deterministic.
    """
    n = int(hist.sum())
    if not np.isfinite(clip_limit):
        return hist.astype(np.int64)
    limit = max(1, int(clip_limit * n / 256.0))
    clipped = np.minimum(hist, limit).astype(np.int64)
    excess = int(n - clipped.sum())
    clipped += excess // 256
    rem = excess % 256
    if rem:
        clipped[:rem] += 1
    return clipped


def clahe(img: Raster, tile_grid: tuple[int, int] = (8, 8), clip_limit: float = 2.0) -> Raster:
    """Contrast-limited adaptive equalization with interpolated tile mappings.

    The page is divided into a cols x rows grid; each tile gets a clipped
    histogram and its own CDF remap, and every pixel blends the mappings of
    the (up to) four nearest tile centers bilinearly. With a single tile and
    an infinite clip limit this reduces exactly to global equalization.
    """
    if img.channels != 1:
        raise RasterError("clahe requires a grayscale raster")
    cols, rows = tile_grid
    if cols < 1 or rows < 1:
        raise RasterError("tile_grid must be at least (1, 1)")
    h, w = img.data.shape
    if cols > w or rows > h:
        raise RasterError("tile grid finer than the image")

    # Tile boundaries cover the image exactly; last tiles absorb remainders.
    x_edges = np.linspace(0, w, cols + 1).astype(int)
    y_edges = np.linspace(0, h, rows + 1).astype(int)

    luts = np.empty((rows, cols, 256), dtype=np.uint8)
    for r in range(rows):
        for c in range(cols):
            tile = img.data[y_edges[r]:y_edges[r + 1], x_edges[c]:x_edges[c + 1]]
            hist = np.bincount(tile.ravel(), minlength=256)[:256]
            luts[r, c] = _equalize_lut(_clip_histogram(hist, clip_limit))

    if rows == 1 and cols == 1:
        return Raster(luts[0, 0][img.data])

    centers_x = (x_edges[:-1] + x_edges[1:]) / 2.0
    centers_y = (y_edges[:-1] + y_edges[1:]) / 2.0

    xs = np.arange(w, dtype=np.float64)
    ys = np.arange(h, dtype=np.float64)
    # Index of the tile whose center is at or left/above each coordinate,
    # clamped so border pixels interpolate within the edge tiles.
    cx = np.clip(np.searchsorted(centers_x, xs, side="right") - 1, 0, cols - 2) if cols > 1 else np.zeros(w, dtype=int)
    cy = np.clip(np.searchsorted(centers_y, ys, side="right") - 1, 0, rows - 2) if rows > 1 else np.zeros(h, dtype=int)

    if cols > 1:
        tx = (xs - centers_x[cx]) / (centers_x[cx + 1] - centers_x[cx])
        tx = np.clip(tx, 0.0, 1.0)
    else:
        tx = np.zeros(w)
    if rows > 1:
        ty = (ys - centers_y[cy]) / (centers_y[cy + 1] - centers_y[cy])
        ty = np.clip(ty, 0.0, 1.0)
    else:
        ty = np.zeros(h)

    cx2 = np.minimum(cx + 1, cols - 1)
    cy2 = np.minimum(cy + 1, rows - 1)

    v = img.data
    rows_idx = np.broadcast_to(cy[:, None], (h, w))
    rows_idx2 = np.broadcast_to(cy2[:, None], (h, w))
    cols_idx = np.broadcast_to(cx[None, :], (h, w))
    cols_idx2 = np.broadcast_to(cx2[None, :], (h, w))

    m00 = luts[rows_idx, cols_idx, v].astype(np.float64)
    m01 = luts[rows_idx, cols_idx2, v].astype(np.float64)
    m10 = luts[rows_idx2, cols_idx, v].astype(np.float64)
    m11 = luts[rows_idx2, cols_idx2, v].astype(np.float64)

    wx = tx[None, :]
    wy = ty[:, None]
    out = (1 - wy) * ((1 - wx) * m00 + wx * m01) + wy * ((1 - wx) * m10 + wx * m11)
    return Raster(np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8))


def rotate(img: Raster, angle_deg: float, fill: int = 255) -> Raster:
    """Rotate about the image center by angle_deg (counterclockwise in image
    coordinates), bilinear resampling, constant fill outside the source."""
    if img.channels != 1:
        raise RasterError("rotate operates on grayscale rasters")
    h, w = img.data.shape
    theta = np.deg2rad(angle_deg)
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0

    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    # Inverse map: rotate output coordinates by -angle back into the source.
    dx, dy = xs - cx, ys - cy
    sx = cos_t * dx + sin_t * dy + cx
    sy = -sin_t * dx + cos_t * dy + cy
    return Raster(_bilinear_sample(img.data, sx, sy, fill))


def _bilinear_sample(data: np.ndarray, sx: np.ndarray, sy: np.ndarray, fill: int) -> np.ndarray:
    h, w = data.shape
    x0 = np.floor(sx).astype(int)
    y0 = np.floor(sy).astype(int)
    fx = sx - x0
    fy = sy - y0

    def at(yy, xx):
        inside = (xx >= 0) & (xx < w) & (yy >= 0) & (yy < h)
        vals = np.full(xx.shape, float(fill))
        vals[inside] = data[yy[inside], xx[inside]]
        return vals

    v00 = at(y0, x0)
    v01 = at(y0, x0 + 1)
    v10 = at(y0 + 1, x0)
    v11 = at(y0 + 1, x0 + 1)
    out = (1 - fy) * ((1 - fx) * v00 + fx * v01) + fy * ((1 - fx) * v10 + fx * v11)
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)
