"""Whole-page geometry cleanup: fore-edge trimming, deskew, perspective.

Fore-edge removal exploits the scan structure of bound books: the page is
lighter than the scanner bed and the gray book edge, so after thresholding
and denoising the page survives as the dominant white region. When the
candidate crop's aspect ratio strays too far from the input's the image is
returned untouched: a missed crop is cheaper than an overzealous one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .binarize import BinarizeParams, binarize, morphology
from .raster import Raster, RasterError, ensure_gray, rotate


@dataclass
class ForeEdgeParams:
    binarize_tau: int = 160
    denoise_kernel: tuple[int, int] = (3, 3)
    expand_kernel: tuple[int, int] = (15, 15)
    min_rect_area_fraction: float = 0.05
    max_aspect_deviation: float = 0.30


CropBox = tuple[int, int, int, int]  # (x0, y0, x1, y1), half-open


def remove_fore_edges(img: Raster, params: ForeEdgeParams | None = None) -> tuple[Raster, CropBox | None]:
    """Trim scanner background and book edge, keeping the page rectangle.

    Steps: threshold to black/white, open (erode + dilate) to drop speckle,
    dilate to consolidate the page area, then union the bounding boxes of
    every white component covering at least min_rect_area_fraction of the
    image. Returns the cropped raster and the crop box, or (img, None) when
    no acceptable rectangle is found or the aspect guard trips.
    """
    p = params or ForeEdgeParams()
    gray = ensure_gray(img)
    h, w = gray.data.shape

    mask = binarize(gray, BinarizeParams(method="fixed", tau=p.binarize_tau))
    mask = morphology(mask, "erode", p.denoise_kernel, 1)
    mask = morphology(mask, "dilate", p.denoise_kernel, 1)
    mask = morphology(mask, "dilate", p.expand_kernel, 1)

    labels, count = ndimage.label(mask.data == 255, structure=np.ones((3, 3), dtype=bool))
    if count == 0:
        return img, None
    areas = ndimage.sum_labels(np.ones_like(labels), labels, index=np.arange(1, count + 1))
    min_area = p.min_rect_area_fraction * h * w
    keep = [i + 1 for i, a in enumerate(areas) if a >= min_area]
    if not keep:
        return img, None

    slices = ndimage.find_objects(labels)
    x0 = min(slices[i - 1][1].start for i in keep)
    x1 = max(slices[i - 1][1].stop for i in keep)
    y0 = min(slices[i - 1][0].start for i in keep)
    y1 = max(slices[i - 1][0].stop for i in keep)

    # The expansion dilate grew every region by its radius; take that back
    # on sides that did not hit the image border, so the crop tracks the
    # page edge rather than the dilated halo.
    rx, ry = p.expand_kernel[0] // 2, p.expand_kernel[1] // 2
    if x0 > 0:
        x0 = min(x0 + rx, x1 - 1)
    if y0 > 0:
        y0 = min(y0 + ry, y1 - 1)
    if x1 < w:
        x1 = max(x1 - rx, x0 + 1)
    if y1 < h:
        y1 = max(y1 - ry, y0 + 1)

    in_aspect = w / h
    crop_aspect = (x1 - x0) / (y1 - y0)
    if abs(crop_aspect - in_aspect) / in_aspect > p.max_aspect_deviation:
        return img, None

    cropped = img.data[y0:y1, x0:x1]
    return Raster(np.ascontiguousarray(cropped)), (x0, y0, x1, y1)


def deskew(img: Raster, max_angle: float = 15.0, step: float = 0.1) -> tuple[Raster, float]:
    """Estimate and undo the dominant text skew.

    The skew is the angle in [-max_angle, +max_angle], on a `step`-degree
    grid, that maximizes the variance of the horizontal projection profile
    of dark pixels; the returned raster is the input rotated by -angle with
    white fill. A blank page reports 0.
    """
    if img.channels != 1:
        raise RasterError("deskew requires a grayscale raster")
    ys, xs = np.nonzero(img.data < 128)
    if ys.size == 0:
        return img.copy(), 0.0

    h, w = img.data.shape
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    dx = xs.astype(np.float64) - cx
    dy = ys.astype(np.float64) - cy

    n_steps = int(round(max_angle / step))
    candidates = np.arange(-n_steps, n_steps + 1) * step
    best_angle = 0.0
    best_score = -1.0
    for angle in candidates:
        theta = np.deg2rad(-angle)
        proj = np.rint(np.sin(theta) * dx + np.cos(theta) * dy).astype(np.int64)
        counts = np.bincount(proj - proj.min())
        score = float(counts.var())
        better = score > best_score
        # Deterministic tie-break: prefer the smaller correction.
        same = score == best_score and (abs(angle), angle) < (abs(best_angle), best_angle)
        if better or same:
            best_score = score
            best_angle = float(angle)
    best_angle = round(best_angle, 10)
    return rotate(img, -best_angle, fill=255), best_angle


@dataclass
class Quad:
    """Four corner points in pixel coordinates, clockwise from top-left."""

    points: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        if len(self.points) != 4:
            raise ValueError("a quad has exactly four corners")
        crosses = []
        for i in range(4):
            ax, ay = self.points[i]
            bx, by = self.points[(i + 1) % 4]
            cx, cy = self.points[(i + 2) % 4]
            crosses.append((bx - ax) * (cy - by) - (by - ay) * (cx - bx))
        if any(c == 0 for c in crosses) or not (all(c > 0 for c in crosses) or all(c < 0 for c in crosses)):
            raise ValueError("quad corners must form a convex quadrilateral with positive area")


def _homography(src: list[tuple[float, float]], dst: list[tuple[float, float]]) -> np.ndarray:
    """3x3 homography mapping each src point onto its dst point."""
    a = np.zeros((8, 8))
    b = np.zeros(8)
    for i, ((u, v), (x, y)) in enumerate(zip(src, dst)):
        a[2 * i] = [u, v, 1, 0, 0, 0, -u * x, -v * x]
        a[2 * i + 1] = [0, 0, 0, u, v, 1, -u * y, -v * y]
        b[2 * i] = x
        b[2 * i + 1] = y
    try:
        h = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise ValueError("degenerate corner configuration") from exc
    return np.append(h, 1.0).reshape(3, 3)


def perspective_correct(img: Raster, corners: Quad, out_size: tuple[int, int]) -> Raster:
    """Resample the quadrilateral region onto an upright out_size rectangle
    (bilinear interpolation, white fill outside the source)."""
    from .raster import _bilinear_sample

    gray = ensure_gray(img)
    ow, oh = out_size
    if ow < 2 or oh < 2:
        raise ValueError("output size must be at least 2x2")
    rect = [(0.0, 0.0), (ow - 1.0, 0.0), (ow - 1.0, oh - 1.0), (0.0, oh - 1.0)]
    hmat = _homography(rect, list(corners.points))

    vs, us = np.mgrid[0:oh, 0:ow].astype(np.float64)
    denom = hmat[2, 0] * us + hmat[2, 1] * vs + hmat[2, 2]
    sx = (hmat[0, 0] * us + hmat[0, 1] * vs + hmat[0, 2]) / denom
    sy = (hmat[1, 0] * us + hmat[1, 1] * vs + hmat[1, 2]) / denom
    return Raster(_bilinear_sample(gray.data, sx, sy, fill=255))
