"""Table-structure recovery: ruled-line detection and word-geometry rows.

Delimiter detection runs edge detection, a seeded probabilistic Hough
transform, and a consolidation pass that merges collinear fragments and
keeps only clusters spanning a meaningful fraction of the page. Row
recovery groups words by vertical overlap, folds indented continuation
lines into their parent label, and classifies header rows by centering,
relative font size, and surrounding whitespace.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .amounts import AmountParseError, parse_amount
from .geometry import group_by_y_overlap, y_overlap_ratio
from .ocr import OcrWord
from .raster import Raster, RasterError


@dataclass
class Segment:
    x0: float
    y0: float
    x1: float
    y1: float
    support: int
    orientation: str  # horizontal | vertical | other

    @property
    def length(self) -> float:
        return math.hypot(self.x1 - self.x0, self.y1 - self.y0)


def classify_orientation(dx: float, dy: float, angle_tol: float) -> str:
    angle = math.degrees(math.atan2(dy, dx))
    if angle <= -90.0:
        angle += 180.0
    elif angle > 90.0:
        angle -= 180.0
    if abs(angle) <= angle_tol:
        return "horizontal"
    if 90.0 - abs(angle) <= angle_tol:
        return "vertical"
    return "other"


# ---------------------------------------------------------------------------
# Edge detection

def _gaussian_blur(a: np.ndarray, sigma: float) -> np.ndarray:
    if sigma <= 0:
        return a.astype(np.float64)
    r = max(1, int(math.ceil(3.0 * sigma)))
    xs = np.arange(-r, r + 1, dtype=np.float64)
    k = np.exp(-(xs * xs) / (2.0 * sigma * sigma))
    k /= k.sum()
    out = a.astype(np.float64)
    for axis in (0, 1):
        pad = [(0, 0), (0, 0)]
        pad[axis] = (r, r)
        padded = np.pad(out, pad, mode="symmetric")
        win = np.lib.stride_tricks.sliding_window_view(padded, 2 * r + 1, axis=axis)
        out = win @ k
    return out


_SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)


def _convolve3(a: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    padded = np.pad(a, 1, mode="symmetric")
    win = np.lib.stride_tricks.sliding_window_view(padded, (3, 3))
    return np.einsum("ijkl,kl->ij", win, kernel)


def detect_edges(img: Raster, low: float = 50.0, high: float = 150.0, sigma: float = 1.4) -> Raster:
    """Canny edge map: Gaussian blur, Sobel gradients, non-maximum
    suppression along the gradient, and hysteresis linking."""
    if img.channels != 1:
        raise RasterError("edge detection requires a grayscale raster")
    if low >= high:
        raise ValueError("low threshold must be below high threshold")

    blurred = _gaussian_blur(img.data, sigma)
    gx = _convolve3(blurred, _SOBEL_X)
    gy = _convolve3(blurred, _SOBEL_X.T)
    mag = np.hypot(gx, gy)

    angle = np.degrees(np.arctan2(gy, gx)) % 180.0
    sector = np.zeros(mag.shape, dtype=np.int8)
    sector[(angle >= 22.5) & (angle < 67.5)] = 1
    sector[(angle >= 67.5) & (angle < 112.5)] = 2
    sector[(angle >= 112.5) & (angle < 157.5)] = 3

    def shifted(dy: int, dx: int) -> np.ndarray:
        out = np.zeros_like(mag)
        h, w = mag.shape
        ys0, ys1 = max(0, dy), min(h, h + dy)
        xs0, xs1 = max(0, dx), min(w, w + dx)
        out[ys0:ys1, xs0:xs1] = mag[ys0 - dy:ys1 - dy, xs0 - dx:xs1 - dx]
        return out

    # Neighbor offsets along the gradient for each sector.
    offsets = {0: (0, 1), 1: (1, -1), 2: (1, 0), 3: (1, 1)}
    keep = np.zeros(mag.shape, dtype=bool)
    for s, (dy, dx) in offsets.items():
        fwd = shifted(-dy, -dx)   # value at p + d
        back = shifted(dy, dx)    # value at p - d
        keep |= (sector == s) & (mag > back) & (mag >= fwd)
    keep &= mag > 0

    weak = keep & (mag >= low)
    strong = keep & (mag >= high)
    labels, _ = ndimage.label(weak, structure=np.ones((3, 3), dtype=bool))
    good = np.unique(labels[strong])
    good = good[good != 0]
    edges = np.isin(labels, good)
    return Raster((edges * 255).astype(np.uint8))


# ---------------------------------------------------------------------------
# Probabilistic Hough transform

def detect_line_segments(edges: Raster, vote_threshold: int = 80, min_len: float = 50.0,
                         max_gap: float = 5.0, samples: int = 5000, seed: int = 0,
                         angle_tol: float = 2.0) -> list[Segment]:
    """Randomized Hough line extraction at 1 degree x 1 pixel resolution.

    A seeded sample of edge pixels votes over (theta, rho); every bin at or
    above vote_threshold is walked along its line direction, splitting at
    gaps wider than max_gap and keeping runs at least min_len long. Pixels
    already claimed by an emitted segment do not support further bins, so
    the result is deterministic for a fixed seed.
    """
    if not edges.is_binary:
        raise RasterError("hough transform requires a binary edge map")
    ys, xs = np.nonzero(edges.data == 255)
    n = xs.size
    if n == 0:
        return []

    rng = np.random.default_rng(seed)
    if n > samples:
        pick = np.sort(rng.choice(n, size=samples, replace=False))
    else:
        pick = np.arange(n)
    sx = xs[pick].astype(np.float64)
    sy = ys[pick].astype(np.float64)

    thetas = np.deg2rad(np.arange(180, dtype=np.float64))
    cos_t, sin_t = np.cos(thetas), np.sin(thetas)
    h, w = edges.data.shape
    diag = int(math.ceil(math.hypot(w, h)))
    n_rho = 2 * diag + 1

    rho_idx = np.rint(sx[:, None] * cos_t[None, :] + sy[:, None] * sin_t[None, :]).astype(np.int64) + diag
    flat = (rho_idx + np.arange(180)[None, :] * n_rho).ravel()
    acc = np.bincount(flat, minlength=180 * n_rho).reshape(180, n_rho)

    hits = np.argwhere(acc >= vote_threshold)
    order = sorted(range(len(hits)), key=lambda i: (-int(acc[hits[i][0], hits[i][1]]), int(hits[i][0]), int(hits[i][1])))

    fx = xs.astype(np.float64)
    fy = ys.astype(np.float64)
    consumed = np.zeros(n, dtype=bool)
    segments: list[Segment] = []
    for oi in order:
        ti, ri = int(hits[oi][0]), int(hits[oi][1])
        rho = ri - diag
        vals = fx * cos_t[ti] + fy * sin_t[ti]
        cand = np.nonzero((np.abs(vals - rho) <= 0.5) & ~consumed)[0]
        if cand.size < 2:
            continue
        t = -fx[cand] * sin_t[ti] + fy[cand] * cos_t[ti]
        sort_keys = np.lexsort((fy[cand], fx[cand], t))
        cand = cand[sort_keys]
        t = t[sort_keys]
        run_start = 0
        for i in range(1, cand.size + 1):
            if i == cand.size or t[i] - t[i - 1] > max_gap:
                run = cand[run_start:i]
                if run.size >= 2 and t[i - 1] - t[run_start] >= min_len:
                    x0, y0 = float(fx[run[0]]), float(fy[run[0]])
                    x1, y1 = float(fx[run[-1]]), float(fy[run[-1]])
                    segments.append(Segment(
                        x0=x0, y0=y0, x1=x1, y1=y1, support=int(run.size),
                        orientation=classify_orientation(x1 - x0, y1 - y0, angle_tol),
                    ))
                    consumed[run] = True
                run_start = i
    return segments


def consolidate_delimiters(segments: list[Segment], page_size: tuple[int, int],
                           angle_tol: float = 2.0, merge_dist: float = 8.0,
                           min_span_frac: float = 0.5) -> tuple[list[float], list[float]]:
    """Reduce raw segments to page-level delimiters.

    Near-horizontal segments cluster by y (near-vertical by x) within
    merge_dist; a cluster becomes a delimiter only when the union of its
    extents covers min_span_frac of the page dimension. Positions are the
    support-weighted mean of member coordinates.
    """
    w, h = page_size

    def cluster(items: list[tuple[float, float, float, int]], span_needed: float) -> list[float]:
        # items: (position, extent_lo, extent_hi, support); sorted by position
        out: list[float] = []
        if not items:
            return out
        items = sorted(items)
        group: list[tuple[float, float, float, int]] = [items[0]]
        for item in items[1:]:
            if item[0] - group[-1][0] <= merge_dist:
                group.append(item)
            else:
                out.extend(_finish_cluster(group, span_needed))
                group = [item]
        out.extend(_finish_cluster(group, span_needed))
        return sorted(out)

    horiz = []
    vert = []
    for s in segments:
        orientation = classify_orientation(s.x1 - s.x0, s.y1 - s.y0, angle_tol)
        if orientation == "horizontal":
            horiz.append(((s.y0 + s.y1) / 2.0, min(s.x0, s.x1), max(s.x0, s.x1), s.support))
        elif orientation == "vertical":
            vert.append(((s.x0 + s.x1) / 2.0, min(s.y0, s.y1), max(s.y0, s.y1), s.support))
    return cluster(horiz, min_span_frac * w), cluster(vert, min_span_frac * h)


def _finish_cluster(group: list[tuple[float, float, float, int]], span_needed: float) -> list[float]:
    lo = min(g[1] for g in group)
    hi = max(g[2] for g in group)
    if hi - lo < span_needed:
        return []
    total = sum(g[3] for g in group)
    return [sum(g[0] * g[3] for g in group) / total]


# ---------------------------------------------------------------------------
# Rows, continuations, headers

@dataclass
class Row:
    indices: list[int]
    words: list[OcrWord]
    baseline_y: float
    label_text: str = ""
    continuation_of: int | None = None
    flags: list[str] = field(default_factory=list)


def group_words_into_rows(words: list[OcrWord], y_overlap_min: float = 0.5) -> list[Row]:
    """Rows are the transitive closure of pairwise y-overlap >= the
    threshold (overlap measured against the smaller height). Rows that owe
    their unity to chaining alone are flagged chain_merged."""
    boxes = [tuple(map(float, w.bbox)) for w in words]
    rows: list[Row] = []
    for group in group_by_y_overlap(boxes, y_overlap_min):
        members = [words[i] for i in group]
        flags = []
        direct = all(
            y_overlap_ratio(boxes[a], boxes[b]) >= y_overlap_min
            for ai, a in enumerate(group) for b in group[ai + 1:]
        )
        if not direct:
            flags.append("chain_merged")
        baseline = float(np.median([w.bbox[3] for w in members]))
        rows.append(Row(
            indices=list(group),
            words=members,
            baseline_y=baseline,
            label_text=" ".join(w.text for w in members),
            flags=flags,
        ))
    rows.sort(key=lambda r: r.baseline_y)
    return rows


def _is_amount_like(token: str) -> bool:
    try:
        parse_amount(token)
        return True
    except AmountParseError:
        return False


def merge_indented_continuations(rows: list[Row], label_left: float, indent_min: float) -> list[Row]:
    """Fold indented, amount-free rows into the previous row's label.

    The folded row stays in the list with continuation_of pointing at its
    parent index; downstream record assembly skips such rows. A first row
    that looks like a continuation is flagged instead of merged.
    """
    out = list(rows)
    last_parent: int | None = None
    for i, row in enumerate(out):
        if not row.words:
            last_parent = i
            continue
        first_x = min(w.bbox[0] for w in row.words)
        indented = first_x >= label_left + indent_min
        has_amount = any(_is_amount_like(w.text) for w in row.words)
        if indented and not has_amount:
            if last_parent is None:
                row.flags.append("continuation_without_prior")
            else:
                out[last_parent].label_text = f"{out[last_parent].label_text} {row.label_text}"
                row.continuation_of = last_parent
                continue
        last_parent = i
    return out


@dataclass
class HeaderResult:
    header_rows: list[int]
    indeterminate: bool = False


def detect_headers(rows: list[Row], page_width: float, center_tol_frac: float = 0.05,
                   height_ratio_min: float = 1.3, gap_ratio_min: float = 2.0) -> HeaderResult:
    """A header row is centered, taller than the page norm, and preceded by
    extra whitespace; all three tests must pass. A single-row page has no
    gap statistics and is reported indeterminate."""
    if not rows:
        return HeaderResult([], indeterminate=True)
    if len(rows) < 2:
        return HeaderResult([], indeterminate=True)

    all_heights = [w.bbox[3] - w.bbox[1] for r in rows for w in r.words]
    if not all_heights:
        return HeaderResult([], indeterminate=True)
    page_h = float(np.median(all_heights))

    tops = [min(w.bbox[1] for w in r.words) if r.words else 0 for r in rows]
    bottoms = [max(w.bbox[3] for w in r.words) if r.words else 0 for r in rows]
    gaps = [max(0.0, tops[i] - bottoms[i - 1]) for i in range(1, len(rows))]
    positive = sorted(g for g in gaps if g > 0)
    median_gap = positive[len(positive) // 2] if positive else 0.0

    headers: list[int] = []
    for i, row in enumerate(rows):
        if not row.words:
            continue
        x0 = min(w.bbox[0] for w in row.words)
        x1 = max(w.bbox[2] for w in row.words)
        centered = abs((x0 + x1) / 2.0 - page_width / 2.0) <= center_tol_frac * page_width
        row_h = float(np.median([w.bbox[3] - w.bbox[1] for w in row.words]))
        tall = row_h >= height_ratio_min * page_h
        gap_above = tops[i] if i == 0 else gaps[i - 1]
        spaced = median_gap > 0 and gap_above >= gap_ratio_min * median_gap
        if centered and tall and spaced:
            headers.append(i)
    return HeaderResult(headers)


# ---------------------------------------------------------------------------
# Page-level model

@dataclass
class LayoutModel:
    h_delims: list[float] = field(default_factory=list)
    v_delims: list[float] = field(default_factory=list)
    table_regions: list[tuple[float, float, float, float]] = field(default_factory=list)
    rows: list[Row] = field(default_factory=list)
    header_rows: list[int] = field(default_factory=list)
    indeterminate_headers: bool = False

    def to_dict(self) -> dict:
        return {
            "h_delims": self.h_delims,
            "v_delims": self.v_delims,
            "table_regions": [list(r) for r in self.table_regions],
            "rows": [
                {"words": r.indices, "label": r.label_text,
                 "continuation_of": r.continuation_of, "baseline_y": r.baseline_y,
                 "flags": r.flags}
                for r in self.rows
            ],
            "headers": self.header_rows,
            "indeterminate_headers": self.indeterminate_headers,
        }

    def to_json_bytes(self) -> bytes:
        return json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")

    @classmethod
    def from_dict(cls, doc: dict, words: list[OcrWord] | None = None) -> "LayoutModel":
        rows = []
        for r in doc.get("rows", []):
            indices = list(r["words"])
            rows.append(Row(
                indices=indices,
                words=[words[i] for i in indices] if words is not None else [],
                baseline_y=r.get("baseline_y", 0.0),
                label_text=r.get("label", ""),
                continuation_of=r.get("continuation_of"),
                flags=list(r.get("flags", [])),
            ))
        return cls(
            h_delims=list(doc.get("h_delims", [])),
            v_delims=list(doc.get("v_delims", [])),
            table_regions=[tuple(t) for t in doc.get("table_regions", [])],
            rows=rows,
            header_rows=list(doc.get("headers", [])),
            indeterminate_headers=bool(doc.get("indeterminate_headers", False)),
        )


@dataclass
class LayoutParams:
    canny_sigma: float = 1.4
    canny_low: float = 50.0
    canny_high: float = 150.0
    vote_threshold: int = 80
    min_len_frac: float = 0.3
    max_gap: float = 5.0
    samples: int = 5000
    seed: int = 0
    angle_tol: float = 2.0
    merge_dist: float = 8.0
    min_span_frac: float = 0.5
    y_overlap_min: float = 0.5
    indent_min_chars: float = 1.5
    center_tol_frac: float = 0.05
    height_ratio_min: float = 1.3
    gap_ratio_min: float = 2.0


def build_layout(img: Raster, words: list[OcrWord], params: LayoutParams | None = None) -> LayoutModel:
    """Full layout pass for one page: delimiters from the raster, rows and
    headers from the word geometry."""
    p = params or LayoutParams()
    h, w = img.data.shape[:2]
    edges = detect_edges(img, p.canny_low, p.canny_high, p.canny_sigma)
    segs = detect_line_segments(edges, p.vote_threshold, p.min_len_frac * min(w, h),
                                p.max_gap, p.samples, p.seed, p.angle_tol)
    h_delims, v_delims = consolidate_delimiters(segs, (w, h), p.angle_tol, p.merge_dist, p.min_span_frac)

    regions = []
    if len(h_delims) >= 2:
        rx0 = min(v_delims) if len(v_delims) >= 2 else 0.0
        rx1 = max(v_delims) if len(v_delims) >= 2 else float(w)
        for top, bottom in zip(h_delims, h_delims[1:]):
            regions.append((rx0, top, rx1, bottom))

    rows = group_words_into_rows(words, p.y_overlap_min)
    widths = [(w2.bbox[2] - w2.bbox[0]) / max(1, len(w2.text)) for w2 in words if w2.text]
    char_w = float(np.median(widths)) if widths else 8.0
    label_left = min((w2.bbox[0] for w2 in words), default=0)
    rows = merge_indented_continuations(rows, label_left, p.indent_min_chars * char_w)
    headers = detect_headers(rows, float(w), p.center_tol_frac, p.height_ratio_min, p.gap_ratio_min)
    return LayoutModel(
        h_delims=h_delims, v_delims=v_delims, table_regions=regions,
        rows=rows, header_rows=headers.header_rows,
        indeterminate_headers=headers.indeterminate,
    )


def render_annotated(img: Raster, layout: LayoutModel) -> Raster:
    """Debug rendering: green horizontal and blue vertical delimiters over
    an RGB copy of the page."""
    if img.channels == 1:
        rgb = np.stack([img.data] * 3, axis=2).copy()
    else:
        rgb = img.data.copy()
    h, w = rgb.shape[:2]
    for y in layout.h_delims:
        yi = int(round(y))
        if 0 <= yi < h:
            rgb[yi, :, :] = (0, 170, 0)
    for x in layout.v_delims:
        xi = int(round(x))
        if 0 <= xi < w:
            rgb[:, xi, :] = (0, 0, 200)
    return Raster(rgb)
