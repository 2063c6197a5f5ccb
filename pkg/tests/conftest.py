"""Shared synthetic fixtures: pages, scans, and a full mock workspace."""

from __future__ import annotations

import json

import numpy as np
import pytest

from ledgerscan.raster import Raster
from ledgerscan.records import BalanceSheet, SheetRecord
from ledgerscan.amounts import Amount
from ledgerscan.workspace import Workspace


def text_stroke_page(width=600, height=800, rows=None, seed=0):
    """White page with text-like stroke words (thin vertical bars), so edge
    detection sees no long horizontal runs inside words."""
    canvas = np.full((height, width), 255, dtype=np.uint8)
    for (x, y, w, h) in rows or []:
        for sx in range(x, x + w, 6):
            canvas[y:y + h, sx:sx + 2] = 0
    return Raster(canvas)


def draw_words(canvas: np.ndarray, boxes: list[tuple[int, int, int, int]]) -> None:
    for (x0, y0, x1, y1) in boxes:
        for sx in range(x0, x1, 6):
            canvas[y0:y1, sx:min(sx + 2, x1)] = 0


def grid_edge_map(width=500, height=400, h_lines=(100, 200, 300), v_lines=(50, 170, 290, 410),
                  noise_frac=0.0, seed=0):
    """Binary edge map with 1-px grid lines plus optional salt noise."""
    edges = np.zeros((height, width), dtype=np.uint8)
    for y in h_lines:
        edges[y, 20:width - 20] = 255
    for x in v_lines:
        edges[30:height - 30, x] = 255
    if noise_frac > 0:
        rng = np.random.default_rng(seed)
        mask = rng.random((height, width)) < noise_frac
        edges[mask] = 255
    return Raster(edges)


def fore_edge_composite(width=1000, height=800, page_box=(100, 50, 900, 750),
                        strip=(40, 70), seed=0, noisy=False):
    """Black scanner bed (mode 20), gray fore-edge strip (mode 90), white
    page (mode 180) with text-like speckle."""
    rng = np.random.default_rng(seed)
    if noisy:
        img = np.clip(rng.normal(20, 5, (height, width)), 0, 255)
    else:
        img = np.full((height, width), 20.0)
    x0, y0, x1, y1 = page_box
    sx0, sx1 = strip
    if noisy:
        img[y0:y1, sx0:sx1] = np.clip(rng.normal(90, 6, (y1 - y0, sx1 - sx0)), 0, 255)
        img[y0:y1, x0:x1] = np.clip(rng.normal(180, 8, (y1 - y0, x1 - x0)), 0, 255)
    else:
        img[y0:y1, sx0:sx1] = 90
        img[y0:y1, x0:x1] = 180
    # text-like dark speckle on the page
    n = (x1 - x0) * (y1 - y0) // 2000
    xs = rng.integers(x0 + 10, x1 - 10, n)
    ys = rng.integers(y0 + 10, y1 - 10, n)
    img[ys, xs] = 30
    return Raster(img.astype(np.uint8))


BANK_LABELS = [
    ("Loans and discounts", 120),
    ("Specie", 80),
    ("Due from banks", 60),
    ("Total assets", 100),
    ("Capital stock paid in", 110),
    ("Deposits", 90),
    ("Surplus fund", 70),
    ("Total liabilities", 100),
]


def fmt_amount(value: int) -> str:
    return f"{value:,}"


def sheet_rows(page_id: int, perturb_total_by: int = 0):
    """(label, amount) rows for one balanced synthetic sheet."""
    a = [1200 + 7 * page_id, 340 + 3 * page_id, 460 + 11 * page_id]
    total = sum(a)
    liab = [500 + 5 * page_id, total - (500 + 5 * page_id) - 200, 200]
    return [
        ("Loans and discounts", a[0]),
        ("Specie", a[1]),
        ("Due from banks", a[2]),
        ("Total assets", total + perturb_total_by),
        ("Capital stock paid in", liab[0]),
        ("Deposits", liab[1]),
        ("Surplus fund", liab[2]),
        ("Total liabilities", total),
    ]


def page_truth_words(page_id: int, perturb_total_by: int = 0):
    """Truth word layout for the synthetic sheet page: header at top,
    label column at x=60, amount column right of the rule at x=440."""
    words = []
    header = f"FIRST NATIONAL BANK, TOWN{page_id}. No. {page_id}"
    tokens = header.split()
    x = 150
    for tok in tokens:
        w = 10 * len(tok)
        words.append((tok, (x, 50, x + w, 80)))
        x += w + 10
    rows = sheet_rows(page_id, perturb_total_by)
    y = 150
    for label, amount in rows:
        x = 60
        for tok in label.split():
            w = 9 * len(tok)
            words.append((tok, (x, y, x + w, y + 20)))
            x += w + 8
        amt = fmt_amount(amount)
        words.append((amt, (440, y, 440 + 9 * len(amt), y + 20)))
        y += 40
    return words, header


def render_sheet_page(page_id: int, width=600, height=800, perturb_total_by: int = 0) -> Raster:
    words, _ = page_truth_words(page_id, perturb_total_by)
    canvas = np.full((height, width, 3), 255, dtype=np.uint8)
    gray = np.full((height, width), 255, dtype=np.uint8)
    draw_words(gray, [w[1] for w in words])
    # table frame: two horizontal rules plus the label/amount column rule,
    # all spanning well past half the page dimension
    gray[110, 30:570] = 0
    gray[700, 30:570] = 0
    gray[100:710, 430] = 0
    canvas[:, :, 0] = gray
    canvas[:, :, 1] = gray
    canvas[:, :, 2] = gray
    return Raster(canvas)


def truth_sheet(page_id: int) -> BalanceSheet:
    sheet = BalanceSheet(year=1882, charter=str(page_id),
                         header_raw=f"FIRST NATIONAL BANK, TOWN{page_id}. No. {page_id}")
    for i, (label, amount) in enumerate(sheet_rows(page_id), start=1):
        sheet.records.append(SheetRecord(
            row_id=i, label_raw=label, label_canonical=label,
            raw_value=fmt_amount(amount),
            amount=Amount(digits=str(amount), cents=None, raw=fmt_amount(amount)),
        ))
    return sheet


VOCAB_TSV = "\n".join(f"{label}\t{freq}" for label, freq in BANK_LABELS) + "\n"

PIPELINE_CONF = """\
image_ops = grayscale, binarize
image_ops.binarize.method = fixed
image_ops.binarize.tau = 128
engines = mock-a, mock-b, mock-c
ensemble.enabled = true
ensemble.weights = uniform
extraction.vocabulary = vocab.tsv
extraction.year = 1882
workers = 2
"""


def mock_native_payload(words, noise_seed: int, substitution_prob: float = 0.03,
                        page_size=(600, 800)) -> bytes:
    return json.dumps({
        "page_size": list(page_size),
        "words": [[t, list(b)] for t, b in words],
        "noise": {"substitution_prob": substitution_prob, "seed": noise_seed},
    }).encode("utf-8")


def build_sheet_workspace(tmp_path, n_pages: int = 10, engines=("mock-a", "mock-b", "mock-c"),
                          substitution_prob: float = 0.03, with_truth: bool = True,
                          perturb_pages: dict[int, int] | None = None):
    """Full synthetic workspace: rendered pages, recorded mock natives per
    engine, vocabulary, pipeline config, and (optionally) stored truth."""
    perturb_pages = perturb_pages or {}
    src = tmp_path / "scans"
    src.mkdir(parents=True, exist_ok=True)
    for pid in range(1, n_pages + 1):
        render_sheet_page(pid, perturb_total_by=perturb_pages.get(pid, 0)).save(src / f"{pid:04d}.png")

    ws = Workspace.open_document(src, tmp_path / "cache")
    for pid in range(1, n_pages + 1):
        words, _ = page_truth_words(pid, perturb_pages.get(pid, 0))
        for ei, engine in enumerate(engines):
            payload = mock_native_payload(words, noise_seed=1000 * pid + ei,
                                          substitution_prob=substitution_prob)
            ws.store_artifact(pid, f"native:{engine}", payload)
        if with_truth and pid not in perturb_pages:
            ws.store_artifact(pid, "truth", truth_sheet(pid).to_csv_bytes())

    (tmp_path / "vocab.tsv").write_text(VOCAB_TSV, encoding="utf-8")
    conf_path = tmp_path / "pipeline.conf"
    conf_path.write_text(PIPELINE_CONF, encoding="utf-8")
    return ws, conf_path


@pytest.fixture
def sheet_workspace(tmp_path):
    return build_sheet_workspace(tmp_path, n_pages=3)
