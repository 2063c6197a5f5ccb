"""Configuration-driven orchestration of the six pipeline steps.

Per page: image ops in configured order, OCR per engine, ensemble,
layout, extraction, validation; artifacts are stored along the way. Pages
run in a bounded worker pool; a failing page is reported and skipped, it
never aborts the run. Dataset-level validation (charter uniqueness,
capital stability) runs after extraction so every sheet sees the full
context.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .binarize import BinarizeParams, binarize, morphology
from .config import ConfigError, PipelineConfig
from .ensemble import EnsembleConfig, ensemble_pages
from .extract import ExtractionConfig, extract_page
from .labels import load_abbrev_map, load_vocabulary
from .layout import LayoutModel, LayoutParams, build_layout
from .ocr import run_ocr
from .pageclean import ForeEdgeParams, deskew, remove_fore_edges
from .raster import Raster, clahe, ensure_gray, equalize, to_grayscale
from .records import BalanceSheet, flags_to_json_bytes
from .validate import Rule, ValidationContext, apply_validation_flags, load_rules, revalidate
from .workspace import Workspace


@dataclass
class PageOutcome:
    page_id: int
    red: int = 0
    yellow: int = 0
    error: str | None = None


@dataclass
class RunReport:
    outcomes: list[PageOutcome] = field(default_factory=list)

    @property
    def failed_pages(self) -> list[int]:
        return [o.page_id for o in self.outcomes if o.error]

    @property
    def red_total(self) -> int:
        return sum(o.red for o in self.outcomes)

    @property
    def yellow_total(self) -> int:
        return sum(o.yellow for o in self.outcomes)


def apply_image_op(img: Raster, name: str, params: dict) -> Raster:
    if name == "grayscale":
        return to_grayscale(img)
    if name == "equalize":
        return equalize(img)
    if name == "clahe":
        grid = (params.get("tile_cols", 8), params.get("tile_rows", 8))
        return clahe(img, grid, params.get("clip_limit", 2.0))
    if name == "binarize":
        p = BinarizeParams(
            method=params.get("method", "fixed"),
            tau=params.get("tau", 160),
            window=params.get("window", 31),
            k=params.get("k", 0.2 if params.get("method") != "wolf" else 0.5),
            R=params.get("R", 128.0),
            offset=params.get("offset", 10.0),
        )
        return binarize(ensure_gray(img), p)
    if name == "morphology":
        kernel = (params.get("kernel_w", 3), params.get("kernel_h", 3))
        return morphology(img, params.get("op", "erode"), kernel, params.get("iterations", 1))
    if name == "remove_fore_edges":
        p = ForeEdgeParams(
            binarize_tau=params.get("binarize_tau", 160),
            denoise_kernel=(params.get("denoise_w", 3), params.get("denoise_h", 3)),
            expand_kernel=(params.get("expand_w", 15), params.get("expand_h", 15)),
            min_rect_area_fraction=params.get("min_rect_area_fraction", 0.05),
            max_aspect_deviation=params.get("max_aspect_deviation", 0.30),
        )
        cropped, _ = remove_fore_edges(img, p)
        return cropped
    if name == "deskew":
        rotated, _ = deskew(ensure_gray(img),
                            params.get("max_angle", 15.0), params.get("step", 0.1))
        return rotated
    raise ConfigError(f"unknown image op {name!r}")


def extraction_config_from(config: PipelineConfig, base_dir: Path | None = None) -> ExtractionConfig:
    def resolve(p: str | None) -> Path | None:
        if p is None:
            return None
        path = Path(p)
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        return path

    ex = ExtractionConfig(year=config.year)
    vocab_path = resolve(config.vocabulary_path)
    if vocab_path is not None:
        ex.vocabulary = load_vocabulary(vocab_path)
    abbrev_path = resolve(config.abbrev_map_path)
    if abbrev_path is not None:
        ex.abbrev_map = load_abbrev_map(abbrev_path)
    if config.header_pattern:
        ex.header_pattern = config.header_pattern
    return ex


def load_config_rules(config: PipelineConfig, base_dir: Path | None = None) -> list[Rule]:
    if config.rules_path is None:
        return []
    path = Path(config.rules_path)
    if not path.is_absolute() and base_dir is not None:
        path = base_dir / path
    return load_rules(path)


def _worker_count(config: PipelineConfig) -> int:
    env = os.environ.get("PIPELINE_WORKERS")
    if env:
        return max(1, int(env))
    if config.workers:
        return config.workers
    return min(8, os.cpu_count() or 1)


def process_page_to_sheet(ws: Workspace, page_id: int, config: PipelineConfig,
                          ex_config: ExtractionConfig, store: bool = True
                          ) -> tuple[BalanceSheet, LayoutModel]:
    """Image ops, OCR, ensemble, layout, and extraction for one page.

    With store=False nothing is persisted, which keeps tuning evaluations
    from clobbering pipeline artifacts.
    """
    entry = ws.entries[page_id]
    if not entry.raw_image:
        raise ValueError(f"page {page_id} has no raw image")
    img = Raster.load(ws.root / entry.raw_image)

    processed = img
    for name, params in config.image_ops:
        processed = apply_image_op(processed, name, params)
    if store and config.image_ops:
        ws.store_artifact(page_id, "processed", processed.png_bytes())

    if store:
        ocr_pages = [run_ocr(ws, page_id, engine) for engine in config.engines]
    else:
        from .ocr import OcrPage
        ocr_pages = []
        for engine in config.engines:
            if ws.has_artifact(page_id, f"ocr:{engine}"):
                payload, _ = ws.load_artifact(page_id, f"ocr:{engine}")
                ocr_pages.append(OcrPage.from_json_bytes(payload))
            else:
                ocr_pages.append(run_ocr(ws, page_id, engine))

    if config.ensemble_enabled and len(ocr_pages) >= 1:
        consensus = ensemble_pages(ocr_pages, EnsembleConfig(
            iou_min=config.ensemble_iou_min, weights=config.ensemble_weights))
        if store:
            ws.store_artifact(page_id, "ocr:ensemble", consensus.to_json_bytes())
    else:
        consensus = ocr_pages[0]

    layout_params = LayoutParams(**config.layout) if config.layout else LayoutParams()
    gray = ensure_gray(processed)
    layout = build_layout(gray, consensus.words, layout_params)
    if store:
        ws.store_artifact(page_id, "layout", layout.to_json_bytes())

    sheet = extract_page(layout, consensus, ex_config)
    return sheet, layout


def run_pipeline(ws: Workspace, config: PipelineConfig, pages: list[int] | None = None,
                 config_dir: Path | None = None) -> RunReport:
    """Run the full pipeline over the selected pages (default: every page
    with a raw image)."""
    config.validate()
    ex_config = extraction_config_from(config, config_dir)
    rules = load_config_rules(config, config_dir)

    if pages is None:
        pages = [pid for pid in sorted(ws.entries) if ws.entries[pid].raw_image]
    else:
        for pid in pages:
            if pid not in ws.entries:
                raise ValueError(f"page {pid} not in manifest")
    if not pages:
        raise ValueError("no pages selected")

    sheets: dict[int, BalanceSheet] = {}
    errors: dict[int, str] = {}

    def extract_one(pid: int) -> None:
        try:
            sheet, _ = process_page_to_sheet(ws, pid, config, ex_config, store=True)
            sheets[pid] = sheet
        except Exception as exc:
            errors[pid] = f"{type(exc).__name__}: {exc}"

    with ThreadPoolExecutor(max_workers=_worker_count(config)) as pool:
        list(pool.map(extract_one, pages))

    context = ValidationContext.build(list(sheets.values()), ex_config.capital_label)

    report = RunReport()
    for pid in sorted(pages):
        if pid in errors:
            report.outcomes.append(PageOutcome(page_id=pid, error=errors[pid]))
            continue
        sheet = sheets[pid]
        flags = revalidate(sheet, ex_config, context, rules)
        page_flags = apply_validation_flags(sheet, flags)
        ws.store_artifact(pid, "records", sheet.to_csv_bytes())
        ws.store_artifact(pid, "flags", flags_to_json_bytes(page_flags))
        report.outcomes.append(PageOutcome(
            page_id=pid,
            red=sum(1 for f in page_flags if f.severity == "red"),
            yellow=sum(1 for f in page_flags if f.severity == "yellow"),
        ))
    ws.config["pipeline_config"] = config.raw_text
    ws.save_manifest()
    return report


def render_flag_report(ws: Workspace, pages: list[int] | None = None) -> str:
    """Human-readable flag summary: per-code counts, red/yellow totals, and
    pages ordered by red flags descending."""
    from .records import flags_from_json_bytes

    if pages is None:
        pages = sorted(ws.entries)
    per_code: dict[str, int] = {}
    page_rows: list[tuple[int, int, int, str]] = []
    red_total = yellow_total = 0
    for pid in pages:
        if not ws.has_artifact(pid, "flags"):
            page_rows.append((-1, 0, pid, f"page {pid:04d}: not validated"))
            continue
        payload, _ = ws.load_artifact(pid, "flags")
        flags = flags_from_json_bytes(payload)
        red = sum(1 for f in flags if f.severity == "red")
        yellow = sum(1 for f in flags if f.severity == "yellow")
        red_total += red
        yellow_total += yellow
        for f in flags:
            per_code[f.code] = per_code.get(f.code, 0) + 1
        page_rows.append((red, yellow, pid, f"page {pid:04d}: {red} red, {yellow} yellow"))

    lines = [f"{red_total} red, {yellow_total} yellow"]
    for code in sorted(per_code):
        lines.append(f"  {code}: {per_code[code]}")
    page_rows.sort(key=lambda r: (-r[0], r[2]))
    lines.extend(row[3] for row in page_rows)
    return "\n".join(lines)
