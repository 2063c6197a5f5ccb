"""Command-line surface.

Exit codes: 0 success, 1 per-page failures occurred, 2 invalid
configuration or arguments.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from .config import ConfigError, load_config
from .metrics import field_accuracy
from .pipeline import (extraction_config_from, load_config_rules,
                       process_page_to_sheet, render_flag_report, run_pipeline)
from .records import BalanceSheet
from .tuning import TuningSpec, grid_search, tuning_report_csv
from .workspace import Workspace, WorkspaceError


def _parse_pages(spec: str) -> list[int]:
    """Page selections like "3", "1-50", or "1,4,7-9"."""
    pages: list[int] = []
    for chunk in spec.split(","):
        chunk = chunk.strip()
        if "-" in chunk:
            lo, hi = chunk.split("-", 1)
            pages.extend(range(int(lo), int(hi) + 1))
        elif chunk:
            pages.append(int(chunk))
    return sorted(set(pages))


def _open_workspace(args) -> Workspace:
    if getattr(args, "source", None):
        ws = Workspace.open_document(args.source, args.workspace)
        if ws.source_type == "pdf":
            ws.extract_images()
        return ws
    return Workspace.load(args.workspace)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="pipeline",
                                     description="balance-sheet digitization pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p_process = sub.add_parser("process", help="run the full pipeline")
    p_process.add_argument("--workspace", required=True)
    p_process.add_argument("--config", required=True)
    p_process.add_argument("--pages")
    p_process.add_argument("--source", help="open/extract this PDF or image directory first")

    p_ocr = sub.add_parser("ocr", help="run one OCR engine over pages")
    p_ocr.add_argument("--workspace", required=True)
    p_ocr.add_argument("--engine", required=True)
    p_ocr.add_argument("--pages")

    p_extract = sub.add_parser("extract", help="extract records without re-running OCR")
    p_extract.add_argument("--workspace", required=True)
    p_extract.add_argument("--config", required=True)
    p_extract.add_argument("--pages")

    p_validate = sub.add_parser("validate", help="re-validate stored records")
    p_validate.add_argument("--workspace", required=True)
    p_validate.add_argument("--config", required=True)

    p_tune = sub.add_parser("tune", help="grid-search pipeline parameters against truth pages")
    p_tune.add_argument("--workspace", required=True)
    p_tune.add_argument("--config", required=True)
    p_tune.add_argument("--spec", required=True, help="tuning spec file")

    p_report = sub.add_parser("report", help="summarize validation flags")
    p_report.add_argument("--workspace", required=True)
    p_report.add_argument("--pages")

    p_review = sub.add_parser("review", help="serve the human-review UI")
    p_review.add_argument("--workspace", required=True)
    p_review.add_argument("--config")
    p_review.add_argument("--port", type=int, default=8000)
    p_review.add_argument("--host", default="127.0.0.1")

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except (ConfigError, WorkspaceError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _dispatch(args) -> int:
    if args.command == "process":
        ws = _open_workspace(args)
        config = load_config(args.config)
        pages = _parse_pages(args.pages) if args.pages else None
        report = run_pipeline(ws, config, pages, config_dir=Path(args.config).parent)
        for outcome in report.outcomes:
            if outcome.error:
                print(f"page {outcome.page_id:04d}: FAILED ({outcome.error})")
            else:
                print(f"page {outcome.page_id:04d}: {outcome.red} red, {outcome.yellow} yellow")
        print(f"total: {report.red_total} red, {report.yellow_total} yellow, "
              f"{len(report.failed_pages)} failed")
        return 1 if report.failed_pages else 0

    if args.command == "ocr":
        from .ocr import EngineUnavailableError, run_ocr
        ws = Workspace.load(args.workspace)
        pages = _parse_pages(args.pages) if args.pages else sorted(ws.entries)
        failed = 0
        for pid in pages:
            try:
                page = run_ocr(ws, pid, args.engine)
                print(f"page {pid:04d}: {len(page.words)} words")
            except EngineUnavailableError as exc:
                print(f"page {pid:04d}: {exc}", file=sys.stderr)
                failed += 1
        return 1 if failed else 0

    if args.command == "extract":
        ws = Workspace.load(args.workspace)
        config = load_config(args.config)
        pages = _parse_pages(args.pages) if args.pages else None
        report = run_pipeline(ws, config, pages, config_dir=Path(args.config).parent)
        print(f"extracted {len(report.outcomes) - len(report.failed_pages)} pages")
        return 1 if report.failed_pages else 0

    if args.command == "validate":
        ws = Workspace.load(args.workspace)
        config = load_config(args.config)
        report = run_pipeline(ws, config, None, config_dir=Path(args.config).parent)
        print(render_flag_report(ws))
        return 1 if report.failed_pages else 0

    if args.command == "tune":
        return _tune(args)

    if args.command == "report":
        ws = Workspace.load(args.workspace)
        pages = _parse_pages(args.pages) if args.pages else None
        print(render_flag_report(ws, pages))
        return 0

    if args.command == "review":
        import uvicorn
        from .service.app import create_app
        ws = Workspace.load(args.workspace)
        config_text = None
        if args.config:
            config = load_config(args.config)
            config_dir = Path(args.config).parent
        elif ws.config.get("pipeline_config"):
            from .config import parse_config_text
            config = parse_config_text(ws.config["pipeline_config"])
            config_dir = ws.root
        else:
            config = None
            config_dir = ws.root
        ex_config = extraction_config_from(config, config_dir) if config else None
        rules = load_config_rules(config, config_dir) if config else []
        ui_dir = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        app = create_app(ws, ex_config, rules, ui_dir if ui_dir.is_dir() else None)
        uvicorn.run(app, host=args.host, port=args.port)
        return 0

    raise ValueError(f"unknown command {args.command}")


def _tune(args) -> int:
    ws = Workspace.load(args.workspace)
    base_config = load_config(args.config)
    config_dir = Path(args.config).parent
    spec_doc = _parse_tune_spec(Path(args.spec).read_text(encoding="utf-8"))

    truth_pages = [pid for pid in sorted(ws.entries) if ws.has_artifact(pid, "truth")]
    if not truth_pages:
        print("error: no ground-truth pages; promote some pages first", file=sys.stderr)
        return 2

    ex_config = extraction_config_from(base_config, config_dir)

    def evaluate(params: dict, pages: list[int]) -> float:
        from .config import parse_config_text
        text = base_config.raw_text
        for key, value in params.items():
            line = f"{key} = {value}"
            if f"\n{key} =" in "\n" + text:
                text = "\n".join(line if t.strip().startswith(f"{key} =") else t
                                 for t in text.splitlines())
            else:
                text = text + "\n" + line
        cfg = parse_config_text(text)
        scores = []
        for pid in pages:
            sheet, _ = process_page_to_sheet(ws, pid, cfg, ex_config, store=False)
            truth_bytes, _ = ws.load_artifact(pid, "truth")
            truth = BalanceSheet.from_csv_bytes(truth_bytes, year=ex_config.year)
            scores.append(field_accuracy(sheet, truth).value)
        return sum(scores) / len(scores)

    spec = TuningSpec(
        parameters=spec_doc["parameters"],
        objective=spec_doc.get("objective", "field_accuracy"),
        holdout_fraction=spec_doc.get("holdout_fraction", 0.2),
        seed=spec_doc.get("seed", 0),
    )
    result = grid_search(spec, evaluate, truth_pages)
    out_dir = ws.root / "tuning"
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / f"{time.strftime('%Y%m%dT%H%M%S')}.csv"
    out_path.write_bytes(tuning_report_csv(spec, result))
    print(f"best: {result.best_params} train={result.train_metric} "
          f"holdout={result.holdout_metric}")
    print(f"table: {out_path}")
    return 0


def _parse_tune_spec(text: str) -> dict:
    """Tuning spec: dotted keys; `grid.<config key> = v1, v2, ...` rows
    define the parameter grid."""
    from .config import _parse_scalar
    doc: dict = {"parameters": []}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key.startswith("grid."):
            values = [_parse_scalar(v.strip()) for v in value.split(",") if v.strip()]
            doc["parameters"].append((key[len("grid."):], values))
        elif key in ("objective",):
            doc[key] = value
        elif key in ("holdout_fraction",):
            doc[key] = float(value)
        elif key in ("seed",):
            doc[key] = int(value)
        else:
            raise ValueError(f"unknown tuning spec key {key!r}")
    return doc


if __name__ == "__main__":
    sys.exit(main())
