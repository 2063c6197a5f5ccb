"""From consensus words plus layout to structured balance-sheet records.

Cell assignment places each word in the (row, column) bucket its bbox
falls into; record assembly then repairs value tokens, parses amounts,
resolves dittos and abbreviations, canonicalizes labels against the
vocabulary, and classifies rows into assets / liabilities by the position
of the side-total rows.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .amounts import DEFAULT_REPAIR_MAP, AmountParseError, parse_amount, repair_token
from .labels import DittoWithoutPriorError, UnknownLabelError, match_label, normalize_label, resolve_ditto_and_abbrev
from .layout import LayoutModel
from .ocr import OcrPage
from .records import (SIDE_ASSET, SIDE_LIABILITY, SIDE_TOTAL, BalanceSheet,
                      Flag, SheetRecord)

DEFAULT_HEADER_PATTERN = r"^(?P<name>.+?),\s*(?P<city>[^,.]+?)\.?\s+No\.\s*(?P<charter>\d+)\.?$"


@dataclass
class ExtractionConfig:
    vocabulary: list[tuple[str, int]] = field(default_factory=list)
    abbrev_map: dict[str, str] = field(default_factory=dict)
    repair_map: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_REPAIR_MAP))
    header_pattern: str = DEFAULT_HEADER_PATTERN
    total_asset_labels: tuple[str, ...] = ("total assets", "total resources")
    total_liability_labels: tuple[str, ...] = ("total liabilities", "total liabilities and equity")
    capital_label: str = "capital stock paid in"
    max_edit: int = 2
    year: int = 0


@dataclass
class CellGrid:
    cells: list[list[str]]
    row_flags: list[list[Flag]]
    continuation_of: list[int | None]
    n_cols: int


def cells_from_layout(layout: LayoutModel, ocr: OcrPage) -> CellGrid:
    """Assign every word to a (row, column) cell.

    Columns are the gaps between vertical delimiters; a word straddling a
    delimiter goes to the column holding the larger share of its bbox.
    Words the layout left unassigned are attached to the nearest row by
    center distance and the cell is flagged LOW_CONFIDENCE.
    """
    v = sorted(layout.v_delims)
    n_cols = len(v) + 1

    def column_of(bbox: tuple[int, int, int, int]) -> int:
        x0, x1 = float(bbox[0]), float(bbox[2])
        edges = [float("-inf")] + v + [float("inf")]
        best_col, best_share = 0, -1.0
        for c in range(n_cols):
            lo, hi = edges[c], edges[c + 1]
            share = max(0.0, min(x1, hi) - max(x0, lo))
            if share > best_share:
                best_col, best_share = c, share
        return best_col

    assigned = set()
    for row in layout.rows:
        assigned.update(row.indices)

    # (row_index, column, x0, word_index) for deterministic in-cell ordering
    placements: list[tuple[int, int, float, int]] = []
    flags: list[list[Flag]] = [[] for _ in layout.rows]
    for ri, row in enumerate(layout.rows):
        for wi in row.indices:
            word = ocr.words[wi]
            placements.append((ri, column_of(word.bbox), float(word.bbox[0]), wi))

    for wi, word in enumerate(ocr.words):
        if wi in assigned or not layout.rows:
            continue
        cy = (word.bbox[1] + word.bbox[3]) / 2.0
        nearest = min(range(len(layout.rows)), key=lambda ri: (abs(layout.rows[ri].baseline_y - cy), ri))
        placements.append((nearest, column_of(word.bbox), float(word.bbox[0]), wi))
        flags[nearest].append(Flag("LOW_CONFIDENCE", f"word {word.text!r} outside all rows", row=nearest))

    cells = [["" for _ in range(n_cols)] for _ in layout.rows]
    placements.sort(key=lambda p: (p[0], p[1], p[2], p[3]))
    for ri, col, _, wi in placements:
        text = ocr.words[wi].text
        if not text:
            continue
        cells[ri][col] = f"{cells[ri][col]} {text}".strip() if cells[ri][col] else text
    return CellGrid(
        cells=cells,
        row_flags=flags,
        continuation_of=[r.continuation_of for r in layout.rows],
        n_cols=n_cols,
    )


def _parse_header(text: str, pattern: str) -> tuple[str, str, str] | None:
    m = re.match(pattern, text.strip())
    if not m:
        return None
    groups = m.groupdict()
    return (groups.get("name", "").strip(), groups.get("city", "").strip(), groups.get("charter", "").strip())


def assemble_balance_sheet(grid: CellGrid, headers: list[int], config: ExtractionConfig) -> BalanceSheet:
    """Build a BalanceSheet from grid cells and detected header rows.

    The last non-empty cell of a row is its value candidate; everything
    before it is the label. Rows after the asset-total row fall on the
    liability side. A sheet without a parseable header is still produced,
    flagged MISSING_CHARTER by validation downstream (charter left empty).
    """
    sheet = BalanceSheet(year=config.year)
    header_set = set(headers)

    for ri in header_set:
        if 0 <= ri < len(grid.cells):
            text = " ".join(c for c in grid.cells[ri] if c).strip()
            if not sheet.header_raw and text:
                sheet.header_raw = text
                parsed = _parse_header(text, config.header_pattern)
                if parsed:
                    sheet.bank_name, sheet.city, sheet.charter = parsed

    total_asset_norms = {normalize_label(t) for t in config.total_asset_labels}
    total_liab_norms = {normalize_label(t) for t in config.total_liability_labels}

    prior_label: str | None = None
    seen_asset_total = False
    row_id = 0
    for ri, row_cells in enumerate(grid.cells):
        if ri in header_set or grid.continuation_of[ri] is not None:
            continue
        non_empty = [c for c in row_cells if c]
        if not non_empty:
            continue
        row_id += 1

        value_raw = ""
        label_cells = list(non_empty)
        candidate = non_empty[-1]
        repaired_candidate, subs = repair_token(candidate, config.repair_map)
        if _parses(repaired_candidate):
            value_raw = candidate
            label_cells = non_empty[:-1]

        rec = SheetRecord(row_id=row_id, label_raw=" ".join(label_cells).strip(), raw_value=value_raw)
        rec.flags.extend(Flag(f.code, f.detail, row=row_id) for f in grid.row_flags[ri])

        if value_raw:
            repaired, subs = repair_token(value_raw, config.repair_map)
            try:
                rec.amount = parse_amount(repaired, repaired=bool(subs))
            except AmountParseError:
                rec.amount = None  # validation reports the parse failure

        if rec.label_raw:
            tokens = rec.label_raw.split()
            try:
                expanded = resolve_ditto_and_abbrev(tokens, config.abbrev_map, prior_label)
            except DittoWithoutPriorError:
                expanded = rec.label_raw
            if config.vocabulary:
                try:
                    rec.label_canonical, _dist = match_label(expanded, config.vocabulary, config.max_edit)
                except UnknownLabelError:
                    rec.label_canonical = None  # validation reports the unknown label
            else:
                rec.label_canonical = expanded
            prior_label = expanded

        norm = normalize_label(rec.label)
        if norm in total_asset_norms or norm in total_liab_norms:
            rec.side = SIDE_TOTAL
            if norm in total_asset_norms:
                seen_asset_total = True
        else:
            rec.side = SIDE_LIABILITY if seen_asset_total else SIDE_ASSET
        sheet.records.append(rec)
    return sheet


def _parses(token: str) -> bool:
    try:
        parse_amount(token)
        return True
    except AmountParseError as exc:
        # Leading-zero tokens are still value candidates; they parse into a
        # flag rather than vanishing into the label.
        return exc.code == "LEADING_ZERO"


def extract_page(layout: LayoutModel, ocr: OcrPage, config: ExtractionConfig) -> BalanceSheet:
    grid = cells_from_layout(layout, ocr)
    sheet = assemble_balance_sheet(grid, layout.header_rows, config)
    if layout.indeterminate_headers:
        sheet.flags.append(Flag("INDETERMINATE_HEADER", "too few rows to score header candidates", row=None))
    chain_rows = {i for i, r in enumerate(layout.rows) if "chain_merged" in r.flags}
    if chain_rows:
        # Grid row index does not survive into record row ids directly, so
        # flag at sheet level with the affected layout rows named.
        sheet.flags.append(Flag(
            "CHAIN_MERGED",
            f"rows merged only through overlap chains: {sorted(chain_rows)}",
            row=None,
        ))
    return sheet


def canonicalize_sheet(sheet: BalanceSheet, config: ExtractionConfig) -> None:
    """Re-establish header identity, canonical labels, and side
    classification on a sheet reloaded from CSV (where only the display
    strings survive)."""
    if sheet.header_raw and not sheet.charter:
        parsed = _parse_header(sheet.header_raw, config.header_pattern)
        if parsed:
            sheet.bank_name, sheet.city, sheet.charter = parsed
    total_asset_norms = {normalize_label(t) for t in config.total_asset_labels}
    total_liab_norms = {normalize_label(t) for t in config.total_liability_labels}
    seen_asset_total = False
    for rec in sheet.records:
        if rec.label_canonical is None and rec.label_raw and config.vocabulary:
            try:
                rec.label_canonical, _ = match_label(rec.label_raw, config.vocabulary, config.max_edit)
            except UnknownLabelError:
                rec.label_canonical = None
        elif rec.label_canonical is None and not config.vocabulary:
            rec.label_canonical = rec.label_raw or None
        norm = normalize_label(rec.label)
        if norm in total_asset_norms or norm in total_liab_norms:
            rec.side = SIDE_TOTAL
            if norm in total_asset_norms:
                seen_asset_total = True
        else:
            rec.side = SIDE_LIABILITY if seen_asset_total else SIDE_ASSET


# ---------------------------------------------------------------------------
# Paragraph-style sources (free-form label/value runs)

_NUMBERISH_RE = re.compile(r"^[0-9][0-9.,]*$")


def tokenize_paragraph(tokens: list[str]) -> list[tuple[list[str], str]]:
    """Split a token stream into (label tokens, value) runs: label tokens
    accumulate until a number-like token starts a value; consecutive
    number-like tokens extend the value (space-grouped thousands)."""
    runs: list[tuple[list[str], str]] = []
    label: list[str] = []
    value: list[str] = []
    for tok in tokens:
        if _NUMBERISH_RE.match(tok):
            value.append(tok)
        else:
            if value:
                runs.append((label, "".join(value)))
                label, value = [], []
            label.append(tok)
    if value or label:
        runs.append((label, "".join(value)))
    return runs
