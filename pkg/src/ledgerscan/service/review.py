"""Review workflow over a workspace: queues, bundles, corrections, truth.

Corrections use optimistic concurrency: the client sends the entry version
its edits are based on, and the apply fails with the current version when
someone else got there first; nothing is partially applied. Every
successful apply re-parses the edited fields, re-runs validation, stores
fresh records and flags, and appends an audit line.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from ..amounts import AmountParseError, parse_amount
from ..extract import ExtractionConfig, canonicalize_sheet
from ..labels import UnknownLabelError, match_label
from ..records import (SIDE_ASSET, SIDE_LIABILITY, SIDE_TOTAL, BalanceSheet,
                       Flag, flags_from_json_bytes, flags_to_json_bytes)
from ..validate import Rule, ValidationContext, apply_validation_flags, revalidate
from ..workspace import ArtifactMissingError, Workspace


class ReviewError(ValueError):
    pass


class VersionConflictError(ReviewError):
    def __init__(self, current_version: int) -> None:
        super().__init__(f"stale base version; current is {current_version}")
        self.current_version = current_version


class PromotionRefusedError(ReviewError):
    def __init__(self, flags: list[Flag]) -> None:
        super().__init__("red flags present; page cannot become ground truth")
        self.flags = flags


class NotExtractedError(ReviewError):
    pass


@dataclass
class Identity:
    status: str
    difference_cents: int
    asset_sum: int
    liability_sum: int
    asset_total: int | None
    liability_total: int | None


@dataclass
class PageSummary:
    page_id: int
    red: int
    yellow: int
    reviewed: bool
    has_records: bool
    version: int


@dataclass
class ReviewBundle:
    page_id: int
    version: int
    sheet: BalanceSheet
    flags: list[Flag]
    identity: Identity
    reviewed: bool


@dataclass
class CorrectionSet:
    base_version: int
    reviewer: str
    edits: list[tuple[int, str, str]]  # (row_id, field, value)


def compute_identity(sheet: BalanceSheet) -> Identity:
    """Balance status recomputed from the current records on every read."""
    asset_sum = sum(r.amount.value_cents for r in sheet.records
                    if r.side == SIDE_ASSET and r.amount is not None)
    liab_sum = sum(r.amount.value_cents for r in sheet.records
                   if r.side == SIDE_LIABILITY and r.amount is not None)
    totals = [r.amount.value_cents for r in sheet.records
              if r.side == SIDE_TOTAL and r.amount is not None]
    asset_total = totals[0] if len(totals) >= 1 else None
    liab_total = totals[1] if len(totals) >= 2 else None
    diffs = []
    if asset_total is not None:
        diffs.append(abs(asset_sum - asset_total))
    if liab_total is not None:
        diffs.append(abs(liab_sum - liab_total))
    if asset_total is not None and liab_total is not None:
        diffs.append(abs(asset_total - liab_total))
    difference = max(diffs) if diffs else 0
    return Identity(
        status="balanced" if difference == 0 else "mismatch",
        difference_cents=difference,
        asset_sum=asset_sum,
        liability_sum=liab_sum,
        asset_total=asset_total,
        liability_total=liab_total,
    )


class ReviewService:
    def __init__(self, ws: Workspace, config: ExtractionConfig | None = None,
                 rules: list[Rule] | None = None) -> None:
        self.ws = ws
        self.config = config or ExtractionConfig()
        self.rules = rules or []

    # -- reads ---------------------------------------------------------------

    def _load_sheet(self, page_id: int) -> BalanceSheet:
        try:
            payload, _ = self.ws.load_artifact(page_id, "records")
        except ArtifactMissingError as exc:
            raise NotExtractedError(f"page {page_id} not yet extracted") from exc
        sheet = BalanceSheet.from_csv_bytes(payload, year=self.config.year)
        canonicalize_sheet(sheet, self.config)
        return sheet

    def _load_flags(self, page_id: int) -> list[Flag]:
        try:
            payload, _ = self.ws.load_artifact(page_id, "flags")
        except ArtifactMissingError:
            return []
        return flags_from_json_bytes(payload)

    def list_pages(self, filter_name: str = "all") -> list[PageSummary]:
        if filter_name not in ("all", "flagged", "red_only", "unreviewed"):
            raise ReviewError(f"unknown filter {filter_name!r}")
        summaries = []
        for pid in sorted(self.ws.entries):
            entry = self.ws.entries[pid]
            flags = self._load_flags(pid)
            red = sum(1 for f in flags if f.severity == "red")
            yellow = sum(1 for f in flags if f.severity == "yellow")
            summaries.append(PageSummary(
                page_id=pid, red=red, yellow=yellow,
                reviewed=entry.reviewed,
                has_records=self.ws.has_artifact(pid, "records"),
                version=entry.version,
            ))
        if filter_name == "flagged":
            summaries = [s for s in summaries if s.red + s.yellow > 0]
        elif filter_name == "red_only":
            summaries = [s for s in summaries if s.red > 0]
        elif filter_name == "unreviewed":
            summaries = [s for s in summaries if not s.reviewed]
        summaries.sort(key=lambda s: (-s.red, s.page_id))
        return summaries

    def get_bundle(self, page_id: int) -> ReviewBundle:
        sheet = self._load_sheet(page_id)
        return ReviewBundle(
            page_id=page_id,
            version=self.ws.entry_version(page_id),
            sheet=sheet,
            flags=self._load_flags(page_id),
            identity=compute_identity(sheet),
            reviewed=self.ws.entries[page_id].reviewed,
        )

    # -- mutations -------------------------------------------------------------

    def _dataset_context(self, replacing: tuple[int, BalanceSheet] | None = None) -> ValidationContext:
        sheets = []
        for pid in sorted(self.ws.entries):
            if replacing is not None and pid == replacing[0]:
                sheets.append(replacing[1])
                continue
            try:
                sheets.append(self._load_sheet(pid))
            except NotExtractedError:
                continue
        return ValidationContext.build(sheets, self.config.capital_label)

    def apply_corrections(self, page_id: int, corrections: CorrectionSet) -> ReviewBundle:
        lock = self.ws._page_lock(page_id)
        with lock:
            current = self.ws.entry_version(page_id)
            if corrections.base_version != current:
                raise VersionConflictError(current)
            sheet = self._load_sheet(page_id)
            by_row = {r.row_id: r for r in sheet.records}
            for row_id, fieldname, value in corrections.edits:
                rec = by_row.get(row_id)
                if rec is None:
                    raise ReviewError(f"no row {row_id} on page {page_id}")
                if fieldname == "label":
                    rec.label_raw = value
                    rec.label_canonical = None
                    if self.config.vocabulary:
                        try:
                            rec.label_canonical, _ = match_label(
                                value, self.config.vocabulary, self.config.max_edit)
                        except UnknownLabelError:
                            rec.label_canonical = None
                    else:
                        rec.label_canonical = value or None
                elif fieldname == "amount":
                    rec.raw_value = value
                    try:
                        rec.amount = parse_amount(value) if value else None
                    except AmountParseError:
                        rec.amount = None
                else:
                    raise ReviewError(f"unknown field {fieldname!r}; expected label or amount")

            canonicalize_sheet(sheet, self.config)
            context = self._dataset_context(replacing=(page_id, sheet))
            flags = revalidate(sheet, self.config, context, self.rules)
            page_flags = apply_validation_flags(sheet, flags)
            self.ws.store_artifact(page_id, "records", sheet.to_csv_bytes())
            new_version = self.ws.store_artifact(page_id, "flags", flags_to_json_bytes(page_flags))
            self.ws.append_audit(page_id, {
                "ts": time.time(),
                "reviewer": corrections.reviewer,
                "base_version": corrections.base_version,
                "new_version": new_version,
                "edits": [list(e) for e in corrections.edits],
            })
            return ReviewBundle(
                page_id=page_id,
                version=new_version,
                sheet=sheet,
                flags=page_flags,
                identity=compute_identity(sheet),
                reviewed=self.ws.entries[page_id].reviewed,
            )

    def promote_to_ground_truth(self, page_id: int, reviewer: str) -> int:
        lock = self.ws._page_lock(page_id)
        with lock:
            flags = self._load_flags(page_id)
            red = [f for f in flags if f.severity == "red"]
            if red:
                raise PromotionRefusedError(red)
            payload, _ = self.ws.load_artifact(page_id, "records")
            version = self.ws.store_artifact(page_id, "truth", payload)
            self.ws.mark_reviewed(page_id)
            self.ws.append_audit(page_id, {
                "ts": time.time(),
                "reviewer": reviewer,
                "promoted_version": version,
            })
            return version
