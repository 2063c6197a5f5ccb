"""Balance-sheet invariant checks.

The accounting identity is compared exactly, in integer cents: the sum of
asset rows must equal the stated asset total, the liability/equity sum its
total, and the two totals each other. Numeric and label anomalies, charter
uniqueness, and capital stability across years round out the flag set.
Validation is a pure function of the sheet and the dataset context: it
never mutates records and repeated calls give identical flags.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .amounts import AmountParseError, parse_amount, repair_token
from .extract import ExtractionConfig
from .labels import normalize_label
from .records import SIDE_ASSET, SIDE_LIABILITY, SIDE_TOTAL, BalanceSheet, Flag


@dataclass(frozen=True)
class Rule:
    """Statutory-style bound on a named field: `<canonical label> <op> <number>`."""

    rule_id: str
    field_label: str
    op: str
    bound_cents: int

    @classmethod
    def parse(cls, rule_id: str, expression: str) -> "Rule":
        for op in (">=", "<=", "==", ">", "<"):
            if op in expression:
                left, right = expression.split(op, 1)
                bound = round(float(right.strip()) * 100)
                return cls(rule_id=rule_id, field_label=left.strip(), op=op, bound_cents=bound)
        raise ValueError(f"rule {rule_id!r} has no comparison operator: {expression!r}")

    def holds(self, value_cents: int) -> bool:
        return {
            ">=": value_cents >= self.bound_cents,
            "<=": value_cents <= self.bound_cents,
            "==": value_cents == self.bound_cents,
            ">": value_cents > self.bound_cents,
            "<": value_cents < self.bound_cents,
        }[self.op]


def load_rules(path: str | Path) -> list[Rule]:
    """One `rule_id<TAB>expression` per line."""
    rules = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.rstrip()
        if not line or line.startswith("#"):
            continue
        rule_id, expression = line.split("\t", 1)
        rules.append(Rule.parse(rule_id, expression))
    return rules


@dataclass
class ValidationContext:
    """Dataset-level index: charter multiplicity per year and certified
    capital by charter and year, built once before per-sheet validation."""

    charter_counts: dict[tuple[int, str], int] = field(default_factory=dict)
    capital_by_charter: dict[str, dict[int, int]] = field(default_factory=dict)

    @classmethod
    def build(cls, sheets: list[BalanceSheet], capital_label: str = "capital stock paid in") -> "ValidationContext":
        ctx = cls()
        norm_capital = normalize_label(capital_label)
        for sheet in sheets:
            if sheet.charter:
                key = (sheet.year, sheet.charter)
                ctx.charter_counts[key] = ctx.charter_counts.get(key, 0) + 1
                for rec in sheet.records:
                    if rec.amount is not None and normalize_label(rec.label) == norm_capital:
                        ctx.capital_by_charter.setdefault(sheet.charter, {})[sheet.year] = rec.amount.value_cents
                        break
        return ctx


def _fmt_cents(cents: int) -> str:
    if cents % 100 == 0:
        return str(cents // 100)
    return f"{cents // 100}.{cents % 100:02d}"


def validate_sheet(sheet: BalanceSheet, context: ValidationContext | None = None,
                   rules: list[Rule] | None = None,
                   capital_label: str = "capital stock paid in") -> list[Flag]:
    """All flags for one sheet; always completes, never raises."""
    flags: list[Flag] = []
    ctx = context or ValidationContext()

    # Numeric and label issues per record.
    for rec in sheet.records:
        if rec.amount is None and rec.raw_value:
            repaired, _ = repair_token(rec.raw_value)
            try:
                parse_amount(repaired)
            except AmountParseError as exc:
                flags.append(Flag(exc.code, str(exc), row=rec.row_id))
        if rec.label_canonical is None and rec.label_raw:
            flags.append(Flag("UNKNOWN_LABEL", f"label {rec.label_raw!r} not canonical", row=rec.row_id))

    # Accounting identity, exact integer cents.
    asset_sum = sum(r.amount.value_cents for r in sheet.records
                    if r.side == SIDE_ASSET and r.amount is not None)
    liab_sum = sum(r.amount.value_cents for r in sheet.records
                   if r.side == SIDE_LIABILITY and r.amount is not None)
    totals = [r for r in sheet.records if r.side == SIDE_TOTAL and r.amount is not None]
    asset_total = totals[0].amount.value_cents if len(totals) >= 1 else None
    liab_total = totals[1].amount.value_cents if len(totals) >= 2 else None

    if asset_total is not None and asset_sum != asset_total:
        flags.append(Flag(
            "IDENTITY_MISMATCH",
            f"asset sum {_fmt_cents(asset_sum)} ≠ total {_fmt_cents(asset_total)}",
            row=totals[0].row_id,
        ))
    if liab_total is not None and liab_sum != liab_total:
        flags.append(Flag(
            "IDENTITY_MISMATCH",
            f"liability sum {_fmt_cents(liab_sum)} ≠ total {_fmt_cents(liab_total)}",
            row=totals[1].row_id,
        ))
    if asset_total is not None and liab_total is not None and asset_total != liab_total:
        flags.append(Flag(
            "IDENTITY_MISMATCH",
            f"asset total {_fmt_cents(asset_total)} ≠ liability total {_fmt_cents(liab_total)}",
            row=None,
        ))

    # Charter identity.
    if not sheet.charter:
        flags.append(Flag("MISSING_CHARTER", "no charter number parsed from the header", row=None))
    elif ctx.charter_counts.get((sheet.year, sheet.charter), 0) > 1:
        flags.append(Flag(
            "DUP_CHARTER",
            f"charter {sheet.charter} appears more than once in {sheet.year}",
            row=None,
        ))

    # Capital stability across years.
    if sheet.charter:
        norm_capital = normalize_label(capital_label)
        current = next((r.amount.value_cents for r in sheet.records
                        if r.amount is not None and normalize_label(r.label) == norm_capital), None)
        prior = ctx.capital_by_charter.get(sheet.charter, {}).get(sheet.year - 1)
        if current is not None and prior is not None and current != prior:
            flags.append(Flag(
                "CAPITAL_CHANGED",
                f"certified capital {_fmt_cents(current)} differs from {_fmt_cents(prior)} in {sheet.year - 1}",
                row=None,
            ))

    # Configured statutory bounds.
    for rule in rules or []:
        norm_field = normalize_label(rule.field_label)
        value = next((r.amount.value_cents for r in sheet.records
                      if r.amount is not None and normalize_label(r.label) == norm_field), None)
        if value is not None and not rule.holds(value):
            flags.append(Flag(
                "RULE_VIOLATION",
                f"rule {rule.rule_id}: {rule.field_label} {rule.op} {_fmt_cents(rule.bound_cents)} "
                f"violated by {_fmt_cents(value)}",
                row=None,
            ))
    return flags


def revalidate(sheet: BalanceSheet, config: ExtractionConfig,
               context: ValidationContext | None = None,
               rules: list[Rule] | None = None) -> list[Flag]:
    """validate_sheet with the capital label taken from the extraction
    config; used wherever a sheet is re-checked after edits."""
    return validate_sheet(sheet, context, rules, capital_label=config.capital_label)


# Flags produced by layout/extraction geometry rather than validation; they
# ride along on records and are never re-derived here.
STRUCTURAL_CODES = frozenset({"LOW_CONFIDENCE", "CHAIN_MERGED", "INDETERMINATE_HEADER"})


def apply_validation_flags(sheet: BalanceSheet, flags: list[Flag]) -> list[Flag]:
    """Replace the validation flags attached to the sheet's records with a
    fresh set, leaving structural flags in place, and return the combined
    page flag list (structural first, then validation)."""
    for rec in sheet.records:
        rec.flags = [f for f in rec.flags if f.code in STRUCTURAL_CODES]
    sheet.flags = [f for f in sheet.flags if f.code in STRUCTURAL_CODES]
    by_row = {rec.row_id: rec for rec in sheet.records}
    for f in flags:
        if f.row is not None and f.row in by_row:
            by_row[f.row].flags.append(f)
        else:
            sheet.flags.append(f)
    combined = [f for f in sheet.flags if f.code in STRUCTURAL_CODES]
    for rec in sheet.records:
        combined.extend(f for f in rec.flags if f.code in STRUCTURAL_CODES)
    combined.extend(flags)
    return combined
