"""Structured balance-sheet records, error flags, and their file formats.

records.csv / truth.csv schema (UTF-8, header row):
    row,label,raw_value,amount,flags
Row 0, when present, is the sheet header line (bank name, city, charter as
scanned); data rows start at 1. flags.json is a list of
{code, severity, detail, row} objects.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

from .amounts import Amount

SIDE_ASSET = "asset"
SIDE_LIABILITY = "liability_equity"
SIDE_HEADER = "header"
SIDE_TOTAL = "total"

RED = "red"
YELLOW = "yellow"

FLAG_SEVERITY = {
    "IDENTITY_MISMATCH": RED,
    "LEADING_ZERO": RED,
    "BAD_NUMERIC": RED,
    "UNKNOWN_LABEL": YELLOW,
    "DUP_CHARTER": RED,
    "MISSING_CHARTER": RED,
    "CAPITAL_CHANGED": YELLOW,
    "LOW_CONFIDENCE": YELLOW,
    "CHAIN_MERGED": YELLOW,
    "INDETERMINATE_HEADER": YELLOW,
    "RULE_VIOLATION": YELLOW,
}


@dataclass(frozen=True)
class Flag:
    code: str
    detail: str
    row: int | None = None

    def __post_init__(self) -> None:
        if self.code not in FLAG_SEVERITY:
            raise ValueError(f"unknown flag code {self.code!r}")
        if not self.detail:
            raise ValueError("flags must carry a human-readable detail")

    @property
    def severity(self) -> str:
        return FLAG_SEVERITY[self.code]

    def to_dict(self) -> dict:
        return {"code": self.code, "severity": self.severity, "detail": self.detail, "row": self.row}

    @classmethod
    def from_dict(cls, doc: dict) -> "Flag":
        return cls(code=doc["code"], detail=doc["detail"], row=doc.get("row"))


def flags_to_json_bytes(flags: list[Flag]) -> bytes:
    return json.dumps([f.to_dict() for f in flags], sort_keys=True).encode("utf-8")


def flags_from_json_bytes(payload: bytes) -> list[Flag]:
    return [Flag.from_dict(d) for d in json.loads(payload.decode("utf-8"))]


@dataclass
class SheetRecord:
    row_id: int
    label_raw: str
    raw_value: str = ""
    label_canonical: str | None = None
    amount: Amount | None = None
    side: str = SIDE_ASSET
    flags: list[Flag] = field(default_factory=list)

    @property
    def label(self) -> str:
        return self.label_canonical if self.label_canonical is not None else self.label_raw


@dataclass
class BalanceSheet:
    bank_name: str = ""
    city: str = ""
    charter: str = ""
    year: int = 0
    records: list[SheetRecord] = field(default_factory=list)
    flags: list[Flag] = field(default_factory=list)
    header_raw: str = ""

    def all_flags(self) -> list[Flag]:
        out = list(self.flags)
        for r in self.records:
            out.extend(r.flags)
        return out

    def to_csv_bytes(self) -> bytes:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["row", "label", "raw_value", "amount", "flags"])
        if self.header_raw:
            writer.writerow([0, self.header_raw, "", "", ""])
        for r in self.records:
            writer.writerow([
                r.row_id,
                r.label,
                r.raw_value,
                r.amount.canonical if r.amount is not None else "",
                ";".join(f.code for f in r.flags),
            ])
        return buf.getvalue().encode("utf-8")

    @classmethod
    def from_csv_bytes(cls, payload: bytes, year: int = 0) -> "BalanceSheet":
        reader = csv.reader(io.StringIO(payload.decode("utf-8")))
        rows = list(reader)
        if not rows or rows[0] != ["row", "label", "raw_value", "amount", "flags"]:
            raise ValueError("records CSV missing canonical header row")
        sheet = cls(year=year)
        for row in rows[1:]:
            if not row:
                continue
            row_id = int(row[0])
            label, raw_value, _amount, flag_codes = row[1], row[2], row[3], row[4]
            if row_id == 0:
                sheet.header_raw = label
                continue
            rec = SheetRecord(row_id=row_id, label_raw=label, raw_value=raw_value)
            if _amount:
                rec.amount = Amount.from_canonical(_amount, raw=raw_value)
            for code in filter(None, flag_codes.split(";")):
                rec.flags.append(Flag(code=code, detail="restored from csv", row=row_id))
            sheet.records.append(rec)
        return sheet
