"""Accuracy measures against ground truth."""

from __future__ import annotations

from dataclasses import dataclass

from .records import BalanceSheet


@dataclass(frozen=True)
class Metric:
    name: str
    value: float
    n: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"metric value {self.value} outside [0, 1]")


def levenshtein(a: str, b: str) -> int:
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def cer(hypothesis: str, reference: str) -> float:
    """Character error rate: edit distance over reference length, reported
    clamped to [0, 1]."""
    if not reference:
        raise ValueError("reference must be non-empty")
    return min(1.0, levenshtein(hypothesis, reference) / len(reference))


def field_accuracy(records: BalanceSheet, truth: BalanceSheet) -> Metric:
    """Fraction of truth rows whose (canonical-or-raw label, amount) both
    match the extracted record with the same row id. Missing rows count as
    misses."""
    if not truth.records:
        raise ValueError("truth has no records")
    by_row = {r.row_id: r for r in records.records}
    hits = 0
    for t in truth.records:
        r = by_row.get(t.row_id)
        if r is None:
            continue
        labels_match = r.label == t.label
        t_amount = t.amount.canonical if t.amount is not None else ""
        r_amount = r.amount.canonical if r.amount is not None else ""
        if labels_match and t_amount == r_amount:
            hits += 1
    return Metric("field_accuracy", hits / len(truth.records), len(truth.records))


def flag_recall(got: list, expected: list) -> Metric:
    """Fraction of expected flags (matched on code and row) that the
    validator actually raised."""
    if not expected:
        raise ValueError("no expected flags to score against")
    got_keys = {(f.code, f.row) for f in got}
    hits = sum(1 for f in expected if (f.code, f.row) in got_keys)
    return Metric("flag_recall", hits / len(expected), len(expected))


def page_error_probability(char_accuracy: float, n_chars: int) -> float:
    """Probability that a page with n_chars independently recognized
    characters contains at least one error."""
    if not 0.0 <= char_accuracy <= 1.0:
        raise ValueError("char_accuracy must be in [0, 1]")
    if n_chars < 0:
        raise ValueError("n_chars must be non-negative")
    return 1.0 - char_accuracy ** n_chars
