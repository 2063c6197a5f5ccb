"""Monetary token grammar and digit-context repair.

Accepted amounts are exactly: the single digit "0", or a nonzero-led group
of one to three digits followed by comma groups of exactly three digits,
optionally ending in a dot and two cent digits. "123,456.00" is valid;
"023,456.00" has a leading zero; "123,4.56" breaks the grouping.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

VALUE_RE = re.compile(r"^(0|[1-9][0-9]{0,2}(?:,[0-9]{3})*(?:\.([0-9]{2}))?)$")
_LEADING_ZERO_RE = re.compile(r"^0[0-9,]")

DEFAULT_REPAIR_MAP = {"O": "0", "l": "1", "I": "1", "G": "6", "B": "8", "S": "5"}


class AmountParseError(ValueError):
    def __init__(self, code: str, message: str) -> None:
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class Amount:
    digits: str           # canonical unsigned integer string, commas stripped
    cents: str | None     # two digits, or None when the token had no cents
    raw: str
    repaired: bool = False

    @property
    def value_cents(self) -> int:
        return int(self.digits) * 100 + (int(self.cents) if self.cents else 0)

    @property
    def canonical(self) -> str:
        return f"{self.digits}.{self.cents}" if self.cents else self.digits

    @classmethod
    def from_canonical(cls, canonical: str, raw: str = "", repaired: bool = False) -> "Amount":
        """Rebuild from the comma-free canonical form written to CSV."""
        digits, _, cents = canonical.partition(".")
        if not re.match(r"^(0|[1-9][0-9]*)$", digits) or (cents and not re.match(r"^[0-9]{2}$", cents)):
            raise AmountParseError("BAD_NUMERIC", f"not a canonical amount: {canonical!r}")
        return cls(digits=digits, cents=cents or None, raw=raw or canonical, repaired=repaired)


def parse_amount(token: str, repaired: bool = False) -> Amount:
    """Parse a monetary token or raise AmountParseError with code
    LEADING_ZERO or BAD_NUMERIC."""
    m = VALUE_RE.match(token)
    if m:
        cents = m.group(2)
        integral = m.group(1)
        if cents is not None:
            integral = integral[: -(len(cents) + 1)]
        return Amount(digits=integral.replace(",", ""), cents=cents, raw=token, repaired=repaired)
    if _LEADING_ZERO_RE.match(token):
        raise AmountParseError("LEADING_ZERO", f"leading zero in {token!r}")
    raise AmountParseError("BAD_NUMERIC", f"not a valid amount: {token!r}")


def repair_token(token: str, table: dict[str, str] | None = None) -> tuple[str, list[tuple[int, str, str]]]:
    """Replace confusable letters that sit in digit context.

    A letter with a table entry becomes its digit only when every neighbor
    it has (one at token edges, two inside) is a digit in the repaired
    result; chains like "1GB" resolve together, but only when the chain is
    anchored by at least one real digit, so all-letter tokens never change.
    Returns the repaired token and the applied (index, old, new) list.
    """
    table = DEFAULT_REPAIR_MAP if table is None else table
    n = len(token)
    mappable = [token[i] in table for i in range(n)]
    digit = [token[i].isdigit() for i in range(n)]

    active = set(i for i in range(n) if mappable[i])
    changed = True
    while changed:
        changed = False
        for i in sorted(active):
            for j in (i - 1, i + 1):
                if 0 <= j < n and not digit[j] and j not in active:
                    active.discard(i)
                    changed = True
                    break

    # Keep only runs of digit-or-replaced positions containing a real digit.
    keep: set[int] = set()
    i = 0
    while i < n:
        if digit[i] or i in active:
            j = i
            while j < n and (digit[j] or j in active):
                j += 1
            if any(digit[k] for k in range(i, j)):
                keep.update(k for k in range(i, j) if k in active)
            i = j
        else:
            i += 1

    out = []
    applied: list[tuple[int, str, str]] = []
    for i, ch in enumerate(token):
        if i in keep:
            out.append(table[ch])
            applied.append((i, ch, table[ch]))
        else:
            out.append(ch)
    return "".join(out), applied
