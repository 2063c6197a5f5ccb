"""Label canonicalization: frequency-ranked fuzzy matching against a
vocabulary, plus ditto-mark and abbreviation resolution."""

from __future__ import annotations

import re
from pathlib import Path

_PUNCT_RE = re.compile(r"[^0-9a-z ]+")
_WS_RE = re.compile(r"\s+")


class UnknownLabelError(LookupError):
    pass


class DittoWithoutPriorError(ValueError):
    pass


def normalize_label(s: str) -> str:
    s = _PUNCT_RE.sub(" ", s.lower())
    return _WS_RE.sub(" ", s).strip()


def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance, unit-cost insert/delete/substitute."""
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


def load_vocabulary(path: str | Path) -> list[tuple[str, int]]:
    """One `label<TAB>frequency` per line; blank lines and # comments skipped."""
    vocab = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.rstrip()
        if not line or line.startswith("#"):
            continue
        if "\t" in line:
            label, freq = line.split("\t", 1)
            vocab.append((label, int(freq)))
        else:
            vocab.append((line, 1))
    return vocab


def load_abbrev_map(path: str | Path) -> dict[str, str]:
    """One `abbrev<TAB>expansion` per line."""
    out = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.rstrip()
        if not line or line.startswith("#"):
            continue
        abbrev, expansion = line.split("\t", 1)
        out[abbrev] = expansion
    return out


def match_label(raw: str, vocabulary: list[tuple[str, int]], max_edit: int = 2) -> tuple[str, int]:
    """Best vocabulary entry for a raw label, comparing case- and
    punctuation-insensitively.

    An exact (normalized) match wins at distance 0. Otherwise the entry
    within max_edit that maximizes frequency wins, ties going to the
    smaller distance and then lexicographic order. Raises UnknownLabelError
    when nothing is in range.
    """
    if not vocabulary:
        raise ValueError("vocabulary must be non-empty")
    norm = normalize_label(raw)

    exact = [(label, freq) for label, freq in vocabulary if normalize_label(label) == norm]
    if exact:
        best = min(exact, key=lambda e: (-e[1], e[0]))
        return best[0], 0

    candidates = []
    for label, freq in vocabulary:
        d = edit_distance(norm, normalize_label(label))
        if d <= max_edit:
            candidates.append((-freq, d, label))
    if not candidates:
        raise UnknownLabelError(f"no vocabulary entry within distance {max_edit} of {raw!r}")
    neg_freq, d, label = min(candidates)
    return label, d


def resolve_ditto_and_abbrev(tokens: list[str], abbrev_map: dict[str, str],
                             prior_label: str | None = None) -> str:
    """Expand abbreviations by exact lookup and replace the ditto token
    "do." with the previous label."""
    out = []
    for tok in tokens:
        if tok == "do.":
            if prior_label is None:
                raise DittoWithoutPriorError("ditto mark with no prior label")
            out.append(prior_label)
        else:
            out.append(abbrev_map.get(tok, tok))
    return " ".join(out)
