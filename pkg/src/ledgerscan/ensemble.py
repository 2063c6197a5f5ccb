"""Combine recognition results from several engines into one consensus page.

Words are matched across engines spatially (greedy IoU clustering seeded by
the most confident unmatched word), then each cluster votes. A strict
token-level plurality wins outright; otherwise the member strings are
right-aligned and voted column by column, blanks included, which recovers
the correct value even when no single engine read it correctly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .geometry import bbox_iou, bbox_union
from .ocr import OcrPage, OcrWord, synthesize_lines, synthesize_paragraphs


@dataclass
class EnsembleConfig:
    iou_min: float = 0.3
    weights: str = "uniform"  # or "confidence"
    length_slack: int = 3


@dataclass
class WordCluster:
    members: list[tuple[str, OcrWord]]
    consensus_bbox: tuple[int, int, int, int]


@dataclass
class VoteResult:
    text: str
    confidence: float
    method: str  # unanimous | token_majority | char_vote
    supporters: dict[str, bool] = field(default_factory=dict)
    low_confidence: bool = False


def cluster_words(pages: list[OcrPage], iou_min: float = 0.3) -> list[WordCluster]:
    """Greedy spatial clustering: the highest-confidence unmatched word
    seeds a cluster and pulls in at most one word per other engine whose
    bbox overlaps the seed's at IoU >= iou_min."""
    if not pages:
        return []
    size = pages[0].page_size
    for p in pages[1:]:
        if p.page_size != size:
            raise ValueError(f"page sizes differ: {size} vs {p.page_size}; resample first")

    entries = []  # (engine_index, engine_name, word_index, word)
    for ei, page in enumerate(pages):
        for wi, word in enumerate(page.words):
            entries.append((ei, page.engine, wi, word))

    # Per-engine index of candidate ids bucketed by y band, so each seed
    # only examines words that can overlap it vertically.
    band = 64
    by_band: dict[tuple[int, int], list[int]] = {}
    for j, (ei, _, _, w) in enumerate(entries):
        for b in range(w.bbox[1] // band, w.bbox[3] // band + 1):
            by_band.setdefault((ei, b), []).append(j)

    unmatched = set(range(len(entries)))
    seed_order = sorted(unmatched, key=lambda i: (-entries[i][3].conf, entries[i][0], entries[i][2]))
    clusters: list[WordCluster] = []
    for si in seed_order:
        if si not in unmatched:
            continue
        unmatched.discard(si)
        seed_engine, seed_word = entries[si][0], entries[si][3]
        seed_box = tuple(map(float, seed_word.bbox))
        members = [(entries[si][1], seed_word)]
        bbox = seed_box
        for ei in range(len(pages)):
            if ei == seed_engine:
                continue
            best = None
            candidates: set[int] = set()
            for b in range(seed_word.bbox[1] // band, seed_word.bbox[3] // band + 1):
                candidates.update(by_band.get((ei, b), ()))
            for j in sorted(candidates):
                if j not in unmatched:
                    continue
                iou = bbox_iou(tuple(map(float, entries[j][3].bbox)), seed_box)
                if iou >= iou_min:
                    key = (iou, entries[j][3].conf, -j)
                    if best is None or key > best[0]:
                        best = (key, j)
            if best is not None:
                j = best[1]
                unmatched.discard(j)
                members.append((entries[j][1], entries[j][3]))
                bbox = bbox_union(bbox, tuple(map(float, entries[j][3].bbox)))
        clusters.append(WordCluster(members=members, consensus_bbox=tuple(int(round(c)) for c in bbox)))
    return clusters


def _weight(word: OcrWord, mode: str) -> float:
    return word.conf if mode == "confidence" else 1.0


def vote_word(cluster: WordCluster, weights: str = "uniform", length_slack: int = 3) -> VoteResult:
    """Vote a cluster down to one string.

    Order of resolution: unanimity; strict token plurality; right-aligned
    per-column character vote. Members whose lengths differ by more than
    length_slack skip character voting (the alignment assumption is broken)
    and fall back to the weighted token vote, marked low confidence.
    Per-column ties break by summed member confidence, then by the engine
    order of the input pages.
    """
    if not cluster.members:
        raise ValueError("cannot vote an empty cluster")
    texts = [w.text for _, w in cluster.members]
    total_weight = sum(_weight(w, weights) for _, w in cluster.members)

    def token_tally() -> list[tuple[str, float, float, int]]:
        tally: dict[str, list[float]] = {}
        for rank, (_, w) in enumerate(cluster.members):
            t = tally.setdefault(w.text, [0.0, 0.0, rank])
            t[0] += _weight(w, weights)
            t[1] += w.conf
            t[2] = min(t[2], rank)
        return [(text, t[0], t[1], int(t[2])) for text, t in tally.items()]

    def result(text: str, share: float, method: str, low: bool = False) -> VoteResult:
        supporters = {eng: w.text == text for eng, w in cluster.members}
        return VoteResult(text=text, confidence=max(0.0, min(1.0, share)), method=method,
                          supporters=supporters, low_confidence=low)

    if all(t == texts[0] for t in texts):
        return result(texts[0], 1.0, "unanimous")

    tally = sorted(token_tally(), key=lambda t: (-t[1], -t[2], t[3]))
    if len(tally) == 1 or tally[0][1] > tally[1][1]:
        return result(tally[0][0], tally[0][1] / total_weight, "token_majority")

    lengths = [len(t) for t in texts]
    if max(lengths) - min(lengths) > length_slack:
        return result(tally[0][0], tally[0][1] / total_weight, "token_majority", low=True)

    # Right-aligned character vote; missing leading positions vote blank.
    width = max(lengths)
    padded = [t.rjust(width, "\0") for t in texts]
    out: list[str] = []
    shares: list[float] = []
    for col in range(width):
        col_tally: dict[str, list[float]] = {}
        for rank, (_, w) in enumerate(cluster.members):
            ch = padded[rank][col]
            t = col_tally.setdefault(ch, [0.0, 0.0, rank])
            t[0] += _weight(w, weights)
            t[1] += w.conf
            t[2] = min(t[2], rank)
        winner = sorted(col_tally.items(), key=lambda kv: (-kv[1][0], -kv[1][1], kv[1][2]))[0]
        shares.append(winner[1][0] / total_weight)
        if winner[0] != "\0":
            out.append(winner[0])
    text = "".join(out)
    share = sum(shares) / len(shares) if shares else 0.0
    return result(text, share, "char_vote")


def ensemble_pages(pages: list[OcrPage], config: EnsembleConfig | None = None) -> OcrPage:
    """Cluster and vote every word; consensus page hierarchy is rebuilt
    geometrically from the winning words."""
    if not pages:
        raise ValueError("ensemble requires at least one page")
    cfg = config or EnsembleConfig()
    clusters = cluster_words(pages, cfg.iou_min)
    words: list[OcrWord] = []
    for cluster in clusters:
        vote = vote_word(cluster, cfg.weights, cfg.length_slack)
        if not vote.text:
            continue
        words.append(OcrWord(text=vote.text, bbox=cluster.consensus_bbox, conf=vote.confidence))
    words.sort(key=lambda w: (w.bbox[1], w.bbox[0], w.bbox[3], w.bbox[2]))
    synthesize_lines(words)
    synthesize_paragraphs(words)
    page = OcrPage("ensemble", pages[0].page_size, words, inferred_levels=["line", "paragraph"])
    page.validate()
    return page
