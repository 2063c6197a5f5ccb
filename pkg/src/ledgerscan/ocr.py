"""Engine-agnostic recognition results and adapters for native payloads.

Every engine output is normalized to the same page/word schema so the rest
of the pipeline never branches on the engine. Hierarchy levels an engine
does not emit (lines, paragraphs) are synthesized geometrically and listed
in `inferred_levels`. A deterministic mock engine generates noisy results
from a truth layout for desk-scale testing; cloud engines are file-backed:
their pre-recorded native payload sits next to the page and is normalized
on demand.
"""

from __future__ import annotations

import json
import random
import string
from dataclasses import dataclass, field

from .geometry import group_by_y_overlap

KNOWN_ENGINES = ("google", "amazon", "microsoft", "tesseract")

DEFAULT_CONFUSIONS = {
    "0": "O", "O": "0",
    "1": "l", "l": "1",
    "6": "G", "G": "6",
    "8": "B", "B": "8",
    "5": "S", "S": "5",
}


class OcrParseError(ValueError):
    pass


class EngineUnavailableError(RuntimeError):
    pass


@dataclass
class OcrWord:
    text: str
    bbox: tuple[int, int, int, int]
    conf: float
    line: str | None = None
    par: str | None = None
    block: str | None = None

    def validate(self, page_size: tuple[int, int]) -> None:
        x0, y0, x1, y1 = self.bbox
        if not (x0 < x1 and y0 < y1):
            raise ValueError(f"degenerate bbox {self.bbox} for {self.text!r}")
        w, h = page_size
        if x0 < 0 or y0 < 0 or x1 > w or y1 > h:
            raise ValueError(f"bbox {self.bbox} outside page {page_size}")
        if not 0.0 <= self.conf <= 1.0:
            raise ValueError(f"confidence {self.conf} outside [0, 1]")


@dataclass
class OcrPage:
    engine: str
    page_size: tuple[int, int]
    words: list[OcrWord] = field(default_factory=list)
    tables: list[list[list[str]]] | None = None
    inferred_levels: list[str] = field(default_factory=list)

    def validate(self) -> None:
        line_par: dict[str, str | None] = {}
        par_block: dict[str, str | None] = {}
        for word in self.words:
            word.validate(self.page_size)
            if word.line is not None:
                if line_par.setdefault(word.line, word.par) != word.par:
                    raise ValueError(f"line {word.line} spans multiple paragraphs")
            if word.par is not None:
                if par_block.setdefault(word.par, word.block) != word.block:
                    raise ValueError(f"paragraph {word.par} spans multiple blocks")

    def to_dict(self) -> dict:
        doc = {
            "engine": self.engine,
            "page_size": {"w": self.page_size[0], "h": self.page_size[1]},
            "words": [
                {"text": w.text, "bbox": list(w.bbox), "conf": w.conf,
                 "line": w.line, "par": w.par, "block": w.block}
                for w in self.words
            ],
            "inferred_levels": list(self.inferred_levels),
        }
        if self.tables is not None:
            doc["tables"] = self.tables
        return doc

    def to_json_bytes(self) -> bytes:
        return json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")

    @classmethod
    def from_dict(cls, doc: dict) -> "OcrPage":
        words = [
            OcrWord(text=w["text"], bbox=tuple(w["bbox"]), conf=w["conf"],
                    line=w.get("line"), par=w.get("par"), block=w.get("block"))
            for w in doc["words"]
        ]
        return cls(
            engine=doc["engine"],
            page_size=(doc["page_size"]["w"], doc["page_size"]["h"]),
            words=words,
            tables=doc.get("tables"),
            inferred_levels=list(doc.get("inferred_levels", [])),
        )

    @classmethod
    def from_json_bytes(cls, payload: bytes) -> "OcrPage":
        return cls.from_dict(_load_json(payload))


def _load_json(payload: bytes) -> dict:
    try:
        return json.loads(payload.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise OcrParseError(f"payload is not UTF-8 at byte offset {exc.start}") from exc
    except json.JSONDecodeError as exc:
        raise OcrParseError(f"malformed JSON at byte offset {exc.pos}") from exc


# ---------------------------------------------------------------------------
# Hierarchy synthesis

def synthesize_lines(words: list[OcrWord], y_overlap_min: float = 0.5) -> None:
    """Assign line ids by grouping words that overlap vertically. Words that
    already carry a paragraph are only grouped within that paragraph, so the
    containment forest stays intact."""
    by_par: dict[str | None, list[int]] = {}
    for i, w in enumerate(words):
        by_par.setdefault(w.par, []).append(i)
    counter = 0
    for par in sorted(by_par, key=lambda p: (p is None, p)):
        idxs = by_par[par]
        boxes = [tuple(map(float, words[i].bbox)) for i in idxs]
        for group in group_by_y_overlap(boxes, y_overlap_min):
            line_id = f"L{counter}"
            counter += 1
            for g in group:
                words[idxs[g]].line = line_id


def synthesize_paragraphs(words: list[OcrWord], gap_factor: float = 1.5) -> None:
    """Cluster lines into paragraphs by splitting at vertical gaps larger
    than gap_factor times the median inter-line gap."""
    lines: dict[str | None, list[OcrWord]] = {}
    for w in words:
        lines.setdefault(w.line, []).append(w)
    entries = []
    for lid, members in lines.items():
        top = min(w.bbox[1] for w in members)
        bottom = max(w.bbox[3] for w in members)
        entries.append((top, bottom, members))
    entries.sort(key=lambda e: (e[0], e[1]))

    gaps = [max(0.0, entries[i + 1][0] - entries[i][1]) for i in range(len(entries) - 1)]
    positive = sorted(g for g in gaps if g > 0)
    median_gap = positive[len(positive) // 2] if positive else 0.0

    par_index = 0
    for i, (_, _, members) in enumerate(entries):
        if i > 0 and median_gap > 0 and gaps[i - 1] > gap_factor * median_gap:
            par_index += 1
        for w in members:
            w.par = f"P{par_index}"


# ---------------------------------------------------------------------------
# Native-format adapters

def normalize(engine: str, native_payload: bytes, page_size: tuple[int, int] | None = None,
              language_hints: list[str] | None = None) -> OcrPage:
    """Parse an engine's documented native output into the unified schema.

    `page_size` is required for engines that report normalized [0, 1]
    coordinates (amazon) and ignored when the payload carries pixel sizes.
    `language_hints` is an opaque pass-through that only live adapters act
    on; file-backed payloads were produced with whatever hints applied at
    recording time.
    """
    del language_hints
    if engine == "google":
        page = _normalize_google(native_payload)
    elif engine == "amazon":
        page = _normalize_amazon(native_payload, page_size)
    elif engine == "microsoft":
        page = _normalize_microsoft(native_payload)
    elif engine == "tesseract":
        page = _normalize_tesseract(native_payload)
    else:
        raise OcrParseError(f"unknown engine {engine!r}")
    page.validate()
    return page


def _vertices_bbox(vertices: list[dict]) -> tuple[int, int, int, int]:
    xs = [v.get("x", 0) for v in vertices]
    ys = [v.get("y", 0) for v in vertices]
    return (int(min(xs)), int(min(ys)), int(max(xs)), int(max(ys)))


def _normalize_google(payload: bytes) -> OcrPage:
    doc = _load_json(payload)
    try:
        pages = doc["fullTextAnnotation"]["pages"]
        pg = pages[0]
        size = (int(pg["width"]), int(pg["height"]))
        words: list[OcrWord] = []
        for bi, block in enumerate(pg.get("blocks", [])):
            for pi, par in enumerate(block.get("paragraphs", [])):
                for w in par.get("words", []):
                    text = "".join(s["text"] for s in w.get("symbols", []))
                    words.append(OcrWord(
                        text=text,
                        bbox=_vertices_bbox(w["boundingBox"]["vertices"]),
                        conf=float(w.get("confidence", 1.0)),
                        par=f"B{bi}.P{pi}",
                        block=f"B{bi}",
                    ))
    except (KeyError, IndexError, TypeError) as exc:
        raise OcrParseError(f"google payload missing field: {exc}") from exc
    synthesize_lines(words)
    return OcrPage("google", size, words, inferred_levels=["line"])


def _normalize_amazon(payload: bytes, page_size: tuple[int, int] | None) -> OcrPage:
    if page_size is None:
        raise OcrParseError("amazon payloads use normalized coordinates; page_size is required")
    doc = _load_json(payload)
    w_px, h_px = page_size

    def to_pixels(geom: dict) -> tuple[int, int, int, int]:
        bb = geom["BoundingBox"]
        x0 = round(bb["Left"] * w_px)
        y0 = round(bb["Top"] * h_px)
        x1 = round((bb["Left"] + bb["Width"]) * w_px)
        y1 = round((bb["Top"] + bb["Height"]) * h_px)
        return (x0, y0, x1, y1)

    try:
        blocks = doc["Blocks"]
        words_by_id: dict[str, OcrWord] = {}
        for b in blocks:
            if b["BlockType"] == "WORD":
                words_by_id[b["Id"]] = OcrWord(
                    text=b["Text"],
                    bbox=to_pixels(b["Geometry"]),
                    conf=float(b["Confidence"]) / 100.0,
                )
        line_count = 0
        for b in blocks:
            if b["BlockType"] != "LINE":
                continue
            line_id = f"L{line_count}"
            line_count += 1
            for rel in b.get("Relationships", []):
                if rel["Type"] != "CHILD":
                    continue
                for cid in rel["Ids"]:
                    if cid in words_by_id:
                        words_by_id[cid].line = line_id
        tables = _amazon_tables(blocks)
    except (KeyError, TypeError) as exc:
        raise OcrParseError(f"amazon payload missing field: {exc}") from exc

    words = list(words_by_id.values())
    synthesize_paragraphs(words)
    return OcrPage("amazon", page_size, words, tables=tables, inferred_levels=["paragraph"])


def _amazon_tables(blocks: list[dict]) -> list[list[list[str]]] | None:
    cells_by_id = {b["Id"]: b for b in blocks if b["BlockType"] == "CELL"}
    words_text = {b["Id"]: b["Text"] for b in blocks if b["BlockType"] == "WORD"}
    tables = []
    for b in blocks:
        if b["BlockType"] != "TABLE":
            continue
        grid: dict[tuple[int, int], str] = {}
        max_r = max_c = 0
        for rel in b.get("Relationships", []):
            if rel["Type"] != "CHILD":
                continue
            for cid in rel["Ids"]:
                cell = cells_by_id.get(cid)
                if cell is None:
                    continue
                r, c = cell["RowIndex"], cell["ColumnIndex"]
                max_r, max_c = max(max_r, r), max(max_c, c)
                texts = []
                for crel in cell.get("Relationships", []):
                    if crel["Type"] == "CHILD":
                        texts.extend(words_text.get(wid, "") for wid in crel["Ids"])
                grid[(r, c)] = " ".join(t for t in texts if t)
        tables.append([[grid.get((r, c), "") for c in range(1, max_c + 1)]
                       for r in range(1, max_r + 1)])
    return tables or None


def _normalize_microsoft(payload: bytes) -> OcrPage:
    doc = _load_json(payload)
    try:
        result = doc["analyzeResult"]["readResults"][0]
        size = (int(result["width"]), int(result["height"]))
        words: list[OcrWord] = []
        for li, line in enumerate(result.get("lines", [])):
            for w in line["words"]:
                poly = w["boundingBox"]
                xs, ys = poly[0::2], poly[1::2]
                words.append(OcrWord(
                    text=w["text"],
                    bbox=(int(min(xs)), int(min(ys)), int(max(xs)), int(max(ys))),
                    conf=float(w.get("confidence", 1.0)),
                    line=f"L{li}",
                ))
    except (KeyError, IndexError, TypeError) as exc:
        raise OcrParseError(f"microsoft payload missing field: {exc}") from exc
    synthesize_paragraphs(words)
    return OcrPage("microsoft", size, words, inferred_levels=["paragraph"])


def _normalize_tesseract(payload: bytes) -> OcrPage:
    try:
        text = payload.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise OcrParseError(f"payload is not UTF-8 at byte offset {exc.start}") from exc
    lines = text.splitlines()
    if not lines:
        raise OcrParseError("empty tesseract payload at byte offset 0")
    header = lines[0].split("\t")
    required = ["level", "block_num", "par_num", "line_num", "left", "top", "width", "height", "conf", "text"]
    if any(col not in header for col in required):
        raise OcrParseError("tesseract payload missing TSV header at byte offset 0")
    idx = {col: header.index(col) for col in header}

    size: tuple[int, int] | None = None
    words: list[OcrWord] = []
    offset = len(lines[0]) + 1
    for row_text in lines[1:]:
        row = row_text.split("\t")
        try:
            level = int(row[idx["level"]])
            left, top = int(row[idx["left"]]), int(row[idx["top"]])
            width, height = int(row[idx["width"]]), int(row[idx["height"]])
            if level == 1:
                size = (left + width, top + height)
            elif level == 5:
                conf = float(row[idx["conf"]])
                words.append(OcrWord(
                    text=row[idx["text"]],
                    bbox=(left, top, left + width, top + height),
                    conf=max(0.0, conf) / 100.0,
                    line=f"B{row[idx['block_num']]}.P{row[idx['par_num']]}.L{row[idx['line_num']]}",
                    par=f"B{row[idx['block_num']]}.P{row[idx['par_num']]}",
                    block=f"B{row[idx['block_num']]}",
                ))
        except (ValueError, IndexError) as exc:
            raise OcrParseError(f"malformed tesseract row at byte offset {offset}") from exc
        offset += len(row_text) + 1
    if size is None:
        raise OcrParseError("tesseract payload has no page row at byte offset 0")
    return OcrPage("tesseract", size, words)


# ---------------------------------------------------------------------------
# Mock engine

@dataclass
class NoiseModel:
    substitution_prob: float = 0.0
    deletion_prob: float = 0.0
    confusion_table: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_CONFUSIONS))
    substitute_unmapped: bool = False
    seed: int = 0

    def validate(self) -> None:
        for name in ("substitution_prob", "deletion_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")


def mock_ocr(truth: list[tuple[str, tuple[int, int, int, int]]],
             noise: NoiseModel,
             page_size: tuple[int, int]) -> OcrPage:
    """Deterministic noisy recognition of a truth layout.

    Each character independently suffers a substitution (through the
    confusion table; characters with no table entry are left alone unless
    substitute_unmapped is set) and a deletion. Word confidence is the
    product of (1 - 0.5 * error) over its characters, clamped to
    [0.3, 0.99]. Identical seeds give bit-identical pages.
    """
    noise.validate()
    rng = random.Random(noise.seed)
    alphabet = string.ascii_letters + string.digits
    words: list[OcrWord] = []
    for text, bbox in truth:
        out_chars: list[str] = []
        conf = 1.0
        for ch in text:
            errored = False
            if rng.random() < noise.substitution_prob:
                if ch in noise.confusion_table:
                    ch = noise.confusion_table[ch]
                    errored = True
                elif noise.substitute_unmapped:
                    ch = rng.choice(alphabet)
                    errored = True
            if rng.random() < noise.deletion_prob:
                errored = True
                ch = ""
            conf *= 1.0 - 0.5 * errored
            out_chars.append(ch)
        words.append(OcrWord(
            text="".join(out_chars),
            bbox=tuple(bbox),
            conf=min(0.99, max(0.3, conf)),
        ))
    synthesize_lines(words)
    synthesize_paragraphs(words)
    page = OcrPage("mock", page_size, words, inferred_levels=["line", "paragraph"])
    page.validate()
    return page


# ---------------------------------------------------------------------------
# Workspace-backed recognition

def run_ocr(ws, page_id: int, engine: str) -> OcrPage:
    """Recognize one page with a named engine and cache the result.

    The four cloud/offline adapters read a pre-recorded native payload at
    pages/NNNN/ocr/<engine>.native; any other engine name is treated as a
    mock engine whose .native file holds the truth layout and noise model.
    A stored normalized result is returned as-is on repeated calls.
    """
    from .raster import Raster
    from .workspace import ArtifactMissingError

    kind = f"ocr:{engine}"
    if ws.has_artifact(page_id, kind):
        payload, _ = ws.load_artifact(page_id, kind)
        return OcrPage.from_json_bytes(payload)

    image_kind = "processed" if ws.has_artifact(page_id, "processed") else None
    if image_kind:
        img_bytes, _ = ws.load_artifact(page_id, image_kind)
        img = Raster.from_png_bytes(img_bytes)
    else:
        entry = ws.entries.get(page_id)
        if entry is None or not entry.raw_image:
            raise EngineUnavailableError(f"page {page_id} has no image to recognize")
        img = Raster.load(ws.root / entry.raw_image)
    page_size = (img.width, img.height)

    try:
        native, _ = ws.load_artifact(page_id, f"native:{engine}")
    except ArtifactMissingError as exc:
        raise EngineUnavailableError(
            f"engine unavailable: no recorded payload for {engine!r} on page {page_id}"
        ) from exc

    if engine in KNOWN_ENGINES:
        page = normalize(engine, native, page_size=page_size)
    else:
        spec = _load_json(native)
        noise_doc = dict(spec.get("noise", {}))
        noise = NoiseModel(
            substitution_prob=noise_doc.get("substitution_prob", 0.0),
            deletion_prob=noise_doc.get("deletion_prob", 0.0),
            confusion_table=noise_doc.get("confusion_table", dict(DEFAULT_CONFUSIONS)),
            substitute_unmapped=noise_doc.get("substitute_unmapped", False),
            seed=noise_doc.get("seed", 0),
        )
        truth = [(w[0], tuple(w[1])) for w in spec["words"]]
        size = tuple(spec.get("page_size", page_size))
        page = mock_ocr(truth, noise, size)
        page.engine = engine

    ws.store_artifact(page_id, kind, page.to_json_bytes())
    return page


def install_stub(engine: str) -> str:
    """Cloud-account provisioning is out of scope; this stub documents the
    manual steps a live adapter would need."""
    steps = {
        "amazon": [
            "create an IAM user with Textract, SNS and SQS permissions",
            "configure credentials in ~/.aws/credentials",
            "record responses to pages/NNNN/ocr/amazon.native for offline runs",
        ],
        "google": [
            "enable the Vision API on a Google Cloud project",
            "export GOOGLE_APPLICATION_CREDENTIALS with a service-account key",
            "record responses to pages/NNNN/ocr/google.native for offline runs",
        ],
        "microsoft": [
            "create a Computer Vision resource and note its endpoint + key",
            "record responses to pages/NNNN/ocr/microsoft.native for offline runs",
        ],
        "tesseract": [
            "install the tesseract binary and language data",
            "record TSV output to pages/NNNN/ocr/tesseract.native for offline runs",
        ],
    }
    if engine not in steps:
        raise EngineUnavailableError(f"unknown engine {engine!r}")
    lines = [f"{engine}: live OCR is not provisioned by this package; to use it:"]
    lines += [f"  {i}. {s}" for i, s in enumerate(steps[engine], start=1)]
    return "\n".join(lines)
