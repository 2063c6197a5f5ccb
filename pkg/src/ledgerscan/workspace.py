"""On-disk document workspace: page images, artifacts, and the manifest.

Layout under the cache root:
    manifest.json
    pages/NNNN/raw.png            extracted or imported page image
    pages/NNNN/processed.png      output of the image-op chain
    pages/NNNN/layout.json        delimiters, rows, headers
    pages/NNNN/records.csv        extracted records
    pages/NNNN/flags.json         validation flags
    pages/NNNN/truth.csv          promoted ground truth
    pages/NNNN/ocr/<engine>.json  normalized recognition results
    pages/NNNN/ocr/<engine>.native  pre-recorded native payloads
    pages/NNNN/audit.log          append-only correction audit trail

Every artifact write lands in a temp file and is renamed into place, so a
reader never observes partial content; per-page versions only grow, and
load always reports the version of the exact bytes it returned (stores and
loads on the same page serialize on the page lock).
"""

from __future__ import annotations

import json
import os
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path

from PIL import Image

from . import pdfread

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".tif", ".tiff", ".bmp")


class WorkspaceError(ValueError):
    pass


class UnknownPageError(WorkspaceError):
    pass


class UnknownKindError(WorkspaceError):
    pass


class ArtifactMissingError(WorkspaceError):
    """Requested artifact has not yet been produced."""


@dataclass
class PageEntry:
    page_id: int
    raw_image: str | None = None
    processed_image: str | None = None
    ocr_results: dict[str, str] = field(default_factory=dict)
    records: str | None = None
    flags: str | None = None
    truth: str | None = None
    version: int = 0
    error: str | None = None
    reviewed: bool = False

    def to_dict(self) -> dict:
        return {
            "page_id": self.page_id,
            "raw_image": self.raw_image,
            "processed_image": self.processed_image,
            "ocr_results": dict(sorted(self.ocr_results.items())),
            "records": self.records,
            "flags": self.flags,
            "truth": self.truth,
            "version": self.version,
            "error": self.error,
            "reviewed": self.reviewed,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PageEntry":
        return cls(
            page_id=int(doc["page_id"]),
            raw_image=doc.get("raw_image"),
            processed_image=doc.get("processed_image"),
            ocr_results=dict(doc.get("ocr_results", {})),
            records=doc.get("records"),
            flags=doc.get("flags"),
            truth=doc.get("truth"),
            version=int(doc.get("version", 0)),
            error=doc.get("error"),
            reviewed=bool(doc.get("reviewed", False)),
        )


_KIND_RE = re.compile(r"^(processed|layout|records|flags|truth|ocr:[A-Za-z0-9_-]+|native:[A-Za-z0-9_-]+)$")


def _atomic_write(path: Path, payload: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp.{os.getpid()}.{threading.get_ident()}")
    with open(tmp, "wb") as fh:
        fh.write(payload)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


class Workspace:
    MANIFEST = "manifest.json"

    def __init__(self, root: Path, source_type: str, source_path: str, dpi: int = 300) -> None:
        self.root = Path(root)
        self.source_type = source_type
        self.source_path = source_path
        self.dpi = dpi
        self.config: dict[str, str] = {}
        self.entries: dict[int, PageEntry] = {}
        self._manifest_lock = threading.RLock()
        self._page_locks: dict[int, threading.RLock] = {}

    # -- lifecycle ----------------------------------------------------------

    @classmethod
    def open_document(cls, source: str | Path, cache: str | Path, dpi: int = 300) -> "Workspace":
        """Open or re-open a workspace for a PDF file or an image directory.

        Re-opening an existing cache reloads its manifest; an image
        directory is imported page by page (filename order) on first open.
        """
        source = Path(source)
        cache = Path(cache)
        if not source.exists():
            raise WorkspaceError(f"source not found: {source}")

        manifest_path = cache / cls.MANIFEST
        if manifest_path.exists():
            ws = cls.load(cache)
            return ws

        if source.is_dir():
            images = sorted(p for p in source.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
            if not images:
                raise WorkspaceError(f"source directory has no images: {source}")
            ws = cls(cache, "images", str(source), dpi)
            ws._ensure_writable()
            for i, path in enumerate(images, start=1):
                entry = PageEntry(page_id=i)
                with Image.open(path) as img:
                    out = ws._page_dir(i) / "raw.png"
                    out.parent.mkdir(parents=True, exist_ok=True)
                    img.save(out, format="PNG")
                entry.raw_image = str(out.relative_to(ws.root))
                entry.version = 1
                ws.entries[i] = entry
            ws.save_manifest()
            return ws

        if source.suffix.lower() == ".pdf":
            try:
                with open(source, "rb") as fh:
                    header = fh.read(4)
            except OSError as exc:
                raise WorkspaceError(f"source unreadable: {source} ({exc})") from exc
            if header != b"%PDF":
                raise WorkspaceError(f"source is not a PDF: {source}")
            ws = cls(cache, "pdf", str(source), dpi)
            ws._ensure_writable()
            ws.save_manifest()
            return ws

        raise WorkspaceError(f"source must be a PDF or an image directory: {source}")

    def _ensure_writable(self) -> None:
        try:
            self.root.mkdir(parents=True, exist_ok=True)
            probe = self.root / ".write-probe"
            probe.write_bytes(b"")
            probe.unlink()
        except OSError as exc:
            raise WorkspaceError(f"cache path not writable: {self.root} ({exc})") from exc

    @classmethod
    def load(cls, cache: str | Path) -> "Workspace":
        cache = Path(cache)
        manifest_path = cache / cls.MANIFEST
        if not manifest_path.exists():
            raise WorkspaceError(f"no manifest at {manifest_path}")
        doc = json.loads(manifest_path.read_text(encoding="utf-8"))
        ws = cls(cache, doc["source"]["type"], doc["source"]["path"], int(doc.get("dpi", 300)))
        ws.config = dict(doc.get("config", {}))
        for entry_doc in doc.get("pages", []):
            entry = PageEntry.from_dict(entry_doc)
            ws.entries[entry.page_id] = entry
        ws.validate()
        return ws

    def manifest_dict(self) -> dict:
        return {
            "source": {"type": self.source_type, "path": self.source_path},
            "dpi": self.dpi,
            "config": dict(sorted(self.config.items())),
            "pages": [self.entries[i].to_dict() for i in sorted(self.entries)],
        }

    def save_manifest(self) -> None:
        with self._manifest_lock:
            payload = json.dumps(self.manifest_dict(), indent=1, sort_keys=True).encode("utf-8")
            _atomic_write(self.root / self.MANIFEST, payload)

    def validate(self) -> None:
        ids = sorted(self.entries)
        if ids != list(range(1, len(ids) + 1)):
            raise WorkspaceError(f"page ids must be contiguous and 1-based, got {ids}")

    def describe(self) -> dict:
        dims = None
        for entry in self.entries.values():
            if entry.raw_image:
                with Image.open(self.root / entry.raw_image) as img:
                    dims = (img.width, img.height)
                break
        return {"pages": len(self.entries), "dimensions": dims, "dpi": self.dpi}

    # -- page image extraction ----------------------------------------------

    def extract_images(self) -> int:
        """Extract one raster per PDF page into pages/NNNN/raw.png.

        Already-extracted pages are left untouched; a corrupt page is
        marked failed and the rest proceed. Returns the number of pages
        with a raw image on disk.
        """
        if self.source_type != "pdf":
            raise WorkspaceError("not a PDF workspace")
        doc = pdfread.PdfDocument.load(self.source_path)
        for i in range(1, doc.page_count + 1):
            entry = self.entries.get(i)
            if entry is None:
                entry = PageEntry(page_id=i)
                self.entries[i] = entry
            out = self._page_dir(i) / "raw.png"
            if entry.raw_image and out.exists():
                continue
            try:
                img = doc.page_image(i)
            except pdfread.PdfPageError as exc:
                entry.raw_image = None
                entry.error = str(exc)
                continue
            out.parent.mkdir(parents=True, exist_ok=True)
            img.save(out, format="PNG")
            entry.raw_image = str(out.relative_to(self.root))
            entry.error = None
            entry.version += 1
        self.validate()
        self.save_manifest()
        return sum(1 for e in self.entries.values() if e.raw_image)

    # -- artifact store -------------------------------------------------------

    def _page_dir(self, page_id: int) -> Path:
        return self.root / "pages" / f"{page_id:04d}"

    def _page_lock(self, page_id: int) -> threading.RLock:
        with self._manifest_lock:
            return self._page_locks.setdefault(page_id, threading.RLock())

    def artifact_path(self, page_id: int, kind: str) -> Path:
        if page_id not in self.entries:
            raise UnknownPageError(f"page {page_id} not in manifest")
        if not _KIND_RE.match(kind):
            raise UnknownKindError(f"unknown artifact kind {kind!r}")
        base = self._page_dir(page_id)
        if kind == "processed":
            return base / "processed.png"
        if kind == "layout":
            return base / "layout.json"
        if kind == "records":
            return base / "records.csv"
        if kind == "flags":
            return base / "flags.json"
        if kind == "truth":
            return base / "truth.csv"
        prefix, engine = kind.split(":", 1)
        suffix = "json" if prefix == "ocr" else "native"
        return base / "ocr" / f"{engine}.{suffix}"

    def store_artifact(self, page_id: int, kind: str, payload: bytes) -> int:
        path = self.artifact_path(page_id, kind)
        with self._page_lock(page_id):
            entry = self.entries[page_id]
            _atomic_write(path, payload)
            rel = str(path.relative_to(self.root))
            if kind == "processed":
                entry.processed_image = rel
            elif kind == "records":
                entry.records = rel
            elif kind == "flags":
                entry.flags = rel
            elif kind == "truth":
                entry.truth = rel
            elif kind.startswith("ocr:"):
                entry.ocr_results[kind.split(":", 1)[1]] = rel
            entry.version += 1
            self.save_manifest()
            return entry.version

    def load_artifact(self, page_id: int, kind: str) -> tuple[bytes, int]:
        path = self.artifact_path(page_id, kind)
        with self._page_lock(page_id):
            if not path.exists():
                raise ArtifactMissingError(f"{kind} for page {page_id} not yet produced")
            payload = path.read_bytes()
            return payload, self.entries[page_id].version

    def has_artifact(self, page_id: int, kind: str) -> bool:
        return self.artifact_path(page_id, kind).exists()

    def entry_version(self, page_id: int) -> int:
        if page_id not in self.entries:
            raise UnknownPageError(f"page {page_id} not in manifest")
        return self.entries[page_id].version

    def mark_reviewed(self, page_id: int) -> None:
        with self._page_lock(page_id):
            self.entries[page_id].reviewed = True
            self.save_manifest()

    # -- audit trail ----------------------------------------------------------

    def append_audit(self, page_id: int, record: dict) -> None:
        if page_id not in self.entries:
            raise UnknownPageError(f"page {page_id} not in manifest")
        path = self._page_dir(page_id) / "audit.log"
        line = json.dumps(record, sort_keys=True) + "\n"
        with self._page_lock(page_id):
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "a", encoding="utf-8") as fh:
                fh.write(line)

    def read_audit(self, page_id: int) -> list[dict]:
        path = self._page_dir(page_id) / "audit.log"
        if not path.exists():
            return []
        return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line]
