"""Minimal PDF reader for scanned documents.

Scanned books are PDFs whose pages each embed one raster image; this
module extracts those page images without a full PDF stack. It parses the
object graph directly (objects are located by scanning, not via xref),
walks the page tree for page order, and decodes image XObjects stored with
ASCII85/Flate (raw gray or RGB samples) or DCT (JPEG) filters. Pages
without a decodable image are reported individually so callers can mark
them failed and continue.
"""

from __future__ import annotations

import base64
import io
import re
import zlib
from dataclasses import dataclass

import numpy as np
from PIL import Image


class PdfError(ValueError):
    pass


class PdfPageError(PdfError):
    pass


@dataclass(frozen=True)
class Ref:
    num: int


_OBJ_RE = re.compile(rb"(\d+)\s+(\d+)\s+obj\b")
_WS = b" \t\r\n\f\x00"
_DELIM = b"()<>[]{}/%"


class _Parser:
    def __init__(self, data: bytes, pos: int) -> None:
        self.data = data
        self.pos = pos

    def _skip_ws(self) -> None:
        while self.pos < len(self.data):
            c = self.data[self.pos:self.pos + 1]
            if c in (b"%",):
                while self.pos < len(self.data) and self.data[self.pos] not in b"\r\n":
                    self.pos += 1
            elif c in _WS:
                self.pos += 1
            else:
                return

    def parse_value(self):
        self._skip_ws()
        d = self.data
        p = self.pos
        if d.startswith(b"<<", p):
            return self.parse_dict()
        if d.startswith(b"[", p):
            self.pos += 1
            out = []
            while True:
                self._skip_ws()
                if self.data.startswith(b"]", self.pos):
                    self.pos += 1
                    return out
                out.append(self.parse_value())
        if d.startswith(b"/", p):
            self.pos += 1
            start = self.pos
            while self.pos < len(d) and d[self.pos] not in _WS + _DELIM:
                self.pos += 1
            return "/" + d[start:self.pos].decode("latin-1")
        if d.startswith(b"(", p):
            depth = 0
            self.pos += 1
            start = self.pos
            while self.pos < len(d):
                c = d[self.pos]
                if c == ord("\\"):
                    self.pos += 2
                    continue
                if c == ord("("):
                    depth += 1
                elif c == ord(")"):
                    if depth == 0:
                        s = d[start:self.pos]
                        self.pos += 1
                        return s
                    depth -= 1
                self.pos += 1
            raise PdfError("unterminated string")
        if d.startswith(b"<", p):
            end = d.index(b">", p)
            s = d[p + 1:end]
            self.pos = end + 1
            return bytes.fromhex(s.decode("latin-1"))
        for lit, val in ((b"true", True), (b"false", False), (b"null", None)):
            if d.startswith(lit, p):
                self.pos += len(lit)
                return val
        m = re.match(rb"[+-]?\d+(\.\d*)?|[+-]?\.\d+", d[p:p + 64])
        if m:
            token = m.group(0)
            # Lookahead for an indirect reference: <num> <gen> R
            tail = re.match(rb"\s+(\d+)\s+R\b", d[p + len(token):p + len(token) + 32])
            if tail and b"." not in token:
                self.pos = p + len(token) + tail.end()
                return Ref(int(token))
            self.pos = p + len(token)
            return float(token) if b"." in token else int(token)
        raise PdfError(f"cannot parse PDF value at byte {p}")

    def parse_dict(self) -> dict:
        if not self.data.startswith(b"<<", self.pos):
            raise PdfError(f"expected dict at byte {self.pos}")
        self.pos += 2
        out: dict = {}
        while True:
            self._skip_ws()
            if self.data.startswith(b">>", self.pos):
                self.pos += 2
                return out
            key = self.parse_value()
            if not isinstance(key, str) or not key.startswith("/"):
                raise PdfError(f"dict key is not a name at byte {self.pos}")
            out[key[1:]] = self.parse_value()


@dataclass
class _Object:
    num: int
    value: object
    stream: bytes | None = None


class PdfDocument:
    def __init__(self, data: bytes) -> None:
        self.data = data
        if not data.startswith(b"%PDF"):
            raise PdfError("not a PDF file (missing %PDF header)")
        self.objects: dict[int, _Object] = {}
        self._scan_objects()
        self.page_refs = self._collect_pages()

    @classmethod
    def load(cls, path) -> "PdfDocument":
        with open(path, "rb") as fh:
            return cls(fh.read())

    # -- object graph ------------------------------------------------------

    def _scan_objects(self) -> None:
        for m in _OBJ_RE.finditer(self.data):
            num = int(m.group(1))
            parser = _Parser(self.data, m.end())
            try:
                value = parser.parse_value()
            except PdfError:
                continue
            stream = None
            parser._skip_ws()
            if self.data.startswith(b"stream", parser.pos):
                start = parser.pos + len(b"stream")
                if self.data.startswith(b"\r\n", start):
                    start += 2
                elif self.data.startswith(b"\n", start):
                    start += 1
                length = value.get("Length") if isinstance(value, dict) else None
                if isinstance(length, Ref):
                    length = self.resolve(length)
                if isinstance(length, (int, float)):
                    stream = self.data[start:start + int(length)]
                else:
                    end = self.data.find(b"endstream", start)
                    if end < 0:
                        continue
                    stream = self.data[start:end].rstrip(b"\r\n")
            self.objects[num] = _Object(num=num, value=value, stream=stream)

    def resolve(self, v):
        seen = set()
        while isinstance(v, Ref):
            if v.num in seen or v.num not in self.objects:
                return None
            seen.add(v.num)
            v = self.objects[v.num].value
        return v

    # -- page tree ---------------------------------------------------------

    def _collect_pages(self) -> list[int]:
        root_num = None
        for m in re.finditer(rb"/Root\s+(\d+)\s+\d+\s+R", self.data):
            root_num = int(m.group(1))
        pages: list[int] = []

        def walk(ref_num: int, depth: int = 0) -> None:
            if depth > 64 or ref_num not in self.objects:
                return
            node = self.objects[ref_num].value
            if not isinstance(node, dict):
                return
            node_type = node.get("Type")
            if node_type == "/Page":
                pages.append(ref_num)
            elif node_type == "/Pages":
                for kid in node.get("Kids", []):
                    if isinstance(kid, Ref):
                        walk(kid.num, depth + 1)

        if root_num is not None and root_num in self.objects:
            catalog = self.objects[root_num].value
            if isinstance(catalog, dict):
                tree = catalog.get("Pages")
                if isinstance(tree, Ref):
                    walk(tree.num)
        if not pages:
            # Fallback: document order of /Type /Page objects.
            pages = [n for n in sorted(self.objects)
                     if isinstance(self.objects[n].value, dict)
                     and self.objects[n].value.get("Type") == "/Page"]
        if not pages:
            raise PdfError("no pages found")
        return pages

    @property
    def page_count(self) -> int:
        return len(self.page_refs)

    # -- image decoding ----------------------------------------------------

    def page_image(self, index: int) -> Image.Image:
        """Decode the dominant image of 1-based page `index`."""
        if not 1 <= index <= self.page_count:
            raise PdfPageError(f"page {index} out of range 1..{self.page_count}")
        page = self.objects[self.page_refs[index - 1]].value
        resources = self.resolve(page.get("Resources")) or {}
        xobjects = self.resolve(resources.get("XObject")) or {}
        candidates = []
        for ref in xobjects.values():
            if not isinstance(ref, Ref) or ref.num not in self.objects:
                continue
            obj = self.objects[ref.num]
            d = obj.value
            if isinstance(d, dict) and d.get("Subtype") == "/Image" and obj.stream is not None:
                candidates.append(obj)
        if not candidates:
            raise PdfPageError(f"page {index} has no embedded image")
        best = max(candidates, key=lambda o: int(self.resolve(o.value.get("Width")) or 0)
                   * int(self.resolve(o.value.get("Height")) or 0))
        return self._decode_image(best, index)

    def _decode_image(self, obj: _Object, index: int) -> Image.Image:
        d = obj.value
        filters = d.get("Filter", [])
        if isinstance(filters, str):
            filters = [filters]
        filters = [self.resolve(f) if isinstance(f, Ref) else f for f in filters]
        data = obj.stream

        try:
            for f in filters:
                if f == "/ASCII85Decode":
                    raw = data.strip()
                    if raw.endswith(b"~>"):
                        raw = raw[:-2]
                    data = base64.a85decode(raw, adobe=False, ignorechars=b" \t\r\n")
                elif f == "/FlateDecode":
                    data = zlib.decompress(data)
                elif f == "/DCTDecode":
                    return Image.open(io.BytesIO(data)).convert("RGB")
                else:
                    raise PdfPageError(f"page {index}: unsupported filter {f}")
        except (ValueError, zlib.error) as exc:
            raise PdfPageError(f"page {index}: image stream corrupt ({exc})") from exc

        width = int(self.resolve(d.get("Width")) or 0)
        height = int(self.resolve(d.get("Height")) or 0)
        bpc = int(self.resolve(d.get("BitsPerComponent")) or 8)
        space = self.resolve(d.get("ColorSpace"))
        if bpc != 8:
            raise PdfPageError(f"page {index}: unsupported bit depth {bpc}")
        channels = {"/DeviceRGB": 3, "/DeviceGray": 1}.get(space)
        if channels is None:
            raise PdfPageError(f"page {index}: unsupported color space {space}")
        expected = width * height * channels
        if width <= 0 or height <= 0 or len(data) < expected:
            raise PdfPageError(f"page {index}: image data truncated "
                               f"({len(data)} bytes for {width}x{height}x{channels})")
        arr = np.frombuffer(data[:expected], dtype=np.uint8)
        arr = arr.reshape((height, width, channels)) if channels == 3 else arr.reshape((height, width))
        return Image.fromarray(arr)
