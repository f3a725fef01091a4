"""Minimal PDF text extraction.

Covers the slice of the PDF format needed to pull positioned text lines out
of machine-generated reports: classic cross-reference tables plus
cross-reference and object streams, Flate/ASCIIHex/ASCII85 filters with PNG
predictors, simple single-byte font encodings with /Differences, ToUnicode
CMaps for composite fonts, and form XObjects. Encrypted documents are
rejected. Scanned/image-only pages simply produce no text lines; deciding
what to do about that is the caller's job.
"""

from __future__ import annotations

import base64
import binascii
import re
import zlib
from dataclasses import dataclass
from math import hypot


class PdfError(Exception):
    """Document cannot be parsed (malformed, encrypted, unsupported filter)."""


class Name(str):
    """PDF name object; distinct from text strings."""

    __slots__ = ()


@dataclass(frozen=True)
class Ref:
    num: int
    gen: int


class StreamObj:
    __slots__ = ("dict", "raw")

    def __init__(self, d: dict, raw: bytes):
        self.dict = d
        self.raw = raw


_WHITESPACE = b"\x00\t\n\x0c\r "
_DELIMS = b"()<>[]{}/%"
_REGULAR_END = _WHITESPACE + _DELIMS

_NUMBER_RE = re.compile(rb"[+-]?(?:\d+\.?\d*|\.\d+)")


class _Parser:
    """Recursive-descent parser over raw PDF bytes."""

    def __init__(self, data: bytes, pos: int = 0, doc: "PdfDocument | None" = None,
                 allow_refs: bool = True):
        self.data = data
        self.pos = pos
        self.doc = doc
        self.allow_refs = allow_refs

    def skip_ws(self):
        data, n = self.data, len(self.data)
        while self.pos < n:
            b = data[self.pos]
            if b in _WHITESPACE:
                self.pos += 1
            elif b == 0x25:  # '%' comment to end of line
                eol = data.find(b"\n", self.pos)
                if eol < 0:
                    eol = data.find(b"\r", self.pos)
                self.pos = n if eol < 0 else eol + 1
            else:
                return

    def at_end(self) -> bool:
        self.skip_ws()
        return self.pos >= len(self.data)

    def _keyword(self) -> bytes:
        start = self.pos
        data, n = self.data, len(self.data)
        while self.pos < n and data[self.pos] not in _REGULAR_END:
            self.pos += 1
        return data[start:self.pos]

    def parse_object(self):
        self.skip_ws()
        if self.pos >= len(self.data):
            raise PdfError("unexpected end of data")
        b = self.data[self.pos]
        if b == 0x3C:  # '<'
            if self.data[self.pos + 1:self.pos + 2] == b"<":
                return self._parse_dict_or_stream()
            return self._parse_hex_string()
        if b == 0x28:  # '('
            return self._parse_literal_string()
        if b == 0x2F:  # '/'
            return self._parse_name()
        if b == 0x5B:  # '['
            return self._parse_array()
        if b in b"+-.0123456789":
            return self._parse_number_or_ref()
        kw = self._keyword()
        if kw == b"true":
            return True
        if kw == b"false":
            return False
        if kw == b"null":
            return None
        if not kw:
            raise PdfError(f"unexpected byte {bytes([b])!r} at offset {self.pos}")
        return ("kw", kw)

    def _parse_name(self) -> Name:
        self.pos += 1  # '/'
        out = bytearray()
        data, n = self.data, len(self.data)
        while self.pos < n:
            b = data[self.pos]
            if b in _REGULAR_END:
                break
            if b == 0x23 and self.pos + 2 < n:  # '#' hex escape
                try:
                    out.append(int(data[self.pos + 1:self.pos + 3], 16))
                    self.pos += 3
                    continue
                except ValueError:
                    pass
            out.append(b)
            self.pos += 1
        return Name(out.decode("latin-1"))

    def _parse_literal_string(self) -> bytes:
        self.pos += 1  # '('
        out = bytearray()
        depth = 1
        data, n = self.data, len(self.data)
        while self.pos < n:
            b = data[self.pos]
            self.pos += 1
            if b == 0x5C:  # backslash
                if self.pos >= n:
                    break
                e = data[self.pos]
                self.pos += 1
                if e in b"nrtbf":
                    out.append({0x6E: 10, 0x72: 13, 0x74: 9, 0x62: 8, 0x66: 12}[e])
                elif e in b"01234567":
                    digits = bytes([e])
                    while len(digits) < 3 and self.pos < n and data[self.pos] in b"01234567":
                        digits += bytes([data[self.pos]])
                        self.pos += 1
                    out.append(int(digits, 8) & 0xFF)
                elif e in b"\r\n":
                    if e == 0x0D and self.pos < n and data[self.pos] == 0x0A:
                        self.pos += 1
                else:
                    out.append(e)
            elif b == 0x28:
                depth += 1
                out.append(b)
            elif b == 0x29:
                depth -= 1
                if depth == 0:
                    return bytes(out)
                out.append(b)
            else:
                out.append(b)
        raise PdfError("unterminated literal string")

    def _parse_hex_string(self) -> bytes:
        self.pos += 1  # '<'
        end = self.data.find(b">", self.pos)
        if end < 0:
            raise PdfError("unterminated hex string")
        hexdigits = re.sub(rb"[^0-9A-Fa-f]", b"", self.data[self.pos:end])
        self.pos = end + 1
        if len(hexdigits) % 2:
            hexdigits += b"0"
        return binascii.unhexlify(hexdigits)

    def _parse_array(self) -> list:
        self.pos += 1  # '['
        out = []
        while True:
            self.skip_ws()
            if self.pos >= len(self.data):
                raise PdfError("unterminated array")
            if self.data[self.pos] == 0x5D:
                self.pos += 1
                return out
            out.append(self.parse_object())

    def _parse_dict_or_stream(self):
        self.pos += 2  # '<<'
        d: dict = {}
        while True:
            self.skip_ws()
            if self.data[self.pos:self.pos + 2] == b">>":
                self.pos += 2
                break
            key = self.parse_object()
            if not isinstance(key, Name):
                raise PdfError(f"dictionary key is not a name: {key!r}")
            d[str(key)] = self.parse_object()
        save = self.pos
        self.skip_ws()
        if self.data[self.pos:self.pos + 6] == b"stream":
            self.pos += 6
            if self.data[self.pos:self.pos + 2] == b"\r\n":
                self.pos += 2
            elif self.data[self.pos:self.pos + 1] in (b"\n", b"\r"):
                self.pos += 1
            return self._read_stream(d)
        self.pos = save
        return d

    def _read_stream(self, d: dict) -> StreamObj:
        length = d.get("Length")
        if isinstance(length, Ref) and self.doc is not None:
            try:
                length = self.doc.resolve(length)
            except PdfError:
                length = None
        start = self.pos
        raw = None
        if isinstance(length, int) and length >= 0 and start + length <= len(self.data):
            candidate_end = start + length
            probe = _Parser(self.data, candidate_end)
            probe.skip_ws()
            if self.data[probe.pos:probe.pos + 9] == b"endstream":
                raw = self.data[start:candidate_end]
                self.pos = probe.pos + 9
        if raw is None:
            # /Length missing or wrong; fall back to scanning for endstream
            end = self.data.find(b"endstream", start)
            if end < 0:
                raise PdfError("unterminated stream")
            raw = self.data[start:end]
            if raw.endswith(b"\r\n"):
                raw = raw[:-2]
            elif raw.endswith((b"\n", b"\r")):
                raw = raw[:-1]
            self.pos = end + 9
        return StreamObj(d, raw)

    def _parse_number_or_ref(self):
        m = _NUMBER_RE.match(self.data, self.pos)
        if not m:
            raise PdfError(f"bad number at offset {self.pos}")
        self.pos = m.end()
        text = m.group()
        if b"." in text:
            return float(text)
        value = int(text)
        if self.allow_refs and value >= 0:
            save = self.pos
            self.skip_ws()
            m2 = _NUMBER_RE.match(self.data, self.pos)
            if m2 and b"." not in m2.group():
                gen_end = m2.end()
                probe = _Parser(self.data, gen_end)
                probe.skip_ws()
                nxt = self.data[probe.pos:probe.pos + 1]
                if nxt == b"R" and self.data[probe.pos + 1:probe.pos + 2] in _REGULAR_END + b"":
                    after = self.data[probe.pos + 1:probe.pos + 2]
                    if after == b"" or after in _REGULAR_END:
                        self.pos = probe.pos + 1
                        return Ref(value, int(m2.group()))
            self.pos = save
        return value


def _png_unpredict(data: bytes, columns: int, colors: int = 1, bpc: int = 8) -> bytes:
    bpp = max(1, (colors * bpc + 7) // 8)
    rowlen = columns * bpp
    out = bytearray()
    prev = bytearray(rowlen)
    i = 0
    while i + 1 <= len(data):
        ft = data[i]
        i += 1
        row = bytearray(data[i:i + rowlen])
        if len(row) < rowlen:
            row.extend(b"\x00" * (rowlen - len(row)))
        i += rowlen
        if ft == 1:
            for j in range(bpp, rowlen):
                row[j] = (row[j] + row[j - bpp]) & 0xFF
        elif ft == 2:
            for j in range(rowlen):
                row[j] = (row[j] + prev[j]) & 0xFF
        elif ft == 3:
            for j in range(rowlen):
                left = row[j - bpp] if j >= bpp else 0
                row[j] = (row[j] + ((left + prev[j]) >> 1)) & 0xFF
        elif ft == 4:
            for j in range(rowlen):
                a = row[j - bpp] if j >= bpp else 0
                b = prev[j]
                c = prev[j - bpp] if j >= bpp else 0
                p = a + b - c
                pa, pb, pc = abs(p - a), abs(p - b), abs(p - c)
                pred = a if (pa <= pb and pa <= pc) else (b if pb <= pc else c)
                row[j] = (row[j] + pred) & 0xFF
        elif ft != 0:
            raise PdfError(f"unknown PNG filter type {ft}")
        out += row
        prev = row
    return bytes(out)


def _inflate(data: bytes) -> bytes:
    try:
        return zlib.decompress(data)
    except zlib.error:
        pass
    try:
        # tolerate raw deflate and trailing garbage
        return zlib.decompressobj(-15).decompress(data)
    except zlib.error:
        d = zlib.decompressobj()
        try:
            return d.decompress(data)
        except zlib.error as exc:
            raise PdfError(f"bad Flate stream: {exc}") from exc


class PdfDocument:
    """Random-access view of one PDF file."""

    def __init__(self, data: bytes):
        if not isinstance(data, (bytes, bytearray)):
            raise PdfError("document must be a byte string")
        head = bytes(data[:2048])
        idx = head.find(b"%PDF-")
        if idx < 0:
            raise PdfError("missing %PDF header")
        self.data = bytes(data[idx:])
        self.xref: dict[int, tuple] = {}
        self.trailer: dict = {}
        self._cache: dict[int, object] = {}
        self._objstm_cache: dict[int, dict[int, object]] = {}
        try:
            self._load_xref_chain()
        except PdfError:
            self.xref = {}
        if not self.xref or "Root" not in self.trailer:
            self._scan_fallback()
        if "Encrypt" in self.trailer:
            raise PdfError("encrypted PDF is not supported")
        root = self.resolve(self.trailer.get("Root"))
        if not isinstance(root, dict):
            raise PdfError("document has no catalog")
        self.root = root

    # -- cross-reference loading ------------------------------------------

    def _load_xref_chain(self):
        tail = self.data[-2048:]
        m = None
        for m in re.finditer(rb"startxref\s+(\d+)", tail):
            pass
        if m is None:
            raise PdfError("missing startxref")
        offset = int(m.group(1))
        seen = set()
        while offset is not None and offset not in seen and 0 <= offset < len(self.data):
            seen.add(offset)
            parser = _Parser(self.data, offset, doc=self)
            parser.skip_ws()
            if self.data[parser.pos:parser.pos + 4] == b"xref":
                offset = self._load_classic_xref(parser)
            else:
                offset = self._load_xref_stream(parser)

    def _load_classic_xref(self, parser: _Parser):
        parser.pos += 4
        while True:
            parser.skip_ws()
            if self.data[parser.pos:parser.pos + 7] == b"trailer":
                parser.pos += 7
                break
            m = re.match(rb"(\d+)\s+(\d+)", self.data[parser.pos:parser.pos + 48])
            if not m:
                raise PdfError("malformed xref subsection header")
            start, count = int(m.group(1)), int(m.group(2))
            parser.pos += m.end()
            parser.skip_ws()
            for i in range(count):
                entry = self.data[parser.pos:parser.pos + 20]
                em = re.match(rb"(\d{10})\s(\d{5})\s([nf])", entry)
                if not em:
                    raise PdfError("malformed xref entry")
                if em.group(3) == b"n":
                    self.xref.setdefault(start + i, ("off", int(em.group(1))))
                parser.pos += em.end()
                parser.skip_ws()
        trailer = parser.parse_object()
        if not isinstance(trailer, dict):
            raise PdfError("malformed trailer")
        for key, value in trailer.items():
            self.trailer.setdefault(key, value)
        if "XRefStm" in trailer:
            sub = _Parser(self.data, int(trailer["XRefStm"]), doc=self)
            try:
                self._load_xref_stream(sub)
            except PdfError:
                pass
        prev = trailer.get("Prev")
        return int(prev) if isinstance(prev, (int, float)) else None

    def _load_xref_stream(self, parser: _Parser):
        obj = self._parse_indirect_at(parser)
        if not isinstance(obj, StreamObj):
            raise PdfError("xref offset does not point at an xref stream")
        d = obj.dict
        data = self.stream_data(obj)
        w = [int(x) for x in d.get("W", [])]
        if len(w) < 3:
            raise PdfError("xref stream missing /W")
        size = int(d.get("Size", 0))
        index = d.get("Index", [0, size])
        index = [int(x) for x in index]
        rowlen = sum(w)
        pos = 0

        def field(row, start, width, default):
            if width == 0:
                return default
            return int.from_bytes(row[start:start + width], "big")

        for i in range(0, len(index), 2):
            start, count = index[i], index[i + 1]
            for num in range(start, start + count):
                row = data[pos:pos + rowlen]
                pos += rowlen
                if len(row) < rowlen:
                    break
                etype = field(row, 0, w[0], 1)
                f2 = field(row, w[0], w[1], 0)
                f3 = field(row, w[0] + w[1], w[2], 0)
                if etype == 1:
                    self.xref.setdefault(num, ("off", f2))
                elif etype == 2:
                    self.xref.setdefault(num, ("instm", f2, f3))
        for key, value in d.items():
            if key not in ("W", "Index", "Filter", "DecodeParms", "Length", "Type"):
                self.trailer.setdefault(key, value)
        prev = d.get("Prev")
        return int(prev) if isinstance(prev, (int, float)) else None

    def _scan_fallback(self):
        """Rebuild the object map by brute-force scan when the xref is broken."""
        offsets: dict[int, int] = {}
        for m in re.finditer(rb"(?m)^[^\S\n]*(\d+)\s+(\d+)\s+obj\b", self.data):
            offsets[int(m.group(1))] = m.start()
        for num, off in offsets.items():
            self.xref[num] = ("off", off)
        if "Root" not in self.trailer:
            for m in re.finditer(rb"trailer", self.data):
                parser = _Parser(self.data, m.end(), doc=self)
                try:
                    d = parser.parse_object()
                except PdfError:
                    continue
                if isinstance(d, dict):
                    for key, value in d.items():
                        self.trailer.setdefault(key, value)
        if "Root" not in self.trailer:
            for num in sorted(offsets):
                try:
                    obj = self.object(num)
                except PdfError:
                    continue
                if isinstance(obj, dict) and obj.get("Type") == "Catalog":
                    self.trailer["Root"] = Ref(num, 0)
                    break
        if not self.xref:
            raise PdfError("no objects found (not a usable PDF)")

    # -- object access -----------------------------------------------------

    def _parse_indirect_at(self, parser: _Parser):
        parser.skip_ws()
        m = re.match(rb"(\d+)\s+(\d+)\s+obj\b", self.data[parser.pos:parser.pos + 48])
        if not m:
            raise PdfError(f"expected indirect object at offset {parser.pos}")
        parser.pos += m.end()
        return parser.parse_object()

    def object(self, num: int):
        if num in self._cache:
            return self._cache[num]
        entry = self.xref.get(num)
        if entry is None:
            return None
        self._cache[num] = None  # cycle guard
        if entry[0] == "off":
            parser = _Parser(self.data, entry[1], doc=self)
            obj = self._parse_indirect_at(parser)
        else:
            obj = self._object_from_stream(entry[1], entry[2], num)
        self._cache[num] = obj
        return obj

    def _object_from_stream(self, container_num: int, idx: int, want_num: int):
        if container_num not in self._objstm_cache:
            stm = self.object(container_num)
            if not isinstance(stm, StreamObj):
                raise PdfError(f"object stream {container_num} missing")
            data = self.stream_data(stm)
            n = int(self.resolve(stm.dict.get("N", 0)))
            first = int(self.resolve(stm.dict.get("First", 0)))
            header = _Parser(data, 0, doc=self, allow_refs=False)
            pairs = []
            for _ in range(n):
                onum = header.parse_object()
                ooff = header.parse_object()
                pairs.append((int(onum), int(ooff)))
            table = {}
            for onum, ooff in pairs:
                body = _Parser(data, first + ooff, doc=self)
                try:
                    table[onum] = body.parse_object()
                except PdfError:
                    table[onum] = None
            self._objstm_cache[container_num] = table
        return self._objstm_cache[container_num].get(want_num)

    def resolve(self, obj, depth: int = 0):
        while isinstance(obj, Ref):
            if depth > 32:
                raise PdfError("reference chain too deep")
            obj = self.object(obj.num)
            depth += 1
        return obj

    # -- streams -----------------------------------------------------------

    def stream_data(self, stm: StreamObj) -> bytes:
        data = stm.raw
        filters = self.resolve(stm.dict.get("Filter"))
        if filters is None:
            return data
        if not isinstance(filters, list):
            filters = [filters]
        parms = self.resolve(stm.dict.get("DecodeParms", stm.dict.get("DP")))
        if not isinstance(parms, list):
            parms = [parms] * len(filters)
        for flt, parm in zip(filters, parms):
            flt = str(self.resolve(flt))
            parm = self.resolve(parm) or {}
            if flt in ("FlateDecode", "Fl"):
                data = _inflate(data)
                data = self._unpredict(data, parm)
            elif flt in ("ASCIIHexDecode", "AHx"):
                hexdigits = re.sub(rb"[^0-9A-Fa-f]", b"", data.split(b">")[0])
                if len(hexdigits) % 2:
                    hexdigits += b"0"
                data = binascii.unhexlify(hexdigits)
            elif flt in ("ASCII85Decode", "A85"):
                body = re.sub(rb"\s", b"", data)
                if body.endswith(b"~>"):
                    body = body[:-2]
                data = base64.a85decode(body)
            elif flt == "RunLengthDecode":
                data = _run_length_decode(data)
            else:
                raise PdfError(f"unsupported stream filter {flt}")
        return data

    def _unpredict(self, data: bytes, parm: dict) -> bytes:
        predictor = int(self.resolve(parm.get("Predictor", 1)) or 1)
        if predictor <= 1:
            return data
        columns = int(self.resolve(parm.get("Columns", 1)) or 1)
        colors = int(self.resolve(parm.get("Colors", 1)) or 1)
        bpc = int(self.resolve(parm.get("BitsPerComponent", 8)) or 8)
        if predictor == 2:
            bpp = max(1, (colors * bpc + 7) // 8)
            rowlen = columns * bpp
            out = bytearray(data)
            for r in range(0, len(out) - rowlen + 1, rowlen):
                for j in range(bpp, rowlen):
                    out[r + j] = (out[r + j] + out[r + j - bpp]) & 0xFF
            return bytes(out)
        if predictor >= 10:
            return _png_unpredict(data, columns, colors, bpc)
        raise PdfError(f"unsupported predictor {predictor}")

    # -- page tree -----------------------------------------------------------

    def pages(self) -> list[dict]:
        """Flattened page dictionaries with inherited Resources merged in."""
        root_pages = self.resolve(self.root.get("Pages"))
        if root_pages is None:
            return []
        out: list[dict] = []
        seen: set[int] = set()

        def walk(node_ref, inherited, depth):
            if depth > 64 or len(out) > 50_000:
                raise PdfError("page tree too deep or too large")
            if isinstance(node_ref, Ref):
                if node_ref.num in seen:
                    return
                seen.add(node_ref.num)
            node = self.resolve(node_ref)
            if not isinstance(node, dict):
                return
            merged = dict(inherited)
            for key in ("Resources", "MediaBox", "Rotate"):
                if key in node:
                    merged[key] = node[key]
            kids = self.resolve(node.get("Kids"))
            node_type = node.get("Type")
            if node_type == "Pages" or (node_type is None and isinstance(kids, list)):
                for kid in kids or []:
                    walk(kid, merged, depth + 1)
            else:
                page = dict(node)
                page.update(merged)
                out.append(page)

        walk(root_pages, {}, 0)
        return out

    def page_contents(self, page: dict) -> bytes:
        contents = self.resolve(page.get("Contents"))
        if contents is None:
            return b""
        if isinstance(contents, StreamObj):
            return self.stream_data(contents)
        if isinstance(contents, list):
            parts = []
            for ref in contents:
                stm = self.resolve(ref)
                if isinstance(stm, StreamObj):
                    parts.append(self.stream_data(stm))
            return b"\n".join(parts)
        return b""


def _run_length_decode(data: bytes) -> bytes:
    out = bytearray()
    i = 0
    while i < len(data):
        n = data[i]
        i += 1
        if n == 128:
            break
        if n < 128:
            out += data[i:i + n + 1]
            i += n + 1
        else:
            if i < len(data):
                out += bytes([data[i]]) * (257 - n)
                i += 1
    return bytes(out)


# -- font decoding -----------------------------------------------------------

_AGL = {
    "space": " ", "exclam": "!", "quotedbl": '"', "numbersign": "#", "dollar": "$",
    "percent": "%", "ampersand": "&", "quotesingle": "'", "parenleft": "(",
    "parenright": ")", "asterisk": "*", "plus": "+", "comma": ",", "hyphen": "-",
    "period": ".", "slash": "/", "colon": ":", "semicolon": ";", "less": "<",
    "equal": "=", "greater": ">", "question": "?", "at": "@", "bracketleft": "[",
    "backslash": "\\", "bracketright": "]", "asciicircum": "^", "underscore": "_",
    "grave": "`", "braceleft": "{", "bar": "|", "braceright": "}", "asciitilde": "~",
    "quoteleft": "‘", "quoteright": "’", "quotedblleft": "“",
    "quotedblright": "”", "endash": "–", "emdash": "—",
    "bullet": "•", "ellipsis": "…", "fi": "ﬁ", "fl": "ﬂ",
    "dagger": "†", "daggerdbl": "‡", "trademark": "™",
    "copyright": "©", "registered": "®", "degree": "°",
    "minus": "−", "multiply": "×", "divide": "÷",
    "germandbls": "ß", "adieresis": "ä", "odieresis": "ö",
    "udieresis": "ü", "Adieresis": "Ä", "Odieresis": "Ö",
    "Udieresis": "Ü", "eacute": "é", "egrave": "è",
    "agrave": "à", "ccedilla": "ç", "euro": "€",
    "sterling": "£", "yen": "¥", "cent": "¢", "section": "§",
    "paragraph": "¶", "periodcentered": "·", "middot": "·",
    "quotesinglbase": "‚", "quotedblbase": "„", "guilsinglleft": "‹",
    "guilsinglright": "›", "guillemotleft": "«", "guillemotright": "»",
    "nbspace": " ", "softhyphen": "­", "oe": "œ", "OE": "Œ",
    "ae": "æ", "AE": "Æ", "oslash": "ø", "Oslash": "Ø",
    "aring": "å", "Aring": "Å", "ntilde": "ñ", "Ntilde": "Ñ",
}
for _ch in "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ":
    _AGL[_ch] = _ch
for _i, _word in enumerate(["zero", "one", "two", "three", "four", "five", "six",
                            "seven", "eight", "nine"]):
    _AGL[_word] = str(_i)


def _glyph_to_char(name: str) -> str:
    if name in _AGL:
        return _AGL[name]
    if name.startswith("uni") and len(name) >= 7:
        try:
            return chr(int(name[3:7], 16))
        except ValueError:
            pass
    if name.startswith("u") and len(name) in (5, 7):
        try:
            return chr(int(name[1:], 16))
        except ValueError:
            pass
    if len(name) == 1:
        return name
    return ""


def _codec_table(codec: str) -> list[str]:
    table = []
    for i in range(256):
        try:
            ch = bytes([i]).decode(codec)
        except (UnicodeDecodeError, LookupError):
            ch = ""
        table.append(ch)
    return table


class _FontDecoder:
    __slots__ = ("table", "cmap", "two_byte")

    def __init__(self, table=None, cmap=None, two_byte=False):
        self.table = table
        self.cmap = cmap
        self.two_byte = two_byte

    def decode(self, raw: bytes) -> str:
        if self.two_byte:
            out = []
            for i in range(0, len(raw) - 1, 2):
                code = (raw[i] << 8) | raw[i + 1]
                out.append(self.cmap.get(code, "") if self.cmap else "")
            return "".join(out)
        if self.cmap is not None:
            return "".join(self.cmap.get(b, self.table[b] if self.table else "") for b in raw)
        if self.table is not None:
            return "".join(self.table[b] for b in raw)
        return raw.decode("latin-1", errors="ignore")


_HEX_PAIR_RE = re.compile(r"<([0-9A-Fa-f]+)>\s*<([0-9A-Fa-f]+)>")
_BFRANGE_TRIPLE_RE = re.compile(r"<([0-9A-Fa-f]+)>\s*<([0-9A-Fa-f]+)>\s*<([0-9A-Fa-f]+)>")
_BFRANGE_ARRAY_RE = re.compile(r"<([0-9A-Fa-f]+)>\s*<([0-9A-Fa-f]+)>\s*\[(.*?)\]", re.S)


def _utf16be_hex(hexstr: str) -> str:
    raw = bytes.fromhex(hexstr if len(hexstr) % 2 == 0 else hexstr + "0")
    if len(raw) % 2:
        raw += b"\x00"
    try:
        return raw.decode("utf-16-be")
    except UnicodeDecodeError:
        return ""


def _parse_tounicode(data: bytes) -> dict[int, str]:
    text = data.decode("latin-1", errors="ignore")
    mapping: dict[int, str] = {}
    for m in re.finditer(r"beginbfchar(.*?)endbfchar", text, re.S):
        for src, dst in _HEX_PAIR_RE.findall(m.group(1)):
            mapping[int(src, 16)] = _utf16be_hex(dst)
    for m in re.finditer(r"beginbfrange(.*?)endbfrange", text, re.S):
        body = m.group(1)
        for lo, hi, arr in _BFRANGE_ARRAY_RE.findall(body):
            dsts = re.findall(r"<([0-9A-Fa-f]+)>", arr)
            for offset, dst in enumerate(dsts):
                mapping[int(lo, 16) + offset] = _utf16be_hex(dst)
        body_no_arrays = _BFRANGE_ARRAY_RE.sub("", body)
        for lo, hi, dst in _BFRANGE_TRIPLE_RE.findall(body_no_arrays):
            lo_i, hi_i = int(lo, 16), int(hi, 16)
            base = int(dst, 16)
            width = len(dst)
            for code in range(lo_i, min(hi_i, lo_i + 65535) + 1):
                mapping[code] = _utf16be_hex(format(base + (code - lo_i), f"0{width}x"))
    return mapping


def _build_font_decoder(doc: PdfDocument, font: dict) -> _FontDecoder:
    subtype = font.get("Subtype")
    tounicode = doc.resolve(font.get("ToUnicode"))
    cmap = None
    if isinstance(tounicode, StreamObj):
        try:
            cmap = _parse_tounicode(doc.stream_data(tounicode))
        except PdfError:
            cmap = None
    if subtype == "Type0":
        return _FontDecoder(cmap=cmap or {}, two_byte=True)
    encoding = doc.resolve(font.get("Encoding"))
    base = "cp1252"
    differences = None
    if isinstance(encoding, Name) or isinstance(encoding, str):
        if str(encoding) == "MacRomanEncoding":
            base = "mac_roman"
    elif isinstance(encoding, dict):
        if str(encoding.get("BaseEncoding", "")) == "MacRomanEncoding":
            base = "mac_roman"
        differences = doc.resolve(encoding.get("Differences"))
    table = _codec_table(base)
    if isinstance(differences, list):
        code = 0
        for item in differences:
            if isinstance(item, (int, float)):
                code = int(item)
            elif isinstance(item, Name):
                if 0 <= code < 256:
                    table[code] = _glyph_to_char(str(item))
                code += 1
    return _FontDecoder(table=table, cmap=cmap)


# -- content interpretation ---------------------------------------------------

@dataclass(frozen=True)
class TextLine:
    """One baseline-grouped line of text with its device-space position."""

    page: int
    x: float
    y: float
    size: float
    text: str


_IDENTITY = (1.0, 0.0, 0.0, 1.0, 0.0, 0.0)


def _mat_mul(m1, m2):
    a1, b1, c1, d1, e1, f1 = m1
    a2, b2, c2, d2, e2, f2 = m2
    return (
        a1 * a2 + b1 * c2,
        a1 * b2 + b1 * d2,
        c1 * a2 + d1 * c2,
        c1 * b2 + d1 * d2,
        e1 * a2 + f1 * c2 + e2,
        e1 * b2 + f1 * d2 + f2,
    )


def _translate(tx, ty):
    return (1.0, 0.0, 0.0, 1.0, tx, ty)


@dataclass
class _Show:
    page: int
    x: float
    y: float
    size: float
    text: str
    order: int


def _num(value, default=0.0):
    return float(value) if isinstance(value, (int, float)) else default


class _ContentInterpreter:
    """Executes the text-relevant subset of content-stream operators."""

    WORD_GAP_MILLIS = -180.0  # TJ offsets below this count as a word break

    def __init__(self, doc: PdfDocument, page_index: int, shows: list[_Show]):
        self.doc = doc
        self.page = page_index
        self.shows = shows

    def run(self, content: bytes, resources: dict, ctm=_IDENTITY, depth: int = 0):
        if depth > 8:
            return
        resources = self.doc.resolve(resources) or {}
        fonts = {}
        font_dict = self.doc.resolve(resources.get("Font"))
        if isinstance(font_dict, dict):
            for name, ref in font_dict.items():
                f = self.doc.resolve(ref)
                if isinstance(f, dict):
                    fonts[name] = _build_font_decoder(self.doc, f)
        xobjects = self.doc.resolve(resources.get("XObject"))
        if not isinstance(xobjects, dict):
            xobjects = {}

        parser = _Parser(content, 0, doc=self.doc, allow_refs=False)
        stack: list = []
        gstack: list = []
        tm = tlm = None
        leading = 0.0
        size = 0.0
        font: _FontDecoder | None = None

        def show_bytes(raw: bytes):
            nonlocal tm
            if tm is None or not raw:
                return
            text = font.decode(raw) if font else raw.decode("latin-1", errors="ignore")
            if not text:
                return
            m = _mat_mul(tm, ctm)
            eff_size = abs(size) * hypot(m[2], m[3]) or 1.0
            self.shows.append(_Show(self.page, m[4], m[5], eff_size, text, len(self.shows)))

        def next_line(tx, ty):
            nonlocal tm, tlm
            if tlm is None:
                tlm = _IDENTITY
            tlm = _mat_mul(_translate(tx, ty), tlm)
            tm = tlm

        while True:
            parser.skip_ws()
            if parser.pos >= len(content):
                break
            try:
                token = parser.parse_object()
            except PdfError:
                break
            if not (isinstance(token, tuple) and len(token) == 2 and token[0] == "kw"):
                stack.append(token)
                continue
            op = token[1]
            if op == b"BT":
                tm = tlm = _IDENTITY
            elif op == b"ET":
                tm = tlm = None
            elif op == b"Tf" and len(stack) >= 2:
                fname = stack[-2]
                size = _num(stack[-1])
                font = fonts.get(str(fname))
            elif op == b"Td" and len(stack) >= 2:
                next_line(_num(stack[-2]), _num(stack[-1]))
            elif op == b"TD" and len(stack) >= 2:
                leading = -_num(stack[-1])
                next_line(_num(stack[-2]), _num(stack[-1]))
            elif op == b"Tm" and len(stack) >= 6:
                tm = tlm = tuple(_num(v) for v in stack[-6:])
            elif op == b"T*":
                next_line(0.0, -leading)
            elif op == b"TL" and stack:
                leading = _num(stack[-1])
            elif op == b"Tj" and stack:
                if isinstance(stack[-1], bytes):
                    show_bytes(stack[-1])
            elif op == b"TJ" and stack:
                if isinstance(stack[-1], list):
                    parts: list[str] = []
                    for elem in stack[-1]:
                        if isinstance(elem, bytes):
                            parts.append(font.decode(elem) if font else elem.decode("latin-1", "ignore"))
                        elif isinstance(elem, (int, float)) and float(elem) < self.WORD_GAP_MILLIS:
                            parts.append(" ")
                    joined = "".join(parts)
                    if joined:
                        m = _mat_mul(tm, ctm) if tm else None
                        if m is not None:
                            eff_size = abs(size) * hypot(m[2], m[3]) or 1.0
                            self.shows.append(_Show(self.page, m[4], m[5], eff_size, joined, len(self.shows)))
            elif op == b"'" and stack:
                next_line(0.0, -leading)
                if isinstance(stack[-1], bytes):
                    show_bytes(stack[-1])
            elif op == b'"' and len(stack) >= 3:
                next_line(0.0, -leading)
                if isinstance(stack[-1], bytes):
                    show_bytes(stack[-1])
            elif op == b"cm" and len(stack) >= 6:
                ctm = _mat_mul(tuple(_num(v) for v in stack[-6:]), ctm)
            elif op == b"q":
                gstack.append(ctm)
            elif op == b"Q":
                if gstack:
                    ctm = gstack.pop()
            elif op == b"Do" and stack:
                target = xobjects.get(str(stack[-1]))
                xobj = self.doc.resolve(target)
                if isinstance(xobj, StreamObj) and xobj.dict.get("Subtype") == "Form":
                    inner_ctm = ctm
                    matrix = self.doc.resolve(xobj.dict.get("Matrix"))
                    if isinstance(matrix, list) and len(matrix) == 6:
                        inner_ctm = _mat_mul(tuple(_num(v) for v in matrix), ctm)
                    try:
                        inner = self.doc.stream_data(xobj)
                    except PdfError:
                        inner = b""
                    self.run(inner, xobj.dict.get("Resources") or resources, inner_ctm, depth + 1)
            elif op == b"BI":
                # inline image: skip binary payload up to EI
                id_pos = content.find(b"ID", parser.pos)
                if id_pos < 0:
                    break
                m = re.compile(rb"\sEI(?=[\s\]/>]|$)").search(content, id_pos + 2)
                parser.pos = len(content) if m is None else m.end()
            stack.clear()


def extract_text_lines(data: bytes) -> tuple[list[TextLine], int]:
    """Parse PDF bytes into baseline-grouped text lines.

    Returns (lines, page_count). Lines are ordered by page, top to bottom,
    left to right. Raises PdfError for malformed or encrypted input.
    """
    doc = PdfDocument(data)
    pages = doc.pages()
    shows: list[_Show] = []
    for page_index, page in enumerate(pages):
        interp = _ContentInterpreter(doc, page_index, shows)
        try:
            content = doc.page_contents(page)
        except PdfError:
            continue
        if content:
            interp.run(content, page.get("Resources") or {})
    return _group_lines(shows), len(pages)


def _group_lines(shows: list[_Show]) -> list[TextLine]:
    lines: list[TextLine] = []
    by_page: dict[int, list[_Show]] = {}
    for s in shows:
        if s.text.strip():
            by_page.setdefault(s.page, []).append(s)
    for page in sorted(by_page):
        page_shows = sorted(by_page[page], key=lambda s: (-s.y, s.order))
        current: list[_Show] = []
        current_y = None

        def flush():
            if not current:
                return
            frags = sorted(current, key=lambda s: (s.x, s.order))
            text = frags[0].text
            for frag in frags[1:]:
                if text.endswith(" ") or frag.text.startswith(" "):
                    text += frag.text
                else:
                    text += " " + frag.text
            lines.append(TextLine(page=page, x=frags[0].x, y=current_y,
                                  size=max(f.size for f in frags), text=text))

        for s in page_shows:
            tol = max(s.size, 1.0) * 0.3
            if current_y is None or abs(s.y - current_y) <= tol:
                current.append(s)
                current_y = s.y if current_y is None else current_y
            else:
                flush()
                current = [s]
                current_y = s.y
        flush()
    return lines
