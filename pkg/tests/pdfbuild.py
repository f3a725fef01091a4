"""Hand-built minimal PDFs with exactly known content, for extractor tests."""

from __future__ import annotations

import zlib


def build_pdf(bodies: list[bytes], trailer_extra: bytes = b"") -> bytes:
    """Assemble numbered objects (1-based, in list order) into a classic-xref PDF."""
    out = bytearray(b"%PDF-1.4\n")
    offsets = [0]
    for num, body in enumerate(bodies, start=1):
        offsets.append(len(out))
        out += f"{num} 0 obj\n".encode() + body + b"\nendobj\n"
    xref_pos = len(out)
    out += f"xref\n0 {len(bodies) + 1}\n".encode()
    out += b"0000000000 65535 f \n"
    for off in offsets[1:]:
        out += f"{off:010d} 00000 n \n".encode()
    out += (b"trailer\n<< /Size " + str(len(bodies) + 1).encode()
            + b" /Root 1 0 R " + trailer_extra + b" >>\nstartxref\n"
            + str(xref_pos).encode() + b"\n%%EOF\n")
    return bytes(out)


def _stream_obj(content: bytes, compress: bool) -> bytes:
    if compress:
        data = zlib.compress(content)
        return (b"<< /Length " + str(len(data)).encode()
                + b" /Filter /FlateDecode >>\nstream\n" + data + b"\nendstream")
    return b"<< /Length " + str(len(content)).encode() + b" >>\nstream\n" + content + b"\nendstream"


def make_pdf(page_streams: list[str], compress: bool = False, encrypted: bool = False) -> bytes:
    """One content stream per page; Helvetica/WinAnsi as /F1."""
    n = len(page_streams)
    font_num = 3 + 2 * n
    kids = " ".join(f"{3 + 2 * i} 0 R" for i in range(n))
    bodies: list[bytes] = [
        b"<< /Type /Catalog /Pages 2 0 R >>",
        f"<< /Type /Pages /Kids [{kids}] /Count {n} >>".encode(),
    ]
    for i, ops in enumerate(page_streams):
        bodies.append(
            (f"<< /Type /Page /Parent 2 0 R /MediaBox [0 0 612 792] "
             f"/Resources << /Font << /F1 {font_num} 0 R >> >> "
             f"/Contents {4 + 2 * i} 0 R >>").encode())
        bodies.append(_stream_obj(ops.encode("latin-1"), compress))
    bodies.append(b"<< /Type /Font /Subtype /Type1 /BaseFont /Helvetica /Encoding /WinAnsiEncoding >>")
    trailer_extra = b""
    if encrypted:
        bodies.append(b"<< /Filter /Standard /V 1 /R 2 /O (x) /U (y) /P -44 >>")
        trailer_extra = f"/Encrypt {len(bodies)} 0 R".encode()
    return build_pdf(bodies, trailer_extra)


def text_ops(lines: list[tuple[float, float, float, str]]) -> str:
    """(x, y, size, text) tuples -> content-stream text operators."""
    ops = []
    for x, y, size, text in lines:
        escaped = text.replace("\\", r"\\").replace("(", r"\(").replace(")", r"\)")
        ops.append(f"BT /F1 {size:g} Tf {x:g} {y:g} Td ({escaped}) Tj ET")
    return "\n".join(ops)


PARAGRAPH_LINES = [
    (72.0, 720.0, 12.0, "Climate risk management practices improved across the banking sector this year."),
    (72.0, 706.0, 12.0, "The board of directors maintained direct oversight of climate related issues."),
]

TABLE_LINES = [
    (72.0, 600.0, 10.0, "2019 2020 2021"),
    (72.0, 588.0, 10.0, "104 221 342"),
]


def paragraph_and_table_pdf(compress: bool = False) -> bytes:
    """One page: a two-line paragraph block, a large gap, then a numeric table block."""
    return make_pdf([text_ops(PARAGRAPH_LINES + TABLE_LINES)], compress=compress)


def empty_pdf() -> bytes:
    """Structurally valid PDF with zero pages."""
    return build_pdf([
        b"<< /Type /Catalog /Pages 2 0 R >>",
        b"<< /Type /Pages /Kids [] /Count 0 >>",
    ])


def _png_predict_up(data: bytes, columns: int) -> bytes:
    """Apply PNG 'Up' row filtering (predictor 12) so readers must undo it."""
    out = bytearray()
    prev = bytes(columns)
    for i in range(0, len(data), columns):
        row = data[i:i + columns]
        out.append(2)
        out += bytes((row[j] - prev[j]) & 0xFF for j in range(len(row)))
        prev = row
    return bytes(out)


def xref_stream_pdf() -> bytes:
    """Same paragraph+table page, but with an xref stream and an object stream.

    Objects 1 (catalog), 2 (pages), 3 (page), 5 (font) live inside object
    stream 6; the content stream (4) and the xref stream (7) are standalone.
    """
    ops = text_ops(PARAGRAPH_LINES + TABLE_LINES).encode("latin-1")
    packed = [
        b"<< /Type /Catalog /Pages 2 0 R >>",
        b"<< /Type /Pages /Kids [3 0 R] /Count 1 >>",
        (b"<< /Type /Page /Parent 2 0 R /MediaBox [0 0 612 792] "
         b"/Resources << /Font << /F1 5 0 R >> >> /Contents 4 0 R >>"),
        b"<< /Type /Font /Subtype /Type1 /BaseFont /Helvetica /Encoding /WinAnsiEncoding >>",
    ]
    numbers = [1, 2, 3, 5]
    offsets, body = [], b""
    for obj in packed:
        offsets.append(len(body))
        body += obj + b"\n"
    header = " ".join(f"{n} {o}" for n, o in zip(numbers, offsets)).encode() + b"\n"
    objstm_data = header + body
    objstm = (b"<< /Type /ObjStm /N 4 /First " + str(len(header)).encode()
              + b" /Length " + str(len(objstm_data)).encode() + b" >>\nstream\n"
              + objstm_data + b"\nendstream")
    content = b"<< /Length " + str(len(ops)).encode() + b" >>\nstream\n" + ops + b"\nendstream"

    out = bytearray(b"%PDF-1.5\n")
    positions = {}
    for num, objbytes in ((4, content), (6, objstm)):
        positions[num] = len(out)
        out += f"{num} 0 obj\n".encode() + objbytes + b"\nendobj\n"

    xref_pos = len(out)
    rows = bytearray()

    def row(etype, f2, f3):
        rows.append(etype)
        rows.extend(f2.to_bytes(2, "big"))
        rows.append(f3)

    row(0, 0, 0)                      # 0: free
    row(2, 6, 0)                      # 1
    row(2, 6, 1)                      # 2
    row(2, 6, 2)                      # 3
    row(1, positions[4], 0)           # 4
    row(2, 6, 3)                      # 5
    row(1, positions[6], 0)           # 6
    row(1, xref_pos, 0)               # 7 (self)
    filtered = zlib.compress(_png_predict_up(bytes(rows), columns=4))
    out += f"7 0 obj\n".encode()
    out += (b"<< /Type /XRef /Size 8 /W [1 2 1] /Index [0 8] /Root 1 0 R "
            b"/Filter /FlateDecode /DecodeParms << /Predictor 12 /Columns 4 >> "
            b"/Length " + str(len(filtered)).encode() + b" >>\nstream\n" + filtered + b"\nendstream\nendobj\n")
    out += b"startxref\n" + str(xref_pos).encode() + b"\n%%EOF\n"
    return bytes(out)


def differences_encoding_pdf() -> bytes:
    """Byte 0x41 remapped to /bullet via an encoding /Differences array."""
    ops = b"BT /F1 12 Tf 72 700 Td (A climate point) Tj ET"
    bodies = [
        b"<< /Type /Catalog /Pages 2 0 R >>",
        b"<< /Type /Pages /Kids [3 0 R] /Count 1 >>",
        (b"<< /Type /Page /Parent 2 0 R /MediaBox [0 0 612 792] "
         b"/Resources << /Font << /F1 5 0 R >> >> /Contents 4 0 R >>"),
        b"<< /Length " + str(len(ops)).encode() + b" >>\nstream\n" + ops + b"\nendstream",
        (b"<< /Type /Font /Subtype /Type1 /BaseFont /Helvetica "
         b"/Encoding << /BaseEncoding /WinAnsiEncoding /Differences [65 /bullet] >> >>"),
    ]
    return build_pdf(bodies)


def type0_tounicode_pdf() -> bytes:
    """Composite font with 2-byte codes mapped through a ToUnicode CMap."""
    cmap = (b"/CIDInit /ProcSet findresource begin\n"
            b"begincmap\n"
            b"beginbfchar\n"
            b"<0001> <0043>\n"  # C
            b"<0002> <004F>\n"  # O
            b"<0003> <0020>\n"  # space
            b"endbfchar\n"
            b"beginbfrange\n"
            b"<0010> <0012> <0061>\n"  # a b c
            b"endbfrange\n"
            b"endcmap\nend\n")
    ops = b"BT /F1 12 Tf 72 700 Td <00010002 0003 001000110012> Tj ET"
    bodies = [
        b"<< /Type /Catalog /Pages 2 0 R >>",
        b"<< /Type /Pages /Kids [3 0 R] /Count 1 >>",
        (b"<< /Type /Page /Parent 2 0 R /MediaBox [0 0 612 792] "
         b"/Resources << /Font << /F1 5 0 R >> >> /Contents 4 0 R >>"),
        b"<< /Length " + str(len(ops)).encode() + b" >>\nstream\n" + ops + b"\nendstream",
        (b"<< /Type /Font /Subtype /Type0 /BaseFont /Fake-Identity-H "
         b"/Encoding /Identity-H /ToUnicode 6 0 R >>"),
        b"<< /Length " + str(len(cmap)).encode() + b" >>\nstream\n" + cmap + b"\nendstream",
    ]
    return build_pdf(bodies)


def broken_xref_pdf() -> bytes:
    """Valid objects but a corrupt xref table; readers must fall back to scanning."""
    good = make_pdf([text_ops(PARAGRAPH_LINES)])
    xref_at = good.rfind(b"xref")
    return good[:xref_at] + b"xref\n0 notanumber\ngarbage\n" + good[good.rfind(b"trailer"):]


def image_only_pdf() -> bytes:
    """One page whose content stream draws a rectangle and no text."""
    return make_pdf(["0 0 1 RG 72 600 200 100 re S"])


def encrypted_pdf() -> bytes:
    return make_pdf([text_ops(PARAGRAPH_LINES)], encrypted=True)
