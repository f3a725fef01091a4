"""Layout-block extraction: heuristic built-in backend plus pre-tagged file adapter."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence

from . import pdfio
from .corpus import BlockTag, LayoutBlock, WarningRecord
from .errors import ExtractionError, FormatError


@dataclass(frozen=True)
class ExtractionResult:
    blocks: tuple[LayoutBlock, ...]
    page_count: int
    warnings: tuple[WarningRecord, ...]


class ExtractorBackend(Protocol):
    """Turns one report's PDF bytes into tagged layout blocks."""

    name: str

    def extract(self, data: bytes, report_id: str) -> ExtractionResult: ...


def extract_blocks(data: bytes, extractor: ExtractorBackend, report_id: str) -> ExtractionResult:
    """Run an extractor backend over one document."""
    return extractor.extract(data, report_id)


@dataclass(frozen=True)
class HeuristicPdfExtractor:
    """Built-in backend: own PDF text extraction plus layout-tag heuristics.

    Lines are grouped into blocks on vertical gaps; a block whose digit
    density exceeds ``table_digit_density`` or whose mean words-per-line is
    below ``table_min_words_per_line`` is tagged Table, everything else
    BodyContent. Deliberately simple: it exists so the pipeline is
    self-contained, while real layout models plug in via the pre-tagged
    adapter.
    """

    block_gap_factor: float = 1.8
    table_digit_density: float = 0.4
    table_min_words_per_line: float = 3.0
    name: str = "heuristic"

    def extract(self, data: bytes, report_id: str) -> ExtractionResult:
        try:
            lines, page_count = pdfio.extract_text_lines(data)
        except pdfio.PdfError as exc:
            raise ExtractionError(str(exc), report_id=report_id) from exc
        blocks = []
        for index, group in enumerate(self._group_blocks(lines)):
            text = "\n".join(line.text for line in group)
            blocks.append(LayoutBlock(
                report_id=report_id,
                block_index=index,
                tag=self._tag(group),
                text=text,
                page=group[0].page + 1,
            ))
        warnings = []
        if page_count >= 1 and not any(b.text.strip() for b in blocks):
            warnings.append(WarningRecord(
                kind="no_text_extracted",
                report_id=report_id,
                detail=f"document has {page_count} page(s) but no extractable text (image-only?)",
            ))
        return ExtractionResult(blocks=tuple(blocks), page_count=page_count, warnings=tuple(warnings))

    def _group_blocks(self, lines: Sequence[pdfio.TextLine]) -> list[list[pdfio.TextLine]]:
        groups: list[list[pdfio.TextLine]] = []
        current: list[pdfio.TextLine] = []
        for line in lines:
            if current:
                prev = current[-1]
                gap = prev.y - line.y
                threshold = self.block_gap_factor * max(prev.size, line.size, 1.0)
                if line.page != prev.page or gap > threshold or gap < 0:
                    groups.append(current)
                    current = []
            current.append(line)
        if current:
            groups.append(current)
        return groups

    def _tag(self, group: Sequence[pdfio.TextLine]) -> BlockTag:
        chars = "".join(line.text for line in group)
        solid = [c for c in chars if not c.isspace()]
        digits = sum(c.isdigit() for c in solid)
        density = digits / len(solid) if solid else 0.0
        words_per_line = sum(len(line.text.split()) for line in group) / len(group)
        if density > self.table_digit_density or words_per_line < self.table_min_words_per_line:
            return BlockTag.TABLE
        return BlockTag.BODY_CONTENT


BLOCKS_HEADER = ["report_id", "block_index", "page", "tag", "text"]


def read_pretagged_blocks(path: str | Path) -> dict[str, list[LayoutBlock]]:
    """Read an external layout model's block file, keyed by report id."""
    path = Path(path)
    by_report: dict[str, list[LayoutBlock]] = {}
    header_seen = False
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not raw.strip() or raw.startswith("#"):
            continue
        parts = raw.split("\t")
        if not header_seen:
            if parts != BLOCKS_HEADER:
                raise FormatError(f"{path}:{lineno}: expected header {BLOCKS_HEADER}, got {parts}")
            header_seen = True
            continue
        if len(parts) != len(BLOCKS_HEADER):
            raise FormatError(f"{path}:{lineno}: expected {len(BLOCKS_HEADER)} fields, got {len(parts)}")
        report_id, block_index, page, tag, text = parts
        try:
            block = LayoutBlock(report_id, int(block_index), BlockTag(tag), text, int(page))
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from exc
        by_report.setdefault(report_id, []).append(block)
    if not header_seen:
        raise FormatError(f"{path}: missing header line")
    for report_id, blocks in by_report.items():
        blocks.sort(key=lambda b: b.block_index)
        indexes = [b.block_index for b in blocks]
        if len(set(indexes)) != len(indexes):
            raise FormatError(f"{path}: duplicate block_index for report {report_id!r}")
    return by_report


def write_pretagged_blocks(path: str | Path, blocks: Sequence[LayoutBlock]) -> None:
    lines = ["\t".join(BLOCKS_HEADER)]
    for b in blocks:
        text = b.text.replace("\t", " ").replace("\n", " ")
        lines.append("\t".join([b.report_id, str(b.block_index), str(b.page), b.tag.value, text]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class PretaggedBlockExtractor:
    """Adapter for any external layout model: blocks come from its export file.

    The PDF bytes are only used for the page count (best effort); tags are
    taken verbatim from the file.
    """

    blocks_by_report: dict[str, list[LayoutBlock]] = field(default_factory=dict)
    name: str = "pretagged"

    @classmethod
    def from_file(cls, path: str | Path) -> "PretaggedBlockExtractor":
        return cls(blocks_by_report=read_pretagged_blocks(path))

    def extract(self, data: bytes, report_id: str) -> ExtractionResult:
        if report_id not in self.blocks_by_report:
            raise ExtractionError("no pre-tagged blocks for this report", report_id=report_id)
        blocks = tuple(self.blocks_by_report[report_id])
        page_count = max((b.page for b in blocks), default=1)
        if data:
            try:
                _, parsed_pages = pdfio.extract_text_lines(data)
                page_count = max(page_count, parsed_pages)
            except pdfio.PdfError:
                pass
        return ExtractionResult(blocks=blocks, page_count=page_count, warnings=())
