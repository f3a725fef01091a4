"""Corpus data model: banks, reports, layout blocks, text sequences, and corpus statistics."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import DomainError, FormatError

LARGE_ASSET_FLOOR = 500e9
MEDIUM_ASSET_FLOOR = 50e9


class Region(str, Enum):
    ASIA_PACIFIC = "AsiaPacific"
    EUROPE = "Europe"
    LATIN_AMERICA = "LatinAmerica"
    MIDDLE_EAST_AFRICA = "MiddleEastAfrica"
    NORTH_AMERICA = "NorthAmerica"


class SizeClass(str, Enum):
    LARGE = "Large"
    MEDIUM = "Medium"
    SMALL = "Small"


class ReportCategory(str, Enum):
    ANNUAL = "Annual"
    CDP = "CDP"
    CORPORATE_GOVERNANCE = "CorporateGovernance"
    INTEGRATED = "Integrated"
    REMUNERATION = "Remuneration"
    SUSTAINABILITY = "Sustainability"
    TCFD = "TCFD"


class BlockTag(str, Enum):
    BODY_CONTENT = "BodyContent"
    ABSTRACT = "Abstract"
    TITLE = "Title"
    FIGURE = "Figure"
    TABLE = "Table"
    OTHER = "Other"


KEPT_TAGS = frozenset({BlockTag.BODY_CONTENT, BlockTag.ABSTRACT})


def classify_size(total_assets_usd: float) -> SizeClass:
    """Map total assets (USD) to a size class: >500e9 Large, [50e9, 500e9] Medium, <50e9 Small."""
    if total_assets_usd < 0:
        raise DomainError(f"total assets must be non-negative, got {total_assets_usd!r}")
    if total_assets_usd > LARGE_ASSET_FLOOR:
        return SizeClass.LARGE
    if total_assets_usd >= MEDIUM_ASSET_FLOOR:
        return SizeClass.MEDIUM
    return SizeClass.SMALL


@dataclass(frozen=True)
class BankRecord:
    bank_id: str
    name: str
    region: Region
    total_assets_usd: float

    def __post_init__(self):
        if self.total_assets_usd < 0:
            raise DomainError(f"bank {self.bank_id}: negative total assets")

    @property
    def size_class(self) -> SizeClass:
        # derived, so it can never disagree with the raw amount
        return classify_size(self.total_assets_usd)


@dataclass(frozen=True)
class ReportDocument:
    report_id: str
    bank_id: str
    category: ReportCategory
    financial_year: int
    page_count: int = 1

    def __post_init__(self):
        if self.page_count < 1:
            raise DomainError(f"report {self.report_id}: page_count must be positive")


@dataclass(frozen=True)
class LayoutBlock:
    report_id: str
    block_index: int
    tag: BlockTag
    text: str
    page: int


@dataclass(frozen=True)
class TextSequence:
    sequence_id: str
    report_id: str
    ordinal: int
    text: str
    token_count: int

    def __post_init__(self):
        if not self.text:
            raise DomainError(f"sequence {self.sequence_id}: empty text")
        if self.token_count < 1:
            raise DomainError(f"sequence {self.sequence_id}: token_count must be positive")


@dataclass(frozen=True)
class WarningRecord:
    """Non-fatal pipeline event worth surfacing (image-only PDF, truncated sentence)."""

    kind: str
    report_id: str
    detail: str


def filter_body(blocks: Sequence[LayoutBlock]) -> list[LayoutBlock]:
    """Keep body-content and abstract blocks only, preserving order; idempotent."""
    return [block for block in blocks if block.tag in KEPT_TAGS]


@dataclass(frozen=True)
class CategoryStats:
    category: ReportCategory
    n_reports: int
    avg_pages: float
    avg_sequences: float


@dataclass(frozen=True)
class RegionSizeCrossTab:
    """Bank counts by region and size class, with marginal sums."""

    counts: tuple[tuple[int, ...], ...]  # rows follow Region order, columns SizeClass order
    row_totals: tuple[int, ...]
    col_totals: tuple[int, ...]
    total: int

    @staticmethod
    def regions() -> tuple[Region, ...]:
        return tuple(Region)

    @staticmethod
    def size_classes() -> tuple[SizeClass, ...]:
        return tuple(SizeClass)


@dataclass(frozen=True)
class CorpusStats:
    categories: tuple[CategoryStats, ...]
    region_size: RegionSizeCrossTab
    n_reports: int
    n_sequences: int


def region_size_crosstab(banks: Iterable[BankRecord]) -> RegionSizeCrossTab:
    regions = tuple(Region)
    sizes = tuple(SizeClass)
    counts = [[0] * len(sizes) for _ in regions]
    for bank in banks:
        counts[regions.index(bank.region)][sizes.index(bank.size_class)] += 1
    row_totals = tuple(sum(row) for row in counts)
    col_totals = tuple(sum(row[j] for row in counts) for j in range(len(sizes)))
    return RegionSizeCrossTab(
        counts=tuple(tuple(row) for row in counts),
        row_totals=row_totals,
        col_totals=col_totals,
        total=sum(row_totals),
    )


def corpus_stats(reports: Sequence[ReportDocument], sequence_counts: Mapping[str, int],
                 banks: Iterable[BankRecord] = ()) -> CorpusStats:
    """Per-category report counts and means, plus the region-by-size bank cross-tab.

    ``sequence_counts`` maps report_id to its number of extracted sequences;
    reports missing from the mapping count as zero. Categories with no
    reports are emitted with zeros so the table shape is stable.
    """
    rows = []
    for category in ReportCategory:
        members = [r for r in reports if r.category is category]
        n = len(members)
        avg_pages = sum(r.page_count for r in members) / n if n else 0.0
        avg_sequences = sum(sequence_counts.get(r.report_id, 0) for r in members) / n if n else 0.0
        rows.append(CategoryStats(category, n, avg_pages, avg_sequences))
    return CorpusStats(
        categories=tuple(rows),
        region_size=region_size_crosstab(banks),
        n_reports=len(reports),
        n_sequences=sum(sequence_counts.get(r.report_id, 0) for r in reports),
    )


@dataclass(frozen=True)
class ManifestEntry:
    report_id: str
    bank_id: str
    category: ReportCategory
    financial_year: int
    path: str


def _read_tsv(path: Path, expected_header: list[str]) -> list[list[str]]:
    rows = []
    header_seen = False
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not raw.strip() or raw.startswith("#"):
            continue
        parts = raw.split("\t")
        if not header_seen:
            if parts != expected_header:
                raise FormatError(f"{path}:{lineno}: expected header {expected_header}, got {parts}")
            header_seen = True
            continue
        if len(parts) != len(expected_header):
            raise FormatError(f"{path}:{lineno}: expected {len(expected_header)} fields, got {len(parts)}")
        rows.append(parts)
    if not header_seen:
        raise FormatError(f"{path}: missing header line")
    return rows


MANIFEST_HEADER = ["report_id", "bank_id", "category", "financial_year", "path"]
REGISTRY_HEADER = ["bank_id", "name", "region", "total_assets_usd"]


def read_manifest(path: str | Path) -> list[ManifestEntry]:
    """Corpus manifest: one record per report (report_id, bank_id, category, financial_year, path)."""
    path = Path(path)
    entries = []
    for report_id, bank_id, category, year, file_path in _read_tsv(path, MANIFEST_HEADER):
        try:
            entries.append(ManifestEntry(report_id, bank_id, ReportCategory(category), int(year), file_path))
        except ValueError as exc:
            raise FormatError(f"{path}: report {report_id!r}: {exc}") from exc
    ids = [e.report_id for e in entries]
    if len(ids) != len(set(ids)):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise FormatError(f"{path}: duplicate report ids: {dupes}")
    return entries


def write_manifest(path: str | Path, entries: Sequence[ManifestEntry]) -> None:
    lines = ["\t".join(MANIFEST_HEADER)]
    for e in entries:
        lines.append("\t".join([e.report_id, e.bank_id, e.category.value, str(e.financial_year), e.path]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_registry(path: str | Path) -> dict[str, BankRecord]:
    """Bank registry: one record per bank (bank_id, name, region, total_assets_usd)."""
    path = Path(path)
    banks: dict[str, BankRecord] = {}
    for bank_id, name, region, assets in _read_tsv(path, REGISTRY_HEADER):
        if bank_id in banks:
            raise FormatError(f"{path}: duplicate bank id {bank_id!r}")
        try:
            banks[bank_id] = BankRecord(bank_id, name, Region(region), float(assets))
        except ValueError as exc:
            raise FormatError(f"{path}: bank {bank_id!r}: {exc}") from exc
    return banks


def write_registry(path: str | Path, banks: Iterable[BankRecord]) -> None:
    lines = ["\t".join(REGISTRY_HEADER)]
    for b in banks:
        lines.append("\t".join([b.bank_id, b.name, b.region.value, repr(b.total_assets_usd)]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
