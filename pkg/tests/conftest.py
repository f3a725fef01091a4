import math
from pathlib import Path

import pytest

from tcfdscan.corpus import BankRecord, Region, ReportCategory, ReportDocument
from tcfdscan.nli import LexicalMockBackend, ProbabilityRow
from tcfdscan.taxonomy import builtin_taxonomy

FIXTURES = Path(__file__).parent / "fixtures"

# region -> (large, medium, small) bank counts of the bundled registry fixture
REGISTRY_COUNTS = {
    Region.ASIA_PACIFIC: (15, 51, 24),
    Region.EUROPE: (23, 26, 17),
    Region.LATIN_AMERICA: (0, 4, 3),
    Region.MIDDLE_EAST_AFRICA: (0, 3, 2),
    Region.NORTH_AMERICA: (9, 8, 3),
}

_SIZE_ASSETS = (600e9, 100e9, 10e9)  # representative large/medium/small totals


@pytest.fixture(scope="session")
def labels():
    return builtin_taxonomy()


@pytest.fixture(scope="session")
def mock_backend():
    return LexicalMockBackend()


@pytest.fixture(scope="session")
def registry_banks():
    banks = []
    for region, counts in REGISTRY_COUNTS.items():
        for assets, count in zip(_SIZE_ASSETS, counts):
            for i in range(count):
                bank_id = f"{region.value[:4].lower()}-{assets:.0e}-{i:03d}"
                banks.append(BankRecord(bank_id, f"Bank {bank_id}", region, assets))
    return banks


def load_category_year_means() -> dict[str, dict[int, float]]:
    """label_code -> {year: mean} from the bundled category-level fixture."""
    series: dict[str, dict[int, float]] = {}
    lines = (FIXTURES / "category_year_means.tsv").read_text().splitlines()
    for line in lines[1:]:
        code, year, mean = line.split("\t")
        series.setdefault(code, {})[int(year)] = float(mean)
    return series


def category_fixture_rows() -> tuple[list[ProbabilityRow], dict[str, ReportDocument]]:
    """Probability rows + report metadata that reproduce the category-level fixture means.

    One synthetic report per year; one row per (year, label) whose p equals
    the published mean, so any correct mean recovers the fixture exactly.
    """
    series = load_category_year_means()
    reports = {}
    rows = []
    for code, by_year in series.items():
        for year, mean in by_year.items():
            report_id = f"fix-{year}"
            reports[report_id] = ReportDocument(report_id, f"bank-{year}", ReportCategory.ANNUAL, year, 1)
            rows.append(ProbabilityRow(f"{report_id}:{code}", report_id, code, mean))
    return rows, reports


@pytest.fixture(scope="session")
def category_fixture():
    return category_fixture_rows()


def close(a: float, b: float, tol: float = 1e-12) -> bool:
    return math.isclose(a, b, rel_tol=0.0, abs_tol=tol)


REPORT_TEXTS = {
    "r-alpha": [
        "The board of directors maintained direct oversight of climate related issues. "
        "Management assessed transition risks across the lending portfolio.",
        "Total assets grew moderately. Capital ratios stayed comfortably above requirements.",
    ],
    "r-beta": [
        "Carbon footprint metrics covered direct and indirect greenhouse gas emissions. "
        "Emissions reduction targets were tightened for carbon intensive sectors.",
        "Scenario models analysed the impact of climate related physical risks.",
    ],
    "r-gamma": [
        "Financing and investment for carbon intensive industries declined this year. "
        "The strategy remained resilient under different climate related scenarios.",
        "Remuneration policies now incorporate climate related performance metrics.",
    ],
}


@pytest.fixture(scope="session")
def three_report_corpus(tmp_path_factory):
    """Bundled mini-corpus: three generated report PDFs plus manifest and registry."""
    import pdfbuild

    root = tmp_path_factory.mktemp("corpus")
    pdf_dir = root / "pdfs"
    pdf_dir.mkdir()
    meta = {
        "r-alpha": ("bank-eu", ReportCategory.ANNUAL, 2017),
        "r-beta": ("bank-ap", ReportCategory.SUSTAINABILITY, 2021),
        "r-gamma": ("bank-na", ReportCategory.TCFD, 2021),
    }
    manifest_lines = ["report_id\tbank_id\tcategory\tfinancial_year\tpath"]
    for report_id, paragraphs in REPORT_TEXTS.items():
        lines = []
        y = 720.0
        for paragraph in paragraphs:
            lines.append((72.0, y, 12.0, paragraph))
            y -= 60.0
        lines.append((72.0, y, 10.0, "2019 2020 2021"))
        lines.append((72.0, y - 12.0, 10.0, "104 221 342"))
        (pdf_dir / f"{report_id}.pdf").write_bytes(pdfbuild.make_pdf([pdfbuild.text_ops(lines)]))
        bank_id, category, year = meta[report_id]
        manifest_lines.append(f"{report_id}\t{bank_id}\t{category.value}\t{year}\tpdfs/{report_id}.pdf")
    (root / "manifest.tsv").write_text("\n".join(manifest_lines) + "\n")
    registry_lines = [
        "bank_id\tname\tregion\ttotal_assets_usd",
        "bank-eu\tEuro Bank\tEurope\t6e+11",
        "bank-ap\tPacific Bank\tAsiaPacific\t1e+11",
        "bank-na\tNorth Bank\tNorthAmerica\t2e+10",
    ]
    (root / "registry.tsv").write_text("\n".join(registry_lines) + "\n")
    return root
