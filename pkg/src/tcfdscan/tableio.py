"""Readers and writers for the pipeline's delimited file formats.

All tables are UTF-8 TSV with a header row; provenance travels in leading
``# key=value`` comment lines. Values never contain tabs or newlines (text is
whitespace-normalized upstream; writers enforce it).
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .analytics import AggregateRow, DistributionStats, TrendSeries
from .corpus import CorpusStats, TextSequence, WarningRecord
from .errors import FormatError
from .evaluation import EvaluationReport, ProbabilityMatrix
from .nli import ProbabilityRow, ScoringFailure


def _clean(value: str) -> str:
    if "\t" in value or "\n" in value or "\r" in value:
        raise FormatError(f"field contains tab/newline: {value!r}")
    return value


def write_table(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[str]],
                provenance: Mapping[str, str] | None = None) -> None:
    lines = []
    for key, value in (provenance or {}).items():
        lines.append(f"# {key}={value}")
    lines.append("\t".join(header))
    for row in rows:
        lines.append("\t".join(_clean(str(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_table(path: str | Path, expected_header: Sequence[str] | None = None,
               ) -> tuple[list[list[str]], dict[str, str]]:
    """Returns (rows, provenance). Header is validated when expected_header is given."""
    path = Path(path)
    provenance: dict[str, str] = {}
    rows: list[list[str]] = []
    header: list[str] | None = None
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not raw.strip():
            continue
        if raw.startswith("#"):
            body = raw.lstrip("#").strip()
            if "=" in body:
                key, _, value = body.partition("=")
                provenance[key.strip()] = value.strip()
            continue
        parts = raw.split("\t")
        if header is None:
            header = parts
            if expected_header is not None and parts != list(expected_header):
                raise FormatError(f"{path}:{lineno}: expected header {list(expected_header)}, got {parts}")
            continue
        if len(parts) != len(header):
            raise FormatError(f"{path}:{lineno}: expected {len(header)} fields, got {len(parts)}")
        rows.append(parts)
    if header is None:
        raise FormatError(f"{path}: missing header line")
    return rows, provenance


SEQUENCES_HEADER = ["sequence_id", "report_id", "ordinal", "text", "token_count"]


def write_sequences(path: str | Path, sequences: Sequence[TextSequence],
                    provenance: Mapping[str, str] | None = None) -> None:
    write_table(path, SEQUENCES_HEADER,
                ([s.sequence_id, s.report_id, str(s.ordinal), s.text, str(s.token_count)]
                 for s in sequences),
                provenance)


def read_sequences(path: str | Path) -> list[TextSequence]:
    rows, _ = read_table(path, SEQUENCES_HEADER)
    out = []
    for sequence_id, report_id, ordinal, text, token_count in rows:
        out.append(TextSequence(sequence_id, report_id, int(ordinal), text, int(token_count)))
    return out


PROBABILITIES_HEADER = ["sequence_id", "report_id", "label_code", "p", "backend", "template_hash"]


def format_p(p: float) -> str:
    return f"{p:.6f}"


def write_probabilities(path: str | Path, rows: Sequence[ProbabilityRow], backend_identity: str,
                        template_hash: str, provenance: Mapping[str, str] | None = None) -> None:
    prov = {"backend": backend_identity, "template_hash": template_hash}
    prov.update(provenance or {})
    write_table(path, PROBABILITIES_HEADER,
                ([r.sequence_id, r.report_id, r.label_code, format_p(r.p), backend_identity, template_hash]
                 for r in rows),
                prov)


def read_probabilities(path: str | Path) -> tuple[list[ProbabilityRow], dict[str, str]]:
    rows, provenance = read_table(path, PROBABILITIES_HEADER)
    out = [ProbabilityRow(sid, rid, code, float(p)) for sid, rid, code, p, _, _ in rows]
    return out, provenance


def write_failures(path: str | Path, failures: Sequence[ScoringFailure]) -> None:
    write_table(path, ["sequence_id", "label_code", "message"],
                ([f.sequence_id, f.label_code or "", f.message.replace("\t", " ").replace("\n", " ")]
                 for f in failures))


def write_warnings(path: str | Path, warnings: Sequence[WarningRecord]) -> None:
    write_table(path, ["kind", "report_id", "detail"],
                ([w.kind, w.report_id, w.detail.replace("\t", " ").replace("\n", " ")]
                 for w in warnings))


def write_error_manifest(path: str | Path, errors: Sequence[tuple[str, str]]) -> None:
    """(report_id, message) pairs for per-file hard failures that did not stop the run."""
    write_table(path, ["report_id", "message"],
                ([rid, msg.replace("\t", " ").replace("\n", " ")] for rid, msg in errors))


def write_corpus_stats(path: str | Path, stats: CorpusStats,
                       provenance: Mapping[str, str] | None = None) -> None:
    rows = [[c.category.value, str(c.n_reports), f"{c.avg_pages:.2f}", f"{c.avg_sequences:.2f}"]
            for c in stats.categories]
    rows.append(["Total", str(stats.n_reports), "", ""])
    write_table(path, ["category", "n_reports", "avg_pages", "avg_sequences"], rows, provenance)


def write_region_size(path: str | Path, stats: CorpusStats,
                      provenance: Mapping[str, str] | None = None) -> None:
    ct = stats.region_size
    header = ["region"] + [s.value for s in ct.size_classes()] + ["total"]
    rows = []
    for region, counts, total in zip(ct.regions(), ct.counts, ct.row_totals):
        rows.append([region.value] + [str(c) for c in counts] + [str(total)])
    rows.append(["Total"] + [str(c) for c in ct.col_totals] + [str(ct.total)])
    write_table(path, header, rows, provenance)


def write_aggregates(path: str | Path, keys: Sequence[str], rows: Sequence[AggregateRow],
                     provenance: Mapping[str, str] | None = None) -> None:
    header = list(keys) + ["n", "mean", "mean_full"]

    def emit():
        for row in rows:
            values = [str(v) for _, v in row.keys]
            yield values + [str(row.n), f"{row.mean:.2f}", repr(row.mean)]

    write_table(path, header, emit(), provenance)


def write_trend_series(path: str | Path, series: TrendSeries,
                       provenance: Mapping[str, str] | None = None) -> None:
    header = ["financial_year", series.general_code, series.climate_code]

    def fmt(v):
        return "" if v is None else repr(v)

    rows = ([str(year), fmt(g), fmt(c)]
            for year, g, c in zip(series.years, series.general, series.climate))
    write_table(path, header, rows, provenance)


BOX_STATS_HEADER = ["label_code", "n", "min", "q1", "median", "q3", "max", "mean",
                    "lo_fence", "hi_fence"]


def write_box_stats(path: str | Path, stats: Sequence[tuple[DistributionStats, tuple[float, float]]],
                    provenance: Mapping[str, str] | None = None) -> None:
    rows = ([d.label_code, str(d.n), repr(d.min), repr(d.q1), repr(d.median), repr(d.q3),
             repr(d.max), repr(d.mean), repr(lo), repr(hi)]
            for d, (lo, hi) in stats)
    write_table(path, BOX_STATS_HEADER, rows, provenance)


def write_evaluation_table(path: str | Path, report: EvaluationReport,
                           provenance: Mapping[str, str] | None = None) -> None:
    """Metric-by-label grid: Recall/Precision/F1 rows, one column per label."""
    header = ["metric"] + [r.label_code for r in report.rows]
    rows = [
        ["Recall"] + [f"{r.recall:.2f}" for r in report.rows],
        ["Precision"] + [f"{r.precision:.2f}" for r in report.rows],
        ["F1-Score"] + [f"{r.f1:.2f}" for r in report.rows],
        ["Support"] + [str(r.support) for r in report.rows],
    ]
    prov = {
        "threshold": repr(report.threshold),
        "backend": report.backend_identity,
        "taxonomy_version": report.taxonomy_version,
    }
    prov.update(provenance or {})
    write_table(path, header, rows, prov)


def write_evaluation_summary(path: str | Path, report: EvaluationReport) -> None:
    payload = {
        "micro_f1": report.micro_f1,
        "macro_f1": report.macro_f1,
        "weighted_f1": report.weighted_f1,
        "threshold": report.threshold,
        "backend": report.backend_identity,
        "taxonomy_version": report.taxonomy_version,
        "labels": [
            {
                "label_code": r.label_code,
                "support": r.support,
                "true_positives": r.true_positives,
                "false_positives": r.false_positives,
                "false_negatives": r.false_negatives,
                "precision": r.precision,
                "recall": r.recall,
                "f1": r.f1,
                "degenerate_precision": r.degenerate_precision,
                "degenerate_recall": r.degenerate_recall,
            }
            for r in report.rows
        ],
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_matrix(path: str | Path, matrix: ProbabilityMatrix,
                 provenance: Mapping[str, str] | None = None) -> None:
    header = ["label"] + list(matrix.col_groups)
    rows = ([row_label] + [format_p(v) for v in row_values]
            for row_label, row_values in zip(matrix.row_labels, matrix.values))
    write_table(path, header, rows, provenance)
