"""Gold-set evaluation: binarization, per-label precision/recall/F1, probability matrix."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .errors import ConfigError, FormatError, MissingDataError, ReferentialIntegrityError, TaxonomyError
from .nli import ProbabilityRow
from .taxonomy import LabelSet, NONE_CODE


@dataclass(frozen=True)
class GoldAnnotation:
    sentence_id: str
    text: str
    gold_labels: frozenset[str]

    def __post_init__(self):
        if not self.gold_labels:
            raise FormatError(f"sentence {self.sentence_id!r}: gold label set must be non-empty")


def binarize(rows: Sequence[ProbabilityRow], threshold: float) -> dict[str, frozenset[str]]:
    """Predicted label sets per sentence: a label is predicted iff p >= threshold.

    NONE gets no special treatment; empty prediction sets are legitimate
    outputs.
    """
    if not (0.0 < threshold < 1.0):
        raise ConfigError(f"threshold must lie strictly between 0 and 1, got {threshold}")
    predicted: dict[str, set[str]] = {}
    for row in rows:
        predicted.setdefault(row.sequence_id, set())
        if row.p >= threshold:
            predicted[row.sequence_id].add(row.label_code)
    return {sid: frozenset(codes) for sid, codes in predicted.items()}


@dataclass(frozen=True)
class PrfRow:
    label_code: str
    support: int
    true_positives: int
    false_positives: int
    false_negatives: int
    precision: float
    recall: float
    f1: float
    degenerate_precision: bool = False
    degenerate_recall: bool = False


def _ratio(num: int, den: int) -> tuple[float, bool]:
    if den == 0:
        return 0.0, True
    return num / den, False


def prf(gold: Mapping[str, frozenset[str]], predictions: Mapping[str, frozenset[str]],
        label_code: str) -> PrfRow:
    """Precision/recall/F1 for one label over sentence-label pairs.

    Zero denominators yield 0 with the corresponding degenerate flag set, so
    aggregate means stay defined.
    """
    missing = set(gold) ^ set(predictions)
    if missing:
        raise ReferentialIntegrityError("gold and predictions cover different sentences", missing)
    tp = fp = fn = 0
    for sid, gold_codes in gold.items():
        in_gold = label_code in gold_codes
        in_pred = label_code in predictions[sid]
        if in_gold and in_pred:
            tp += 1
        elif in_pred:
            fp += 1
        elif in_gold:
            fn += 1
    precision, deg_p = _ratio(tp, tp + fp)
    recall, deg_r = _ratio(tp, tp + fn)
    f1 = 2 * precision * recall / (precision + recall) if (precision + recall) > 0 else 0.0
    return PrfRow(label_code, tp + fn, tp, fp, fn, precision, recall, f1, deg_p, deg_r)


def aggregate_f1(rows: Sequence[PrfRow]) -> tuple[float, float, float]:
    """(micro, macro, weighted) F1 across label rows.

    Micro pools TP/FP/FN over labels; macro is the unweighted mean of label
    F1 values; weighted weights each label F1 by its support (unweighted mean
    when every support is zero).
    """
    if not rows:
        raise MissingDataError("aggregate_f1 needs at least one label row")
    tp = sum(r.true_positives for r in rows)
    fp = sum(r.false_positives for r in rows)
    fn = sum(r.false_negatives for r in rows)
    micro_p, _ = _ratio(tp, tp + fp)
    micro_r, _ = _ratio(tp, tp + fn)
    micro = 2 * micro_p * micro_r / (micro_p + micro_r) if (micro_p + micro_r) > 0 else 0.0
    macro = math.fsum(r.f1 for r in rows) / len(rows)
    total_support = sum(r.support for r in rows)
    if total_support == 0:
        weighted = macro
    else:
        weighted = math.fsum(r.f1 * r.support for r in rows) / total_support
    return micro, macro, weighted


@dataclass(frozen=True)
class EvaluationReport:
    rows: tuple[PrfRow, ...]
    micro_f1: float
    macro_f1: float
    weighted_f1: float
    threshold: float
    backend_identity: str
    taxonomy_version: str


def evaluate(gold: Sequence[GoldAnnotation], prob_rows: Sequence[ProbabilityRow],
             labels: LabelSet, threshold: float, backend_identity: str = "",
             include_none: bool = False) -> EvaluationReport:
    """Binarize probabilities at the threshold and score against gold annotations.

    Label rows cover the labels that actually occur in gold or predictions
    (label-set order); NONE is excluded from the scores unless
    ``include_none`` is set.
    """
    gold_map = {g.sentence_id: g.gold_labels for g in gold}
    if len(gold_map) != len(gold):
        raise FormatError("duplicate sentence ids in gold annotations")
    for ann in gold:
        for code in ann.gold_labels:
            if code not in labels:
                raise TaxonomyError(f"gold sentence {ann.sentence_id!r} uses unknown label {code!r}")
    predicted = binarize([r for r in prob_rows if r.sequence_id in gold_map], threshold)
    for sid in gold_map:
        predicted.setdefault(sid, frozenset())
    occurring = set().union(*gold_map.values()) if gold_map else set()
    for codes in predicted.values():
        occurring |= codes
    evaluated = [l.code for l in labels
                 if l.code in occurring and (include_none or l.code != NONE_CODE)]
    if not evaluated:
        raise MissingDataError("no labels to evaluate (gold and predictions are empty)")
    rows = tuple(prf(gold_map, predicted, code) for code in evaluated)
    micro, macro, weighted = aggregate_f1(rows)
    return EvaluationReport(rows=rows, micro_f1=micro, macro_f1=macro, weighted_f1=weighted,
                            threshold=threshold, backend_identity=backend_identity,
                            taxonomy_version=labels.version)


@dataclass(frozen=True)
class ProbabilityMatrix:
    """Mean probability of each label (rows) over each gold group's sentences (columns)."""

    row_labels: tuple[str, ...]
    col_groups: tuple[str, ...]
    values: tuple[tuple[float, ...], ...]

    def entry(self, row_label: str, col_group: str) -> float:
        return self.values[self.row_labels.index(row_label)][self.col_groups.index(col_group)]


def probability_matrix(gold: Sequence[GoldAnnotation], prob_rows: Sequence[ProbabilityRow],
                       labels: LabelSet) -> ProbabilityMatrix:
    """Figure-style matrix: rows follow label-set order, columns are the gold groups.

    A sentence with several gold labels belongs to each of those groups.
    """
    if not gold:
        raise MissingDataError("no gold annotations")
    by_sentence: dict[str, dict[str, float]] = {}
    for row in prob_rows:
        by_sentence.setdefault(row.sequence_id, {})[row.label_code] = row.p
    missing = [g.sentence_id for g in gold if g.sentence_id not in by_sentence]
    if missing:
        raise ReferentialIntegrityError("gold sentences missing from probability table", missing)

    groups: dict[str, list[str]] = {}
    for ann in gold:
        for code in ann.gold_labels:
            if code not in labels:
                raise TaxonomyError(f"gold sentence {ann.sentence_id!r} uses unknown label {code!r}")
            groups.setdefault(code, []).append(ann.sentence_id)
    col_groups = tuple(l.code for l in labels if l.code in groups)
    row_labels = labels.codes()
    values = []
    for row_code in row_labels:
        row_means = []
        for col_code in col_groups:
            members = groups[col_code]
            ps = []
            for sid in members:
                if row_code not in by_sentence[sid]:
                    raise ReferentialIntegrityError(
                        "probability table lacks a label for a gold sentence",
                        [f"{sid}:{row_code}"])
                ps.append(by_sentence[sid][row_code])
            row_means.append(math.fsum(ps) / len(ps))
        values.append(tuple(row_means))
    return ProbabilityMatrix(row_labels=row_labels, col_groups=col_groups, values=tuple(values))


GOLD_HEADER = ["sentence_id", "gold_labels", "text"]


def write_gold(path: str | Path, annotations: Sequence[GoldAnnotation], taxonomy_version: str) -> None:
    lines = [f"# taxonomy_version={taxonomy_version}", "\t".join(GOLD_HEADER)]
    for ann in annotations:
        text = ann.text.replace("\t", " ").replace("\n", " ")
        lines.append("\t".join([ann.sentence_id, ";".join(sorted(ann.gold_labels)), text]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_gold(path: str | Path, labels: LabelSet | None = None,
              require_version: bool = True) -> tuple[list[GoldAnnotation], str]:
    """Load a gold annotation file; checks the taxonomy version against ``labels`` if given."""
    path = Path(path)
    version = None
    annotations = []
    header_seen = False
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not raw.strip():
            continue
        if raw.startswith("#"):
            m = re.match(r"#\s*taxonomy_version=(.+)$", raw)
            if m:
                version = m.group(1).strip()
            continue
        parts = raw.split("\t")
        if not header_seen:
            if parts != GOLD_HEADER:
                raise FormatError(f"{path}:{lineno}: expected header {GOLD_HEADER}, got {parts}")
            header_seen = True
            continue
        if len(parts) != 3:
            raise FormatError(f"{path}:{lineno}: expected 3 fields, got {len(parts)}")
        sentence_id, codes, text = parts
        gold_labels = frozenset(c for c in codes.split(";") if c)
        annotations.append(GoldAnnotation(sentence_id, text, gold_labels))
    if not header_seen:
        raise FormatError(f"{path}: missing header line")
    if version is None:
        if require_version:
            raise FormatError(f"{path}: missing '# taxonomy_version=...' header")
        version = "unversioned"
    if labels is not None:
        if version != labels.version:
            raise TaxonomyError(
                f"{path}: gold file taxonomy version {version!r} does not match active set {labels.version!r}")
        for ann in annotations:
            for code in ann.gold_labels:
                if code not in labels:
                    raise TaxonomyError(f"{path}: sentence {ann.sentence_id!r} uses unknown label {code!r}")
    return annotations, version
