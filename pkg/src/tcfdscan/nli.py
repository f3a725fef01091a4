"""Zero-shot classification core: NLI scoring, entailment probabilities, batch runs.

A scorer backend turns a (premise, hypothesis) pair into three logits for
entailment, contradiction, and neutral. The neutral logit is kept in the data
model but never enters the probability: the per-label score is a two-way
softmax over entailment and contradiction only. In multi-label mode every
label is scored independently, so per-sequence probabilities carry no
sum-to-one constraint; single-label mode renormalizes across labels instead.
"""

from __future__ import annotations

import hashlib
import logging
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Protocol, Sequence

from .errors import DomainError, ScoringError
from .taxonomy import Granularity, Label, LabelSet, DEFAULT_TEMPLATE, hypothesis_for

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class NliScores:
    """Raw three-way logits from a scorer backend."""

    entailment: float
    contradiction: float
    neutral: float

    def require_finite(self) -> "NliScores":
        for name, value in (("entailment", self.entailment),
                            ("contradiction", self.contradiction),
                            ("neutral", self.neutral)):
            if not math.isfinite(value):
                raise DomainError(f"non-finite {name} logit: {value!r}")
        return self


@dataclass(frozen=True)
class LabelProbability:
    sequence_id: str
    label_code: str
    p: float


class ScorerBackend(Protocol):
    """Contract every scorer implements; score() must be deterministic for a fixed identity."""

    identity: str
    max_premise_tokens: int | None
    max_hypothesis_tokens: int | None

    def score(self, premise: str, hypothesis: str) -> NliScores: ...


def entailment_probability(scores: NliScores) -> float:
    """Two-way softmax over entailment and contradiction; the neutral logit is ignored.

    Computed as exp(e - m) / (exp(e - m) + exp(c - m)) with m = max(e, c) so
    logits of any realistic magnitude stay finite.
    """
    scores.require_finite()
    e, c = scores.entailment, scores.contradiction
    m = e if e >= c else c
    we = math.exp(e - m)
    wc = math.exp(c - m)
    return we / (we + wc)


def entailment_log_odds(scores: NliScores) -> float:
    """log(p / (1 - p)) of the two-way scheme, i.e. entailment minus contradiction."""
    scores.require_finite()
    return scores.entailment - scores.contradiction


def template_fingerprint(template: str) -> str:
    """Short stable hash of the hypothesis template, recorded in output provenance."""
    return hashlib.sha256(template.encode("utf-8")).hexdigest()[:16]


def _truncate_premise(text: str, limit: int | None, sequence_id: str) -> str:
    if limit is None:
        return text
    tokens = text.split()
    if len(tokens) <= limit:
        return text
    log.warning("premise %s exceeds backend limit (%d > %d tokens); truncated from the right",
                sequence_id, len(tokens), limit)
    return " ".join(tokens[:limit])


def _score_all(sequence, labels: LabelSet, backend: ScorerBackend, template: str,
               general_template: str | None) -> list[tuple[Label, NliScores]]:
    premise = _truncate_premise(sequence.text, backend.max_premise_tokens, sequence.sequence_id)
    scored = []
    for label in labels:
        tmpl = template
        if general_template is not None and label.granularity is Granularity.GENERAL:
            tmpl = general_template
        hypothesis = hypothesis_for(label, tmpl)
        try:
            scores = backend.score(premise, hypothesis).require_finite()
        except DomainError:
            raise
        except Exception as exc:
            raise ScoringError(str(exc), sequence_id=sequence.sequence_id, label_code=label.code) from exc
        scored.append((label, scores))
    return scored


def classify(sequence, labels: LabelSet, backend: ScorerBackend,
             template: str = DEFAULT_TEMPLATE, general_template: str | None = None) -> list[LabelProbability]:
    """Multi-label classification: one independent entailment probability per label.

    Output order matches the label-set order; probabilities are unconstrained
    as a group (they do not sum to one).
    """
    return [LabelProbability(sequence.sequence_id, label.code, entailment_probability(scores))
            for label, scores in _score_all(sequence, labels, backend, template, general_template)]


def classify_single_label(sequence, labels: LabelSet, backend: ScorerBackend,
                          template: str = DEFAULT_TEMPLATE,
                          general_template: str | None = None) -> list[LabelProbability]:
    """Single-label mode: a distribution over labels that sums to one.

    Softmax over the per-label two-way log-odds (entailment minus
    contradiction), so the ranking of labels is identical to multi-label
    mode; only the normalization differs.
    """
    scored = _score_all(sequence, labels, backend, template, general_template)
    if not scored:
        return []
    z = [entailment_log_odds(s) for _, s in scored]
    m = max(z)
    w = [math.exp(v - m) for v in z]
    total = sum(w)
    return [LabelProbability(sequence.sequence_id, label.code, wi / total)
            for (label, _), wi in zip(scored, w)]


@dataclass(frozen=True)
class ProbabilityRow:
    """One probability-table row; the unit all analytics and evaluation consume."""

    sequence_id: str
    report_id: str
    label_code: str
    p: float


@dataclass(frozen=True)
class ScoringFailure:
    sequence_id: str
    label_code: str | None
    message: str


@dataclass(frozen=True)
class BatchResult:
    rows: tuple[ProbabilityRow, ...]
    failures: tuple[ScoringFailure, ...]


def batch_classify(sequences: Sequence, labels: LabelSet, backend: ScorerBackend,
                   template: str = DEFAULT_TEMPLATE, batch_size: int = 32, workers: int = 1,
                   general_template: str | None = None) -> BatchResult:
    """Classify many sequences; output equals per-sequence classify results in input order.

    Results are independent of batch size and worker count. Per-sequence
    scoring failures are collected into the failure manifest instead of
    aborting the run; rows for failed sequences are omitted.
    """
    if batch_size < 1:
        raise DomainError(f"batch_size must be >= 1, got {batch_size}")
    if workers < 1:
        raise DomainError(f"workers must be >= 1, got {workers}")

    def run_one(sequence) -> tuple[list[ProbabilityRow], list[ScoringFailure]]:
        try:
            probs = classify(sequence, labels, backend, template, general_template)
        except ScoringError as exc:
            return [], [ScoringFailure(sequence.sequence_id, exc.label_code, str(exc))]
        rows = [ProbabilityRow(p.sequence_id, sequence.report_id, p.label_code, p.p) for p in probs]
        return rows, []

    def run_batch(batch) -> list[tuple[list[ProbabilityRow], list[ScoringFailure]]]:
        return [run_one(sequence) for sequence in batch]

    batches = [sequences[i:i + batch_size] for i in range(0, len(sequences), batch_size)]
    if workers == 1 or len(batches) <= 1:
        outcomes = [run_batch(batch) for batch in batches]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run_batch, batches))

    rows: list[ProbabilityRow] = []
    failures: list[ScoringFailure] = []
    for batch_outcome in outcomes:
        for seq_rows, seq_failures in batch_outcome:
            rows.extend(seq_rows)
            failures.extend(seq_failures)
    return BatchResult(rows=tuple(rows), failures=tuple(failures))


# Compact function-word list used by the lexical mock; kept small and fixed so
# mock scores are reproducible byte-for-byte across environments.
_STOPWORDS = frozenset("""
a an and are as at be been by for from has have in into is it its of on or
such that the their these this those to was were will with not no our we
""".split())

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def _content_tokens(text: str) -> frozenset[str]:
    return frozenset(t for t in _TOKEN_RE.findall(text.lower()) if t not in _STOPWORDS)


def lexical_mock_score(premise: str, hypothesis: str) -> NliScores:
    """Deterministic dependency-free scorer for tests and dry runs.

    Entailment logit is 8*J - 2 where J is the Jaccard overlap of lowercased,
    stopword-filtered token sets (J = 0 when both sets are empty);
    contradiction is its negation and neutral is 0. The constants put the 0.5
    decision boundary at 25% token overlap.
    """
    a = _content_tokens(premise)
    b = _content_tokens(hypothesis)
    union = a | b
    jaccard = len(a & b) / len(union) if union else 0.0
    e = 8.0 * jaccard - 2.0
    return NliScores(entailment=e, contradiction=-e, neutral=0.0)


class LexicalMockBackend:
    """ScorerBackend wrapper around lexical_mock_score; safe to share across workers."""

    identity = "lexical-mock(scale=8,offset=-2)"
    max_premise_tokens: int | None = None
    max_hypothesis_tokens: int | None = None

    def score(self, premise: str, hypothesis: str) -> NliScores:
        return lexical_mock_score(premise, hypothesis)
