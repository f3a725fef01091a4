import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tcfdscan.corpus import TextSequence
from tcfdscan.errors import DomainError
from tcfdscan.nli import (
    BatchResult,
    LexicalMockBackend,
    NliScores,
    batch_classify,
    classify,
    classify_single_label,
    entailment_probability,
    lexical_mock_score,
    template_fingerprint,
)
from tcfdscan.taxonomy import Granularity, Label, LabelSet, Pillar

finite_logits = st.floats(min_value=-1e4, max_value=1e4, allow_nan=False)


def seq(text, sid="s1", report="r1"):
    return TextSequence(sid, report, 0, text, len(text.split()))


class TestEntailmentProbability:
    def test_symmetry_at_equal_logits(self):
        for n in (-5.0, 0.0, 7.3):
            assert entailment_probability(NliScores(0.0, 0.0, n)) == 0.5

    def test_frozen_values(self):
        # independent oracle: direct evaluation of 1/(1+exp(-(e-c)))
        assert math.isclose(entailment_probability(NliScores(2, 0, 5)),
                            1 / (1 + math.exp(-2)), abs_tol=1e-15)
        assert math.isclose(entailment_probability(NliScores(-3, 3, 0)),
                            1 / (1 + math.exp(6)), abs_tol=1e-15)
        assert round(entailment_probability(NliScores(2, 0, 5)), 4) == 0.8808
        assert round(entailment_probability(NliScores(-3, 3, 0)), 5) == 0.00247

    @given(e=finite_logits, c=finite_logits, n1=finite_logits, n2=finite_logits)
    def test_neutral_ignored(self, e, c, n1, n2):
        assert entailment_probability(NliScores(e, c, n1)) == entailment_probability(NliScores(e, c, n2))

    @given(e=finite_logits, c=finite_logits, n1=finite_logits, n2=finite_logits)
    def test_complement_symmetry(self, e, c, n1, n2):
        total = entailment_probability(NliScores(e, c, n1)) + entailment_probability(NliScores(c, e, n2))
        assert abs(total - 1.0) <= 1e-12

    @given(e=st.floats(-100, 100), c=st.floats(-100, 100), k=st.floats(-100, 100))
    def test_shift_invariance(self, e, c, k):
        base = entailment_probability(NliScores(e, c, 0))
        shifted = entailment_probability(NliScores(e + k, c + k, 0))
        assert abs(base - shifted) <= 1e-12

    def test_monotonicity_strict_away_from_saturation(self):
        rng = np.random.default_rng(7)
        for _ in range(500):
            e, c = rng.uniform(-15, 15, size=2)
            delta = rng.uniform(1e-6, 5)
            p = entailment_probability(NliScores(e, c, 0))
            assert entailment_probability(NliScores(e + delta, c, 0)) > p
            assert entailment_probability(NliScores(e, c + delta, 0)) < p

    def test_monotonicity_never_decreases_anywhere(self):
        # at extreme margins the probability saturates at 0/1, so only
        # non-decrease (within tolerance) is representable
        rng = np.random.default_rng(8)
        for _ in range(500):
            e, c = rng.uniform(-1e4, 1e4, size=2)
            delta = rng.uniform(0, 100)
            p = entailment_probability(NliScores(e, c, 0))
            assert entailment_probability(NliScores(e + delta, c, 0)) >= p - 1e-12
            assert entailment_probability(NliScores(e, c + delta, 0)) <= p + 1e-12

    def test_stability_extremes(self):
        for e in (-1e4, 0.0, 1e4):
            for c in (-1e4, 0.0, 1e4):
                p = entailment_probability(NliScores(e, c, 1e4))
                assert math.isfinite(p) and 0.0 <= p <= 1.0

    @pytest.mark.parametrize("bad", [float("nan"), float("inf"), float("-inf")])
    def test_non_finite_rejected(self, bad):
        with pytest.raises(DomainError):
            entailment_probability(NliScores(bad, 0, 0))
        with pytest.raises(DomainError):
            entailment_probability(NliScores(0, bad, 0))


class TestLexicalMock:
    def test_identical_texts(self):
        scores = lexical_mock_score("carbon footprint targets", "carbon footprint targets")
        assert scores.entailment == 6.0 and scores.contradiction == -6.0 and scores.neutral == 0.0
        p = entailment_probability(scores)
        assert math.isclose(p, 1 / (1 + math.exp(-12)), abs_tol=1e-15)
        assert p > 0.99999

    def test_disjoint_texts(self):
        scores = lexical_mock_score("alpha beta gamma", "delta epsilon zeta")
        assert scores.entailment == -2.0
        assert math.isclose(entailment_probability(scores), 1 / (1 + math.exp(4)), abs_tol=1e-15)

    def test_empty_inputs(self):
        scores = lexical_mock_score("", "")
        assert scores.entailment == -2.0
        assert math.isclose(entailment_probability(scores), 1 / (1 + math.exp(4)), abs_tol=1e-15)

    def test_quarter_overlap_is_decision_boundary(self):
        # J = 1/4 -> entailment logit 0 -> p = 0.5
        scores = lexical_mock_score("alpha beta", "alpha gamma delta")  # J = 1/4
        assert scores.entailment == 0.0
        assert entailment_probability(scores) == 0.5

    def test_stopwords_filtered(self):
        with_stop = lexical_mock_score("the climate and the risk", "climate risk")
        without = lexical_mock_score("climate risk", "climate risk")
        assert with_stop == without


class TestClassify:
    def test_shape_and_range(self, labels, mock_backend):
        probs = classify(seq("The board oversees climate related issues."), labels, mock_backend)
        assert len(probs) == 23
        assert [p.label_code for p in probs] == list(labels.codes())
        assert all(0.0 <= p.p <= 1.0 for p in probs)

    def test_no_sum_constraint(self, labels, mock_backend):
        probs = classify(seq("Board oversight of climate-related issues and climate risk management."),
                         labels, mock_backend)
        assert abs(sum(p.p for p in probs) - 1.0) > 1e-3

    def test_deterministic(self, labels, mock_backend):
        s = seq("Emissions reduction and carbon neutrality targets were set.")
        assert classify(s, labels, mock_backend) == classify(s, labels, mock_backend)

    def test_mock_ranks_matching_label_higher(self, labels, mock_backend):
        s = seq("board oversight of climate risks")
        by_code = {p.label_code: p.p for p in classify(s, labels, mock_backend)}
        assert by_code["GO.1.1"] > by_code["MT.1.3"]

    def test_label_removal_leaves_others_unchanged(self, labels, mock_backend):
        s = seq("Scenario analysis of climate-related transition risks.")
        full = {p.label_code: p.p for p in classify(s, labels, mock_backend)}
        reduced_set = LabelSet(labels=labels.labels[:10], version="sub")
        reduced = {p.label_code: p.p for p in classify(s, reduced_set, mock_backend)}
        for code, p in reduced.items():
            assert p == full[code]

    def test_label_permutation_permutes_rows_identically(self, labels, mock_backend):
        s = seq("Credit exposure to carbon-related sectors fell sharply.")
        permuted_set = LabelSet(labels=labels.labels[::-1], version="rev")
        original = {p.label_code: p.p for p in classify(s, labels, mock_backend)}
        permuted = classify(s, permuted_set, mock_backend)
        assert [p.label_code for p in permuted] == list(reversed(list(labels.codes())))
        assert {p.label_code: p.p for p in permuted} == original

    def test_premise_truncation(self, labels, caplog):
        class CappedMock(LexicalMockBackend):
            max_premise_tokens = 3

        backend = CappedMock()
        long_seq = seq("climate risk alpha beta gamma delta")
        with caplog.at_level("WARNING", logger="tcfdscan.nli"):
            probs = classify(long_seq, labels, backend)
        assert any("truncated" in rec.message for rec in caplog.records)
        expected = classify(seq("climate risk alpha"), labels, LexicalMockBackend())
        assert [p.p for p in probs] == [p.p for p in expected]


class _PresetBackend:
    """Returns pre-baked logits per hypothesis; for argmax/consistency tests."""

    identity = "preset"
    max_premise_tokens = None
    max_hypothesis_tokens = None

    def __init__(self, by_hypothesis):
        self.by_hypothesis = by_hypothesis

    def score(self, premise, hypothesis):
        e, c, n = self.by_hypothesis[hypothesis]
        return NliScores(e, c, n)


def _tiny_labelset(k):
    rows = tuple(Label(f"L{i}", Pillar.STRATEGY, Granularity.CATEGORY, f"topic {i}") for i in range(k))
    return LabelSet(labels=rows, version="tiny")


class TestSingleLabel:
    def test_equal_logits_uniform(self):
        ls = _tiny_labelset(2)
        backend = _PresetBackend({f"topic {i}": (1.0, -1.0, 0.0) for i in range(2)})
        probs = classify_single_label(seq("x"), ls, backend, template="{}")
        assert [round(p.p, 12) for p in probs] == [0.5, 0.5]

    def test_sums_to_one(self, labels, mock_backend):
        probs = classify_single_label(seq("Climate-related physical risks from weather events."),
                                      labels, mock_backend)
        assert abs(sum(p.p for p in probs) - 1.0) <= 1e-9

    def test_argmax_agreement_brute_force(self):
        # both modes are monotone in the per-label two-way log-odds
        rng = np.random.default_rng(123)
        ls = _tiny_labelset(7)
        for _ in range(1000):
            table = {f"topic {i}": tuple(rng.uniform(-8, 8, size=3)) for i in range(7)}
            backend = _PresetBackend(table)
            multi = classify(seq("x"), ls, backend, template="{}")
            single = classify_single_label(seq("x"), ls, backend, template="{}")
            assert max(range(7), key=lambda i: multi[i].p) == max(range(7), key=lambda i: single[i].p)


class TestBatchClassify:
    def _sequences(self, n):
        return [TextSequence(f"s{i:03d}", f"r{i % 3}", i, f"climate topic {i} oversight", 4)
                for i in range(n)]

    def test_batch_size_invariance(self, labels, mock_backend):
        seqs = self._sequences(100)
        one = batch_classify(seqs, labels, mock_backend, batch_size=1)
        big = batch_classify(seqs, labels, mock_backend, batch_size=64)
        assert one == big

    def test_worker_invariance(self, labels, mock_backend):
        seqs = self._sequences(40)
        serial = batch_classify(seqs, labels, mock_backend, batch_size=4, workers=1)
        parallel = batch_classify(seqs, labels, mock_backend, batch_size=4, workers=8)
        assert serial == parallel

    def test_empty_input(self, labels, mock_backend):
        assert batch_classify([], labels, mock_backend) == BatchResult(rows=(), failures=())

    def test_cardinality(self, labels, mock_backend):
        result = batch_classify(self._sequences(3), labels, mock_backend)
        assert len(result.rows) == 3 * 23

    def test_order_matches_input(self, labels, mock_backend):
        seqs = self._sequences(5)
        result = batch_classify(seqs, labels, mock_backend, batch_size=2)
        expected_ids = [s.sequence_id for s in seqs for _ in range(23)]
        assert [r.sequence_id for r in result.rows] == expected_ids

    def test_failures_collected(self, labels):
        class Flaky(LexicalMockBackend):
            def score(self, premise, hypothesis):
                if "poison" in premise:
                    raise RuntimeError("backend exploded")
                return super().score(premise, hypothesis)

        seqs = self._sequences(4)
        seqs[2] = TextSequence("s002", "r2", 2, "poison pill", 2)
        result = batch_classify(seqs, labels, Flaky(), batch_size=2)
        assert len(result.failures) == 1
        assert result.failures[0].sequence_id == "s002"
        assert len(result.rows) == 3 * 23
        with pytest.raises(DomainError):
            batch_classify(seqs, labels, Flaky(), batch_size=0)


def test_template_fingerprint_stable():
    a = template_fingerprint("This example is about {}.")
    assert a == template_fingerprint("This example is about {}.")
    assert a != template_fingerprint("{}")
    assert len(a) == 16
