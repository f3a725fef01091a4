"""tcfdscan: zero-shot NLI classification of climate-related disclosures in report PDFs."""

__version__ = "0.1.0"

from .taxonomy import (  # noqa: F401
    Label,
    LabelSet,
    builtin_taxonomy,
    hypothesis_for,
    validate,
    DEFAULT_TEMPLATE,
)
from .nli import (  # noqa: F401
    NliScores,
    LabelProbability,
    ProbabilityRow,
    entailment_probability,
    classify,
    classify_single_label,
    batch_classify,
    lexical_mock_score,
    LexicalMockBackend,
)
from .corpus import classify_size, filter_body, corpus_stats  # noqa: F401
from .analytics import mean_by, growth, distribution, trend_series  # noqa: F401
from .evaluation import binarize, prf, aggregate_f1, probability_matrix, evaluate  # noqa: F401
