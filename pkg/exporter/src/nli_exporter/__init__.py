"""Exports three-way NLI sequence-pair classifiers into portable inference bundles."""

__version__ = "0.1.0"

from .exporter import (  # noqa: F401
    BundleInfo,
    ExportError,
    ShapeError,
    SMOKE_PAIRS,
    export_model,
    export_pretrained,
    label_index_from_config,
)
