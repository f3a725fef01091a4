"""Converts a three-way NLI sequence-pair classifier into a portable inference bundle.

Bundle layout (the byte-level contract with the consuming backend):

    <out>/model.pt                  TorchScript graph; (input_ids, attention_mask)
                                    of fixed shape [1, max_sequence_length] -> [1, 3] logits
    <out>/tokenizer/tokenizer.json  fast-tokenizer serialization (plus companions)
    <out>/manifest.json             model identity, logit index per NLI outcome,
                                    max sequence length, pad token id, sha256 of the graph

Logit order differs between published MNLI checkpoints, so the manifest's
``label_index`` is mandatory and consumers must read logits through it. After
writing the graph the exporter reloads it from disk and replays a fixed smoke
set through both models; the manifest is only written if every logit agrees
within tolerance, so a half-written bundle can never be loaded.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

GRAPH_FILE = "model.pt"
MANIFEST_FILE = "manifest.json"
TOKENIZER_DIR = "tokenizer"
TOKENIZER_FILE = "tokenizer.json"
OUTCOMES = ("contradiction", "neutral", "entailment")
DEFAULT_MAX_LENGTH = 1024
DEFAULT_TOLERANCE = 1e-3
BUNDLE_FORMAT_VERSION = 1

# Fixed sentence pairs replayed through the original and exported model; the
# texts only need to produce a spread of logits, their truth values are irrelevant.
SMOKE_PAIRS: tuple[tuple[str, str], ...] = (
    ("The board receives quarterly updates on climate risk.",
     "This example is about board oversight of climate issues."),
    ("Our loan book reduced its exposure to coal mining.",
     "This example is about financing carbon-intensive industries."),
    ("Severe flooding disrupted two data centres last winter.",
     "This example is about physical climate risks."),
    ("Executive bonuses are now linked to emission goals.",
     "This example is about remuneration policies."),
    ("The cafeteria introduced a new lunch menu.",
     "This example is about climate-related strategy."),
    ("We disclose scope one and scope two emissions annually.",
     "This example is about greenhouse gas reporting."),
    ("Scenario analysis covered a two degree pathway.",
     "This example is about climate scenario models."),
    ("The committee approved a share buyback programme.",
     "This example is about capital management."),
    ("Heatwaves may raise default rates in agriculture.",
     "This example is about credit risk from climate change."),
    ("Staff turnover declined for the third year.",
     "This example is about human resources."),
    ("Carbon neutrality is targeted for twenty forty.",
     "This example is about emissions reduction targets."),
    ("New offices use renewable electricity only.",
     "This example is about energy procurement."),
    ("Transition risks include sudden policy changes.",
     "This example is about regulatory climate risk."),
    ("The audit found no material misstatements.",
     "This example is about financial audits."),
    ("Stress tests now include drought scenarios.",
     "This example is about climate stress testing."),
    ("We sponsor a community cycling event.",
     "This example is about local sponsorship."),
    ("Risk appetite statements mention stranded assets.",
     "This example is about stranded asset risk."),
    ("Quarterly profits beat analyst expectations.",
     "This example is about earnings performance."),
    ("Flood maps inform mortgage underwriting.",
     "This example is about physical risk in lending."),
    ("The chair convened a special sustainability session.",
     "This example is about governance of sustainability."),
)


class ExportError(Exception):
    """Export failed (bad model, tokenizer assets, or self-check mismatch)."""


class ShapeError(ExportError):
    """The model does not emit exactly three logits."""


@dataclass(frozen=True)
class BundleInfo:
    path: Path
    manifest: dict
    self_check_max_delta: float


def file_sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _encode_pair(tokenizer, premise: str, hypothesis: str, max_length: int, pad_id: int):
    """(input_ids, attention_mask) long tensors of fixed shape [1, max_length]."""
    import torch

    if hasattr(tokenizer, "encode") and hasattr(tokenizer, "enable_truncation"):
        # tokenizers.Tokenizer
        encoding = tokenizer.encode(premise, hypothesis)
        ids = list(encoding.ids)[:max_length]
        mask = list(encoding.attention_mask)[:max_length]
    else:
        # transformers tokenizer
        batch = tokenizer(premise, hypothesis, truncation=True, max_length=max_length)
        ids = list(batch["input_ids"])[:max_length]
        mask = list(batch["attention_mask"])[:max_length]
    pad = max_length - len(ids)
    ids = ids + [pad_id] * pad
    mask = mask + [0] * pad
    return torch.tensor([ids], dtype=torch.long), torch.tensor([mask], dtype=torch.long)


def _logits_of(model, input_ids, attention_mask):
    """Run a model that may return a tensor, tuple, or HF-style output object."""
    try:
        out = model(input_ids=input_ids, attention_mask=attention_mask)
    except TypeError:
        out = model(input_ids, attention_mask)
    if hasattr(out, "logits"):
        out = out.logits
    if isinstance(out, (tuple, list)):
        out = out[0]
    return out


def _save_tokenizer(tokenizer, tokenizer_dir: Path) -> None:
    tokenizer_dir.mkdir(parents=True, exist_ok=True)
    if hasattr(tokenizer, "save_pretrained"):
        tokenizer.save_pretrained(str(tokenizer_dir))
    elif hasattr(tokenizer, "save"):
        tokenizer.save(str(tokenizer_dir / TOKENIZER_FILE))
    else:
        raise ExportError(f"unsupported tokenizer type {type(tokenizer).__name__}")
    if not (tokenizer_dir / TOKENIZER_FILE).is_file():
        raise ExportError(
            f"tokenizer assets lack {TOKENIZER_FILE}; a fast tokenizer is required")


def validate_label_index(label_index: dict) -> dict[str, int]:
    normalized = {str(k).lower(): int(v) for k, v in label_index.items()}
    if sorted(normalized) != sorted(OUTCOMES):
        raise ExportError(
            f"label_index must map exactly {set(OUTCOMES)}, got {sorted(label_index)}")
    if sorted(normalized.values()) != [0, 1, 2]:
        raise ExportError(f"label_index values must be a permutation of 0..2: {label_index}")
    return normalized


def export_model(model, tokenizer, output_dir: str | Path, identity: str,
                 label_index: dict, max_sequence_length: int = DEFAULT_MAX_LENGTH,
                 pad_token_id: int = 0, tolerance: float = DEFAULT_TOLERANCE,
                 smoke_pairs=SMOKE_PAIRS) -> BundleInfo:
    """Trace, write, and self-check a bundle; the manifest is written last.

    ``model`` is any torch module taking (input_ids, attention_mask) and
    emitting three logits (directly, as a tuple, or as an object with a
    ``.logits`` attribute). The output directory is created if missing.
    """
    import torch
    import torch.nn as nn

    label_index = validate_label_index(label_index)
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)

    model = model.eval()
    example = _encode_pair(tokenizer, *smoke_pairs[0], max_length=max_sequence_length,
                           pad_id=pad_token_id)
    with torch.no_grad():
        probe = _logits_of(model, *example)
    if probe.ndim != 2 or probe.shape[-1] != 3:
        raise ShapeError(f"model emits logits of shape {tuple(probe.shape)}, expected (1, 3)")

    class LogitsOnly(nn.Module):
        def __init__(self, inner):
            super().__init__()
            self.inner = inner

        def forward(self, input_ids, attention_mask):
            return _logits_of(self.inner, input_ids, attention_mask)

    wrapped = LogitsOnly(model).eval()
    with torch.no_grad():
        traced = torch.jit.trace(wrapped, example, check_trace=False)
    graph_path = output_dir / GRAPH_FILE
    traced.save(str(graph_path))
    _save_tokenizer(tokenizer, output_dir / TOKENIZER_DIR)

    # self-check against the graph actually shipped, not the in-memory trace
    reloaded = torch.jit.load(str(graph_path), map_location="cpu").eval()
    max_delta = 0.0
    with torch.no_grad():
        for premise, hypothesis in smoke_pairs:
            ids, mask = _encode_pair(tokenizer, premise, hypothesis,
                                     max_length=max_sequence_length, pad_id=pad_token_id)
            original = _logits_of(model, ids, mask)
            exported = reloaded(ids, mask)
            delta = float((original - exported).abs().max())
            max_delta = max(max_delta, delta)
    if max_delta > tolerance:
        raise ExportError(
            f"self-check failed: exported logits deviate by {max_delta:.3e} "
            f"(tolerance {tolerance:g}); manifest not written")

    manifest = {
        "bundle_format_version": BUNDLE_FORMAT_VERSION,
        "model_identity": identity,
        "graph_format": "torchscript",
        "graph_format_pin": f"torch-{torch.__version__}",
        "graph_file": GRAPH_FILE,
        "graph_sha256": file_sha256(graph_path),
        "label_index": label_index,
        "max_sequence_length": int(max_sequence_length),
        "pad_token_id": int(pad_token_id),
        "self_check_max_delta": max_delta,
        "self_check_pairs": len(smoke_pairs),
    }
    (output_dir / MANIFEST_FILE).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                            encoding="utf-8")
    return BundleInfo(path=output_dir, manifest=manifest, self_check_max_delta=max_delta)


def label_index_from_config(config) -> dict[str, int]:
    """Derive {outcome: logit index} from a transformers config's id2label."""
    id2label = getattr(config, "id2label", None) or {}
    normalized = {}
    for idx, name in id2label.items():
        key = str(name).strip().lower()
        if key in OUTCOMES:
            normalized[key] = int(idx)
    if sorted(normalized) != sorted(OUTCOMES):
        raise ExportError(
            f"model config id2label does not name contradiction/neutral/entailment: {id2label}")
    return normalized


def export_pretrained(model_id: str, output_dir: str | Path,
                      max_sequence_length: int | None = None,
                      tolerance: float = DEFAULT_TOLERANCE,
                      identity: str | None = None) -> BundleInfo:
    """Export a transformers sequence-pair classifier by model id or local path."""
    try:
        from transformers import AutoModelForSequenceClassification, AutoTokenizer
    except ImportError as exc:
        raise ExportError("transformers is required to export pretrained models") from exc

    try:
        model = AutoModelForSequenceClassification.from_pretrained(
            model_id, attn_implementation="eager")
    except TypeError:
        model = AutoModelForSequenceClassification.from_pretrained(model_id)
    tokenizer = AutoTokenizer.from_pretrained(model_id, use_fast=True)
    n_labels = int(getattr(model.config, "num_labels", 0))
    if n_labels != 3:
        raise ShapeError(f"model has {n_labels} output labels, expected 3")
    label_index = label_index_from_config(model.config)
    if max_sequence_length is None:
        model_max = int(getattr(tokenizer, "model_max_length", DEFAULT_MAX_LENGTH) or DEFAULT_MAX_LENGTH)
        max_sequence_length = min(model_max, DEFAULT_MAX_LENGTH)
    pad_token_id = int(getattr(tokenizer, "pad_token_id", None) or 0)
    return export_model(model, tokenizer, output_dir,
                        identity=identity or str(model_id),
                        label_index=label_index,
                        max_sequence_length=max_sequence_length,
                        pad_token_id=pad_token_id,
                        tolerance=tolerance)
