"""Scorer backend that runs an exported NLI inference bundle.

A bundle directory contains a serialized graph, a ``tokenizer/`` directory
with a ``tokenizer.json``, and a ``manifest.json`` naming the graph file, its
sha256, the logit index of each NLI outcome, and the maximum sequence
length. Logits are always read through the manifest's label indexes, never by
assumed position. torch and tokenizers are imported lazily so the rest of the
package works without them.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from pathlib import Path

from .errors import BackendLoadError, ConfigError
from .nli import LexicalMockBackend, NliScores, ScorerBackend

MANIFEST_NAME = "manifest.json"
TOKENIZER_FILE = "tokenizer/tokenizer.json"
REQUIRED_OUTCOMES = ("contradiction", "neutral", "entailment")
MODEL_DIR_ENV = "TCFDSCAN_MODEL_DIR"


def file_sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def read_manifest(bundle_dir: Path) -> dict:
    manifest_path = bundle_dir / MANIFEST_NAME
    if not manifest_path.is_file():
        raise BackendLoadError(f"bundle manifest not found: {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise BackendLoadError(f"bundle manifest is not valid JSON: {exc}") from exc
    for key in ("model_identity", "graph_file", "graph_sha256", "label_index", "max_sequence_length"):
        if key not in manifest:
            raise BackendLoadError(f"bundle manifest missing key {key!r}")
    label_index = manifest["label_index"]
    if sorted(label_index) != sorted(REQUIRED_OUTCOMES):
        raise BackendLoadError(
            f"manifest label_index must map exactly {set(REQUIRED_OUTCOMES)}, got {sorted(label_index)}")
    if sorted(label_index.values()) != [0, 1, 2]:
        raise BackendLoadError(f"manifest label_index values must be a permutation of 0..2: {label_index}")
    return manifest


class BundleBackend:
    """Runs a TorchScript NLI graph with its bundled tokenizer."""

    def __init__(self, bundle_dir: str | Path):
        bundle_dir = Path(bundle_dir)
        if not bundle_dir.is_dir():
            raise BackendLoadError(f"bundle directory not found: {bundle_dir}")
        manifest = read_manifest(bundle_dir)
        graph_path = bundle_dir / manifest["graph_file"]
        if not graph_path.is_file():
            raise BackendLoadError(f"bundle graph file not found: {graph_path}")
        actual = file_sha256(graph_path)
        if actual != manifest["graph_sha256"]:
            raise BackendLoadError(
                f"graph file hash mismatch: manifest says {manifest['graph_sha256'][:12]}…, "
                f"file is {actual[:12]}…")
        tokenizer_path = bundle_dir / TOKENIZER_FILE
        if not tokenizer_path.is_file():
            raise BackendLoadError(f"bundle tokenizer not found: {tokenizer_path}")
        try:
            import torch
        except ImportError as exc:
            raise BackendLoadError("torch is required for the model backend (pip install torch)") from exc
        try:
            from tokenizers import Tokenizer
        except ImportError as exc:
            raise BackendLoadError("tokenizers is required for the model backend") from exc
        try:
            self._model = torch.jit.load(str(graph_path), map_location="cpu").eval()
        except Exception as exc:
            raise BackendLoadError(f"cannot load graph {graph_path}: {exc}") from exc
        try:
            self._tokenizer = Tokenizer.from_file(str(tokenizer_path))
        except Exception as exc:
            raise BackendLoadError(f"cannot load tokenizer {tokenizer_path}: {exc}") from exc
        self._torch = torch
        max_len = int(manifest["max_sequence_length"])
        self._max_len = max_len
        self._pad_id = int(manifest.get("pad_token_id", 0))
        self._tokenizer.enable_truncation(max_length=max_len)
        self._index = {k: int(v) for k, v in manifest["label_index"].items()}
        self._lock = threading.Lock()
        self.identity = f"{manifest['model_identity']}@{manifest['graph_sha256'][:12]}"
        self.max_premise_tokens: int | None = None
        self.max_hypothesis_tokens: int | None = None

    def score(self, premise: str, hypothesis: str) -> NliScores:
        torch = self._torch
        encoding = self._tokenizer.encode(premise, hypothesis)
        # traced graphs bake in the example length, so always feed the
        # manifest's fixed shape: truncate (done by the tokenizer) then pad
        ids = list(encoding.ids)[: self._max_len]
        mask = list(encoding.attention_mask)[: self._max_len]
        pad = self._max_len - len(ids)
        if pad > 0:
            ids = ids + [self._pad_id] * pad
            mask = mask + [0] * pad
        input_ids = torch.tensor([ids], dtype=torch.long)
        attention_mask = torch.tensor([mask], dtype=torch.long)
        with self._lock, torch.no_grad():
            out = self._model(input_ids, attention_mask)
        if isinstance(out, (tuple, list)):
            out = out[0]
        logits = out[0].tolist()
        if len(logits) != 3:
            raise BackendLoadError(f"model emitted {len(logits)} logits, expected 3")
        return NliScores(
            entailment=float(logits[self._index["entailment"]]),
            contradiction=float(logits[self._index["contradiction"]]),
            neutral=float(logits[self._index["neutral"]]),
        )


def load_backend(spec: str) -> ScorerBackend:
    """Resolve a --backend flag value: ``mock`` or ``model:<bundle dir>``.

    Bare ``model`` falls back to the directory named by $TCFDSCAN_MODEL_DIR.
    """
    if spec == "mock":
        return LexicalMockBackend()
    if spec == "model":
        default_dir = os.environ.get(MODEL_DIR_ENV)
        if not default_dir:
            raise ConfigError(f"--backend model needs a path (model:<dir>) or ${MODEL_DIR_ENV} set")
        return BundleBackend(default_dir)
    if spec.startswith("model:"):
        return BundleBackend(spec[len("model:"):])
    raise ConfigError(f"unknown backend spec {spec!r}; expected 'mock' or 'model:<dir>'")
