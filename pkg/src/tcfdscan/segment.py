"""Whitespace normalization and sentence-level segmentation of layout blocks."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

from .corpus import KEPT_TAGS, LayoutBlock, TextSequence, WarningRecord
from .errors import DomainError

# sentence-final abbreviations that should not trigger a split
DEFAULT_ABBREVIATIONS = frozenset({
    "e.g.", "i.e.", "cf.", "vs.", "mr.", "mrs.", "ms.", "dr.", "prof.",
    "inc.", "ltd.", "co.", "corp.", "no.", "fig.", "jr.", "sr.", "approx.",
    "dept.", "est.", "al.", "st.",
})


@dataclass(frozen=True)
class SegmentationRules:
    max_tokens: int = 512
    abbreviations: frozenset[str] = DEFAULT_ABBREVIATIONS


_CONTROL_RE = re.compile(r"[\x00-\x08\x0b\x0c\x0e-\x1f\x7f-\x9f]")
_WS_RE = re.compile(r"\s+")


def normalize_text(text: str) -> str:
    """Strip control characters and collapse whitespace runs to single spaces."""
    return _WS_RE.sub(" ", _CONTROL_RE.sub(" ", text)).strip()


_BOUNDARY_RE = re.compile(r"[.!?]+[\"')\]]*\s+")


def split_sentences(text: str, abbreviations: frozenset[str] = DEFAULT_ABBREVIATIONS) -> list[str]:
    """Split normalized text on sentence-final punctuation.

    A boundary requires terminal punctuation followed by whitespace and an
    uppercase letter, digit, or opening quote; known abbreviations and
    single-letter initials never split.
    """
    sentences = []
    start = 0
    for match in _BOUNDARY_RE.finditer(text):
        end = match.end()
        if end >= len(text):
            break
        nxt = text[end]
        if not (nxt.isupper() or nxt.isdigit() or nxt in "\"'(“‘"):
            continue
        candidate = text[start:end].strip()
        if not candidate:
            continue
        final_token = candidate.split()[-1]
        if final_token.lower() in abbreviations or re.fullmatch(r"[A-Z]\.", final_token):
            continue
        sentences.append(candidate)
        start = end
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def segment(blocks: Sequence[LayoutBlock], rules: SegmentationRules = SegmentationRules(),
            ) -> tuple[list[TextSequence], list[WarningRecord]]:
    """Turn body/abstract blocks into ordered sentence sequences.

    Sequences never span block boundaries; whitespace-only blocks are
    dropped; sentences longer than ``rules.max_tokens`` whitespace tokens are
    hard-split into consecutive chunks with a truncation warning.
    """
    if rules.max_tokens < 1:
        raise DomainError(f"max_tokens must be positive, got {rules.max_tokens}")
    for block in blocks:
        if block.tag not in KEPT_TAGS:
            raise DomainError(
                f"segment() expects body/abstract blocks only; got {block.tag.value} "
                f"(report {block.report_id}, block {block.block_index}) — run filter_body first")

    sequences: list[TextSequence] = []
    warnings: list[WarningRecord] = []
    ordinals: dict[str, int] = {}

    def emit(report_id: str, text: str):
        ordinal = ordinals.get(report_id, 0)
        ordinals[report_id] = ordinal + 1
        sequences.append(TextSequence(
            sequence_id=f"{report_id}:{ordinal:05d}",
            report_id=report_id,
            ordinal=ordinal,
            text=text,
            token_count=len(text.split()),
        ))

    for block in blocks:
        text = normalize_text(block.text)
        if not text:
            continue
        for sentence in split_sentences(text, rules.abbreviations):
            tokens = sentence.split()
            if len(tokens) <= rules.max_tokens:
                emit(block.report_id, sentence)
                continue
            chunks = [tokens[i:i + rules.max_tokens] for i in range(0, len(tokens), rules.max_tokens)]
            warnings.append(WarningRecord(
                kind="sequence_truncated",
                report_id=block.report_id,
                detail=f"sentence of {len(tokens)} tokens exceeds limit {rules.max_tokens}; "
                       f"split into {len(chunks)} sequences",
            ))
            for chunk in chunks:
                emit(block.report_id, " ".join(chunk))
    return sequences, warnings
