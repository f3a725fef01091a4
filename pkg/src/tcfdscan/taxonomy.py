"""TCFD disclosure label taxonomy and hypothesis rendering.

The built-in set carries 23 labels: four general pillar labels, four
climate-related category labels (GO.1, ST.1, RM.1, MT.1), fourteen
fine-grained labels refining the recommended disclosures for banks, and a
NONE catch-all for text that matches no TCFD topic.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import TaxonomyError, TemplateError

DEFAULT_TEMPLATE = "This example is about {}."
BUILTIN_VERSION = "builtin-1"

_PLACEHOLDER = "{}"


class Pillar(str, Enum):
    GOVERNANCE = "Governance"
    STRATEGY = "Strategy"
    RISK_MANAGEMENT = "RiskManagement"
    METRICS_TARGETS = "MetricsTargets"
    NONE = "None"


class Granularity(str, Enum):
    GENERAL = "General"
    CATEGORY = "Category"
    FINE = "Fine"


@dataclass(frozen=True)
class Label:
    """One classifiable topic: a code, its pillar, granularity, and the text used as hypothesis content."""

    code: str
    pillar: Pillar
    granularity: Granularity
    description: str

    def __post_init__(self):
        if not self.code:
            raise TaxonomyError("label code must be non-empty")

    @property
    def parent_code(self) -> str | None:
        """Category code a fine label refines (GO.1.1 -> GO.1); None for non-fine labels."""
        if self.granularity is not Granularity.FINE:
            return None
        return self.code.rsplit(".", 1)[0]


@dataclass(frozen=True)
class LabelSet:
    """Ordered, immutable collection of labels; order defines all downstream output order."""

    labels: tuple[Label, ...]
    version: str

    def __post_init__(self):
        object.__setattr__(self, "_by_code", {})
        for label in self.labels:
            # first occurrence wins so validate() can still report duplicates
            self._by_code.setdefault(label.code, label)

    def __iter__(self):
        return iter(self.labels)

    def __len__(self):
        return len(self.labels)

    def codes(self) -> tuple[str, ...]:
        return tuple(label.code for label in self.labels)

    def __contains__(self, code: str) -> bool:
        return code in self._by_code

    def lookup(self, code: str) -> Label:
        """Exact, case-sensitive lookup by code."""
        try:
            return self._by_code[code]
        except KeyError:
            raise TaxonomyError(f"unknown label code: {code!r}") from None

    def count(self, granularity: Granularity | None = None, pillar: Pillar | None = None) -> int:
        n = 0
        for label in self.labels:
            if granularity is not None and label.granularity is not granularity:
                continue
            if pillar is not None and label.pillar is not pillar:
                continue
            n += 1
        return n

    def select(self, granularity: Granularity) -> tuple[Label, ...]:
        return tuple(l for l in self.labels if l.granularity is granularity)


NONE_CODE = "NONE"
NONE_DESCRIPTION = "none of the above; text not related to climate or TCFD topics"

_G = Pillar.GOVERNANCE
_S = Pillar.STRATEGY
_R = Pillar.RISK_MANAGEMENT
_M = Pillar.METRICS_TARGETS

_BUILTIN_ROWS = (
    # general pillar labels, no climate qualifier
    ("GENERAL.GOVERNANCE", _G, Granularity.GENERAL, "Governance"),
    ("GENERAL.STRATEGY", _S, Granularity.GENERAL, "Strategy"),
    ("GENERAL.RISK_MANAGEMENT", _R, Granularity.GENERAL, "Risk management"),
    ("GENERAL.METRICS_TARGETS", _M, Granularity.GENERAL, "Metrics and targets"),
    # climate-related category labels and their fine-grained refinements
    ("GO.1", _G, Granularity.CATEGORY, "Climate-related Governance"),
    ("GO.1.1", _G, Granularity.FINE, "Board's responsibility for overseeing climate-related issues"),
    ("GO.1.2", _G, Granularity.FINE,
     "Executive management's strategic role related to the assessment and management of climate-related issues"),
    ("ST.1", _S, Granularity.CATEGORY, "Climate-related Strategy"),
    ("ST.1.1", _S, Granularity.FINE,
     "Climate-related transition risks such as policy, legal, technology, market and reputation risks "
     "emerging from climate change"),
    ("ST.1.2", _S, Granularity.FINE,
     "Climate-related physical risks such as acute weather events and chronic shifts in weather patterns"),
    ("ST.1.3", _S, Granularity.FINE, "Material financial impact of climate-related issues"),
    ("ST.1.4", _S, Granularity.FINE, "Credit exposure to carbon-related sectors"),
    ("ST.1.5", _S, Granularity.FINE,
     "Financing and investment for carbon-intensive industries such as fossil fuel industry"),
    ("ST.1.6", _S, Granularity.FINE,
     "Use of climate-related scenario models to analyse the impact of climate-related risks"),
    ("ST.1.7", _S, Granularity.FINE, "Resilience of the bank's strategy under different climate-related scenarios"),
    ("RM.1", _R, Granularity.CATEGORY, "Climate-related Risk Management"),
    ("RM.1.1", _R, Granularity.FINE,
     "Processes to identify, assess and manage climate-related risks and integrate them into overall "
     "risk management"),
    ("RM.1.2", _R, Granularity.FINE,
     "Relationship between climate-related risks and financial risks such as credit risk, market risk, "
     "liquidity risk and operational risk"),
    ("MT.1", _M, Granularity.CATEGORY, "Climate-related metrics and targets"),
    ("MT.1.1", _M, Granularity.FINE, "Carbon footprint, direct and indirect greenhouse gas emissions"),
    ("MT.1.2", _M, Granularity.FINE,
     "Incorporation of climate-related performance metrics into remuneration policies"),
    ("MT.1.3", _M, Granularity.FINE, "Emissions reduction and carbon neutrality targets"),
    (NONE_CODE, Pillar.NONE, Granularity.GENERAL, NONE_DESCRIPTION),
)

_BUILTIN = LabelSet(
    labels=tuple(Label(code, pillar, gran, desc) for code, pillar, gran, desc in _BUILTIN_ROWS),
    version=BUILTIN_VERSION,
)


def builtin_taxonomy() -> LabelSet:
    """The built-in 23-label set; immutable and order-stable across calls."""
    return _BUILTIN


def hypothesis_for(label: Label, template: str = DEFAULT_TEMPLATE) -> str:
    """Render a label as hypothesis text by substituting its description into the template.

    The template must contain exactly one ``{}`` placeholder; ``"{}"`` itself
    acts as the identity template.
    """
    n = template.count(_PLACEHOLDER)
    if n != 1:
        raise TemplateError(f"template must contain exactly one {{}} placeholder, found {n}: {template!r}")
    return template.replace(_PLACEHOLDER, label.description)


@dataclass(frozen=True)
class Finding:
    """One validation problem; kind is 'duplicate_code', 'empty_description', or 'orphan_fine'."""

    kind: str
    code: str
    message: str


def validate(label_set: LabelSet) -> list[Finding]:
    """Check label-set invariants and return findings (empty list means valid)."""
    findings: list[Finding] = []
    seen: set[str] = set()
    codes = {label.code for label in label_set.labels}
    for label in label_set.labels:
        if label.code in seen:
            findings.append(Finding("duplicate_code", label.code, f"code {label.code!r} appears more than once"))
        seen.add(label.code)
        if not label.description.strip():
            findings.append(Finding("empty_description", label.code, f"label {label.code!r} has an empty description"))
        if label.granularity is Granularity.FINE:
            parent = label.parent_code
            parent_label = label_set._by_code.get(parent)
            if parent is None or parent == label.code or parent not in codes:
                findings.append(Finding("orphan_fine", label.code,
                                        f"fine label {label.code!r} has no parent category {parent!r}"))
            elif parent_label is not None and parent_label.pillar is not label.pillar:
                findings.append(Finding("orphan_fine", label.code,
                                        f"fine label {label.code!r} and parent {parent!r} disagree on pillar"))
    return findings


_LABELS_HEADER = ["code", "pillar", "granularity", "description"]


def write_labels(path: str | Path, label_set: LabelSet) -> None:
    """Serialize a label set to the line-oriented labels file (one record per label)."""
    lines = [f"# taxonomy_version={label_set.version}", "\t".join(_LABELS_HEADER)]
    for label in label_set.labels:
        for value in (label.code, label.description):
            if "\t" in value or "\n" in value:
                raise TaxonomyError(f"label field contains tab/newline: {value!r}")
        lines.append("\t".join([label.code, label.pillar.value, label.granularity.value, label.description]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_labels(path: str | Path) -> LabelSet:
    """Load a label set from a labels file; raises TaxonomyError if the set is invalid."""
    path = Path(path)
    version = "custom"
    rows: list[Label] = []
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
            if parts != _LABELS_HEADER:
                raise TaxonomyError(f"{path}:{lineno}: expected header {_LABELS_HEADER}, got {parts}")
            header_seen = True
            continue
        if len(parts) != 4:
            raise TaxonomyError(f"{path}:{lineno}: expected 4 tab-separated fields, got {len(parts)}")
        code, pillar, granularity, description = parts
        try:
            rows.append(Label(code, Pillar(pillar), Granularity(granularity), description))
        except ValueError as exc:
            raise TaxonomyError(f"{path}:{lineno}: {exc}") from exc
    if not header_seen:
        raise TaxonomyError(f"{path}: missing header line")
    label_set = LabelSet(labels=tuple(rows), version=version)
    findings = validate(label_set)
    if findings:
        details = "; ".join(f.message for f in findings[:5])
        raise TaxonomyError(f"{path}: invalid label set ({len(findings)} findings): {details}")
    return label_set
