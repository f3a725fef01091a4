"""Aggregation of per-sequence label probabilities: group means, growth, distributions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .corpus import BankRecord, ReportDocument
from .errors import DomainError, MissingDataError, ReferentialIntegrityError, UndefinedGrowthError
from .nli import ProbabilityRow

GROUP_KEYS = ("financial_year", "label_code", "report_category", "region", "size_class")
_BANK_KEYS = frozenset({"region", "size_class"})
_REPORT_KEYS = frozenset({"financial_year", "report_category", "region", "size_class"})


@dataclass(frozen=True)
class AggregateRow:
    """Mean probability for one group; groups with no rows are never emitted."""

    keys: tuple[tuple[str, object], ...]
    n: int
    mean: float

    def key_dict(self) -> dict[str, object]:
        return dict(self.keys)


def _row_key_values(row: ProbabilityRow, keys: Sequence[str],
                    reports: Mapping[str, ReportDocument] | None,
                    banks: Mapping[str, BankRecord] | None):
    values = []
    for key in keys:
        if key == "label_code":
            values.append(row.label_code)
            continue
        report = reports[row.report_id]
        if key == "financial_year":
            values.append(report.financial_year)
        elif key == "report_category":
            values.append(report.category.value)
        elif key == "region":
            values.append(banks[report.bank_id].region.value)
        elif key == "size_class":
            values.append(banks[report.bank_id].size_class.value)
        else:
            raise DomainError(f"unknown group key {key!r}; valid keys: {GROUP_KEYS}")
    return tuple(values)


def _check_joinable(rows: Iterable[ProbabilityRow], keys: Sequence[str],
                    reports: Mapping[str, ReportDocument] | None,
                    banks: Mapping[str, BankRecord] | None):
    for key in keys:
        if key not in GROUP_KEYS:
            raise DomainError(f"unknown group key {key!r}; valid keys: {GROUP_KEYS}")
    need_reports = any(k in _REPORT_KEYS for k in keys)
    need_banks = any(k in _BANK_KEYS for k in keys)
    if need_reports and reports is None:
        raise DomainError(f"group keys {list(keys)} require report metadata")
    if need_banks and banks is None:
        raise DomainError(f"group keys {list(keys)} require bank metadata")
    offenders = set()
    if need_reports:
        for row in rows:
            report = reports.get(row.report_id)
            if report is None:
                offenders.add(f"report:{row.report_id}")
            elif need_banks and report.bank_id not in banks:
                offenders.add(f"bank:{report.bank_id}")
    if offenders:
        raise ReferentialIntegrityError("rows reference unknown metadata", offenders)


def mean_by(rows: Sequence[ProbabilityRow], keys: Sequence[str],
            reports: Mapping[str, ReportDocument] | None = None,
            banks: Mapping[str, BankRecord] | None = None) -> list[AggregateRow]:
    """Arithmetic mean of p per group, sorted by group key values.

    Every sequence contributes equally within its group. Sums use
    math.fsum, so results do not depend on row order.
    """
    _check_joinable(rows, keys, reports, banks)
    groups: dict[tuple, list[float]] = {}
    for row in rows:
        groups.setdefault(_row_key_values(row, keys, reports, banks), []).append(row.p)
    out = []
    # each key position has one type (year is int, the rest str), so tuples compare directly
    for values in sorted(groups):
        ps = groups[values]
        out.append(AggregateRow(
            keys=tuple(zip(keys, values)),
            n=len(ps),
            mean=math.fsum(ps) / len(ps),
        ))
    return out


def report_weighted_mean_by(rows: Sequence[ProbabilityRow], keys: Sequence[str],
                            reports: Mapping[str, ReportDocument] | None = None,
                            banks: Mapping[str, BankRecord] | None = None) -> list[AggregateRow]:
    """Variant where each report contributes equally: mean of per-report means."""
    _check_joinable(rows, keys, reports, banks)
    groups: dict[tuple, dict[str, list[float]]] = {}
    for row in rows:
        key = _row_key_values(row, keys, reports, banks)
        groups.setdefault(key, {}).setdefault(row.report_id, []).append(row.p)
    out = []
    for values in sorted(groups):
        per_report = [math.fsum(ps) / len(ps) for _, ps in sorted(groups[values].items())]
        out.append(AggregateRow(
            keys=tuple(zip(keys, values)),
            n=sum(len(ps) for ps in groups[values].values()),
            mean=math.fsum(per_report) / len(per_report),
        ))
    return out


def yearly_means(rows: Sequence[ProbabilityRow], label_code: str,
                 reports: Mapping[str, ReportDocument]) -> dict[int, float]:
    """Year -> mean probability series for one label."""
    filtered = [r for r in rows if r.label_code == label_code]
    series = {}
    for agg in mean_by(filtered, ["financial_year"], reports=reports):
        series[agg.key_dict()["financial_year"]] = agg.mean
    return series


def growth(series: Mapping[int, float], y0: int, y1: int) -> float:
    """Relative change of a yearly mean series between two years, in percent."""
    for year in (y0, y1):
        if year not in series:
            raise MissingDataError(f"year {year} missing from series (have {sorted(series)})")
    base = series[y0]
    if base == 0:
        raise UndefinedGrowthError(f"mean for base year {y0} is zero; relative growth undefined")
    return (series[y1] - base) / base * 100.0


@dataclass(frozen=True)
class DistributionStats:
    label_code: str
    n: int
    min: float
    q1: float
    median: float
    q3: float
    max: float
    mean: float


def quantile(sorted_values: Sequence[float], q: float) -> float:
    """Linear interpolation between order statistics at rank (n-1)*q."""
    n = len(sorted_values)
    if n == 0:
        raise MissingDataError("quantile of empty sample")
    if n == 1:
        return float(sorted_values[0])
    pos = (n - 1) * q
    lo = math.floor(pos)
    hi = min(lo + 1, n - 1)
    frac = pos - lo
    return sorted_values[lo] + (sorted_values[hi] - sorted_values[lo]) * frac


def distribution(rows: Sequence[ProbabilityRow], label_code: str) -> DistributionStats:
    """Five-number summary plus mean of one label's probabilities."""
    values = sorted(r.p for r in rows if r.label_code == label_code)
    if not values:
        raise MissingDataError(f"no probability rows for label {label_code!r}")
    return DistributionStats(
        label_code=label_code,
        n=len(values),
        min=values[0],
        q1=quantile(values, 0.25),
        median=quantile(values, 0.5),
        q3=quantile(values, 0.75),
        max=values[-1],
        mean=math.fsum(values) / len(values),
    )


def whisker_fences(rows: Sequence[ProbabilityRow], label_code: str) -> tuple[float, float]:
    """Nearest observed values inside the 1.5*IQR fences (boxplot whiskers)."""
    stats = distribution(rows, label_code)
    values = sorted(r.p for r in rows if r.label_code == label_code)
    iqr = stats.q3 - stats.q1
    lo_limit = stats.q1 - 1.5 * iqr
    hi_limit = stats.q3 + 1.5 * iqr
    lo = min((v for v in values if v >= lo_limit), default=stats.min)
    hi = max((v for v in values if v <= hi_limit), default=stats.max)
    return lo, hi


@dataclass(frozen=True)
class TrendSeries:
    """Aligned yearly means for a (general, climate-related) label pair."""

    general_code: str
    climate_code: str
    years: tuple[int, ...]
    general: tuple[float | None, ...]
    climate: tuple[float | None, ...]


def trend_series(rows: Sequence[ProbabilityRow], labels: tuple[str, str],
                 reports: Mapping[str, ReportDocument]) -> TrendSeries:
    """Per-year means for both labels of a general/climate pair, aligned on year."""
    general_code, climate_code = labels
    if not rows:
        raise MissingDataError("probability table is empty")
    general_series = yearly_means(rows, general_code, reports)
    climate_series = yearly_means(rows, climate_code, reports)
    if not general_series:
        raise MissingDataError(f"no rows for label {general_code!r}")
    if not climate_series:
        raise MissingDataError(f"no rows for label {climate_code!r}")
    years = tuple(sorted(set(general_series) | set(climate_series)))
    return TrendSeries(
        general_code=general_code,
        climate_code=climate_code,
        years=years,
        general=tuple(general_series.get(y) for y in years),
        climate=tuple(climate_series.get(y) for y in years),
    )
