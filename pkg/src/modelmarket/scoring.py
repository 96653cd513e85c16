"""Forecast accuracy measures: Brier scores, calibration, and hybrid averaging.

All operations take the aligned (state x date) panel and are pure; nothing
here mutates its inputs.  The hybrid forecast is the weighted average of the
model and market probabilities for the same event, weight 0.5 by default.
"""

from __future__ import annotations

import datetime as dt
import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

from .panels import AlignedPanel, AlignedRecord, ForecastEntry, ForecastPanel


class Source(enum.Enum):
    MODEL = "model"
    MARKET = "market"
    HYBRID = "hybrid"


def brier(p: float, r: int) -> float:
    """Squared error of a probabilistic forecast against a 0/1 realization.

    Parameters
    ----------
    p : probability assigned to the event, in [0, 1]
    r : 1 if the event occurred, else 0

    Returns
    -------
    (p - r)**2, in [0, 1]; lower is better.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p} outside [0, 1]")
    if r not in (0, 1):
        raise ValueError(f"realization {r} must be 0 or 1")
    return (p - r) ** 2


def record_probability(rec: AlignedRecord, source: Source, hybrid_weight: float = 0.5) -> float:
    """Probability a source assigns to the record's event.

    For HYBRID this is ``w * p_model + (1 - w) * p_market``.
    """
    if source is Source.MODEL:
        return rec.p_model
    if source is Source.MARKET:
        return rec.p_market
    return hybrid_weight * rec.p_model + (1.0 - hybrid_weight) * rec.p_market


@dataclass(frozen=True)
class BrierSeries:
    """Daily mean Brier scores plus the per-record scores behind them."""

    source: Source
    dates: tuple[dt.date, ...]
    means: tuple[float, ...]  # one per date, mean over states
    record_scores: dict[tuple[dt.date, str], float]

    def as_rows(self) -> list[tuple[str, str, float]]:
        """Long-format rows (date, source, value) for CSV export."""
        return [
            (d.isoformat(), self.source.value, m) for d, m in zip(self.dates, self.means)
        ]


def daily_mean(panel: AlignedPanel, source: Source, hybrid_weight: float = 0.5) -> BrierSeries:
    """Mean Brier score per date, averaging across states."""
    if not panel.records:
        raise ValueError("empty panel")
    by_date = panel.by_date()
    record_scores: dict[tuple[dt.date, str], float] = {}
    means = []
    for d in panel.dates:
        scores = []
        for rec in by_date[d]:
            s = brier(record_probability(rec, source, hybrid_weight), rec.r)
            record_scores[(d, rec.state)] = s
            scores.append(s)
        means.append(sum(scores) / len(scores))
    return BrierSeries(source, panel.dates, tuple(means), record_scores)


def overall_mean(panel: AlignedPanel, source: Source, hybrid_weight: float = 0.5) -> float:
    """Mean Brier score over every (state, date) record in the panel."""
    if not panel.records:
        raise ValueError("empty panel")
    total = 0.0
    for rec in panel.records:
        total += brier(record_probability(rec, source, hybrid_weight), rec.r)
    return total / len(panel.records)


def synthetic(panel: AlignedPanel, hybrid_weight: float = 0.5) -> ForecastPanel:
    """Hybrid forecast panel: the weighted average of model and market."""
    entries = tuple(
        ForecastEntry(rec.date, rec.state, record_probability(rec, Source.HYBRID, hybrid_weight))
        for rec in panel.records
    )
    return ForecastPanel(entries)


@dataclass(frozen=True)
class CalibrationBin:
    lo: float
    hi: float
    count: int
    mean_forecast: float
    realized_freq: float


@dataclass(frozen=True)
class CalibrationCurve:
    bin_width: float
    bins: tuple[CalibrationBin, ...]

    @property
    def total(self) -> int:
        return sum(b.count for b in self.bins)


def calibration(forecasts: Sequence[tuple[float, int]], bin_width: float = 0.05) -> CalibrationCurve:
    """Group forecasts into probability bins and report realized frequencies.

    Bins are half-open ``[k*w, (k+1)*w)`` with the last bin closed at 1.0.
    Empty bins are omitted.
    """
    n_bins = round(1.0 / bin_width)
    if abs(n_bins * bin_width - 1.0) > 1e-9:
        raise ValueError(f"bin width {bin_width} does not divide 1 evenly")
    if not forecasts:
        raise ValueError("no forecasts to calibrate")
    sums: dict[int, list[float]] = {}
    hits: dict[int, int] = {}
    for p, r in forecasts:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"forecast {p} outside [0, 1]")
        k = min(int(p / bin_width), n_bins - 1)
        sums.setdefault(k, []).append(p)
        hits[k] = hits.get(k, 0) + (1 if r else 0)
    bins = []
    for k in sorted(sums):
        ps = sums[k]
        bins.append(
            CalibrationBin(
                lo=k * bin_width,
                hi=(k + 1) * bin_width,
                count=len(ps),
                mean_forecast=sum(ps) / len(ps),
                realized_freq=hits[k] / len(ps),
            )
        )
    return CalibrationCurve(bin_width, tuple(bins))


def panel_forecasts(panel: AlignedPanel, source: Source, hybrid_weight: float = 0.5) -> list[tuple[float, int]]:
    """Flatten a panel into (probability, realization) pairs for one source."""
    return [
        (record_probability(rec, source, hybrid_weight), rec.r) for rec in panel.records
    ]


@dataclass(frozen=True)
class FrequencyBin:
    lo: float
    hi: float
    count: int
    distinct_states: int


@dataclass(frozen=True)
class FrequencyReport:
    source: Source
    bin_width: float
    bins: tuple[FrequencyBin, ...]

    def peak(self) -> FrequencyBin:
        """Bin with the most distinct states (ties broken by lower edge)."""
        return max(self.bins, key=lambda b: (b.distinct_states, -b.lo))


def frequency(panel: AlignedPanel, source: Source, bin_width: float = 0.01,
              hybrid_weight: float = 0.5) -> FrequencyReport:
    """How often each probability level appears, and in how many states."""
    n_bins = round(1.0 / bin_width)
    if abs(n_bins * bin_width - 1.0) > 1e-9:
        raise ValueError(f"bin width {bin_width} does not divide 1 evenly")
    counts: dict[int, int] = {}
    states: dict[int, set[str]] = {}
    for rec in panel.records:
        p = record_probability(rec, source, hybrid_weight)
        k = min(int(p / bin_width), n_bins - 1)
        counts[k] = counts.get(k, 0) + 1
        states.setdefault(k, set()).add(rec.state)
    bins = tuple(
        FrequencyBin(k * bin_width, (k + 1) * bin_width, counts[k], len(states[k]))
        for k in sorted(counts)
    )
    return FrequencyReport(source, bin_width, bins)


@dataclass(frozen=True)
class DominanceReport:
    """Dates on which the hybrid daily mean strictly beats both components."""

    dates: tuple[dt.date, ...]
    dominated: tuple[bool, ...]
    count: int
    trailing_streak: int


def dominance(panel: AlignedPanel, hybrid_weight: float = 0.5) -> DominanceReport:
    """Flag dates where the hybrid daily mean is below both component means.

    For any single record the hybrid score sits between the two component
    scores, but averaged across states it can undercut both; this report
    counts such dates and the streak of them running up to the final date.
    """
    model = daily_mean(panel, Source.MODEL).means
    market = daily_mean(panel, Source.MARKET).means
    hybrid = daily_mean(panel, Source.HYBRID, hybrid_weight).means
    flags = tuple(
        h < model[i] and h < market[i] for i, h in enumerate(hybrid)
    )
    streak = 0
    for flag in reversed(flags):
        if not flag:
            break
        streak += 1
    return DominanceReport(panel.dates, flags, sum(flags), streak)
