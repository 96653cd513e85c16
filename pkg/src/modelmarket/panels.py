"""CSV ingestion and alignment of model forecasts, market prices, and outcomes.

Three input files are expected:

* ``model_forecasts.csv`` with header ``date,state,p_dem``
* ``market_prices.csv`` with header ``date,state,dem_yes,rep_yes``
* ``outcomes.csv`` with header ``state,winner,margin_votes`` and an optional
  trailing ``margin_pct`` column (vote margin as a fraction of votes cast)

Prices are parsed as exact decimals so that downstream accounting does not
inherit float representation error from the files.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Iterable, Optional, Sequence


class PanelError(ValueError):
    """Raised when an input file or panel combination is invalid.

    ``problems`` holds one human-readable message per offending row or gap.
    """

    def __init__(self, summary: str, problems: Sequence[str] = ()):
        self.problems = list(problems)
        lines = [summary] + ["  - " + p for p in self.problems]
        super().__init__("\n".join(lines))


@dataclass(frozen=True)
class ForecastEntry:
    date: dt.date
    state: str
    p: float


@dataclass(frozen=True)
class ForecastPanel:
    """Per state-date event probabilities from one forecasting source."""

    entries: tuple[ForecastEntry, ...]

    def __post_init__(self):
        seen = set()
        problems = []
        for e in self.entries:
            key = (e.date, e.state)
            if key in seen:
                problems.append(f"duplicate (date, state) pair {key}")
            seen.add(key)
            if not 0.0 <= e.p <= 1.0:
                problems.append(f"probability {e.p} outside [0, 1] at {key}")
        if problems:
            raise PanelError("invalid forecast panel", problems)

    def lookup(self) -> dict[tuple[dt.date, str], float]:
        return {(e.date, e.state): e.p for e in self.entries}


@dataclass(frozen=True)
class PriceEntry:
    date: dt.date
    state: str
    dem_yes: Decimal
    rep_yes: Decimal


@dataclass(frozen=True)
class PricePanel:
    """Per state-date closing prices for the two complementary contracts."""

    entries: tuple[PriceEntry, ...]

    def __post_init__(self):
        seen = set()
        problems = []
        for e in self.entries:
            key = (e.date, e.state)
            if key in seen:
                problems.append(f"duplicate (date, state) pair {key}")
            seen.add(key)
            for name, price in (("dem_yes", e.dem_yes), ("rep_yes", e.rep_yes)):
                if not Decimal(0) < price < Decimal(1):
                    problems.append(f"{name}={price} outside (0, 1) at {key}")
        if problems:
            raise PanelError("invalid price panel", problems)

    def lookup(self) -> dict[tuple[dt.date, str], PriceEntry]:
        return {(e.date, e.state): e for e in self.entries}


@dataclass(frozen=True)
class OutcomeRow:
    state: str
    winner: str  # "DEM" | "REP"
    margin_votes: int
    margin_pct: Optional[float] = None


@dataclass(frozen=True)
class OutcomeTable:
    rows: tuple[OutcomeRow, ...]

    def __post_init__(self):
        problems = []
        seen = set()
        for row in self.rows:
            if row.state in seen:
                problems.append(f"duplicate state {row.state}")
            seen.add(row.state)
            if row.winner not in ("DEM", "REP"):
                problems.append(f"winner {row.winner!r} for {row.state} not DEM/REP")
            if row.margin_votes < 0:
                problems.append(f"negative margin_votes for {row.state}")
            if row.margin_pct is not None and not 0.0 <= row.margin_pct <= 1.0:
                problems.append(f"margin_pct {row.margin_pct} for {row.state} outside [0, 1]")
        if problems:
            raise PanelError("invalid outcome table", problems)

    def by_state(self) -> dict[str, OutcomeRow]:
        return {row.state: row for row in self.rows}

    def resolution(self, state: str) -> int:
        return 1 if self.by_state()[state].winner == "DEM" else 0


@dataclass(frozen=True)
class AlignedRecord:
    date: dt.date
    state: str
    p_model: float
    p_market: float
    r: int


@dataclass(frozen=True)
class AlignedPanel:
    """Rectangular (state x date) panel of model and market probabilities.

    Every state carries a record for every date; the resolution ``r`` is 1
    for an eventual Democratic win, 0 otherwise.
    """

    records: tuple[AlignedRecord, ...]

    def __post_init__(self):
        dates = self.dates
        states = self.states
        keys = {(rec.date, rec.state) for rec in self.records}
        if len(keys) != len(self.records):
            raise PanelError("aligned panel has duplicate (date, state) records")
        missing = [
            f"({d.isoformat()}, {s})" for d in dates for s in states if (d, s) not in keys
        ]
        if missing:
            raise PanelError("aligned panel is not rectangular", missing)
        bad = [
            f"({rec.date}, {rec.state})"
            for rec in self.records
            if not (0.0 <= rec.p_model <= 1.0 and 0.0 <= rec.p_market <= 1.0)
        ]
        if bad:
            raise PanelError("aligned panel has probabilities outside [0, 1]", bad)

    @property
    def dates(self) -> tuple[dt.date, ...]:
        return tuple(sorted({rec.date for rec in self.records}))

    @property
    def states(self) -> tuple[str, ...]:
        return tuple(sorted({rec.state for rec in self.records}))

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_days(self) -> int:
        return len(self.dates)

    def by_date(self) -> dict[dt.date, list[AlignedRecord]]:
        out: dict[dt.date, list[AlignedRecord]] = {d: [] for d in self.dates}
        for rec in self.records:
            out[rec.date].append(rec)
        for recs in out.values():
            recs.sort(key=lambda r: r.state)
        return out

    def state_series(self, state: str) -> list[AlignedRecord]:
        recs = [rec for rec in self.records if rec.state == state]
        recs.sort(key=lambda r: r.date)
        return recs


def _parse_date(text: str) -> dt.date:
    return dt.date.fromisoformat(text.strip())


def _read_rows(path: str | Path, expected_header: Sequence[str], optional: Sequence[str] = ()):
    """Yield (line_number, row_dict) after validating the header."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise PanelError(f"{path}: file is empty, expected header {','.join(expected_header)}")
        header = [h.strip() for h in header]
        required = list(expected_header)
        allowed = required + list(optional)
        if header[: len(required)] != required or any(h not in allowed for h in header):
            raise PanelError(
                f"{path}: bad header {','.join(header)!r}, expected {','.join(required)}"
                + (f" (optional: {','.join(optional)})" if optional else "")
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < len(required) or len(row) > len(header):
                yield lineno, None, f"line {lineno}: expected {len(header)} fields, got {len(row)}"
                continue
            yield lineno, dict(zip(header, (c.strip() for c in row))), None


def parse_model_csv(path: str | Path) -> ForecastPanel:
    """Parse ``date,state,p_dem`` rows into a validated forecast panel."""
    entries = []
    problems = []
    seen = set()
    for lineno, row, err in _read_rows(path, ("date", "state", "p_dem")):
        if err:
            problems.append(err)
            continue
        try:
            date = _parse_date(row["date"])
        except ValueError:
            problems.append(f"line {lineno}: unparsable date {row['date']!r}")
            continue
        try:
            p = float(row["p_dem"])
        except ValueError:
            problems.append(f"line {lineno}: unparsable probability {row['p_dem']!r}")
            continue
        if not 0.0 <= p <= 1.0:
            problems.append(f"line {lineno}: p_dem={p} outside [0, 1]")
            continue
        key = (date, row["state"])
        if key in seen:
            problems.append(f"line {lineno}: duplicate (date, state) {key}")
            continue
        seen.add(key)
        entries.append(ForecastEntry(date, row["state"], p))
    if problems:
        raise PanelError(f"{path}: invalid forecast rows", problems)
    return ForecastPanel(tuple(entries))


def parse_market_csv(path: str | Path) -> PricePanel:
    """Parse ``date,state,dem_yes,rep_yes`` rows into a validated price panel."""
    entries = []
    problems = []
    seen = set()
    for lineno, row, err in _read_rows(path, ("date", "state", "dem_yes", "rep_yes")):
        if err:
            problems.append(err)
            continue
        try:
            date = _parse_date(row["date"])
        except ValueError:
            problems.append(f"line {lineno}: unparsable date {row['date']!r}")
            continue
        prices = {}
        bad = False
        for col in ("dem_yes", "rep_yes"):
            try:
                prices[col] = Decimal(row[col])
            except InvalidOperation:
                problems.append(f"line {lineno}: unparsable price {row[col]!r}")
                bad = True
                continue
            if not Decimal(0) < prices[col] < Decimal(1):
                problems.append(f"line {lineno}: {col}={row[col]} outside (0, 1)")
                bad = True
        if bad:
            continue
        key = (date, row["state"])
        if key in seen:
            problems.append(f"line {lineno}: duplicate (date, state) {key}")
            continue
        seen.add(key)
        entries.append(PriceEntry(date, row["state"], prices["dem_yes"], prices["rep_yes"]))
    if problems:
        raise PanelError(f"{path}: invalid price rows", problems)
    return PricePanel(tuple(entries))


def parse_outcomes_csv(path: str | Path) -> OutcomeTable:
    """Parse ``state,winner,margin_votes[,margin_pct]`` into an outcome table."""
    rows = []
    problems = []
    seen = set()
    for lineno, row, err in _read_rows(
        path, ("state", "winner", "margin_votes"), optional=("margin_pct",)
    ):
        if err:
            problems.append(err)
            continue
        winner = row["winner"].upper()
        if winner not in ("DEM", "REP"):
            problems.append(f"line {lineno}: winner {row['winner']!r} not DEM/REP")
            continue
        try:
            margin = int(row["margin_votes"])
        except ValueError:
            problems.append(f"line {lineno}: unparsable margin_votes {row['margin_votes']!r}")
            continue
        if margin < 0:
            problems.append(f"line {lineno}: negative margin_votes {margin}")
            continue
        margin_pct = None
        if row.get("margin_pct"):
            try:
                margin_pct = float(row["margin_pct"])
            except ValueError:
                problems.append(f"line {lineno}: unparsable margin_pct {row['margin_pct']!r}")
                continue
            if not 0.0 <= margin_pct <= 1.0:
                problems.append(f"line {lineno}: margin_pct {margin_pct} outside [0, 1]")
                continue
        if row["state"] in seen:
            problems.append(f"line {lineno}: duplicate state {row['state']}")
            continue
        seen.add(row["state"])
        rows.append(OutcomeRow(row["state"], winner, margin, margin_pct))
    if problems:
        raise PanelError(f"{path}: invalid outcome rows", problems)
    return OutcomeTable(tuple(rows))


def normalize_pair(dem_yes, rep_yes) -> float:
    """Scale a pair of complementary contract prices into an event probability.

    The two prices need not sum to one (exchange frictions push the sum
    above a dollar), so the quote for the event is taken as
    ``dem_yes / (dem_yes + rep_yes)``.
    """
    a = float(dem_yes)
    b = float(rep_yes)
    if a < 0 or b < 0:
        raise ValueError(f"prices must be nonnegative, got ({a}, {b})")
    total = a + b
    if total <= 0:
        raise ValueError("price pair sums to zero, cannot normalize")
    return a / total


def align(model: ForecastPanel, market: PricePanel, outcomes: OutcomeTable) -> AlignedPanel:
    """Join the model and market panels into one rectangular panel.

    The overlap window is the intersection of the two sources' date spans.
    Inside the window every (date, state) must be present in both sources;
    anything missing is reported as a gap rather than imputed.  Dates
    outside the window (one source simply started earlier or ended later)
    are dropped.
    """
    model_map = model.lookup()
    market_map = market.lookup()
    if not model_map or not market_map:
        raise PanelError("cannot align empty panels")

    model_dates = {d for d, _ in model_map}
    market_dates = {d for d, _ in market_map}
    lo = max(min(model_dates), min(market_dates))
    hi = min(max(model_dates), max(market_dates))
    if lo > hi:
        raise PanelError("model and market date ranges do not overlap")

    dates = sorted({d for d in model_dates | market_dates if lo <= d <= hi})
    states = sorted(
        {s for _, s in model_map} | {s for _, s in market_map}
    )

    known = {row.state for row in outcomes.rows}
    missing_outcomes = [s for s in states if s not in known]
    if missing_outcomes:
        raise PanelError("states missing from outcomes table", missing_outcomes)

    gaps = []
    records = []
    for d in dates:
        for s in states:
            key = (d, s)
            in_model = key in model_map
            in_market = key in market_map
            if not (in_model and in_market):
                source = "model" if not in_model else "market"
                gaps.append(f"({d.isoformat()}, {s}) missing from {source}")
                continue
            price = market_map[key]
            records.append(
                AlignedRecord(
                    date=d,
                    state=s,
                    p_model=model_map[key],
                    p_market=normalize_pair(price.dem_yes, price.rep_yes),
                    r=outcomes.resolution(s),
                )
            )
    if gaps:
        raise PanelError("aligned panel has gaps", gaps)
    return AlignedPanel(tuple(records))
