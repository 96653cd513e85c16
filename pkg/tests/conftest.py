import datetime as dt
from pathlib import Path

import pytest

from modelmarket.panels import (
    AlignedPanel,
    AlignedRecord,
    OutcomeRow,
    OutcomeTable,
    align,
    parse_market_csv,
    parse_model_csv,
    parse_outcomes_csv,
)


def write(path: Path, text: str) -> Path:
    path.write_text(text)
    return path


@pytest.fixture
def csv_dir(tmp_path):
    """Small two-state, three-day dataset with hand-checkable numbers."""
    model = write(tmp_path / "model.csv", (
        "date,state,p_dem\n"
        "2020-10-30,AA,0.60\n"
        "2020-10-30,BB,0.40\n"
        "2020-10-31,AA,0.70\n"
        "2020-10-31,BB,0.35\n"
        "2020-11-01,AA,0.80\n"
        "2020-11-01,BB,0.30\n"
    ))
    market = write(tmp_path / "market.csv", (
        "date,state,dem_yes,rep_yes\n"
        "2020-10-30,AA,0.55,0.45\n"
        "2020-10-30,BB,0.50,0.50\n"
        "2020-10-31,AA,0.60,0.40\n"
        "2020-10-31,BB,0.45,0.55\n"
        "2020-11-01,AA,0.65,0.35\n"
        "2020-11-01,BB,0.40,0.60\n"
    ))
    outcomes = write(tmp_path / "outcomes.csv", (
        "state,winner,margin_votes,margin_pct\n"
        "AA,DEM,10000,0.003\n"
        "BB,REP,25000,0.008\n"
    ))
    return tmp_path


@pytest.fixture
def small_panel(csv_dir):
    model = parse_model_csv(csv_dir / "model.csv")
    market = parse_market_csv(csv_dir / "market.csv")
    outcomes = parse_outcomes_csv(csv_dir / "outcomes.csv")
    return align(model, market, outcomes)


def _rec(day, state, p_model, p_market, r):
    return AlignedRecord(dt.date(2020, 11, day), state, p_model, p_market, r)


@pytest.fixture
def dominance_panel():
    """Two states, two dates; the hybrid daily mean beats both on date 1.

    Date 1: the model errs badly in B, the market errs badly in A, both
    events resolve 1.  Per state the hybrid (0.5) scores 0.25, between the
    component scores 0.01 and 0.81; across states the components average
    0.41 while the hybrid averages 0.25.
    """
    return AlignedPanel((
        _rec(1, "A", 0.9, 0.1, 1),
        _rec(1, "B", 0.1, 0.9, 1),
        _rec(2, "A", 0.6, 0.6, 1),
        _rec(2, "B", 0.4, 0.4, 0),
    ))
