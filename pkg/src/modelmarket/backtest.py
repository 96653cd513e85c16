"""Daily replay of model beliefs against market prices, one bot per state.

Each state gets its own bot with independent cash (default $1000) and an
empty contract position.  Every day the bot re-optimizes its single-event
position at that day's fill price, and fills are frictionless and unlimited
at that price.  Final payoffs use the actual resolutions; flip scenarios
re-price the same terminal portfolios under counterfactual resolutions.
"""

from __future__ import annotations

import datetime as dt
import itertools
import math
from dataclasses import dataclass
from decimal import Decimal
from typing import Iterable, Optional, Sequence

from .decision import UtilitySpec, single_bin_demand
from .panels import AlignedPanel, OutcomeTable, PricePanel

QUANTITY_CONTINUOUS = "continuous"
QUANTITY_INTEGER = "integer"

FILL_AVERAGE_OF_CLOSES = "average_of_closes"


@dataclass(frozen=True)
class BacktestConfig:
    initial_cash: float = 1000.0  # per state, dollars
    rho: float = 1.0
    fill_policy: str = FILL_AVERAGE_OF_CLOSES
    quantity_mode: str = QUANTITY_CONTINUOUS

    def __post_init__(self):
        if self.initial_cash <= 0:
            raise ValueError("initial cash must be positive")
        if self.fill_policy != FILL_AVERAGE_OF_CLOSES:
            raise ValueError(f"unknown fill policy {self.fill_policy!r}")
        if self.quantity_mode not in (QUANTITY_CONTINUOUS, QUANTITY_INTEGER):
            raise ValueError(f"unknown quantity mode {self.quantity_mode!r}")

    @property
    def utility(self) -> UtilitySpec:
        return UtilitySpec(self.rho)


def event_price(dem_yes, rep_yes) -> float:
    """Fill price for the event: mean of the two contract-implied prices.

    The Dem-yes contract prices the event directly; one minus the Rep-yes
    price is the same event priced through the complement.  Decimal inputs
    are averaged exactly before conversion to float.
    """
    if isinstance(dem_yes, Decimal) or isinstance(rep_yes, Decimal):
        d = Decimal(str(dem_yes)) if not isinstance(dem_yes, Decimal) else dem_yes
        r = Decimal(str(rep_yes)) if not isinstance(rep_yes, Decimal) else rep_yes
        if not (Decimal(0) < d < Decimal(1) and Decimal(0) < r < Decimal(1)):
            raise ValueError(f"prices ({d}, {r}) must lie in (0, 1)")
        return float((d + (Decimal(1) - r)) / Decimal(2))
    d = float(dem_yes)
    r = float(rep_yes)
    if not (0.0 < d < 1.0 and 0.0 < r < 1.0):
        raise ValueError(f"prices ({d}, {r}) must lie in (0, 1)")
    return (d + (1.0 - r)) / 2.0


@dataclass(frozen=True)
class TrajectoryPoint:
    date: dt.date
    cash: float  # after the day's trade
    holdings: float
    price: float
    trade: float
    value: float  # cash + holdings * price


@dataclass(frozen=True)
class Trajectory:
    state: str
    points: tuple[TrajectoryPoint, ...]


@dataclass(frozen=True)
class StateResult:
    state: str
    terminal_cash: float
    terminal_contracts: float
    value: float  # pre-resolution mark-to-market on the final day
    payoff: float
    profit: float
    return_rate: float


@dataclass(frozen=True)
class BacktestReport:
    config: BacktestConfig
    results: tuple[StateResult, ...]
    trajectories: tuple[Trajectory, ...]

    @property
    def total_value(self) -> float:
        return sum(r.value for r in self.results)

    @property
    def total_payoff(self) -> float:
        return sum(r.payoff for r in self.results)

    @property
    def total_profit(self) -> float:
        return sum(r.profit for r in self.results)

    @property
    def total_return(self) -> float:
        invested = self.config.initial_cash * len(self.results)
        return self.total_profit / invested

    def by_state(self) -> dict[str, StateResult]:
        return {r.state: r for r in self.results}


def step(cash: float, holdings: float, belief: float, price: float,
         config: BacktestConfig) -> tuple[float, float, float]:
    """One daily rebalance: returns (trade, new_cash, new_holdings).

    The trade is the expected-utility optimum for a single binary event at
    the quoted price; the full demand is filled, so cash moves by exactly
    ``price * trade``.
    """
    if not 0.0 < price < 1.0:
        raise ValueError(f"fill price {price} outside (0, 1)")
    x = single_bin_demand(cash, (holdings, 0.0), (belief, 1.0 - belief), 0,
                          price, config.utility)
    if config.quantity_mode == QUANTITY_INTEGER:
        x = float(math.floor(abs(x) + 1e-9) * (1 if x >= 0 else -1))
    return x, cash - price * x, holdings + x


def run_state(state: str, dates: Sequence[dt.date], beliefs: Sequence[float],
              fill_prices: Sequence[float], resolution: int,
              config: BacktestConfig) -> tuple[Trajectory, StateResult]:
    """Replay one state's daily series and settle at the resolution."""
    if not len(dates) == len(beliefs) == len(fill_prices):
        raise ValueError("dates, beliefs, and prices must have equal length")
    if not dates:
        raise ValueError("empty series")
    cash = config.initial_cash
    holdings = 0.0
    points = []
    for date, p, q in zip(dates, beliefs, fill_prices):
        x, cash, holdings = step(cash, holdings, p, q, config)
        points.append(TrajectoryPoint(date, cash, holdings, q, x, cash + holdings * q))
    final = points[-1]
    payoff = cash + holdings * resolution
    profit = payoff - config.initial_cash
    result = StateResult(
        state=state,
        terminal_cash=cash,
        terminal_contracts=holdings,
        value=final.value,
        payoff=payoff,
        profit=profit,
        return_rate=profit / config.initial_cash,
    )
    return Trajectory(state, tuple(points)), result


def run_panel(panel: AlignedPanel, prices: PricePanel, outcomes: OutcomeTable,
              config: Optional[BacktestConfig] = None) -> BacktestReport:
    """Backtest every state in the panel with independent per-state cash."""
    config = config or BacktestConfig()
    price_map = prices.lookup()
    results = []
    trajectories = []
    for state in panel.states:
        series = panel.state_series(state)
        dates = [rec.date for rec in series]
        beliefs = [rec.p_model for rec in series]
        fills = []
        for rec in series:
            entry = price_map.get((rec.date, rec.state))
            if entry is None:
                raise ValueError(f"no price row for ({rec.date}, {rec.state})")
            fills.append(event_price(entry.dem_yes, entry.rep_yes))
        traj, result = run_state(state, dates, beliefs, fills,
                                 outcomes.resolution(state), config)
        trajectories.append(traj)
        results.append(result)
    return BacktestReport(config, tuple(results), tuple(trajectories))


@dataclass(frozen=True)
class FlipScenario:
    states: tuple[str, ...]
    margin_votes: int
    payoff: float
    profit: float
    return_rate: float


def flip_analysis(report: BacktestReport, outcomes: OutcomeTable,
                  flip_sets: Iterable[Sequence[str]]) -> list[FlipScenario]:
    """Recompute aggregate payoffs with the given states decided the other way.

    Trading happened before resolution, so terminal portfolios are reused;
    only the payout leg of each flipped state changes.
    """
    by_state = report.by_state()
    table = outcomes.by_state()
    scenarios = []
    for flip in flip_sets:
        flip = tuple(flip)
        unknown = [s for s in flip if s not in by_state]
        if unknown:
            raise ValueError(f"unknown states in flip set: {unknown}")
        payoff = 0.0
        for result in report.results:
            r = outcomes.resolution(result.state)
            if result.state in flip:
                r = 1 - r
            payoff += result.terminal_cash + result.terminal_contracts * r
        invested = report.config.initial_cash * len(report.results)
        profit = payoff - invested
        margin = sum(table[s].margin_votes for s in flip)
        scenarios.append(FlipScenario(flip, margin, payoff, profit, profit / invested))
    return scenarios


@dataclass(frozen=True)
class RobustnessResult:
    close_states: tuple[str, ...]
    diameter: float  # math.inf when no flip set produces a loss
    min_flip_votes: Optional[int]
    losing_set: Optional[tuple[str, ...]]


def robustness_diameter(report: BacktestReport, outcomes: OutcomeTable,
                        threshold: float) -> RobustnessResult:
    """Smallest number of close-state flips that would turn the profit negative.

    A state is close when its vote margin is at or below the threshold: a
    threshold of at most 1 is a fraction of votes cast (requires the
    optional margin_pct column), above 1 it is an absolute vote count.
    Also reports the minimum total flipped votes over loss-inducing sets.
    """
    table = outcomes.by_state()
    states = [r.state for r in report.results]
    if threshold <= 1.0:
        missing = [s for s in states if table[s].margin_pct is None]
        if missing:
            raise ValueError(
                "fractional closeness threshold needs margin_pct for: " + ", ".join(missing)
            )
        close = [s for s in states if table[s].margin_pct <= threshold]
    else:
        close = [s for s in states if table[s].margin_votes <= threshold]
    close.sort(key=lambda s: table[s].margin_votes)
    if len(close) > 20:
        raise ValueError(f"{len(close)} close states is too many to enumerate")

    if not close:
        return RobustnessResult((), math.inf, None, None)

    diameter = math.inf
    min_votes: Optional[int] = None
    losing: Optional[tuple[str, ...]] = None
    for k in range(1, len(close) + 1):
        for combo in itertools.combinations(close, k):
            scenario = flip_analysis(report, outcomes, [combo])[0]
            if scenario.profit < 0:
                if k < diameter:
                    diameter = k
                if min_votes is None or scenario.margin_votes < min_votes:
                    min_votes = scenario.margin_votes
                    losing = combo
    return RobustnessResult(tuple(close), diameter, min_votes, losing)
