"""Forecast scoring, a model-driven trading bot, and a hybrid prediction market."""

__version__ = "0.1.0"

from .panels import (  # noqa: F401
    AlignedPanel,
    ForecastPanel,
    OutcomeTable,
    PanelError,
    PricePanel,
    align,
    normalize_pair,
    parse_market_csv,
    parse_model_csv,
    parse_outcomes_csv,
)
from .scoring import (  # noqa: F401
    Source,
    brier,
    calibration,
    daily_mean,
    dominance,
    frequency,
    overall_mean,
    synthetic,
)
from .decision import (  # noqa: F401
    Beliefs,
    IndependentMarginals,
    JointBeliefs,
    OutcomeMatrix,
    Portfolio,
    PriceBoard,
    TradePlan,
    UtilitySpec,
    binary_log_closed_form,
    crra,
    expected_utility,
    optimal_trades,
    single_bin_demand,
    terminal_wealth,
    worst_case,
)
from .backtest import (  # noqa: F401
    BacktestConfig,
    event_price,
    flip_analysis,
    robustness_diameter,
    run_panel,
    run_state,
    step,
)
from .engine import Exchange  # noqa: F401
from .maker import BotState, MakerBot, demand_at_price, quote_set  # noqa: F401
