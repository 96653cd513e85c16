"""The model's trading bot: quotes both sides of every bin from its demand curve.

For each bin the bot finds the highest cent price at which it would buy at
least one contract and the lowest at which it would sell at least one, with
quantities equal to its (floored) optimal demand at those prices.  After any
fill or belief update it cancels everything and reposts from the new
portfolio, so prices and quantities move in all bins, not just the traded
one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

from .decision import UtilitySpec, crra_prime, single_bin_demand
from .engine import BUY, PAYOUT, SELL, TICK_MAX, TICK_MIN, Exchange, Fill

_QTY_EPS = 1e-9  # guards floor() against optima that are exact integers


class MakerError(Exception):
    pass


@dataclass(frozen=True)
class BotState:
    """Everything the quote computation depends on.

    ``cash_cents`` counts all money the bot owns, whether the exchange has
    it free or held in escrow; escrow is bookkeeping, not economics.
    """

    beliefs: tuple[float, ...]
    cash_cents: int
    positions: tuple[int, ...]  # contracts per bin, negative = short
    spec: UtilitySpec = UtilitySpec(1.0)

    def __post_init__(self):
        if len(self.positions) != len(self.beliefs):
            raise MakerError("positions and beliefs must have the same length")
        if abs(sum(self.beliefs) - 1.0) > 1e-9:
            raise MakerError(f"beliefs sum to {sum(self.beliefs)}, expected 1")
        if any(p < 0 for p in self.beliefs):
            raise MakerError("negative belief")
        if self.cash_cents < 0:
            raise MakerError("bot cash must be nonnegative")

    @property
    def n(self) -> int:
        return len(self.beliefs)

    @property
    def cash_dollars(self) -> float:
        return self.cash_cents / 100.0


@dataclass(frozen=True)
class SideQuote:
    price_cents: int
    qty: int


@dataclass(frozen=True)
class BinQuote:
    bin: int
    bid: Optional[SideQuote]
    ask: Optional[SideQuote]


QuoteSet = tuple[BinQuote, ...]


def demand_at_price(state: BotState, bin_index: int, price: float) -> float:
    """Contracts the bot wants at a hypothetical price; negative means sell."""
    return single_bin_demand(
        state.cash_dollars,
        tuple(float(z) for z in state.positions),
        state.beliefs,
        bin_index,
        price,
        state.spec,
    )


def _zero_demand_price(state: BotState, bin_index: int) -> float:
    """Price at which the bot's demand in this bin is exactly zero.

    From the first-order condition at x=0:
    q0 = A / (A + B) with A = p_i u'(y + z_i), B = sum_{j!=i} p_j u'(y + z_j).
    Demand is positive strictly below q0 and negative strictly above.
    """
    y = state.cash_dollars
    a = state.beliefs[bin_index] * crra_prime(y + state.positions[bin_index], state.spec)
    b = sum(
        state.beliefs[j] * crra_prime(y + state.positions[j], state.spec)
        for j in range(state.n)
        if j != bin_index
    )
    if math.isinf(a):
        return 1.0
    if math.isinf(b) or a + b == 0.0:
        return 0.0
    return a / (a + b)


def _floored_demand(state: BotState, bin_index: int, cents: int) -> int:
    x = demand_at_price(state, bin_index, cents / 100.0)
    return math.floor(abs(x) + _QTY_EPS) * (1 if x >= 0 else -1)


def quote_set(state: BotState) -> QuoteSet:
    """Two-sided quotes per bin; a side is omitted when no cent price in
    [1, 99] draws at least one contract of demand, or when posting it would
    exceed the cash not already committed to short cover."""
    quotes = []
    short_cover = PAYOUT * sum(max(0, -z) for z in state.positions)
    free = state.cash_cents - short_cover
    for i in range(state.n):
        q0 = _zero_demand_price(state, i)

        bid = None
        start = min(TICK_MAX, int(math.ceil(q0 * 100)) + 1)
        for cents in range(start, TICK_MIN - 1, -1):
            qty = _floored_demand(state, i, cents)
            if qty >= 1:
                bid = SideQuote(cents, qty)
                break

        ask = None
        start = max(TICK_MIN, int(math.floor(q0 * 100)) - 1)
        for cents in range(start, TICK_MAX + 1):
            qty = _floored_demand(state, i, cents)
            if qty <= -1:
                ask = SideQuote(cents, -qty)
                break

        if bid is not None:
            affordable = free // bid.price_cents
            if affordable < 1:
                bid = None
            else:
                bid = SideQuote(bid.price_cents, min(bid.qty, affordable))
                free -= bid.price_cents * bid.qty
        if ask is not None:
            per_contract = PAYOUT - ask.price_cents
            affordable = free // per_contract
            if affordable < 1:
                ask = None
            else:
                ask = SideQuote(ask.price_cents, min(ask.qty, affordable))
                free -= per_contract * ask.qty

        if bid and ask and bid.price_cents >= ask.price_cents:
            raise MakerError(
                f"bin {i}: bid {bid.price_cents} crosses ask {ask.price_cents}"
            )
        quotes.append(BinQuote(i, bid, ask))
    return tuple(quotes)


class MakerBot:
    """Binds a quoting state to an exchange account and keeps them in sync.

    The bot is a single logical actor per market: a fill notification,
    the portfolio update, and the full requote happen before any other
    command touches the market.
    """

    MAX_REQUOTE_ROUNDS = 100

    def __init__(self, exchange: Exchange, account_id: int, market_id: int,
                 beliefs: Sequence[float], spec: UtilitySpec = UtilitySpec(1.0)):
        self.exchange = exchange
        self.account_id = account_id
        self.market_id = market_id
        n = exchange.markets[market_id].n
        if len(beliefs) != n:
            raise MakerError(f"market has {n} bins, beliefs have {len(beliefs)}")
        account = exchange.accounts[account_id]
        self.state = BotState(
            beliefs=tuple(float(p) for p in beliefs),
            cash_cents=account.cash + account.escrow,
            positions=tuple(account.position(market_id, b) for b in range(n)),
            spec=spec,
        )
        self._my_orders: dict[int, str] = {}  # open order id -> side

    # -- mirror maintenance -------------------------------------------------

    def sync_from_ledger(self):
        account = self.exchange.accounts[self.account_id]
        n = self.exchange.markets[self.market_id].n
        self.state = replace(
            self.state,
            cash_cents=account.cash + account.escrow,
            positions=tuple(account.position(self.market_id, b) for b in range(n)),
        )
        self._my_orders = {
            o.id: o.side
            for o in self.exchange.open_orders_for(self.account_id, self.market_id)
        }

    def _apply_fill(self, fill: Fill, side: str):
        cash = self.state.cash_cents
        positions = list(self.state.positions)
        if side == BUY:
            cash -= fill.price * fill.qty
            positions[fill.bin] += fill.qty
        else:
            cash += fill.price * fill.qty
            positions[fill.bin] -= fill.qty
        self.state = replace(self.state, cash_cents=cash, positions=tuple(positions))

    # -- protocol -------------------------------------------------------------

    def requote(self) -> list[Fill]:
        """Cancel everything and post the fresh quote set.

        Fresh orders may cross resting human orders and execute at once; any
        such fills update the mirror and trigger another full requote, until
        a round posts without trading.
        """
        all_fills: list[Fill] = []
        for _ in range(self.MAX_REQUOTE_ROUNDS):
            self.exchange.cancel_all(self.account_id, self.market_id)
            self._my_orders.clear()
            quotes = quote_set(self.state)
            round_fills: list[Fill] = []
            for bq in quotes:
                for side, sq in ((BUY, bq.bid), (SELL, bq.ask)):
                    if sq is None:
                        continue
                    order_id, fills = self.exchange.submit(
                        self.account_id, self.market_id, bq.bin, side,
                        sq.price_cents, sq.qty,
                    )
                    for f in fills:
                        if f.maker_account_id == self.account_id:
                            raise MakerError("bot crossed its own resting order")
                        self._apply_fill(f, side)
                    round_fills.extend(fills)
                    order = self.exchange.markets[self.market_id].open_orders.get(order_id)
                    if order is not None:
                        self._my_orders[order_id] = side
            all_fills.extend(round_fills)
            if not round_fills:
                return all_fills
        raise MakerError("requote did not quiesce; human liquidity keeps crossing")

    def on_fill(self, fill: Fill) -> list[Fill]:
        """Handle one fill against the bot's resting orders, then requote."""
        return self.on_fills([fill])

    def on_fills(self, fills: Sequence[Fill]) -> list[Fill]:
        """Handle a batch of fills from one command, then requote once."""
        touched = False
        for fill in fills:
            if fill.qty == 0:
                continue
            if fill.maker_account_id == self.account_id:
                if fill.maker_order_id not in self._my_orders:
                    # mirror went stale somehow; rebuild it from the ledger
                    self.sync_from_ledger()
                    return self.requote()
                self._apply_fill(fill, self._my_orders[fill.maker_order_id])
                touched = True
        if not touched:
            return []
        return self.requote()

    def on_beliefs(self, beliefs: Sequence[float]) -> list[Fill]:
        """Adopt updated model output and cancel-and-replace all quotes."""
        if len(beliefs) != self.state.n:
            raise MakerError("belief vector has wrong length")
        probe = BotState(
            beliefs=tuple(float(p) for p in beliefs),
            cash_cents=self.state.cash_cents,
            positions=self.state.positions,
            spec=self.state.spec,
        )
        self.state = probe
        return self.requote()
