"""Limit-order-book exchange for n-bin event markets.

All money is integer cents and all quantities are integer contracts, so the
ledger is exact: the sum of cash and escrow across accounts never changes
except for the zero-sum payout transfer at settlement.  Orders match under
price-time priority at the resting (maker) price.  Margin is 100%: a buy
escrows price*qty, a sell escrows (100-price)*qty, and a short position
holds a full 100 cents per contract (margin plus sale proceeds) until the
market settles.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

TICK_MIN = 1
TICK_MAX = 99
PAYOUT = 100  # cents paid per winning contract

BUY = "BUY"
SELL = "SELL"


class EngineError(Exception):
    pass


class UnknownAccount(EngineError):
    pass


class UnknownMarket(EngineError):
    pass


class UnknownOrder(EngineError):
    pass


class MarketClosed(EngineError):
    pass


class InvalidOrder(EngineError):
    pass


class InsufficientMargin(EngineError):
    pass


class PositionLimitExceeded(EngineError):
    pass


@dataclass
class Order:
    id: int
    account_id: int
    market_id: int
    bin: int
    side: str
    price: int  # cents
    qty: int  # original quantity
    remaining: int
    seq: int


@dataclass(frozen=True)
class Fill:
    taker_order_id: int
    maker_order_id: int
    taker_account_id: int
    maker_account_id: int
    market_id: int
    bin: int
    price: int  # maker's resting price, cents
    qty: int
    seq: int


@dataclass
class Account:
    id: int
    name: str
    cash: int  # free cents
    escrow: int = 0  # held cents (open orders + short cover)
    positions: dict[tuple[int, int], int] = field(default_factory=dict)

    def position(self, market_id: int, bin: int) -> int:
        return self.positions.get((market_id, bin), 0)


@dataclass
class Market:
    id: int
    name: str
    bins: tuple[str, ...]
    # per bin: resting orders, kept price-time sorted on access
    open_orders: dict[int, Order] = field(default_factory=dict)
    settled: bool = False
    winning_bin: Optional[int] = None

    @property
    def n(self) -> int:
        return len(self.bins)


def order_escrow(side: str, price: int, qty: int) -> int:
    """Cents held against an open order's worst-case obligation."""
    return price * qty if side == BUY else (PAYOUT - price) * qty


class Exchange:
    """Single-process exchange; commands are applied in call order."""

    def __init__(self, position_limit: Optional[int] = None):
        self.position_limit = position_limit
        self.accounts: dict[int, Account] = {}
        self.markets: dict[int, Market] = {}
        self.fills: list[Fill] = []
        self._next_account = 1
        self._next_market = 1
        self._next_order = 1
        self._next_seq = 1

    # -- setup ------------------------------------------------------------

    def open_account(self, name: str, cash: int) -> Account:
        if cash < 0:
            raise InvalidOrder(f"cash must be nonnegative, got {cash}")
        if any(a.name == name for a in self.accounts.values()):
            raise InvalidOrder(f"account name {name!r} already exists")
        account = Account(self._next_account, name, cash)
        self._next_account += 1
        self.accounts[account.id] = account
        return account

    def create_market(self, name: str, bins: list[str]) -> Market:
        if not 2 <= len(bins) <= 64:
            raise InvalidOrder(f"need between 2 and 64 bins, got {len(bins)}")
        if any(mkt.name == name for mkt in self.markets.values()):
            raise InvalidOrder(f"market name {name!r} already exists")
        market = Market(self._next_market, name, tuple(bins))
        self._next_market += 1
        self.markets[market.id] = market
        return market

    # -- lookups ----------------------------------------------------------

    def _account(self, account_id: int) -> Account:
        try:
            return self.accounts[account_id]
        except KeyError:
            raise UnknownAccount(f"no account {account_id}")

    def _market(self, market_id: int) -> Market:
        try:
            return self.markets[market_id]
        except KeyError:
            raise UnknownMarket(f"no market {market_id}")

    def _queue(self, market: Market, bin: int, side: str) -> list[Order]:
        """Resting orders for one side of a bin, best price first, then time."""
        orders = [
            o for o in market.open_orders.values() if o.bin == bin and o.side == side
        ]
        if side == BUY:
            orders.sort(key=lambda o: (-o.price, o.seq))
        else:
            orders.sort(key=lambda o: (o.price, o.seq))
        return orders

    # -- trading ----------------------------------------------------------

    def submit(self, account_id: int, market_id: int, bin: int, side: str,
               price: int, qty: int) -> tuple[int, list[Fill]]:
        account = self._account(account_id)
        market = self._market(market_id)
        if market.settled:
            raise MarketClosed(f"market {market_id} is settled")
        if not 0 <= bin < market.n:
            raise InvalidOrder(f"bin {bin} out of range for market {market_id}")
        if side not in (BUY, SELL):
            raise InvalidOrder(f"side must be BUY or SELL, got {side!r}")
        if not isinstance(price, int) or not TICK_MIN <= price <= TICK_MAX:
            raise InvalidOrder(f"price {price} outside [{TICK_MIN}, {TICK_MAX}] cents")
        if not isinstance(qty, int) or qty < 1:
            raise InvalidOrder(f"quantity {qty} must be a positive integer")
        self._check_position_limit(account, market, bin, side, qty)

        need = order_escrow(side, price, qty)
        if account.cash < need:
            raise InsufficientMargin(
                f"order needs {need} cents escrow, only {account.cash} free"
            )
        account.cash -= need
        account.escrow += need

        order = Order(self._next_order, account_id, market_id, bin, side,
                      price, qty, qty, self._next_seq)
        self._next_order += 1
        self._next_seq += 1

        fills = self._match(market, order)
        if order.remaining > 0:
            market.open_orders[order.id] = order
        return order.id, fills

    def _check_position_limit(self, account: Account, market: Market, bin: int,
                              side: str, qty: int):
        if self.position_limit is None:
            return
        pos = account.position(market.id, bin)
        pending = sum(
            o.remaining for o in market.open_orders.values()
            if o.account_id == account.id and o.bin == bin and o.side == side
        )
        direction = 1 if side == BUY else -1
        worst = abs(pos + direction * (pending + qty))
        if worst > self.position_limit:
            raise PositionLimitExceeded(
                f"position could reach {worst} contracts, limit {self.position_limit}"
            )

    def _match(self, market: Market, taker: Order) -> list[Fill]:
        fills = []
        opposite = SELL if taker.side == BUY else BUY
        while taker.remaining > 0:
            queue = self._queue(market, taker.bin, opposite)
            if not queue:
                break
            maker = queue[0]
            crosses = (
                maker.price <= taker.price if taker.side == BUY
                else maker.price >= taker.price
            )
            if not crosses:
                break
            qty = min(taker.remaining, maker.remaining)
            fill = Fill(
                taker_order_id=taker.id,
                maker_order_id=maker.id,
                taker_account_id=taker.account_id,
                maker_account_id=maker.account_id,
                market_id=market.id,
                bin=taker.bin,
                price=maker.price,
                qty=qty,
                seq=self._next_seq,
            )
            self._next_seq += 1
            self.fills.append(fill)
            fills.append(fill)

            buyer_order, seller_order = (
                (taker, maker) if taker.side == BUY else (maker, taker)
            )
            self._settle_fill_leg_buy(buyer_order, maker.price, qty)
            self._settle_fill_leg_sell(seller_order, maker.price, qty)
            taker.remaining -= qty
            maker.remaining -= qty
            if maker.remaining == 0:
                del market.open_orders[maker.id]
        return fills

    def _settle_fill_leg_buy(self, order: Order, fill_price: int, qty: int):
        """Buyer pays fill_price per contract out of the order's escrow.

        Escrow was taken at the (weakly higher) limit price; the difference
        returns to cash.  Covering a short releases its 100 cents/contract.
        """
        account = self._account(order.account_id)
        reserved = order.price * qty
        account.escrow -= reserved
        account.cash += reserved - fill_price * qty

        key = (order.market_id, order.bin)
        pos = account.positions.get(key, 0)
        covered = min(qty, max(0, -pos))
        if covered:
            account.escrow -= PAYOUT * covered
            account.cash += PAYOUT * covered
        account.positions[key] = pos + qty
        if account.positions[key] == 0:
            del account.positions[key]

    def _settle_fill_leg_sell(self, order: Order, fill_price: int, qty: int):
        """Seller receives proceeds; newly created shorts hold 100 cents each.

        The order escrow (100 - limit) plus proceeds covers the full payout
        obligation; anything beyond that is released to cash.
        """
        account = self._account(order.account_id)
        reserved = (PAYOUT - order.price) * qty
        account.escrow -= reserved
        account.cash += reserved + fill_price * qty

        key = (order.market_id, order.bin)
        pos = account.positions.get(key, 0)
        new_shorts = max(0, -(pos - qty)) - max(0, -pos)
        if new_shorts:
            account.cash -= PAYOUT * new_shorts
            account.escrow += PAYOUT * new_shorts
        account.positions[key] = pos - qty
        if account.positions[key] == 0:
            del account.positions[key]

    def cancel(self, account_id: int, order_id: int) -> int:
        """Cancel an open order; returns the escrow released, in cents."""
        account = self._account(account_id)
        order = None
        for market in self.markets.values():
            if order_id in market.open_orders:
                order = market.open_orders[order_id]
                break
        if order is None:
            raise UnknownOrder(f"no open order {order_id}")
        if order.account_id != account_id:
            raise UnknownOrder(f"order {order_id} does not belong to account {account_id}")
        released = order_escrow(order.side, order.price, order.remaining)
        account.escrow -= released
        account.cash += released
        del self.markets[order.market_id].open_orders[order_id]
        return released

    def cancel_all(self, account_id: int, market_id: int) -> int:
        """Cancel every open order the account has in one market."""
        market = self._market(market_id)
        mine = [o.id for o in market.open_orders.values() if o.account_id == account_id]
        return sum(self.cancel(account_id, oid) for oid in mine)

    def open_orders_for(self, account_id: int, market_id: int) -> list[Order]:
        market = self._market(market_id)
        orders = [o for o in market.open_orders.values() if o.account_id == account_id]
        orders.sort(key=lambda o: o.seq)
        return orders

    # -- settlement -------------------------------------------------------

    def settle(self, market_id: int, winning_bin: int) -> dict[int, int]:
        """Resolve a market: longs in the winning bin collect, shorts pay.

        Open orders are cancelled first.  Returns the winning-bin transfer
        per account id (positive for longs, negative for shorts); escrow
        backing losing-bin shorts is released back to their own cash.
        """
        market = self._market(market_id)
        if market.settled:
            raise MarketClosed(f"market {market_id} already settled")
        if not 0 <= winning_bin < market.n:
            raise InvalidOrder(f"bin {winning_bin} out of range")

        for order in list(market.open_orders.values()):
            self.cancel(order.account_id, order.id)

        payouts: dict[int, int] = {}
        for account in self.accounts.values():
            delta = 0
            for (mkt, bin), pos in list(account.positions.items()):
                if mkt != market_id:
                    continue
                if bin == winning_bin:
                    if pos > 0:
                        account.cash += PAYOUT * pos
                        delta += PAYOUT * pos
                    else:
                        account.escrow -= PAYOUT * (-pos)
                        delta -= PAYOUT * (-pos)
                elif pos < 0:
                    account.escrow -= PAYOUT * (-pos)
                    account.cash += PAYOUT * (-pos)
                del account.positions[(mkt, bin)]
            if delta:
                payouts[account.id] = delta
        market.settled = True
        market.winning_bin = winning_bin
        return payouts

    # -- views ------------------------------------------------------------

    def snapshot(self, market_id: int) -> dict:
        """Point-in-time book view: per-bin ladders plus recent fills."""
        market = self._market(market_id)
        bins = []
        for b in range(market.n):
            bins.append({
                "bin": b,
                "label": market.bins[b],
                "bids": [
                    {"order_id": o.id, "account_id": o.account_id,
                     "price_cents": o.price, "qty": o.remaining}
                    for o in self._queue(market, b, BUY)
                ],
                "asks": [
                    {"order_id": o.id, "account_id": o.account_id,
                     "price_cents": o.price, "qty": o.remaining}
                    for o in self._queue(market, b, SELL)
                ],
            })
        trades = [
            {"bin": f.bin, "price_cents": f.price, "qty": f.qty, "seq": f.seq}
            for f in self.fills if f.market_id == market_id
        ]
        return {
            "market_id": market_id,
            "name": market.name,
            "settled": market.settled,
            "winning_bin": market.winning_bin,
            "bins": bins,
            "trades": trades[-50:],
        }

    def ledger(self) -> dict:
        """Full exchange state as a JSON-compatible dict, stable ordering."""
        return {
            "accounts": [
                {
                    "id": a.id,
                    "name": a.name,
                    "cash": a.cash,
                    "escrow": a.escrow,
                    "positions": [
                        {"market": k[0], "bin": k[1], "qty": v}
                        for k, v in sorted(a.positions.items())
                    ],
                }
                for a in sorted(self.accounts.values(), key=lambda a: a.id)
            ],
            "markets": [
                {
                    "id": m.id,
                    "name": m.name,
                    "bins": list(m.bins),
                    "settled": m.settled,
                    "winning_bin": m.winning_bin,
                    "open_orders": [
                        {
                            "id": o.id, "account": o.account_id, "bin": o.bin,
                            "side": o.side, "price": o.price, "qty": o.qty,
                            "remaining": o.remaining, "seq": o.seq,
                        }
                        for o in sorted(m.open_orders.values(), key=lambda o: o.seq)
                    ],
                }
                for m in sorted(self.markets.values(), key=lambda m: m.id)
            ],
            "fills": [
                {
                    "taker": f.taker_order_id, "maker": f.maker_order_id,
                    "market": f.market_id, "bin": f.bin,
                    "price": f.price, "qty": f.qty, "seq": f.seq,
                }
                for f in self.fills
            ],
        }

    def total_cash_and_escrow(self) -> int:
        return sum(a.cash + a.escrow for a in self.accounts.values())
