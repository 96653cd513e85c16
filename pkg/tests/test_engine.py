import json
import random

import pytest

from modelmarket.engine import (
    BUY,
    SELL,
    Exchange,
    InsufficientMargin,
    InvalidOrder,
    MarketClosed,
    PositionLimitExceeded,
    UnknownOrder,
)


@pytest.fixture
def ex():
    exchange = Exchange()
    exchange.open_account("alice", 100_000)
    exchange.open_account("bob", 100_000)
    exchange.create_market("test", ["Y", "N"])
    return exchange


class TestSubmit:
    def test_resting_buy_escrows_notional(self, ex):
        order_id, fills = ex.submit(1, 1, 0, BUY, 30, 10)
        assert fills == []
        alice = ex.accounts[1]
        assert alice.cash == 100_000 - 300
        assert alice.escrow == 300

    def test_cross_fills_at_maker_price(self, ex):
        ex.submit(1, 1, 0, SELL, 30, 10)
        _, fills = ex.submit(2, 1, 0, BUY, 31, 10)
        (fill,) = fills
        assert fill.price == 30  # maker's resting price, not the taker limit
        assert fill.qty == 10
        assert ex.accounts[2].position(1, 0) == 10
        assert ex.accounts[1].position(1, 0) == -10

    def test_sell_escrow_requirement(self):
        exchange = Exchange()
        exchange.open_account("poor", 290)
        exchange.create_market("m", ["Y", "N"])
        # worst case liability (100-40)*5 = 300 cents
        with pytest.raises(InsufficientMargin):
            exchange.submit(1, 1, 0, SELL, 40, 5)

    def test_price_bounds(self, ex):
        for price in (0, 100, -1):
            with pytest.raises(InvalidOrder):
                ex.submit(1, 1, 0, BUY, price, 1)

    def test_unknown_bin(self, ex):
        with pytest.raises(InvalidOrder):
            ex.submit(1, 1, 5, BUY, 30, 1)

    def test_partial_fill_rests_remainder(self, ex):
        ex.submit(1, 1, 0, SELL, 40, 4)
        order_id, fills = ex.submit(2, 1, 0, BUY, 40, 10)
        assert sum(f.qty for f in fills) == 4
        book = ex.snapshot(1)["bins"][0]
        assert book["bids"] == [
            {"order_id": order_id, "account_id": 2, "price_cents": 40, "qty": 6}
        ]

    def test_price_time_priority(self, ex):
        first, _ = ex.submit(1, 1, 0, SELL, 40, 5)
        second, _ = ex.submit(1, 1, 0, SELL, 40, 5)
        better, _ = ex.submit(1, 1, 0, SELL, 39, 5)
        _, fills = ex.submit(2, 1, 0, BUY, 45, 12)
        assert [(f.maker_order_id, f.qty) for f in fills] == [
            (better, 5), (first, 5), (second, 2)]


class TestCancel:
    def test_cancel_releases_escrow(self, ex):
        order_id, _ = ex.submit(1, 1, 0, BUY, 30, 10)
        released = ex.cancel(1, order_id)
        assert released == 300
        assert ex.accounts[1].cash == 100_000
        assert ex.accounts[1].escrow == 0

    def test_cancel_twice_errors(self, ex):
        order_id, _ = ex.submit(1, 1, 0, BUY, 30, 10)
        ex.cancel(1, order_id)
        with pytest.raises(UnknownOrder):
            ex.cancel(1, order_id)

    def test_cancel_after_partial_fill(self, ex):
        order_id, _ = ex.submit(1, 1, 0, BUY, 30, 10)
        ex.submit(2, 1, 0, SELL, 30, 4)
        released = ex.cancel(1, order_id)
        assert released == 180  # 6 remaining at 30

    def test_cannot_cancel_other_accounts_order(self, ex):
        order_id, _ = ex.submit(1, 1, 0, BUY, 30, 10)
        with pytest.raises(UnknownOrder):
            ex.cancel(2, order_id)


class TestSettle:
    def test_long_winner_collects_dollar_per_contract(self, ex):
        ex.submit(1, 1, 0, SELL, 40, 48)
        ex.submit(2, 1, 0, BUY, 40, 48)
        payouts = ex.settle(1, 0)
        assert payouts[2] == 4800
        assert ex.accounts[2].position(1, 0) == 0

    def test_short_walkthrough(self):
        # short 5 at 40: 300 margin + 200 proceeds are held; if the bin
        # wins the full 500 goes to the longs and the shorts net -300
        exchange = Exchange()
        exchange.open_account("short", 300)
        exchange.open_account("long", 200)
        exchange.create_market("m", ["Y", "N"])
        exchange.submit(1, 1, 0, SELL, 40, 5)
        exchange.submit(2, 1, 0, BUY, 40, 5)
        short, long_ = exchange.accounts[1], exchange.accounts[2]
        assert short.escrow == 500
        assert short.cash == 0
        payouts = exchange.settle(1, 0)
        assert payouts == {1: -500, 2: 500}
        assert short.cash == 0 and short.escrow == 0
        assert long_.cash == 500

    def test_losing_positions_pay_nothing(self, ex):
        ex.submit(1, 1, 0, SELL, 40, 5)
        ex.submit(2, 1, 0, BUY, 40, 5)
        ex.settle(1, 1)  # bin 0 loses
        # short keeps proceeds: 100k - 300 escrow + 200 proceeds + 300 released
        assert ex.accounts[1].cash == 100_200
        assert ex.accounts[2].cash == 99_800

    def test_open_orders_cancelled_before_settlement(self, ex):
        ex.submit(1, 1, 0, BUY, 30, 10)
        ex.settle(1, 1)
        assert ex.accounts[1].cash == 100_000
        assert ex.accounts[1].escrow == 0

    def test_double_settle_errors(self, ex):
        ex.settle(1, 0)
        with pytest.raises(MarketClosed):
            ex.settle(1, 0)

    def test_no_orders_after_settlement(self, ex):
        ex.settle(1, 0)
        with pytest.raises(MarketClosed):
            ex.submit(1, 1, 0, BUY, 30, 1)


class TestPositionLimit:
    def test_cap_enforced(self):
        exchange = Exchange(position_limit=850)
        exchange.open_account("a", 10_000_000)
        exchange.create_market("m", ["Y", "N"])
        exchange.submit(1, 1, 0, BUY, 50, 850)
        with pytest.raises(PositionLimitExceeded):
            exchange.submit(1, 1, 0, BUY, 50, 1)

    def test_default_is_uncapped(self, ex):
        ex.submit(1, 1, 0, BUY, 50, 2000)


class TestSnapshot:
    def test_empty_market(self, ex):
        snap = ex.snapshot(1)
        assert all(b["bids"] == [] and b["asks"] == [] for b in snap["bins"])

    def test_no_self_crossing_after_quiesce(self, ex):
        rng = random.Random(4)
        for _ in range(300):
            side = BUY if rng.random() < 0.5 else SELL
            try:
                ex.submit(rng.randint(1, 2), 1, rng.randint(0, 1), side,
                          rng.randint(1, 99), rng.randint(1, 20))
            except InsufficientMargin:
                pass
        for b in ex.snapshot(1)["bins"]:
            if b["bids"] and b["asks"]:
                assert b["bids"][0]["price_cents"] < b["asks"][0]["price_cents"]


def _random_run(seed, n_commands=10_000, check_each=False):
    rng = random.Random(seed)
    ex = Exchange()
    for name in ("a", "b", "c", "d"):
        ex.open_account(name, 1_000_000)
    ex.create_market("m1", ["X", "Y", "Z"])
    ex.create_market("m2", ["P", "Q"])
    total0 = ex.total_cash_and_escrow()
    open_ids = []
    settled = set()
    commands = []
    for k in range(n_commands):
        account = rng.randint(1, 4)
        roll = rng.random()
        live = [m for m in (1, 2) if m not in settled]
        if roll < 0.55 and live:
            market = rng.choice(live)
            bins = ex.markets[market].n
            cmd = ("submit", account, market, rng.randint(0, bins - 1),
                   BUY if rng.random() < 0.5 else SELL,
                   rng.randint(1, 99), rng.randint(1, 50))
        elif roll < 0.8 and open_ids:
            cmd = ("cancel", account, rng.choice(open_ids))
        elif roll < 0.805 and live and len(settled) < 1 and k > n_commands // 2:
            market = rng.choice(live)
            cmd = ("settle", market, rng.randint(0, ex.markets[market].n - 1))
        else:
            continue
        commands.append(cmd)
        try:
            if cmd[0] == "submit":
                order_id, _ = ex.submit(*cmd[1:])
                open_ids.append(order_id)
            elif cmd[0] == "cancel":
                ex.cancel(cmd[1], cmd[2])
            else:
                ex.settle(cmd[1], cmd[2])
                settled.add(cmd[1])
        except (InsufficientMargin, UnknownOrder, MarketClosed, InvalidOrder):
            pass
        if check_each:
            assert ex.total_cash_and_escrow() == total0
    return ex, commands, total0


class TestInvariants:
    def test_conservation_over_random_commands(self):
        ex, _, total0 = _random_run(1, check_each=True)
        assert ex.total_cash_and_escrow() == total0

    def test_matched_book_zero_sum(self):
        ex, _, _ = _random_run(2, n_commands=3000)
        for market in (1, 2):
            if ex.markets[market].settled:
                continue
            for b in range(ex.markets[market].n):
                net = sum(a.position(market, b) for a in ex.accounts.values())
                assert net == 0

    def test_escrow_covers_worst_case_exactly(self):
        from modelmarket.engine import order_escrow
        ex, _, _ = _random_run(3, n_commands=3000)
        for account in ex.accounts.values():
            expected = sum(
                order_escrow(o.side, o.price, o.remaining)
                for m in ex.markets.values()
                for o in m.open_orders.values()
                if o.account_id == account.id
            ) + sum(100 * -p for p in account.positions.values() if p < 0)
            assert account.escrow == expected
            assert account.cash >= 0

    def test_determinism(self):
        ex1, commands, _ = _random_run(5, n_commands=4000)
        ex2 = Exchange()
        for name in ("a", "b", "c", "d"):
            ex2.open_account(name, 1_000_000)
        ex2.create_market("m1", ["X", "Y", "Z"])
        ex2.create_market("m2", ["P", "Q"])
        for cmd in commands:
            try:
                if cmd[0] == "submit":
                    ex2.submit(*cmd[1:])
                elif cmd[0] == "cancel":
                    ex2.cancel(cmd[1], cmd[2])
                else:
                    ex2.settle(cmd[1], cmd[2])
            except (InsufficientMargin, UnknownOrder, MarketClosed, InvalidOrder):
                pass
        assert json.dumps(ex1.ledger(), sort_keys=True) == json.dumps(
            ex2.ledger(), sort_keys=True)
