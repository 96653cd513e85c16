import random

import pytest

from modelmarket.decision import UtilitySpec
from modelmarket.engine import BUY, SELL, Exchange
from modelmarket.maker import (
    BotState,
    MakerBot,
    MakerError,
    demand_at_price,
    quote_set,
)

DEMO_BELIEFS = (0.3, 0.5, 0.2)

# (bid price, bid qty, ask price, ask qty) per bin from the worked example
FIRST_BOOK = [(29, 48, 31, 46), (49, 40, 51, 40), (19, 64, 21, 60)]
SECOND_BOOK = [(28, 51, 30, 47), (50, 28, 51, 11), (20, 17, 21, 42)]


def fresh_state(cash_cents=100_000, positions=(0, 0, 0)):
    return BotState(beliefs=DEMO_BELIEFS, cash_cents=cash_cents,
                    positions=positions)


class TestDemand:
    def test_zero_at_belief_price_with_flat_book(self):
        state = fresh_state()
        assert demand_at_price(state, 0, 0.30) == 0.0

    def test_buy_side_quantity(self):
        assert demand_at_price(fresh_state(), 0, 0.29) == pytest.approx(48.57, abs=0.005)

    def test_sell_side_quantity(self):
        assert demand_at_price(fresh_state(), 2, 0.21) == pytest.approx(-60.28, abs=0.005)


class TestQuoteSet:
    def test_first_order_book_exact(self):
        quotes = quote_set(fresh_state())
        for bq, (bp, bqty, ap, aqty) in zip(quotes, FIRST_BOOK):
            assert (bq.bid.price_cents, bq.bid.qty) == (bp, bqty)
            assert (bq.ask.price_cents, bq.ask.qty) == (ap, aqty)

    def test_second_order_book_prices_exact_quantities_close(self):
        state = fresh_state(cash_cents=98_608, positions=(48, 0, 0))
        quotes = quote_set(state)
        for bq, (bp, bqty, ap, aqty) in zip(quotes, SECOND_BOOK):
            assert bq.bid.price_cents == bp
            assert bq.ask.price_cents == ap
            assert abs(bq.bid.qty - bqty) <= 1
            assert abs(bq.ask.qty - aqty) <= 1

    def test_inventory_lets_ask_touch_belief(self):
        # holding 48 contracts, the bot offers bin 1 at its own belief price
        state = fresh_state(cash_cents=98_608, positions=(48, 0, 0))
        assert quote_set(state)[0].ask.price_cents == 30

    def test_straddle_at_rest(self):
        rng = random.Random(6)
        for _ in range(50):
            raw = [rng.uniform(0.05, 1.0) for _ in range(3)]
            total = sum(raw)
            beliefs = tuple(v / total for v in raw)
            state = BotState(beliefs=beliefs, cash_cents=250_000, positions=(0, 0, 0))
            for i, bq in enumerate(quote_set(state)):
                if bq.bid:
                    assert bq.bid.price_cents < beliefs[i] * 100
                if bq.ask:
                    assert bq.ask.price_cents > beliefs[i] * 100

    def test_long_inventory_lowers_ask(self):
        base = quote_set(fresh_state())
        skewed = quote_set(fresh_state(cash_cents=98_608, positions=(48, 0, 0)))
        assert skewed[0].ask.price_cents <= base[0].ask.price_cents

    def test_deterministic(self):
        state = fresh_state(cash_cents=98_608, positions=(48, 0, 0))
        assert quote_set(state) == quote_set(state)

    def test_uniform_beliefs_symmetric(self):
        state = BotState(beliefs=(0.5, 0.5), cash_cents=100_000, positions=(0, 0))
        first, second = quote_set(state)
        assert (first.bid, first.ask) == (second.bid, second.ask)
        assert first.bid.price_cents < 50 < first.ask.price_cents

    def test_budget_collapse(self):
        # quotes thin out as cash shrinks and vanish entirely near zero
        def total_quoted(cash_cents):
            quotes = quote_set(fresh_state(cash_cents=cash_cents))
            return sum((bq.bid.qty if bq.bid else 0) + (bq.ask.qty if bq.ask else 0)
                       for bq in quotes)

        sizes = [total_quoted(c) for c in (100_000, 10_000, 1_000, 100, 1)]
        assert all(a >= b for a, b in zip(sizes, sizes[1:]))
        assert sizes[-1] == 0

        quotes = quote_set(fresh_state(cash_cents=1))
        assert all(bq.bid is None and bq.ask is None for bq in quotes)

    def test_two_sided_under_interior_beliefs_and_budget(self):
        rng = random.Random(9)
        for _ in range(30):
            raw = [rng.uniform(0.1, 1.0) for _ in range(4)]
            total = sum(raw)
            beliefs = tuple(v / total for v in raw)
            state = BotState(beliefs=beliefs, cash_cents=500_000,
                             positions=(0, 0, 0, 0))
            for bq in quote_set(state):
                assert bq.bid is not None and bq.ask is not None


class TestMakerBot:
    def setup_bot(self, human_cash=1_000_000):
        ex = Exchange()
        bot_account = ex.open_account("bot", 100_000)
        human = ex.open_account("human", human_cash)
        market = ex.create_market("demo", ["b1", "b2", "b3"])
        bot = MakerBot(ex, bot_account.id, market.id, DEMO_BELIEFS)
        bot.requote()
        return ex, bot, human.id, market.id

    def test_posts_six_orders(self):
        ex, bot, _, market_id = self.setup_bot()
        snap = ex.snapshot(market_id)
        for b, (bp, bqty, ap, aqty) in zip(snap["bins"], FIRST_BOOK):
            assert [(o["price_cents"], o["qty"]) for o in b["bids"]] == [(bp, bqty)]
            assert [(o["price_cents"], o["qty"]) for o in b["asks"]] == [(ap, aqty)]

    def test_fill_and_requote_protocol(self):
        ex, bot, human, market_id = self.setup_bot()
        _, fills = ex.submit(human, market_id, 0, SELL, 29, 48)
        assert [(f.price, f.qty) for f in fills] == [(29, 48)]
        bot.on_fills(fills)
        assert bot.state.cash_cents == 98_608  # 1000 - 0.29 * 48 dollars
        assert bot.state.positions == (48, 0, 0)
        snap = ex.snapshot(market_id)
        for b, (bp, bqty, ap, aqty) in zip(snap["bins"], SECOND_BOOK):
            (bid,) = b["bids"]
            (ask,) = b["asks"]
            assert bid["price_cents"] == bp and abs(bid["qty"] - bqty) <= 1
            assert ask["price_cents"] == ap and abs(ask["qty"] - aqty) <= 1

    def test_mirror_matches_ledger_after_random_trading(self):
        ex, bot, human, market_id = self.setup_bot()
        rng = random.Random(12)
        for _ in range(60):
            b = rng.randint(0, 2)
            side = BUY if rng.random() < 0.5 else SELL
            price = rng.randint(5, 95)
            _, fills = ex.submit(human, market_id, b, side, price, rng.randint(1, 30))
            if fills:
                bot.on_fills(fills)
            account = ex.accounts[bot.account_id]
            assert bot.state.cash_cents == account.cash + account.escrow
            assert bot.state.positions == tuple(
                account.position(market_id, i) for i in range(3))

    def test_on_beliefs_requotes_everything(self):
        ex, bot, human, market_id = self.setup_bot()
        fills = bot.on_beliefs((0.6, 0.3, 0.1))
        assert fills == []  # empty human book, nothing to cross
        snap = ex.snapshot(market_id)
        bid = snap["bins"][0]["bids"][0]
        assert bid["price_cents"] > 29  # belief in bin 1 went up

    def test_belief_jump_crosses_resting_human_order(self):
        ex, bot, human, market_id = self.setup_bot()
        ex.submit(human, market_id, 0, SELL, 40, 10)  # above the bot's 31 ask
        fills = bot.on_beliefs((0.6, 0.3, 0.1))
        assert fills, "new bid should cross the resting human ask"
        assert all(f.price == 40 for f in fills)  # maker price
        assert bot.state.positions[0] >= 10

    def test_unchanged_beliefs_identical_ladder(self):
        ex, bot, human, market_id = self.setup_bot()
        before = ex.snapshot(market_id)
        bot.on_beliefs(DEMO_BELIEFS)
        after = ex.snapshot(market_id)
        strip = lambda snap: [
            [(o["price_cents"], o["qty"]) for o in b["bids"] + b["asks"]]
            for b in snap["bins"]
        ]
        assert strip(before) == strip(after)

    def test_conservation_through_bot_activity(self):
        ex, bot, human, market_id = self.setup_bot()
        total0 = ex.total_cash_and_escrow()
        rng = random.Random(13)
        for _ in range(40):
            _, fills = ex.submit(human, market_id, rng.randint(0, 2),
                                 BUY if rng.random() < 0.5 else SELL,
                                 rng.randint(10, 90), rng.randint(1, 20))
            if fills:
                bot.on_fills(fills)
            assert ex.total_cash_and_escrow() == total0
