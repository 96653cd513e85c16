"""HTTP + WebSocket front end for the exchange and its market-making bot.

Commands are JSON POSTs named after what they do (open-account,
place-order, ...); every state change appends to a per-market event stream
that clients consume over a persistent WebSocket, resumable from any
sequence number.  Accepted commands are journaled to an append-only JSONL
file, and a restarted service rebuilds its entire ledger by replaying that
journal through a fresh engine.

Money crosses the wire as integer cents; probabilities as decimals with at
most six places.
"""

from __future__ import annotations

import asyncio
import json
import secrets
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from fastapi import Body, FastAPI, Header, Query, WebSocket
from fastapi.responses import JSONResponse
from starlette.websockets import WebSocketDisconnect

from .decision import UtilitySpec
from .engine import (
    BUY,
    SELL,
    EngineError,
    Exchange,
    InsufficientMargin,
    InvalidOrder,
    MarketClosed,
    UnknownOrder,
)
from .maker import BotState, MakerBot, MakerError


class ServiceError(Exception):
    def __init__(self, status: int, message: str):
        self.status = status
        self.message = message
        super().__init__(message)


@dataclass
class ServiceConfig:
    admin_token: str = "admin"
    event_log: Optional[Path] = None
    position_limit: Optional[int] = None


def _round_probs(p):
    return [round(float(x), 6) for x in p]


class ExchangeService:
    """Owns the engine, the bots, the event streams, and the journal.

    All mutating commands funnel through :meth:`apply` under one lock, so
    every observer sees a single total order of events per market.
    """

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.exchange = Exchange(position_limit=config.position_limit)
        self.bots: dict[int, MakerBot] = {}
        self.bot_accounts: dict[int, int] = {}  # market id -> bot account id
        self.events: dict[int, list[dict]] = {}
        self.tokens: dict[str, int] = {}
        self.settle_results: dict[int, dict] = {}
        self.lock = threading.RLock()
        self._journaling = False
        self._journal_fh = None
        if config.event_log is not None:
            path = Path(config.event_log)
            if path.exists():
                self._replay(path)
            path.parent.mkdir(parents=True, exist_ok=True)
            self._journal_fh = path.open("a")

    def close(self):
        if self._journal_fh is not None:
            self._journal_fh.close()
            self._journal_fh = None

    # -- journal ------------------------------------------------------------

    def _commit(self, cmd: dict):
        """Append the command to the journal at its point of no return.

        Handlers call this once the engine has mutated; anything after the
        commit point must be deterministic so that replay reproduces it.
        """
        if cmd.get("_committed"):
            return
        cmd["_committed"] = True
        if self._journaling and self._journal_fh is not None:
            record = {k: v for k, v in cmd.items() if not k.startswith("_")}
            self._journal_fh.write(json.dumps(record, sort_keys=True) + "\n")
            self._journal_fh.flush()

    def _replay(self, path: Path):
        with path.open() as fh:
            for line in fh:
                line = line.strip()
                if line:
                    self.apply(json.loads(line), journal=False)

    # -- events ---------------------------------------------------------------

    def _emit(self, market_id: int, kind: str, payload: dict):
        stream = self.events.setdefault(market_id, [])
        stream.append({"seq": len(stream) + 1, "kind": kind, "payload": payload})

    def _emit_book(self, market_id: int):
        self._emit(market_id, "BOOK", self._book_payload(market_id))

    def _book_payload(self, market_id: int) -> dict:
        snap = self.exchange.snapshot(market_id)
        bot_account = self.bot_accounts.get(market_id)
        for bin_view in snap["bins"]:
            for side in ("bids", "asks"):
                for order in bin_view[side]:
                    order["bot"] = order["account_id"] == bot_account
        return snap

    def _quotes_payload(self, market_id: int) -> dict:
        bot_account = self.bot_accounts.get(market_id)
        market = self.exchange.markets[market_id]
        ladder = []
        for b in range(market.n):
            entry = {"bin": b, "bid": None, "ask": None}
            for order in market.open_orders.values():
                if order.account_id != bot_account or order.bin != b:
                    continue
                side = "bid" if order.side == BUY else "ask"
                entry[side] = {"price_cents": order.price, "qty": order.remaining}
            ladder.append(entry)
        return {"ladder": ladder}

    def _emit_trades_and_quotes(self, market_id: int, fills, requoted: bool):
        for f in fills:
            self._emit(market_id, "TRADE",
                       {"bin": f.bin, "price_cents": f.price, "qty": f.qty})
        if requoted:
            self._emit(market_id, "QUOTES", self._quotes_payload(market_id))

    # -- command dispatch -----------------------------------------------------

    def apply(self, cmd: dict, journal: bool = True) -> dict:
        """Execute one command dict; journals it once it has taken effect."""
        with self.lock:
            name = cmd.get("cmd")
            handler = {
                "open-account": self._cmd_open_account,
                "create-market": self._cmd_create_market,
                "place-order": self._cmd_place_order,
                "cancel-order": self._cmd_cancel_order,
                "update-beliefs": self._cmd_update_beliefs,
                "settle": self._cmd_settle,
            }.get(name)
            if handler is None:
                raise ServiceError(400, f"unknown command {name!r}")
            self._journaling = journal
            try:
                result = handler(cmd)
                self._commit(cmd)
                return result
            finally:
                self._journaling = False

    def _account_for_token(self, token: Optional[str]) -> int:
        if not token or token not in self.tokens:
            raise ServiceError(401, "missing or invalid account token")
        return self.tokens[token]

    def _require_admin(self, cmd: dict):
        if cmd.get("admin_token") != self.config.admin_token:
            raise ServiceError(403, "admin credential required")

    def _market_id(self, cmd: dict) -> int:
        market = cmd.get("market")
        if not isinstance(market, int) or market not in self.exchange.markets:
            raise ServiceError(404, f"unknown market {market!r}")
        return market

    def _cmd_open_account(self, cmd: dict) -> dict:
        name = cmd.get("name")
        cash = cmd.get("cash")
        if not isinstance(name, str) or not name:
            raise ServiceError(400, "account name required")
        if name.startswith("bot:"):
            raise ServiceError(400, "the bot: name prefix is reserved")
        if not isinstance(cash, int) or cash < 0:
            raise ServiceError(400, "cash must be a nonnegative integer (cents)")
        token = cmd.get("token") or secrets.token_hex(16)
        cmd["token"] = token  # journaled so replay restores the same token
        try:
            account = self.exchange.open_account(name, cash)
        except EngineError as exc:
            raise ServiceError(400, str(exc))
        self.tokens[token] = account.id
        return {"account": account.id, "token": token}

    def _cmd_create_market(self, cmd: dict) -> dict:
        self._require_admin(cmd)
        name = cmd.get("name")
        bins = cmd.get("bins")
        if not isinstance(name, str) or not name:
            raise ServiceError(400, "market name required")
        if not isinstance(bins, list) or not all(isinstance(b, str) for b in bins):
            raise ServiceError(400, "bins must be a list of labels")
        bot_cfg = cmd.get("bot")
        if bot_cfg is not None:
            # dry-run the bot config so nothing can fail after the market exists
            cash = bot_cfg.get("cash")
            if not isinstance(cash, int) or cash <= 0:
                raise ServiceError(400, "bot cash must be a positive integer (cents)")
            p = bot_cfg.get("beliefs")
            if not isinstance(p, list) or len(p) != len(bins):
                raise ServiceError(400, "bot beliefs must list one probability per bin")
            try:
                BotState(
                    beliefs=tuple(float(x) for x in p),
                    cash_cents=cash,
                    positions=(0,) * len(bins),
                    spec=UtilitySpec(float(bot_cfg.get("rho", 1.0))),
                )
            except (MakerError, ValueError, TypeError) as exc:
                raise ServiceError(400, f"invalid bot config: {exc}")
        try:
            market = self.exchange.create_market(name, bins)
        except EngineError as exc:
            raise ServiceError(400, str(exc))
        self._commit(cmd)
        self.events.setdefault(market.id, [])
        if bot_cfg is not None:
            account = self.exchange.open_account(f"bot:{name}", bot_cfg["cash"])
            bot = MakerBot(self.exchange, account.id, market.id,
                           [float(x) for x in bot_cfg["beliefs"]],
                           UtilitySpec(float(bot_cfg.get("rho", 1.0))))
            self.bots[market.id] = bot
            self.bot_accounts[market.id] = account.id
            self._emit(market.id, "BELIEFS", {"p": _round_probs(bot.state.beliefs)})
            fills = bot.requote()
            self._emit_trades_and_quotes(market.id, fills, requoted=True)
        self._emit_book(market.id)
        return {"market": market.id}

    def _cmd_place_order(self, cmd: dict) -> dict:
        account_id = self._account_for_token(cmd.get("token"))
        market_id = self._market_id(cmd)
        side = cmd.get("side")
        if side not in (BUY, SELL):
            raise ServiceError(400, "side must be BUY or SELL")
        try:
            order_id, fills = self.exchange.submit(
                account_id, market_id, cmd.get("bin"), side,
                cmd.get("price_cents"), cmd.get("qty"),
            )
        except (InvalidOrder, InsufficientMargin, MarketClosed) as exc:
            raise ServiceError(400, str(exc))
        except EngineError as exc:
            raise ServiceError(404, str(exc))
        self._commit(cmd)

        all_fills = list(fills)
        requoted = False
        bot = self.bots.get(market_id)
        if bot is not None and any(
            f.maker_account_id == bot.account_id or f.taker_account_id == bot.account_id
            for f in fills
        ):
            all_fills.extend(bot.on_fills(fills))
            requoted = True
        self._emit_trades_and_quotes(market_id, all_fills, requoted)
        self._emit_book(market_id)
        return {
            "order": order_id,
            "fills": [
                {"bin": f.bin, "price_cents": f.price, "qty": f.qty,
                 "maker": f.maker_account_id == account_id}
                for f in all_fills
                if account_id in (f.maker_account_id, f.taker_account_id)
            ],
        }

    def _cmd_cancel_order(self, cmd: dict) -> dict:
        account_id = self._account_for_token(cmd.get("token"))
        order_id = cmd.get("id")
        market_id = None
        for mid, market in self.exchange.markets.items():
            if order_id in market.open_orders:
                market_id = mid
                break
        try:
            released = self.exchange.cancel(account_id, order_id)
        except UnknownOrder as exc:
            raise ServiceError(404, str(exc))
        if market_id is not None:
            self._emit_book(market_id)
        return {"released": released}

    def _cmd_update_beliefs(self, cmd: dict) -> dict:
        self._require_admin(cmd)
        market_id = self._market_id(cmd)
        bot = self.bots.get(market_id)
        if bot is None:
            raise ServiceError(400, f"market {market_id} has no bot")
        p = cmd.get("p")
        if not isinstance(p, list):
            raise ServiceError(400, "p must be a list of probabilities")
        if self.exchange.markets[market_id].settled:
            raise ServiceError(400, "market is settled")
        try:
            probe = [float(x) for x in p]
            BotState(beliefs=tuple(probe), cash_cents=bot.state.cash_cents,
                     positions=bot.state.positions, spec=bot.state.spec)
        except (MakerError, ValueError, TypeError) as exc:
            raise ServiceError(400, str(exc))
        self._commit(cmd)
        self._emit(market_id, "BELIEFS", {"p": _round_probs(probe)})
        fills = bot.on_beliefs(probe)
        self._emit_trades_and_quotes(market_id, fills, requoted=True)
        self._emit_book(market_id)
        return {"ok": True}

    def _cmd_settle(self, cmd: dict) -> dict:
        self._require_admin(cmd)
        market_id = self._market_id(cmd)
        if market_id in self.settle_results:
            return self.settle_results[market_id]
        winning = cmd.get("winning_bin")
        try:
            payouts = self.exchange.settle(market_id, winning)
        except EngineError as exc:
            raise ServiceError(400, str(exc))
        result = {
            "winning_bin": winning,
            "payouts": {str(k): v for k, v in sorted(payouts.items())},
        }
        self.settle_results[market_id] = result
        self._emit(market_id, "SETTLED", result)
        self._emit_book(market_id)
        return result

    # -- reads ------------------------------------------------------------------

    def get_book(self, market_id: int) -> dict:
        with self.lock:
            if market_id not in self.exchange.markets:
                raise ServiceError(404, f"unknown market {market_id}")
            stream = self.events.get(market_id, [])
            return {"seq": len(stream), "book": self._book_payload(market_id)}

    def get_positions(self, market_id: int, token: Optional[str]) -> dict:
        with self.lock:
            account_id = self._account_for_token(token)
            if market_id not in self.exchange.markets:
                raise ServiceError(404, f"unknown market {market_id}")
            account = self.exchange.accounts[account_id]
            market = self.exchange.markets[market_id]
            return {
                "account": account_id,
                "cash": account.cash,
                "escrow": account.escrow,
                "positions": {
                    str(b): account.position(market_id, b) for b in range(market.n)
                },
                "open_orders": [
                    {"id": o.id, "bin": o.bin, "side": o.side,
                     "price_cents": o.price, "qty": o.remaining}
                    for o in self.exchange.open_orders_for(account_id, market_id)
                ],
            }

    def events_since(self, market_id: int, from_seq: int) -> list[dict]:
        with self.lock:
            if market_id not in self.exchange.markets:
                raise ServiceError(404, f"unknown market {market_id}")
            stream = self.events.get(market_id, [])
            return [e for e in stream if e["seq"] >= from_seq]

    def markets_view(self) -> list[dict]:
        with self.lock:
            return [
                {"market": m.id, "name": m.name, "bins": list(m.bins),
                 "settled": m.settled, "has_bot": m.id in self.bots}
                for m in sorted(self.exchange.markets.values(), key=lambda m: m.id)
            ]

    def seed_demo(self):
        """Create the three-bin demo market with the default bot, once."""
        if any(m.name == "demo" for m in self.exchange.markets.values()):
            return
        self.apply({
            "cmd": "create-market",
            "admin_token": self.config.admin_token,
            "name": "demo",
            "bins": ["bin-1", "bin-2", "bin-3"],
            "bot": {"beliefs": [0.3, 0.5, 0.2], "cash": 100000, "rho": 1.0},
        })


def create_app(config: Optional[ServiceConfig] = None, service: Optional[ExchangeService] = None):
    """Build the FastAPI app around a service instance."""
    svc = service or ExchangeService(config or ServiceConfig())
    app = FastAPI(title="modelmarket exchange")
    app.state.service = svc

    def run(cmd: dict):
        try:
            return svc.apply(cmd)
        except ServiceError as exc:
            return JSONResponse({"error": exc.message}, status_code=exc.status)

    @app.post("/open-account")
    def open_account(body: dict = Body(...)):
        return run({"cmd": "open-account", "name": body.get("name"),
                    "cash": body.get("cash")})

    @app.post("/create-market")
    def create_market(body: dict = Body(...),
                      x_admin_token: Optional[str] = Header(default=None)):
        return run({"cmd": "create-market", "admin_token": x_admin_token,
                    "name": body.get("name"), "bins": body.get("bins"),
                    "bot": body.get("bot")})

    @app.post("/place-order")
    def place_order(body: dict = Body(...),
                    x_token: Optional[str] = Header(default=None)):
        return run({"cmd": "place-order", "token": x_token,
                    "market": body.get("market"), "bin": body.get("bin"),
                    "side": body.get("side"), "price_cents": body.get("price_cents"),
                    "qty": body.get("qty")})

    @app.post("/cancel-order")
    def cancel_order(body: dict = Body(...),
                     x_token: Optional[str] = Header(default=None)):
        return run({"cmd": "cancel-order", "token": x_token, "id": body.get("id")})

    @app.post("/update-beliefs")
    def update_beliefs(body: dict = Body(...),
                       x_admin_token: Optional[str] = Header(default=None)):
        return run({"cmd": "update-beliefs", "admin_token": x_admin_token,
                    "market": body.get("market"), "p": body.get("p")})

    @app.post("/settle")
    def settle(body: dict = Body(...),
               x_admin_token: Optional[str] = Header(default=None)):
        return run({"cmd": "settle", "admin_token": x_admin_token,
                    "market": body.get("market"),
                    "winning_bin": body.get("winning_bin")})

    @app.get("/markets")
    def markets():
        return svc.markets_view()

    @app.get("/get-book")
    def get_book(market: int = Query(...)):
        try:
            return svc.get_book(market)
        except ServiceError as exc:
            return JSONResponse({"error": exc.message}, status_code=exc.status)

    @app.get("/get-positions")
    def get_positions(market: int = Query(...),
                      x_token: Optional[str] = Header(default=None)):
        try:
            return svc.get_positions(market, x_token)
        except ServiceError as exc:
            return JSONResponse({"error": exc.message}, status_code=exc.status)

    @app.websocket("/stream")
    async def stream(ws: WebSocket, market: int = Query(...),
                     from_seq: int = Query(default=0)):
        await ws.accept()
        if market not in svc.exchange.markets:
            await ws.close(code=4004, reason=f"unknown market {market}")
            return
        cursor = max(from_seq, 1)
        try:
            while True:
                batch = svc.events_since(market, cursor)
                for event in batch:
                    await ws.send_text(json.dumps(event))
                    cursor = event["seq"] + 1
                await asyncio.sleep(0.02)
        except (WebSocketDisconnect, RuntimeError):
            return

    return app
