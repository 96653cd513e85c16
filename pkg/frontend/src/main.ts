/**
 * Browser entry point: join, watch the book live, trade through the
 * ticket, track positions. Commands fire off the render loop; events
 * drive all book updates.
 */

import { ExchangeClient, ExchangeError } from "./client";
import { MarketStream } from "./stream";
import { ClientState } from "./state";
import { renderBook, renderPositions, renderStatus } from "./render";
import { marginPreviewCents, formatCents, validateTicket, TicketInput } from "./ticket";
import type { MarketInfo, Side } from "./types";

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const serverInput = byId<HTMLInputElement>("server");
const nameInput = byId<HTMLInputElement>("name");
const cashInput = byId<HTMLInputElement>("cash");
const joinButton = byId<HTMLButtonElement>("join");
const marketSelect = byId<HTMLSelectElement>("market");
const statusBox = byId<HTMLDivElement>("status");
const bookBox = byId<HTMLDivElement>("book");
const positionsBox = byId<HTMLDivElement>("positions");
const ticketForm = byId<HTMLFormElement>("ticket");
const marginBox = byId<HTMLDivElement>("margin-preview");

serverInput.value = window.location.origin.startsWith("http")
  ? window.location.origin
  : "http://127.0.0.1:8000";

let client = new ExchangeClient(serverInput.value);
let state = new ClientState(client);
let stream: MarketStream | null = null;

function status(text: string, kind: "ok" | "error" | "info" = "info"): void {
  renderStatus(statusBox, text, kind);
}

function redraw(): void {
  renderBook(bookBox, state.mirror);
  const account = state.positions?.account;
  renderPositions(
    positionsBox,
    state.positions,
    account !== undefined ? state.settlementFor(account) : null,
    state.market?.bins ?? [],
    (orderId) => void cancelOrder(orderId),
  );
}

async function cancelOrder(orderId: number): Promise<void> {
  try {
    const result = await client.cancelOrder(orderId);
    status(`cancelled #${orderId}, released ${formatCents(result.released)}`, "ok");
    await state.refreshPositions();
    redraw();
  } catch (err) {
    status(err instanceof ExchangeError ? err.message : String(err), "error");
  }
}

async function loadMarkets(): Promise<void> {
  const markets = await client.markets();
  marketSelect.replaceChildren(
    ...markets.map((m) => {
      const option = document.createElement("option");
      option.value = String(m.market);
      option.textContent = `${m.name}${m.has_bot ? " (bot)" : ""}${m.settled ? " [settled]" : ""}`;
      return option;
    }),
  );
  marketSelect.dataset.markets = JSON.stringify(markets);
}

function subscribe(market: MarketInfo): void {
  stream?.stop();
  state.subscribe(market);
  stream = new MarketStream(
    (fromSeq) => client.streamUrl(market.market, fromSeq),
    state.mirror,
    {
      onEvent: (event) => {
        if (event.kind === "TRADE" || event.kind === "SETTLED") {
          void state.refreshPositions().then(redraw);
        }
        redraw();
      },
      onStatus: (s) => status(`stream: ${s}`, s === "live" ? "ok" : "info"),
    },
  );
  stream.start();
  redraw();
}

joinButton.onclick = async () => {
  try {
    client = new ExchangeClient(serverInput.value);
    state = new ClientState(client);
    const cash = Math.round(Number(cashInput.value) * 100);
    await client.openAccount(nameInput.value || `trader-${Date.now() % 10000}`, cash);
    status(`joined with ${formatCents(cash)}`, "ok");
    await loadMarkets();
    const markets = JSON.parse(marketSelect.dataset.markets ?? "[]") as MarketInfo[];
    if (markets.length) {
      subscribe(markets[0]);
      await state.refreshPositions();
      redraw();
    }
  } catch (err) {
    status(err instanceof ExchangeError ? err.message : String(err), "error");
  }
};

marketSelect.onchange = () => {
  const markets = JSON.parse(marketSelect.dataset.markets ?? "[]") as MarketInfo[];
  const chosen = markets.find((m) => String(m.market) === marketSelect.value);
  if (chosen) subscribe(chosen);
};

function ticketInput(): TicketInput {
  const data = new FormData(ticketForm);
  return {
    bin: Number(data.get("bin")) - 1,
    side: String(data.get("side")) as Side,
    priceCents: Math.round(Number(data.get("price")) * 100),
    qty: Number(data.get("qty")),
  };
}

ticketForm.oninput = () => {
  const ticket = ticketInput();
  const problems = validateTicket(ticket, state.market?.bins.length ?? 0);
  marginBox.textContent = problems.length
    ? problems[0]
    : `escrow if resting: ${formatCents(
        marginPreviewCents(ticket.side, ticket.priceCents, ticket.qty))}`;
};

ticketForm.onsubmit = async (ev) => {
  ev.preventDefault();
  if (!state.market) {
    status("join a market first", "error");
    return;
  }
  const ticket = ticketInput();
  const problems = validateTicket(ticket, state.market.bins.length);
  if (problems.length) {
    status(problems.join("; "), "error");
    return;
  }
  try {
    const result = await client.placeOrder(
      state.market.market, ticket.bin, ticket.side, ticket.priceCents, ticket.qty);
    const filled = result.fills.reduce((total, f) => total + f.qty, 0);
    status(
      filled
        ? `order #${result.order}: filled ${filled} of ${ticket.qty}`
        : `order #${result.order} resting`,
      "ok",
    );
    await state.refreshPositions();
    redraw();
  } catch (err) {
    // server rejections are shown exactly as sent
    status(err instanceof ExchangeError ? err.message : String(err), "error");
  }
};
