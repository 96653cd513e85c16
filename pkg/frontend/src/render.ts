/**
 * DOM rendering. Pure functions from state to markup; no money math
 * beyond formatting what the server sent.
 */

import { BookMirror } from "./book";
import { formatCents } from "./ticket";
import type { BinLadder, OpenOrder, PositionsView, SideOrder } from "./types";

function el(tag: string, className?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function ladderRows(table: HTMLElement, orders: SideOrder[], cls: string): void {
  for (const order of orders) {
    const row = el("tr", cls + (order.bot ? " bot" : ""));
    row.appendChild(el("td", "price", (order.price_cents / 100).toFixed(2)));
    row.appendChild(el("td", "qty", String(order.qty)));
    row.appendChild(el("td", "owner", order.bot ? "bot" : `#${order.account_id}`));
    table.appendChild(row);
  }
}

export function renderBook(container: HTMLElement, mirror: BookMirror): void {
  container.replaceChildren();
  if (!mirror.book) {
    container.appendChild(el("p", "placeholder", "no book yet — waiting for events"));
    return;
  }
  const header = el("div", "book-header");
  header.appendChild(el("span", "name", mirror.book.name));
  header.appendChild(el("span", "seq", `event #${mirror.lastSeq}`));
  if (mirror.book.settled) {
    header.appendChild(el("span", "settled",
      `settled: bin ${(mirror.book.winning_bin ?? 0) + 1} won`));
  }
  container.appendChild(header);

  const ladders = el("div", "ladders");
  for (const bin of mirror.book.bins) {
    ladders.appendChild(renderBinLadder(bin, mirror));
  }
  container.appendChild(ladders);

  if (mirror.trades.length) {
    const feed = el("div", "trades");
    feed.appendChild(el("h3", undefined, "trades"));
    for (const t of mirror.trades.slice(-8).reverse()) {
      feed.appendChild(el("div", "trade",
        `bin ${t.bin + 1}: ${t.qty} @ ${(t.price_cents / 100).toFixed(2)}`));
    }
    container.appendChild(feed);
  }
}

function renderBinLadder(bin: BinLadder, mirror: BookMirror): HTMLElement {
  const box = el("div", "bin");
  const belief = mirror.beliefs[bin.bin];
  box.appendChild(el("h3", undefined,
    belief !== undefined
      ? `${bin.label} (model: ${(belief * 100).toFixed(0)}%)`
      : bin.label));
  const table = el("table", "ladder");
  const head = el("tr");
  for (const title of ["price", "qty", "who"]) {
    head.appendChild(el("th", undefined, title));
  }
  table.appendChild(head);
  // asks descend toward the spread, best last; bids follow best-first
  ladderRows(table, [...bin.asks].reverse(), "ask");
  table.appendChild(el("tr", "spread"));
  ladderRows(table, bin.bids, "bid");
  box.appendChild(table);
  if (!bin.asks.length && !bin.bids.length) {
    box.appendChild(el("p", "placeholder", "empty"));
  }
  return box;
}

export function renderPositions(
  container: HTMLElement,
  positions: PositionsView | null,
  settlement: number | null,
  binLabels: string[],
  onCancel: (orderId: number) => void,
): void {
  container.replaceChildren();
  container.appendChild(el("h3", undefined, "account"));
  if (!positions) {
    container.appendChild(el("p", "placeholder", "not connected"));
    return;
  }
  const stats = el("div", "stats");
  stats.appendChild(el("div", undefined, `cash ${formatCents(positions.cash)}`));
  stats.appendChild(el("div", undefined, `escrow ${formatCents(positions.escrow)}`));
  if (settlement !== null) {
    stats.appendChild(el("div", "payout",
      `settlement payout ${formatCents(settlement)}`));
  }
  container.appendChild(stats);

  const held = Object.entries(positions.positions).filter(([, qty]) => qty !== 0);
  if (held.length) {
    const list = el("div", "holdings");
    for (const [bin, qty] of held) {
      list.appendChild(el("div", qty < 0 ? "short" : "long",
        `${binLabels[Number(bin)] ?? `bin ${Number(bin) + 1}`}: ${qty}`));
    }
    container.appendChild(list);
  }

  if (positions.open_orders.length) {
    container.appendChild(el("h3", undefined, "open orders"));
    for (const order of positions.open_orders) {
      container.appendChild(renderOpenOrder(order, onCancel));
    }
  }
}

function renderOpenOrder(order: OpenOrder, onCancel: (id: number) => void): HTMLElement {
  const row = el("div", "open-order");
  row.appendChild(el("span", undefined,
    `${order.side} ${order.qty} bin ${order.bin + 1} @ ${(order.price_cents / 100).toFixed(2)}`));
  const button = el("button", "cancel", "cancel") as HTMLButtonElement;
  button.onclick = () => onCancel(order.id);
  row.appendChild(button);
  return row;
}

export function renderStatus(container: HTMLElement, text: string, kind: "ok" | "error" | "info"): void {
  container.replaceChildren(el("span", `status ${kind}`, text));
}
