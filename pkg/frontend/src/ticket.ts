/**
 * Order-ticket validation and the escrow preview.
 *
 * Validation mirrors the server's hard limits (price 1-99 cents, whole
 * positive quantity) so obviously bad tickets never leave the browser.
 * The margin preview restates the exchange's escrow rule for display
 * only; the server remains the authority on whether an order is funded.
 */

import type { Side } from "./types";

export interface TicketInput {
  bin: number;
  side: Side;
  priceCents: number;
  qty: number;
}

export function validateTicket(ticket: TicketInput, binCount: number): string[] {
  const errors: string[] = [];
  if (!Number.isInteger(ticket.bin) || ticket.bin < 0 || ticket.bin >= binCount) {
    errors.push(`bin must be between 1 and ${binCount}`);
  }
  if (ticket.side !== "BUY" && ticket.side !== "SELL") {
    errors.push("side must be BUY or SELL");
  }
  if (!Number.isInteger(ticket.priceCents) || ticket.priceCents < 1 || ticket.priceCents > 99) {
    errors.push("price must be a whole number of cents between 1 and 99");
  }
  if (!Number.isInteger(ticket.qty) || ticket.qty < 1) {
    errors.push("quantity must be a whole number of at least 1");
  }
  return errors;
}

/** Cents the exchange will hold against this order if it rests. */
export function marginPreviewCents(side: Side, priceCents: number, qty: number): number {
  return side === "BUY" ? priceCents * qty : (100 - priceCents) * qty;
}

export function formatCents(cents: number): string {
  const sign = cents < 0 ? "-" : "";
  const abs = Math.abs(cents);
  return `${sign}$${Math.floor(abs / 100)}.${String(abs % 100).padStart(2, "0")}`;
}
