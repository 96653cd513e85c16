/**
 * Thin HTTP client for the exchange's command API.
 *
 * Server rejections carry a human-readable message; they are surfaced
 * verbatim as ExchangeError so the UI can render them unchanged.
 */

import type {
  BookResponse,
  MarketInfo,
  PlaceOrderResult,
  PositionsView,
  Side,
} from "./types";

export class ExchangeError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = "ExchangeError";
  }
}

export interface ClientOptions {
  token?: string;
  adminToken?: string;
  fetchFn?: typeof fetch;
}

export class ExchangeClient {
  token?: string;
  private readonly adminToken?: string;
  private readonly fetchFn: typeof fetch;

  constructor(readonly baseUrl: string, options: ClientOptions = {}) {
    this.token = options.token;
    this.adminToken = options.adminToken;
    this.fetchFn = options.fetchFn ?? fetch.bind(globalThis);
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const headers: Record<string, string> = { "content-type": "application/json" };
    if (this.token) headers["x-token"] = this.token;
    if (this.adminToken) headers["x-admin-token"] = this.adminToken;
    const resp = await this.fetchFn(this.baseUrl + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await resp.json().catch(() => ({}));
    if (!resp.ok || payload.error) {
      throw new ExchangeError(resp.status, payload.error ?? resp.statusText);
    }
    return payload as T;
  }

  /** Registers an account and adopts its session token. */
  async openAccount(name: string, cashCents: number): Promise<{ account: number; token: string }> {
    const result = await this.request<{ account: number; token: string }>(
      "POST", "/open-account", { name, cash: cashCents });
    this.token = result.token;
    return result;
  }

  markets(): Promise<MarketInfo[]> {
    return this.request("GET", "/markets");
  }

  getBook(market: number): Promise<BookResponse> {
    return this.request("GET", `/get-book?market=${market}`);
  }

  getPositions(market: number): Promise<PositionsView> {
    return this.request("GET", `/get-positions?market=${market}`);
  }

  placeOrder(
    market: number,
    bin: number,
    side: Side,
    priceCents: number,
    qty: number,
  ): Promise<PlaceOrderResult> {
    return this.request("POST", "/place-order", {
      market, bin, side, price_cents: priceCents, qty,
    });
  }

  cancelOrder(orderId: number): Promise<{ released: number }> {
    return this.request("POST", "/cancel-order", { id: orderId });
  }

  // admin-only helpers, used by test drivers and operators
  createMarket(
    name: string,
    bins: string[],
    bot?: { beliefs: number[]; cash: number; rho?: number },
  ): Promise<{ market: number }> {
    return this.request("POST", "/create-market", { name, bins, bot });
  }

  updateBeliefs(market: number, p: number[]): Promise<{ ok: boolean }> {
    return this.request("POST", "/update-beliefs", { market, p });
  }

  settle(market: number, winningBin: number): Promise<{ winning_bin: number }> {
    return this.request("POST", "/settle", { market, winning_bin: winningBin });
  }

  streamUrl(market: number, fromSeq: number): string {
    const ws = this.baseUrl.replace(/^http/, "ws");
    return `${ws}/stream?market=${market}&from_seq=${fromSeq}`;
  }
}
