/**
 * Per-session client state: the token, the subscribed market, the event
 * mirror, and the latest server-reported positions.
 *
 * Positions, escrow, and payouts are never computed locally; they are
 * refetched from the server whenever one of our commands or a settlement
 * could have changed them.
 */

import { BookMirror } from "./book";
import { ExchangeClient } from "./client";
import type { MarketInfo, PositionsView } from "./types";

export class ClientState {
  readonly mirror = new BookMirror();
  positions: PositionsView | null = null;
  market: MarketInfo | null = null;

  constructor(readonly client: ExchangeClient) {}

  get lastSeq(): number {
    return this.mirror.lastSeq;
  }

  subscribe(market: MarketInfo): void {
    this.market = market;
    this.mirror.reset();
    this.positions = null;
  }

  async refreshPositions(): Promise<PositionsView | null> {
    if (!this.market || !this.client.token) return null;
    this.positions = await this.client.getPositions(this.market.market);
    return this.positions;
  }

  /** Payout summary once the market resolves, from the SETTLED event. */
  settlementFor(accountId: number): number | null {
    const settled = this.mirror.settled;
    if (!settled) return null;
    return settled.payouts[String(accountId)] ?? 0;
  }
}
