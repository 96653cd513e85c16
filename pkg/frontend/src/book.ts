/**
 * Local mirror of one market, built purely from the event stream.
 *
 * Every mutation on the server appends a BOOK event carrying the full
 * ladders, so the mirror's book after applying events 1..k is exactly the
 * server's snapshot at sequence k; `lastSeq` is the test hook for that
 * comparison. Events must arrive in order: duplicates are dropped, a gap
 * raises so the stream can resume from `lastSeq + 1`.
 */

import type {
  BookSnapshot,
  MarketEvent,
  QuoteLadderEntry,
  TradeTick,
} from "./types";

export class SequenceGapError extends Error {
  constructor(readonly expected: number, readonly got: number) {
    super(`expected event ${expected}, got ${got}`);
    this.name = "SequenceGapError";
  }
}

export class BookMirror {
  lastSeq = 0;
  book: BookSnapshot | null = null;
  botQuotes: QuoteLadderEntry[] = [];
  beliefs: number[] = [];
  trades: TradeTick[] = [];
  settled: { winning_bin: number; payouts: Record<string, number> } | null = null;

  /** Applies one event; returns false for an already-seen duplicate. */
  apply(event: MarketEvent): boolean {
    if (event.seq <= this.lastSeq) {
      return false;
    }
    if (event.seq !== this.lastSeq + 1) {
      throw new SequenceGapError(this.lastSeq + 1, event.seq);
    }
    switch (event.kind) {
      case "BOOK":
        this.book = event.payload;
        break;
      case "TRADE":
        this.trades.push(event.payload);
        if (this.trades.length > 100) {
          this.trades.shift();
        }
        break;
      case "QUOTES":
        this.botQuotes = event.payload.ladder;
        break;
      case "BELIEFS":
        this.beliefs = event.payload.p;
        break;
      case "SETTLED":
        this.settled = event.payload;
        break;
    }
    this.lastSeq = event.seq;
    return true;
  }

  reset(): void {
    this.lastSeq = 0;
    this.book = null;
    this.botQuotes = [];
    this.beliefs = [];
    this.trades = [];
    this.settled = null;
  }
}
