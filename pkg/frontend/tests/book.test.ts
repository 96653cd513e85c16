import { describe, expect, it } from "vitest";

import { BookMirror, SequenceGapError } from "../src/book";
import type { BookSnapshot, MarketEvent } from "../src/types";

function bookPayload(name: string): BookSnapshot {
  return {
    market_id: 1,
    name,
    settled: false,
    winning_bin: null,
    bins: [{ bin: 0, label: "a", bids: [], asks: [] }],
    trades: [],
  };
}

function bookEvent(seq: number, name = "demo"): MarketEvent {
  return { seq, kind: "BOOK", payload: bookPayload(name) };
}

describe("BookMirror", () => {
  it("applies events in order and tracks the sequence", () => {
    const mirror = new BookMirror();
    expect(mirror.apply({ seq: 1, kind: "BELIEFS", payload: { p: [0.3, 0.7] } })).toBe(true);
    expect(mirror.apply(bookEvent(2, "first"))).toBe(true);
    expect(mirror.apply(bookEvent(3, "second"))).toBe(true);
    expect(mirror.lastSeq).toBe(3);
    expect(mirror.book?.name).toBe("second");
    expect(mirror.beliefs).toEqual([0.3, 0.7]);
  });

  it("drops duplicates silently", () => {
    const mirror = new BookMirror();
    mirror.apply(bookEvent(1, "one"));
    expect(mirror.apply(bookEvent(1, "replayed"))).toBe(false);
    expect(mirror.book?.name).toBe("one");
    expect(mirror.lastSeq).toBe(1);
  });

  it("raises on a gap so the stream can resume", () => {
    const mirror = new BookMirror();
    mirror.apply(bookEvent(1));
    expect(() => mirror.apply(bookEvent(3))).toThrow(SequenceGapError);
    expect(mirror.lastSeq).toBe(1); // unchanged; resume asks for 2
  });

  it("keeps a rolling trade tape and the settlement payload", () => {
    const mirror = new BookMirror();
    mirror.apply(bookEvent(1));
    mirror.apply({ seq: 2, kind: "TRADE", payload: { bin: 0, price_cents: 31, qty: 10 } });
    mirror.apply({
      seq: 3,
      kind: "SETTLED",
      payload: { winning_bin: 0, payouts: { "2": 4600 } },
    });
    expect(mirror.trades).toHaveLength(1);
    expect(mirror.settled?.winning_bin).toBe(0);
    expect(mirror.settled?.payouts["2"]).toBe(4600);
  });

  it("stores the bot ladder from QUOTES events", () => {
    const mirror = new BookMirror();
    mirror.apply({
      seq: 1,
      kind: "QUOTES",
      payload: {
        ladder: [{ bin: 0, bid: { price_cents: 29, qty: 48 }, ask: { price_cents: 31, qty: 46 } }],
      },
    });
    expect(mirror.botQuotes[0].bid?.qty).toBe(48);
  });
});
