import { describe, expect, it } from "vitest";

import { formatCents, marginPreviewCents, validateTicket } from "../src/ticket";

describe("validateTicket", () => {
  it("accepts a well-formed ticket", () => {
    expect(validateTicket(
      { bin: 0, side: "BUY", priceCents: 29, qty: 48 }, 3)).toEqual([]);
  });

  it("rejects zero quantity client-side", () => {
    const errors = validateTicket({ bin: 0, side: "BUY", priceCents: 29, qty: 0 }, 3);
    expect(errors.some((e) => e.includes("quantity"))).toBe(true);
  });

  it("rejects prices off the cent grid or outside 1-99", () => {
    for (const price of [0, 100, 29.5, -3]) {
      const errors = validateTicket({ bin: 0, side: "SELL", priceCents: price, qty: 1 }, 3);
      expect(errors.some((e) => e.includes("price"))).toBe(true);
    }
  });

  it("rejects an out-of-range bin", () => {
    expect(validateTicket({ bin: 3, side: "BUY", priceCents: 50, qty: 1 }, 3))
      .not.toEqual([]);
  });
});

describe("marginPreviewCents", () => {
  it("previews buy escrow as price times quantity", () => {
    expect(marginPreviewCents("BUY", 30, 10)).toBe(300);
  });

  it("previews sell escrow as the worst-case payout shortfall", () => {
    expect(marginPreviewCents("SELL", 40, 5)).toBe(300);
  });
});

describe("formatCents", () => {
  it("renders dollars and cents", () => {
    expect(formatCents(98608)).toBe("$986.08");
    expect(formatCents(5)).toBe("$0.05");
    expect(formatCents(-500)).toBe("-$5.00");
  });
});
