/**
 * Wire types for the exchange service.
 *
 * Money is integer cents everywhere; probabilities are decimals. The
 * server is authoritative for every number shown in the UI.
 */

export type Side = "BUY" | "SELL";

export interface SideOrder {
  order_id: number;
  account_id: number;
  price_cents: number;
  qty: number;
  bot?: boolean;
}

export interface BinLadder {
  bin: number;
  label: string;
  bids: SideOrder[];
  asks: SideOrder[];
}

export interface TradeTick {
  bin: number;
  price_cents: number;
  qty: number;
  seq?: number;
}

export interface BookSnapshot {
  market_id: number;
  name: string;
  settled: boolean;
  winning_bin: number | null;
  bins: BinLadder[];
  trades: TradeTick[];
}

export interface QuoteSideView {
  price_cents: number;
  qty: number;
}

export interface QuoteLadderEntry {
  bin: number;
  bid: QuoteSideView | null;
  ask: QuoteSideView | null;
}

export type MarketEvent =
  | { seq: number; kind: "BOOK"; payload: BookSnapshot }
  | { seq: number; kind: "TRADE"; payload: TradeTick }
  | { seq: number; kind: "QUOTES"; payload: { ladder: QuoteLadderEntry[] } }
  | { seq: number; kind: "BELIEFS"; payload: { p: number[] } }
  | {
      seq: number;
      kind: "SETTLED";
      payload: { winning_bin: number; payouts: Record<string, number> };
    };

export interface MarketInfo {
  market: number;
  name: string;
  bins: string[];
  settled: boolean;
  has_bot: boolean;
}

export interface OpenOrder {
  id: number;
  bin: number;
  side: Side;
  price_cents: number;
  qty: number;
}

export interface PositionsView {
  account: number;
  cash: number;
  escrow: number;
  positions: Record<string, number>;
  open_orders: OpenOrder[];
}

export interface FillView {
  bin: number;
  price_cents: number;
  qty: number;
  maker: boolean;
}

export interface PlaceOrderResult {
  order: number;
  fills: FillView[];
}

export interface BookResponse {
  seq: number;
  book: BookSnapshot;
}
