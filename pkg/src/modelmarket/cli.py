"""Command-line entry point: score, backtest, quotes, and serve.

Each reporting command writes delimited data, rendered figures, and a
manifest (inputs, digests, configuration, outputs) into the --out
directory; runs are deterministic given identical inputs and flags.
"""

from __future__ import annotations

import argparse
import datetime as dt
import os
import sys
from decimal import Decimal, InvalidOperation
from pathlib import Path

from . import __version__
from .backtest import BacktestConfig, QUANTITY_CONTINUOUS, QUANTITY_INTEGER
from .backtest import flip_analysis, robustness_diameter, run_panel
from .decision import DecisionError, UtilitySpec
from .maker import BotState, MakerError, quote_set
from .panels import PanelError, align, parse_market_csv, parse_model_csv, parse_outcomes_csv
from .scoring import (
    Source,
    brier,
    calibration,
    daily_mean,
    dominance,
    frequency,
    overall_mean,
    panel_forecasts,
    record_probability,
)


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--out", type=Path, default=Path("out"),
                        help="output directory (default: ./out)")
    parser.add_argument("--no-plots", action="store_true",
                        help="skip figure rendering, write data files only")


def _add_inputs(parser: argparse.ArgumentParser):
    parser.add_argument("model", type=Path, help="model forecast CSV (date,state,p_dem)")
    parser.add_argument("market", type=Path, help="market price CSV (date,state,dem_yes,rep_yes)")
    parser.add_argument("outcomes", type=Path, help="outcomes CSV (state,winner,margin_votes)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="modelmarket",
        description="Score forecasts, backtest a model-following bot, "
                    "inspect its quotes, or serve the hybrid exchange.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_score = sub.add_parser("score", help="Brier scores, calibration, frequency, dominance")
    _add_inputs(p_score)
    _add_common(p_score)
    p_score.add_argument("--bin-width", type=float, default=0.05,
                         help="calibration bin width (default 0.05)")
    p_score.add_argument("--frequency-bin-width", type=float, default=0.01,
                         help="frequency report bin width (default 0.01)")
    p_score.add_argument("--hybrid-weight", type=float, default=0.5,
                         help="weight on the model in the hybrid forecast (default 0.5)")
    p_score.add_argument("--date", type=dt.date.fromisoformat, default=None,
                         help="emit per-state scores for this date (YYYY-MM-DD)")
    p_score.set_defaults(func=cmd_score)

    p_bt = sub.add_parser("backtest", help="replay daily trading of the model bot")
    _add_inputs(p_bt)
    _add_common(p_bt)
    p_bt.add_argument("--rho", type=float, default=1.0,
                      help="relative risk aversion (default 1 = log utility)")
    p_bt.add_argument("--initial-cash", type=float, default=1000.0,
                      help="starting cash per state in dollars (default 1000)")
    p_bt.add_argument("--integer-quantities", action="store_true",
                      help="floor each day's trade to whole contracts")
    p_bt.add_argument("--flip", action="append", default=[], metavar="ST,ST,...",
                      help="recompute payoffs with these states flipped (repeatable)")
    p_bt.add_argument("--flip-all-close", action="store_true",
                      help="evaluate every subset of states under --threshold")
    p_bt.add_argument("--robustness", action="store_true",
                      help="compute the robustness diameter")
    p_bt.add_argument("--threshold", type=float, default=0.01,
                      help="closeness threshold: fraction of votes if <= 1, "
                           "else an absolute vote margin (default 0.01)")
    p_bt.set_defaults(func=cmd_backtest)

    p_q = sub.add_parser("quotes", help="print the bot's quote ladder")
    p_q.add_argument("--beliefs", required=True,
                     help="comma-separated bin probabilities, e.g. 0.3,0.5,0.2")
    p_q.add_argument("--cash", required=True,
                     help="bot cash in dollars (whole cents), e.g. 1000 or 986.08")
    p_q.add_argument("--rho", type=float, default=1.0)
    p_q.add_argument("--holdings", default=None,
                     help="comma-separated contracts per bin (default all zero)")
    p_q.add_argument("--out", type=Path, default=None,
                     help="also write quotes.json and a manifest here")
    p_q.set_defaults(func=cmd_quotes)

    p_srv = sub.add_parser("serve", help="run the exchange service")
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--port", type=int, default=int(os.environ.get("MODELMARKET_PORT", "8000")))
    p_srv.add_argument("--admin-token",
                       default=os.environ.get("MODELMARKET_ADMIN_TOKEN", "admin"))
    p_srv.add_argument("--event-log", type=Path,
                       default=os.environ.get("MODELMARKET_EVENT_LOG"),
                       help="append-only journal; restart replays it")
    p_srv.add_argument("--position-limit", type=int, default=None,
                       help="optional per-account contract cap per bin")
    p_srv.add_argument("--demo", action="store_true",
                       help="seed the three-bin demo market with its bot")
    p_srv.set_defaults(func=cmd_serve)

    return parser


def _load_panel(args):
    model = parse_model_csv(args.model)
    market = parse_market_csv(args.market)
    outcomes = parse_outcomes_csv(args.outcomes)
    return model, market, outcomes, align(model, market, outcomes)


def cmd_score(args) -> int:
    from . import plots, reports

    _, _, _, panel = _load_panel(args)
    w = args.hybrid_weight
    series = {
        src: daily_mean(panel, src, w)
        for src in (Source.MODEL, Source.MARKET, Source.HYBRID)
    }
    overall = {
        src.value: overall_mean(panel, src, w)
        for src in (Source.MODEL, Source.MARKET, Source.HYBRID)
    }
    curves = {
        src.value: calibration(panel_forecasts(panel, src, w), args.bin_width)
        for src in (Source.MODEL, Source.MARKET, Source.HYBRID)
    }
    freqs = {
        src.value: frequency(panel, src, args.frequency_bin_width, w)
        for src in (Source.MODEL, Source.MARKET)
    }
    dom = dominance(panel, w)

    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    outputs = [
        reports.write_daily_brier(out / "daily_brier.csv", list(series.values())),
        reports.write_calibration(out / "calibration.csv", curves),
        reports.write_frequency(out / "frequency.csv", freqs),
        reports.write_dominance(out / "dominance.csv", dom,
                                series[Source.MODEL], series[Source.MARKET],
                                series[Source.HYBRID]),
    ]

    payload = {
        "n_states": panel.n_states,
        "n_days": panel.n_days,
        "overall_mean": {k: round(v, 10) for k, v in overall.items()},
        "dominance": {"count": dom.count, "trailing_streak": dom.trailing_streak},
        "parameters": {
            "bin_width": args.bin_width,
            "frequency_bin_width": args.frequency_bin_width,
            "hybrid_weight": w,
        },
    }

    if args.date is not None:
        if args.date not in panel.dates:
            print(f"error: {args.date} not in the aligned panel", file=sys.stderr)
            return 1
        day = [rec for rec in panel.records if rec.date == args.date]
        per_state = {
            rec.state: {
                src.value: brier(record_probability(rec, src, w), rec.r)
                for src in (Source.MODEL, Source.MARKET, Source.HYBRID)
            }
            for rec in day
        }
        rows = [
            (args.date.isoformat(), state, source, f"{value:.10g}")
            for state in sorted(per_state)
            for source, value in sorted(per_state[state].items())
        ]
        outputs.append(reports.write_csv(out / "per_state.csv",
                                         ("date", "state", "source", "value"), rows))
        payload["date_scores"] = {
            "date": args.date.isoformat(),
            "means": {
                source: round(
                    sum(per_state[s][source] for s in per_state) / len(per_state), 10
                )
                for source in ("model", "market", "hybrid")
            },
        }
        if not args.no_plots:
            outputs.append(plots.per_state_figure(
                per_state, args.date.isoformat(), out / "figures" / "per_state.png"))

    if not args.no_plots:
        outputs.append(plots.daily_brier_figure(list(series.values()),
                                                out / "figures" / "daily_brier.png"))
        outputs.append(plots.calibration_figure(curves, out / "figures" / "calibration.png"))
        outputs.append(plots.frequency_figure(freqs, out / "figures" / "frequency.png"))

    outputs.append(reports.write_json(out / "report.json", payload))
    reports.write_manifest(
        out, "score",
        {"model": args.model, "market": args.market, "outcomes": args.outcomes},
        {
            "bin_width": args.bin_width,
            "frequency_bin_width": args.frequency_bin_width,
            "hybrid_weight": w,
            "date": args.date.isoformat() if args.date else None,
            "plots": not args.no_plots,
        },
        outputs,
    )

    print(f"overall mean Brier: model {overall['model']:.4f}  "
          f"market {overall['market']:.4f}  hybrid {overall['hybrid']:.4f}")
    print(f"hybrid dominates on {dom.count} of {panel.n_days} dates "
          f"(trailing streak {dom.trailing_streak})")
    if args.date is not None:
        means = payload["date_scores"]["means"]
        print(f"{args.date}: market {means['market']:.4f}  "
              f"model {means['model']:.4f}  hybrid {means['hybrid']:.4f}")
    print(f"wrote {len(outputs) + 1} files to {out}")
    return 0


def _parse_flip_sets(args, report, outcomes):
    sets = [tuple(part.strip() for part in spec.split(",") if part.strip())
            for spec in args.flip]
    if args.flip_all_close:
        import itertools

        table = outcomes.by_state()
        states = [r.state for r in report.results]
        if args.threshold <= 1.0:
            close = [s for s in states
                     if table[s].margin_pct is not None
                     and table[s].margin_pct <= args.threshold]
        else:
            close = [s for s in states if table[s].margin_votes <= args.threshold]
        close.sort(key=lambda s: table[s].margin_votes)
        for k in range(1, len(close) + 1):
            sets.extend(itertools.combinations(close, k))
    seen = set()
    unique = []
    for s in sets:
        key = tuple(sorted(s))
        if s and key not in seen:
            seen.add(key)
            unique.append(s)
    return unique


def cmd_backtest(args) -> int:
    from . import plots, reports

    _, market, outcomes, panel = _load_panel(args)
    config = BacktestConfig(
        initial_cash=args.initial_cash,
        rho=args.rho,
        quantity_mode=QUANTITY_INTEGER if args.integer_quantities else QUANTITY_CONTINUOUS,
    )
    report = run_panel(panel, market, outcomes, config)

    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    outputs = [reports.write_table1(out / "table1.csv", report)]
    for traj in report.trajectories:
        outputs.append(reports.write_trajectory(
            out / "trajectories" / f"{traj.state}.csv", traj))

    flips = []
    flip_sets = _parse_flip_sets(args, report, outcomes)
    if flip_sets:
        flips = flip_analysis(report, outcomes, flip_sets)
        outputs.append(reports.write_table2(out / "table2.csv", flips))

    robustness = None
    if args.robustness:
        robustness = robustness_diameter(report, outcomes, args.threshold)

    payload = reports.backtest_report_payload(report, flips, robustness)
    outputs.append(reports.write_json(out / "report.json", payload))

    if not args.no_plots:
        for traj in report.trajectories:
            outputs.append(plots.holdings_figure(
                traj, out / "figures" / f"holdings_{traj.state}.png"))
        outputs.append(plots.holdings_grid_figure(
            report.trajectories, out / "figures" / "holdings_grid.png"))

    reports.write_manifest(
        out, "backtest",
        {"model": args.model, "market": args.market, "outcomes": args.outcomes},
        {
            "initial_cash": args.initial_cash,
            "rho": args.rho,
            "integer_quantities": args.integer_quantities,
            "flip": args.flip,
            "flip_all_close": args.flip_all_close,
            "robustness": args.robustness,
            "threshold": args.threshold,
            "plots": not args.no_plots,
        },
        outputs,
    )

    print(f"total value {report.total_value:,.2f}  payoff {report.total_payoff:,.2f}  "
          f"profit {report.total_profit:,.2f}  return {report.total_return:.0%}")
    for s in flips:
        print(f"flip {'+'.join(s.states)}: payoff {s.payoff:,.2f}  "
              f"profit {s.profit:,.2f}  return {s.return_rate:.2%}")
    if robustness is not None:
        d = robustness.diameter
        print(f"robustness diameter: {d if d != float('inf') else 'infinite'}"
              + (f", minimal flipped votes {robustness.min_flip_votes:,}"
                 f" ({'+'.join(robustness.losing_set)})"
                 if robustness.min_flip_votes is not None else ""))
    print(f"wrote {len(outputs) + 1} files to {out}")
    return 0


def _cents(text: str) -> int:
    try:
        value = Decimal(text) * 100
    except InvalidOperation:
        raise ValueError(f"unparsable dollar amount {text!r}")
    if value != value.to_integral_value():
        raise ValueError(f"{text} is not a whole number of cents")
    return int(value)


def cmd_quotes(args) -> int:
    beliefs = tuple(float(p) for p in args.beliefs.split(","))
    holdings = (
        tuple(int(z) for z in args.holdings.split(","))
        if args.holdings else (0,) * len(beliefs)
    )
    state = BotState(
        beliefs=beliefs,
        cash_cents=_cents(args.cash),
        positions=holdings,
        spec=UtilitySpec(args.rho),
    )
    quotes = quote_set(state)

    header = f"{'Bin':>3}  {'Bid Price':>9}  {'Bid Quantity':>12}  {'Ask Price':>9}  {'Ask Quantity':>12}"
    print(header)
    print("-" * len(header))
    for bq in quotes:
        bid_p = f"{bq.bid.price_cents / 100:.2f}" if bq.bid else "-"
        bid_q = f"{bq.bid.qty}" if bq.bid else "-"
        ask_p = f"{bq.ask.price_cents / 100:.2f}" if bq.ask else "-"
        ask_q = f"{bq.ask.qty}" if bq.ask else "-"
        print(f"{bq.bin + 1:>3}  {bid_p:>9}  {bid_q:>12}  {ask_p:>9}  {ask_q:>12}")

    if args.out is not None:
        from . import reports

        args.out.mkdir(parents=True, exist_ok=True)
        payload = {
            "beliefs": list(beliefs),
            "cash_cents": state.cash_cents,
            "holdings": list(holdings),
            "rho": args.rho,
            "quotes": [
                {
                    "bin": bq.bin,
                    "bid": {"price_cents": bq.bid.price_cents, "qty": bq.bid.qty}
                    if bq.bid else None,
                    "ask": {"price_cents": bq.ask.price_cents, "qty": bq.ask.qty}
                    if bq.ask else None,
                }
                for bq in quotes
            ],
        }
        outputs = [reports.write_json(args.out / "quotes.json", payload)]
        reports.write_manifest(
            args.out, "quotes", {},
            {"beliefs": args.beliefs, "cash": args.cash,
             "rho": args.rho, "holdings": args.holdings},
            outputs,
        )
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app

    config = ServiceConfig(
        admin_token=args.admin_token,
        event_log=args.event_log,
        position_limit=args.position_limit,
    )
    from .service import ExchangeService

    service = ExchangeService(config)
    if args.demo:
        service.seed_demo()
    app = create_app(service=service)
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    finally:
        service.close()
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (PanelError, DecisionError, MakerError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
