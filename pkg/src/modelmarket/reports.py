"""Serialization of scoring and backtest results to CSV/JSON, plus manifests.

Every CLI run writes a ``manifest.json`` next to its outputs recording the
command, the SHA-256 of each input file, the full configuration, and the
output paths; re-running with the same inputs and flags reproduces every
output byte for byte.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Iterable, Sequence

from . import __version__
from .backtest import BacktestReport, FlipScenario, RobustnessResult
from .scoring import BrierSeries, CalibrationCurve, DominanceReport, FrequencyReport


def sha256_of(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_json(path: Path, payload) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def write_manifest(out_dir: Path, command: str, inputs: dict[str, str | Path],
                   config: dict, outputs: Sequence[Path]) -> Path:
    manifest = {
        "command": command,
        "version": __version__,
        "inputs": {
            name: {"path": str(p), "sha256": sha256_of(p)}
            for name, p in sorted(inputs.items())
        },
        "config": config,
        "outputs": sorted(str(p.relative_to(out_dir)) for p in outputs),
    }
    return write_json(out_dir / "manifest.json", manifest)


# -- scoring ----------------------------------------------------------------


def daily_brier_rows(series: Sequence[BrierSeries]) -> list[tuple[str, str, float]]:
    rows = []
    for s in series:
        rows.extend(s.as_rows())
    rows.sort(key=lambda r: (r[0], r[1]))
    return rows


def write_daily_brier(path: Path, series: Sequence[BrierSeries]) -> Path:
    return write_csv(path, ("date", "source", "value"), daily_brier_rows(series))


def write_calibration(path: Path, curves: dict[str, CalibrationCurve]) -> Path:
    rows = []
    for source in sorted(curves):
        for b in curves[source].bins:
            rows.append((source, f"{b.lo:.6g}", f"{b.hi:.6g}", b.count,
                         f"{b.mean_forecast:.10g}", f"{b.realized_freq:.10g}"))
    return write_csv(
        path,
        ("source", "bin_lo", "bin_hi", "count", "mean_forecast", "realized_freq"),
        rows,
    )


def write_frequency(path: Path, reports: dict[str, FrequencyReport]) -> Path:
    rows = []
    for source in sorted(reports):
        for b in reports[source].bins:
            rows.append((source, f"{b.lo:.6g}", f"{b.hi:.6g}", b.count, b.distinct_states))
    return write_csv(path, ("source", "bin_lo", "bin_hi", "count", "distinct_states"), rows)


def write_dominance(path: Path, report: DominanceReport,
                    model: BrierSeries, market: BrierSeries, hybrid: BrierSeries) -> Path:
    rows = [
        (d.isoformat(), f"{model.means[i]:.10g}", f"{market.means[i]:.10g}",
         f"{hybrid.means[i]:.10g}", int(report.dominated[i]))
        for i, d in enumerate(report.dates)
    ]
    return write_csv(path, ("date", "model", "market", "hybrid", "hybrid_dominates"), rows)


# -- backtest -----------------------------------------------------------------


def table1_rows(report: BacktestReport) -> list[tuple]:
    rows = [
        (r.state, f"{r.terminal_cash:.2f}", f"{r.terminal_contracts:.2f}",
         f"{r.value:.2f}", f"{r.payoff:.2f}", f"{r.profit:.2f}",
         f"{r.return_rate:.4f}")
        for r in report.results
    ]
    rows.append((
        "TOTAL", "", "", f"{report.total_value:.2f}", f"{report.total_payoff:.2f}",
        f"{report.total_profit:.2f}", f"{report.total_return:.4f}",
    ))
    return rows


def write_table1(path: Path, report: BacktestReport) -> Path:
    return write_csv(
        path,
        ("state", "cash", "contracts", "value", "payoff", "profit", "return"),
        table1_rows(report),
    )


def write_table2(path: Path, scenarios: Sequence[FlipScenario]) -> Path:
    rows = [
        ("+".join(s.states), s.margin_votes, f"{s.payoff:.2f}", f"{s.profit:.2f}",
         f"{s.return_rate:.4f}")
        for s in scenarios
    ]
    return write_csv(path, ("flipped_states", "margin_votes", "payoff", "profit", "return"), rows)


def write_trajectory(path: Path, trajectory) -> Path:
    rows = [
        (p.date.isoformat(), f"{p.cash:.10g}", f"{p.holdings:.10g}",
         f"{p.price:.10g}", f"{p.trade:.10g}", f"{p.value:.10g}")
        for p in trajectory.points
    ]
    return write_csv(path, ("date", "cash", "holdings", "price", "trade", "value"), rows)


def backtest_report_payload(report: BacktestReport,
                            flips: Sequence[FlipScenario] = (),
                            robustness: RobustnessResult | None = None) -> dict:
    payload = {
        "config": {
            "initial_cash": report.config.initial_cash,
            "rho": report.config.rho,
            "fill_policy": report.config.fill_policy,
            "quantity_mode": report.config.quantity_mode,
        },
        "states": [
            {
                "state": r.state,
                "cash": round(r.terminal_cash, 6),
                "contracts": round(r.terminal_contracts, 6),
                "value": round(r.value, 6),
                "payoff": round(r.payoff, 6),
                "profit": round(r.profit, 6),
                "return": round(r.return_rate, 6),
            }
            for r in report.results
        ],
        "totals": {
            "value": round(report.total_value, 6),
            "payoff": round(report.total_payoff, 6),
            "profit": round(report.total_profit, 6),
            "return": round(report.total_return, 6),
        },
    }
    if flips:
        payload["flips"] = [
            {
                "states": list(s.states),
                "margin_votes": s.margin_votes,
                "payoff": round(s.payoff, 6),
                "profit": round(s.profit, 6),
                "return": round(s.return_rate, 6),
            }
            for s in flips
        ]
    if robustness is not None:
        payload["robustness"] = {
            "close_states": list(robustness.close_states),
            "diameter": (
                robustness.diameter if robustness.diameter != float("inf") else "inf"
            ),
            "min_flip_votes": robustness.min_flip_votes,
            "losing_set": list(robustness.losing_set) if robustness.losing_set else None,
        }
    return payload
