"""Matplotlib renderings of the report data, written next to the CSVs."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.dates as mdates
import matplotlib.pyplot as plt

from .backtest import Trajectory
from .scoring import BrierSeries, CalibrationCurve, FrequencyReport

# fixed metadata so identical inputs produce identical PNG bytes
_META = {"Software": "modelmarket"}

_COLORS = {"model": "tab:blue", "market": "tab:red", "hybrid": "tab:green"}


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, metadata=_META)
    plt.close(fig)
    return path


def daily_brier_figure(series: Sequence[BrierSeries], path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(9, 4.5))
    for s in series:
        ax.plot(s.dates, s.means, label=s.source.value,
                color=_COLORS.get(s.source.value), lw=1.2)
    ax.set_xlabel("date")
    ax.set_ylabel("mean Brier score")
    ax.legend()
    ax.xaxis.set_major_formatter(mdates.DateFormatter("%Y-%m"))
    fig.autofmt_xdate()
    fig.tight_layout()
    return _save(fig, path)


def calibration_figure(curves: dict[str, CalibrationCurve], path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 6))
    ax.plot([0, 1], [0, 1], color="gray", ls="--", lw=1)
    for source in sorted(curves):
        curve = curves[source]
        xs = [b.mean_forecast for b in curve.bins]
        ys = [b.realized_freq for b in curve.bins]
        ax.plot(xs, ys, marker="o", ms=4, lw=1.2, label=source,
                color=_COLORS.get(source))
    ax.set_xlabel("mean forecast probability")
    ax.set_ylabel("realized frequency")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)


def frequency_figure(reports: dict[str, FrequencyReport], path: Path) -> Path:
    fig, axes = plt.subplots(len(reports), 1, figsize=(9, 3 * len(reports)),
                             sharex=True, squeeze=False)
    for ax, source in zip(axes.ravel(), sorted(reports)):
        report = reports[source]
        xs = [b.lo for b in report.bins]
        ys = [b.count for b in report.bins]
        ax.bar(xs, ys, width=report.bin_width * 0.9, align="edge",
               color=_COLORS.get(source))
        ax.set_ylabel(f"{source} count")
    axes.ravel()[-1].set_xlabel("forecast probability")
    fig.tight_layout()
    return _save(fig, path)


def per_state_figure(scores: dict[str, dict[str, float]], date_label: str,
                     path: Path) -> Path:
    """Grouped bars of per-state scores for each source on one date."""
    states = sorted(scores)
    sources = ("market", "model", "hybrid")
    width = 0.27
    fig, ax = plt.subplots(figsize=(10, 4.5))
    for k, source in enumerate(sources):
        xs = [i + (k - 1) * width for i in range(len(states))]
        ys = [scores[s][source] for s in states]
        ax.bar(xs, ys, width=width, label=source, color=_COLORS.get(source))
    ax.set_xticks(range(len(states)))
    ax.set_xticklabels(states, rotation=45, ha="right")
    ax.set_ylabel(f"Brier score on {date_label}")
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)


def holdings_figure(trajectory: Trajectory, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(9, 4))
    dates = [p.date for p in trajectory.points]
    ax.plot(dates, [p.holdings for p in trajectory.points], lw=1.2, color="tab:blue")
    ax.axhline(0, color="gray", lw=0.8, ls="--")
    ax.set_ylabel("contracts held")
    ax.set_title(trajectory.state)
    ax.xaxis.set_major_formatter(mdates.DateFormatter("%Y-%m"))
    fig.autofmt_xdate()
    fig.tight_layout()
    return _save(fig, path)


def holdings_grid_figure(trajectories: Sequence[Trajectory], path: Path) -> Path:
    n = len(trajectories)
    cols = 4
    rows = (n + cols - 1) // cols
    fig, axes = plt.subplots(rows, cols, figsize=(3.2 * cols, 2.4 * rows),
                             sharex=True, squeeze=False)
    flat = axes.ravel()
    for ax, traj in zip(flat, trajectories):
        dates = [p.date for p in traj.points]
        ax.plot(dates, [p.holdings for p in traj.points], lw=1.0, color="tab:blue")
        ax.axhline(0, color="gray", lw=0.6, ls="--")
        ax.set_title(traj.state, fontsize=9)
        ax.tick_params(labelsize=7)
    for ax in flat[n:]:
        ax.axis("off")
    fig.autofmt_xdate()
    fig.tight_layout()
    return _save(fig, path)
