"""Figure rendering for command-line runs.

Only the command-line layer imports this module; the core library never
touches matplotlib.  Figures are written next to the delimited outputs with
pinned PNG metadata so reruns stay byte-identical.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .analysis import Ecdf, RatioSweepResult, WeightSweepResult  # noqa: E402
from .model import ScenarioSet, SizingSolution, TimeGrid  # noqa: E402

_MAX_LEGEND = 8


def _save(fig, path: Path, metadata: dict | None = None) -> Path:
    merged = {"Software": "dcsizer"}
    if metadata:
        merged.update(metadata)
    fig.savefig(path, dpi=120, metadata=merged)
    plt.close(fig)
    return path


def _hours(grid: TimeGrid) -> np.ndarray:
    return np.arange(grid.step_count) * grid.step_hours


def plot_dispatch(solution: SizingSolution, scen: ScenarioSet, grid: TimeGrid,
                  names: Sequence[str], path,
                  metadata: dict | None = None) -> Path:
    """Committed grid profiles per typical day, over the realized spread."""
    path = Path(path)
    hours = _hours(grid)
    fig, (ax_top, ax_bot) = plt.subplots(2, 1, figsize=(9, 7), sharex=True)
    n_tp = solution.dispatch.shape[1]
    colors = plt.cm.viridis(np.linspace(0.0, 0.92, n_tp))
    show_legend = n_tp <= _MAX_LEGEND
    for j in range(n_tp):
        members = np.flatnonzero(scen.assignment[j] > 0.5)
        pcc = solution.pcc_power[:, members]
        ax_top.fill_between(hours, pcc.min(axis=1), pcc.max(axis=1),
                            color=colors[j], alpha=0.15, linewidth=0)
        ax_top.plot(hours, solution.dispatch[:, j], color=colors[j],
                    linewidth=1.4, label=names[j] if show_legend else None)
    ax_top.set_ylabel("grid power [kW]")
    ax_top.set_title("Day-ahead grid commitment (lines) and scenario spread (bands)")
    if show_legend:
        ax_top.legend(fontsize=8, ncol=2)

    stored = solution.stored_energy
    ax_bot.fill_between(np.arange(stored.shape[0]) * grid.step_hours,
                        stored.min(axis=1), stored.max(axis=1),
                        color="tab:blue", alpha=0.25, linewidth=0)
    ax_bot.plot(np.arange(stored.shape[0]) * grid.step_hours,
                stored.mean(axis=1), color="tab:blue", linewidth=1.4)
    ax_bot.set_xlabel("hour of day")
    ax_bot.set_ylabel("stored energy [kWh]")
    ax_bot.set_title("Battery energy across scenarios (band = min/max, line = mean)")
    fig.tight_layout()
    return _save(fig, path, metadata)


def plot_ecdf(ecdf: Ecdf, path, title: str = "Daily emissions ECDF",
              reference: Ecdf | None = None,
              reference_label: str = "baseline",
              metadata: dict | None = None) -> Path:
    """Step plot of per-scenario daily emissions, optional reference curve."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.step(ecdf.values, ecdf.probabilities, where="post", color="tab:green",
            label="sized system")
    if reference is not None:
        ax.step(reference.values, reference.probabilities, where="post",
                color="black", linestyle="--", label=reference_label)
        ax.legend(fontsize=9)
    ax.set_xlabel("daily emissions [gCO2eq]")
    ax.set_ylabel("fraction of scenarios")
    ax.set_ylim(0.0, 1.02)
    ax.set_title(title)
    fig.tight_layout()
    return _save(fig, path, metadata)


def plot_weight_sweep(result: WeightSweepResult, path,
                      metadata: dict | None = None) -> Path:
    """Carbon vs financial cost trade-off across scalarization weights."""
    path = Path(path)
    solved = [p for p in result.points if p.breakdown is not None]
    fig, ax = plt.subplots(figsize=(7, 5))
    if solved:
        carbon = [p.breakdown.carbon_total for p in solved]
        money = [p.breakdown.financial_total for p in solved]
        ax.plot(money, carbon, "o-", color="tab:blue")
        for p, x, y in zip(solved, money, carbon):
            ax.annotate(f"w={p.weight:g}", (x, y), textcoords="offset points",
                        xytext=(5, 4), fontsize=8)
    ax.plot([result.baseline.financial_total], [result.baseline.carbon_total],
            "k*", markersize=12, label="baseline")
    ax.set_xlabel("financial cost [currency/day]")
    ax.set_ylabel("carbon cost [gCO2eq/day]")
    ax.set_title("Carbon / cost front across weights")
    ax.legend(fontsize=9)
    fig.tight_layout()
    return _save(fig, path, metadata)


def plot_ratio_sweep(result: RatioSweepResult, path,
                     metadata: dict | None = None) -> Path:
    """Objective and ratings as functions of the power-to-energy ratio."""
    path = Path(path)
    solved = [p for p in result.points if p.breakdown is not None]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    if solved:
        ratios = [p.ratio for p in solved]
        objectives = [p.breakdown.objective for p in solved]
        ax.plot(ratios, objectives, "o-", color="tab:blue")
        if result.best_ratio is not None:
            ax.axvline(result.best_ratio, color="tab:red", linestyle=":",
                       label=f"best ratio {result.best_ratio:g}")
            ax.legend(fontsize=9)
    ax.set_xlabel("power-to-energy ratio [kW/kWh]")
    ax.set_ylabel("objective [gCO2eq/day]")
    ax.set_title("Objective vs power-to-energy ratio")
    fig.tight_layout()
    return _save(fig, path, metadata)
