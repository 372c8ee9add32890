"""Study procedures on top of the sizing core.

Covers the baseline (no storage, no PV, no commitment), weight sweeps for
carbon/cost Pareto fronts, power-to-energy ratio sweeps, per-scenario daily
emission statistics, emission ECDFs, and the scenario-count convergence
harness.  Sweep points are solved cold and independently; a failing point is
recorded with its status instead of aborting the sweep.

Emitters write one JSON (machine-readable, schema-versioned) and one CSV
(tabular) per study, both embedding the run's config hash and seed.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .ingest import AlignedDataset
from .lp import BackendFailure, SolveOptions
from .model import (CostBreakdown, EssParams, GenParams, GridParams,
                    ScenarioSet, SizingSolution, TimeGrid, ValidatedConfig,
                    Weight, validate_params)
from .scenarios import generate_scenarios
from .sizing import BuildOptions, Infeasible, SizingError, Unbounded, size

SCHEMA_VERSION = 1


# ---------------------------------------------------------------------------
# Baseline
# ---------------------------------------------------------------------------

def baseline(scen: ScenarioSet, grid: TimeGrid, net: GridParams,
             weight: float = 0.0) -> CostBreakdown:
    """Costs of running the data center alone: no storage, no PV, no commitment.

    All grid power is imported load, so the import-carbon and energy-cost
    terms integrate the load directly and the peak charge uses per-scenario
    load peaks.  Every asset term is zero.  ``weight`` only scalarizes the
    objective; components do not depend on it.
    """
    dt = grid.step_hours
    m = scen.n_scenarios
    carbon_pcc = dt / m * float((scen.carbon_intensity * scen.load).sum())
    cost_energy = dt / m * float((scen.tariff_consumption * scen.load).sum())
    peaks = scen.load.max(axis=0, initial=0.0)
    cost_power = net.power_tariff * grid.billing_day_factor / m * float(peaks.sum())
    return CostBreakdown.compose(
        carbon_pcc=carbon_pcc, carbon_ess=0.0, carbon_gen=0.0,
        cost_ess=0.0, cost_gen=0.0, cost_energy=cost_energy,
        cost_power=cost_power, weight=weight)


def percent_reduction(baseline_value: float, value: float) -> float | None:
    """(baseline - value) / baseline in percent; None when baseline is 0."""
    if baseline_value == 0.0:
        return None
    return 100.0 * (baseline_value - value) / baseline_value


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParetoPoint:
    """One weight-sweep solve."""

    weight: float
    status: str
    breakdown: CostBreakdown | None = None
    energy_rating: float | None = None
    pv_rating: float | None = None
    carbon_reduction_pct: float | None = None
    financial_reduction_pct: float | None = None
    message: str = ""


@dataclass(frozen=True)
class RatioPoint:
    """One power-to-energy ratio solve."""

    ratio: float
    status: str
    breakdown: CostBreakdown | None = None
    energy_rating: float | None = None
    power_rating: float | None = None
    pv_rating: float | None = None
    message: str = ""


@dataclass(frozen=True)
class WeightSweepResult:
    points: tuple[ParetoPoint, ...]
    baseline: CostBreakdown


@dataclass(frozen=True)
class RatioSweepResult:
    points: tuple[RatioPoint, ...]
    best_ratio: float | None


def _solve_point(config: ValidatedConfig, options: BuildOptions | None,
                 solver: SolveOptions | None
                 ) -> tuple[str, SizingSolution | None, str]:
    try:
        solution, _, _ = size(config, options=options, solver=solver)
        return "optimal", solution, ""
    except Infeasible as exc:
        return "infeasible", None, str(exc)
    except Unbounded as exc:
        return "unbounded", None, str(exc)
    except (SizingError, BackendFailure) as exc:
        return "failed", None, str(exc)


def sweep_weight(config: ValidatedConfig, weights: Sequence[float],
                 options: BuildOptions | None = None,
                 solver: SolveOptions | None = None) -> WeightSweepResult:
    """Solve once per scalarization weight; report deltas vs the baseline.

    Percent reductions follow the carbon-only / financial-only convention:
    carbon reduction compares carbon totals, financial reduction compares
    financial totals.
    """
    if len(weights) == 0:
        raise ValueError("weights list must be non-empty")
    if any(w < 0 for w in weights):
        raise ValueError("weights must be non-negative")
    base = baseline(config.scenarios, config.grid, config.net,
                    weight=config.weight.carbon_per_currency)
    points: list[ParetoPoint] = []
    for w in weights:
        cfg = replace(config, weight=Weight(carbon_per_currency=float(w)))
        status, solution, message = _solve_point(cfg, options, solver)
        if solution is None:
            points.append(ParetoPoint(weight=float(w), status=status, message=message))
            continue
        br = solution.breakdown
        points.append(ParetoPoint(
            weight=float(w), status=status, breakdown=br,
            energy_rating=solution.ess_energy_rating,
            pv_rating=solution.pv_rating,
            carbon_reduction_pct=percent_reduction(base.carbon_total, br.carbon_total),
            financial_reduction_pct=percent_reduction(base.financial_total,
                                                      br.financial_total)))
    return WeightSweepResult(points=tuple(points), baseline=base)


def sweep_p2e(config: ValidatedConfig, ratios: Sequence[float],
              options: BuildOptions | None = None,
              solver: SolveOptions | None = None) -> RatioSweepResult:
    """Solve once per power-to-energy ratio; pick the objective-minimizing one.

    Ties break toward the smaller ratio.  Points come back in input order.
    """
    if len(ratios) == 0:
        raise ValueError("ratios list must be non-empty")
    if any(r <= 0 for r in ratios):
        raise ValueError("ratios must be positive")
    points: list[RatioPoint] = []
    best_ratio: float | None = None
    best_objective = np.inf
    for ratio in ratios:
        cfg = replace(config, ess=replace(config.ess, p2e_ratio=float(ratio)))
        status, solution, message = _solve_point(cfg, options, solver)
        if solution is None:
            points.append(RatioPoint(ratio=float(ratio), status=status, message=message))
            continue
        br = solution.breakdown
        points.append(RatioPoint(
            ratio=float(ratio), status=status, breakdown=br,
            energy_rating=solution.ess_energy_rating,
            power_rating=solution.ess_power_rating,
            pv_rating=solution.pv_rating))
        if (br.objective < best_objective
                or (br.objective == best_objective
                    and (best_ratio is None or ratio < best_ratio))):
            best_objective = br.objective
            best_ratio = float(ratio)
    return RatioSweepResult(points=tuple(points), best_ratio=best_ratio)


# ---------------------------------------------------------------------------
# Emission statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EmissionStats:
    """Per-scenario daily emissions with mean and population std (gCO2eq)."""

    per_scenario: np.ndarray
    mean: float
    std: float
    include_lca: bool


def daily_emission_stats(scen: ScenarioSet, grid: TimeGrid,
                         solution: SizingSolution | None = None,
                         ess: EssParams | None = None,
                         gen: GenParams | None = None,
                         include_lca: bool = True) -> EmissionStats:
    """Daily carbon emissions per scenario, for a sized system or the baseline.

    Without a solution the imports are the raw load (baseline).  With one,
    imports are the solved import split; when ``include_lca`` is set the
    embodied terms are added — calendar terms identically to every scenario
    day, the cycling term from each scenario's own battery throughput.
    """
    dt = grid.step_hours
    if solution is None:
        per_scenario = dt * (scen.carbon_intensity * scen.load).sum(axis=0)
    else:
        per_scenario = dt * (scen.carbon_intensity * solution.pcc_load_split).sum(axis=0)
        if include_lca:
            if ess is None or gen is None:
                raise ValueError("include_lca needs ess and gen parameters")
            calendar = (solution.ess_energy_rating * grid.horizon_hours
                        * ess.lca_carbon / ess.calendar_life
                        + grid.horizon_hours / gen.calendar_life
                        * solution.pv_rating * gen.lca_carbon)
            cycling = (ess.throughput_carbon * dt
                       * np.abs(solution.ess_power).sum(axis=0))
            per_scenario = per_scenario + calendar + cycling
    return EmissionStats(per_scenario=per_scenario,
                         mean=float(per_scenario.mean()),
                         std=float(per_scenario.std()),
                         include_lca=include_lca and solution is not None)


@dataclass(frozen=True, eq=False)
class Ecdf:
    """Empirical CDF: F(x) = fraction of values <= x."""

    values: np.ndarray         # sorted ascending
    probabilities: np.ndarray  # (i+1)/n per sorted value

    def evaluate(self, x: float) -> float:
        return float(np.searchsorted(self.values, x, side="right")) / self.values.size


def emissions_ecdf(daily_emissions: Sequence[float] | np.ndarray) -> Ecdf:
    """Sorted-values ECDF of per-scenario daily emissions."""
    values = np.sort(np.asarray(daily_emissions, dtype=float))
    if values.size == 0:
        raise ValueError("ECDF needs at least one value")
    probabilities = np.arange(1, values.size + 1) / values.size
    return Ecdf(values=values, probabilities=probabilities)


# ---------------------------------------------------------------------------
# Convergence study
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConvergenceCell:
    n_td: int
    n_sc: int
    seed: int
    status: str
    objective: float | None = None
    energy_rating: float | None = None
    pv_rating: float | None = None
    message: str = ""


@dataclass(frozen=True)
class ConvergenceResult:
    """One sizing per (typical days, scenarios, seed) plus seed dispersion."""

    cells: tuple[ConvergenceCell, ...]

    def objective_seed_std(self, n_td: int, n_sc: int) -> float | None:
        """Across-seed population std of the objective in one grid cell."""
        values = [c.objective for c in self.cells
                  if c.n_td == n_td and c.n_sc == n_sc and c.status == "optimal"]
        if not values:
            return None
        return float(np.std(np.asarray(values)))


def convergence_study(dataset: AlignedDataset, grid: TimeGrid, ess: EssParams,
                      gen: GenParams, net: GridParams, weight: Weight,
                      n_td_list: Sequence[int], n_sc_list: Sequence[int],
                      seeds: Sequence[int], k: int = 3,
                      stratify_weekdays: bool = False,
                      paired_sampling: bool = False,
                      options: BuildOptions | None = None,
                      solver: SolveOptions | None = None) -> ConvergenceResult:
    """Size once per (n_td, n_sc, seed) over freshly sampled scenario sets.

    Supports picking the smallest scenario budget whose objective has
    converged: as n_sc grows the across-seed dispersion should shrink.
    """
    if not n_td_list or not n_sc_list or not seeds:
        raise ValueError("n_td_list, n_sc_list and seeds must be non-empty")
    cells: list[ConvergenceCell] = []
    for n_td in n_td_list:
        for n_sc in n_sc_list:
            for seed in seeds:
                try:
                    bundle = generate_scenarios(
                        dataset, n_td=n_td, n_sc=n_sc, k=k, seed=seed,
                        stratify_weekdays=stratify_weekdays,
                        paired_sampling=paired_sampling)
                    config = validate_params(grid, bundle.scenario_set, ess,
                                             gen, net, weight)
                except Exception as exc:
                    cells.append(ConvergenceCell(n_td=n_td, n_sc=n_sc, seed=seed,
                                                 status="failed", message=str(exc)))
                    continue
                status, solution, message = _solve_point(config, options, solver)
                cells.append(ConvergenceCell(
                    n_td=n_td, n_sc=n_sc, seed=seed, status=status,
                    objective=(solution.breakdown.objective if solution else None),
                    energy_rating=(solution.ess_energy_rating if solution else None),
                    pv_rating=(solution.pv_rating if solution else None),
                    message=message))
    return ConvergenceResult(cells=tuple(cells))


# ---------------------------------------------------------------------------
# Emitters
# ---------------------------------------------------------------------------

def json_default(obj):
    """Convert numpy scalars/arrays so json.dump accepts solution payloads."""
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True, default=json_default)
        handle.write("\n")


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence],
               version: str, config_hash: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(f"# tool_version={version}\n")
        handle.write(f"# config_hash={config_hash}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def _breakdown_columns(br: CostBreakdown | None) -> list:
    if br is None:
        return [None] * 10
    return [br.objective, br.carbon_pcc, br.carbon_ess, br.carbon_gen,
            br.carbon_total, br.cost_ess, br.cost_gen, br.cost_energy,
            br.cost_power, br.financial_total]

_BREAKDOWN_HEADER = ["objective", "carbon_pcc", "carbon_ess", "carbon_gen",
                     "carbon_total", "cost_ess", "cost_gen", "cost_energy",
                     "cost_power", "financial_total"]


def write_weight_sweep(result: WeightSweepResult, outdir, config_hash: str,
                       seed: int | None, version: str) -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    csv_path = outdir / "weight_sweep.csv"
    rows = [[_fmt(v) for v in
             [p.weight, p.status, *_breakdown_columns(p.breakdown),
              p.energy_rating, p.pv_rating, p.carbon_reduction_pct,
              p.financial_reduction_pct]]
            for p in result.points]
    _write_csv(csv_path, ["weight", "status", *_BREAKDOWN_HEADER,
                          "energy_rating_kwh", "pv_rating_kw",
                          "carbon_reduction_pct", "financial_reduction_pct"],
               rows, version, config_hash)
    json_path = outdir / "weight_sweep.json"
    _write_json(json_path, {
        "schema_version": SCHEMA_VERSION, "tool_version": version,
        "config_hash": config_hash, "seed": seed,
        "baseline": result.baseline.to_dict(),
        "points": [{
            "weight": p.weight, "status": p.status,
            "breakdown": p.breakdown.to_dict() if p.breakdown else None,
            "energy_rating_kwh": p.energy_rating, "pv_rating_kw": p.pv_rating,
            "carbon_reduction_pct": p.carbon_reduction_pct,
            "financial_reduction_pct": p.financial_reduction_pct,
            "message": p.message,
        } for p in result.points]})
    return [csv_path, json_path]


def write_ratio_sweep(result: RatioSweepResult, outdir, config_hash: str,
                      seed: int | None, version: str) -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    csv_path = outdir / "ratio_sweep.csv"
    rows = [[_fmt(v) for v in
             [p.ratio, p.status, *_breakdown_columns(p.breakdown),
              p.energy_rating, p.power_rating, p.pv_rating]]
            for p in result.points]
    _write_csv(csv_path, ["p2e_ratio", "status", *_BREAKDOWN_HEADER,
                          "energy_rating_kwh", "power_rating_kw", "pv_rating_kw"],
               rows, version, config_hash)
    json_path = outdir / "ratio_sweep.json"
    _write_json(json_path, {
        "schema_version": SCHEMA_VERSION, "tool_version": version,
        "config_hash": config_hash, "seed": seed,
        "best_ratio": result.best_ratio,
        "points": [{
            "p2e_ratio": p.ratio, "status": p.status,
            "breakdown": p.breakdown.to_dict() if p.breakdown else None,
            "energy_rating_kwh": p.energy_rating,
            "power_rating_kw": p.power_rating, "pv_rating_kw": p.pv_rating,
            "message": p.message,
        } for p in result.points]})
    return [csv_path, json_path]


def write_convergence(result: ConvergenceResult, outdir, config_hash: str,
                      version: str) -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    csv_path = outdir / "convergence.csv"
    rows = [[_fmt(v) for v in
             [c.n_td, c.n_sc, c.seed, c.status, c.objective,
              c.energy_rating, c.pv_rating]]
            for c in result.cells]
    _write_csv(csv_path, ["n_td", "n_sc", "seed", "status", "objective",
                          "energy_rating_kwh", "pv_rating_kw"],
               rows, version, config_hash)
    pairs = sorted({(c.n_td, c.n_sc) for c in result.cells})
    json_path = outdir / "convergence.json"
    _write_json(json_path, {
        "schema_version": SCHEMA_VERSION, "tool_version": version,
        "config_hash": config_hash,
        "cells": [{
            "n_td": c.n_td, "n_sc": c.n_sc, "seed": c.seed, "status": c.status,
            "objective": c.objective, "energy_rating_kwh": c.energy_rating,
            "pv_rating_kw": c.pv_rating, "message": c.message,
        } for c in result.cells],
        "objective_seed_std": [{
            "n_td": n_td, "n_sc": n_sc,
            "std": result.objective_seed_std(n_td, n_sc),
        } for n_td, n_sc in pairs]})
    return [csv_path, json_path]
