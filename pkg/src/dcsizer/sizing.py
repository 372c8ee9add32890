"""Stochastic sizing program: build, solve, extract, verify.

The decision variables are the storage energy rating, the PV power rating and
the per-scenario battery power profiles; everything else (stored energy, grid
exchange, import/export and charge/discharge splits, committed day-ahead
profiles, per-scenario peaks) follows through linear constraints.  Exclusivity
of the splits is relaxed to continuous [0, 1] indicators bounded by big-M
constants and verified after solving; the cost breakdown is recomputed from
the solution arrays with the true absolute battery power so the reported
numbers never inherit linearization artifacts.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .lp import (BackendFailure, ExclusivityFamily, LinearProgram,
                 SolveOptions, EQUAL, LESS_EQUAL, solve_exact, solve_linear)
from .model import (CostBreakdown, EssParams, GenParams, GridParams,
                    ScenarioSet, SizingSolution, TimeGrid, ValidatedConfig,
                    Weight)

_EXACT_MODE_ENTRY_LIMIT = 200
_OBJECTIVE_AGREEMENT_RTOL = 1e-6


class SizingError(RuntimeError):
    """Base class for sizing-stage failures."""


class Infeasible(SizingError):
    """The program admits no solution under the current relaxation knobs."""


class Unbounded(SizingError):
    """The program is unbounded below (requires degenerate cost inputs)."""


class ObjectiveMismatch(SizingError):
    """Solver objective and recomputed breakdown disagree despite exclusivity."""


@dataclass(frozen=True)
class BuildOptions:
    """Structural switches for :func:`build_problem`.

    ``include_dispatch=False`` removes the day-ahead commitment (tracking +
    per-typical-day mean) constraints; ``include_buffer=False`` removes the
    zero-net-cycling requirement.  Fixed ratings pin the corresponding
    decision variable (used for baselines and ratio sweeps).
    """

    include_dispatch: bool = True
    include_buffer: bool = True
    fixed_energy_rating: float | None = None
    fixed_pv_rating: float | None = None


@dataclass(frozen=True, eq=False)
class SolverReport:
    """What the LP backend did, plus the residual audit of its answer."""

    status: str
    objective: float | None
    primal: np.ndarray | None
    max_residual: float
    wall_time: float
    iterations: int
    message: str = ""


@dataclass(frozen=True)
class ExclusivityReport:
    """Worst simultaneous activation of mutually exclusive splits."""

    max_import_export_overlap: float
    max_charge_discharge_overlap: float
    tolerance: float
    passed: bool
    offenders: tuple[tuple[str, int, int, float], ...] = ()


@dataclass(frozen=True)
class PhysicsReport:
    """Max residual per physical constraint family, against one tolerance."""

    residuals: dict[str, float]
    tolerance: float
    scale: float
    passed: bool

    @property
    def worst(self) -> tuple[str, float]:
        name = max(self.residuals, key=self.residuals.get)
        return name, self.residuals[name]


def pv_generation(scen: ScenarioSet, gen: GenParams, pv_rating: float) -> np.ndarray:
    """PV output (kW, n_steps x n_scenarios) for a given rating.

    Output scales linearly with irradiance: rating * ratio at peak
    irradiance, proportionally below.
    """
    slope = gen.irradiance_to_power_ratio / gen.peak_irradiance
    return slope * scen.irradiance * pv_rating


def objective_scale(scen: ScenarioSet, net: GridParams) -> float:
    """Magnitude yardstick for relative tolerances on power quantities."""
    return max(1.0, float(np.abs(scen.load).max(initial=0.0)), net.pcc_rated)


# ---------------------------------------------------------------------------
# Problem construction
# ---------------------------------------------------------------------------

def build_problem(scen: ScenarioSet, ess: EssParams, gen: GenParams,
                  net: GridParams, grid: TimeGrid, weight: Weight,
                  options: BuildOptions | None = None) -> LinearProgram:
    """Assemble the sizing LP for one scenario set.

    Variable and constraint counts are deterministic functions of
    (n_steps, n_scenarios, typical_day_count) and are recoverable from the
    program's block registries.
    """
    options = options or BuildOptions()
    n = scen.n_steps
    m = scen.n_scenarios
    n_tp = scen.typical_day_count
    n_sc = scen.scenarios_per_day
    dt = grid.step_hours
    horizon = grid.horizon_hours
    w = weight.carbon_per_currency

    m_ess = ess.big_m_effective
    m_pcc = net.big_m_effective
    p_cap = ess.rated_power_cap
    e_cap = p_cap / ess.p2e_ratio

    lp = LinearProgram("dcsizer")

    fixed_e = options.fixed_energy_rating
    fixed_pv = options.fixed_pv_rating
    e_rating = lp.add_variable("energy_rating",
                               lower=fixed_e if fixed_e is not None else 0.0,
                               upper=fixed_e if fixed_e is not None else e_cap)
    p_rating = lp.add_variable("power_rating", lower=0.0, upper=p_cap)
    pv_rating = lp.add_variable("pv_rating",
                                lower=fixed_pv if fixed_pv is not None else 0.0,
                                upper=fixed_pv if fixed_pv is not None else np.inf)

    stored = lp.add_variable("stored_energy", (n + 1, m), lower=0.0)
    ess_power = lp.add_variable("ess_power", (n, m), lower=-m_ess, upper=m_ess)
    conv = lp.add_variable("converter_power", (n, m), lower=-p_cap, upper=p_cap)
    charge = lp.add_variable("charge_power", (n, m), lower=0.0, upper=m_ess)
    discharge = lp.add_variable("discharge_power", (n, m), lower=-m_ess, upper=0.0)
    z_ess = lp.add_variable("ess_indicator", (n, m), lower=0.0, upper=1.0)
    pcc = lp.add_variable("pcc_power", (n, m), lower=-net.pcc_rated, upper=net.pcc_rated)
    pcc_import = lp.add_variable("pcc_import", (n, m), lower=0.0, upper=m_pcc)
    pcc_export = lp.add_variable("pcc_export", (n, m), lower=-m_pcc, upper=0.0)
    z_pcc = lp.add_variable("pcc_indicator", (n, m), lower=0.0, upper=1.0)
    pv_power = lp.add_variable("pv_power", (n, m), lower=0.0)
    peak = lp.add_variable("daily_peak", (m,), lower=0.0)
    dispatch = (lp.add_variable("dispatch", (n, n_tp))
                if options.include_dispatch else None)

    e_col = np.full((m, 1), int(e_rating))
    lp.add_block("storage_initial_level",
                 [(stored[0, :], 1.0), (e_col, -ess.soc_start)], EQUAL, 0.0)
    lp.add_block("storage_dynamics",
                 [(stored[1:, :].ravel(), 1.0), (stored[:-1, :].ravel(), -1.0),
                  (ess_power.ravel(), -dt)], EQUAL, 0.0)

    e_all = np.full(((n + 1) * m, 1), int(e_rating))
    lp.add_block("storage_level_floor",
                 [(stored.ravel(), -1.0), (e_all, ess.soc_min)], LESS_EQUAL, 0.0)
    lp.add_block("storage_level_ceiling",
                 [(stored.ravel(), 1.0), (e_all, -ess.soc_max)], LESS_EQUAL, 0.0)

    p_col = np.full((n * m, 1), int(p_rating))
    lp.add_block("converter_rating_upper",
                 [(conv.ravel(), 1.0), (p_col, -1.0)], LESS_EQUAL, 0.0)
    lp.add_block("converter_rating_lower",
                 [(conv.ravel(), -1.0), (p_col, -1.0)], LESS_EQUAL, 0.0)
    lp.add_block("power_energy_tie",
                 [(np.array([int(p_rating)]), 1.0),
                  (np.array([int(e_rating)]), -ess.p2e_ratio)], EQUAL, 0.0)

    lp.add_block("ess_split",
                 [(ess_power.ravel(), 1.0), (charge.ravel(), -1.0),
                  (discharge.ravel(), -1.0)], EQUAL, 0.0)
    lp.add_block("charge_indicator",
                 [(charge.ravel(), 1.0), (z_ess.ravel(), m_ess)], LESS_EQUAL, m_ess)
    lp.add_block("discharge_indicator",
                 [(discharge.ravel(), -1.0), (z_ess.ravel(), -m_ess)], LESS_EQUAL, 0.0)
    lp.add_block("converter_efficiency",
                 [(conv.ravel(), 1.0), (charge.ravel(), -1.0 / ess.efficiency),
                  (discharge.ravel(), -ess.efficiency)], EQUAL, 0.0)

    lp.add_block("node_balance",
                 [(pcc.ravel(), 1.0), (conv.ravel(), -1.0), (pv_power.ravel(), 1.0)],
                 EQUAL, scen.load.ravel())
    lp.add_block("pcc_split",
                 [(pcc.ravel(), 1.0), (pcc_import.ravel(), -1.0),
                  (pcc_export.ravel(), -1.0)], EQUAL, 0.0)
    lp.add_block("import_indicator",
                 [(pcc_import.ravel(), 1.0), (z_pcc.ravel(), m_pcc)], LESS_EQUAL, m_pcc)
    lp.add_block("export_indicator",
                 [(pcc_export.ravel(), -1.0), (z_pcc.ravel(), -m_pcc)], LESS_EQUAL, 0.0)

    slope = gen.irradiance_to_power_ratio / gen.peak_irradiance
    pv_col = np.full((n * m, 1), int(pv_rating))
    lp.add_block("pv_coupling",
                 [(pv_power.ravel(), 1.0), (pv_col, -slope * scen.irradiance.ravel()[:, None])],
                 EQUAL, 0.0)

    by_day = ess_power.reshape(n, n_tp, n_sc)
    if options.include_buffer:
        day_rows = np.transpose(by_day, (1, 0, 2)).reshape(n_tp, n * n_sc)
        lp.add_block("storage_day_buffer_upper", [(day_rows, 1.0)],
                     LESS_EQUAL, net.buffer_tolerance)
        lp.add_block("storage_day_buffer_lower", [(day_rows, -1.0)],
                     LESS_EQUAL, net.buffer_tolerance)

    if options.include_dispatch:
        day_of_scenario = np.repeat(np.arange(n_tp), n_sc)
        dispatch_wide = dispatch[:, day_of_scenario]
        lp.add_block("dispatch_track_upper",
                     [(pcc.ravel(), 1.0), (dispatch_wide.ravel(), -1.0)],
                     LESS_EQUAL, net.tracking_accuracy)
        lp.add_block("dispatch_track_lower",
                     [(pcc.ravel(), -1.0), (dispatch_wide.ravel(), 1.0)],
                     LESS_EQUAL, net.tracking_accuracy)
        pcc_by_day = pcc.reshape(n, n_tp, n_sc).reshape(n * n_tp, n_sc)
        lp.add_block("dispatch_mean",
                     [(pcc_by_day, 1.0), (dispatch.reshape(n * n_tp, 1), -float(n_sc))],
                     EQUAL, 0.0)

    peak_wide = np.broadcast_to(peak[None, :], (n, m))
    lp.add_block("peak_import",
                 [(pcc_import.ravel(), 1.0), (peak_wide.ravel(), -1.0)], LESS_EQUAL, 0.0)
    lp.add_block("peak_export",
                 [(pcc_export.ravel(), -1.0), (peak_wide.ravel(), -1.0)], LESS_EQUAL, 0.0)

    # Objective: expected carbon per horizon plus w times expected cost.
    throughput_c = ess.throughput_carbon                      # gCO2eq per kWh moved
    unit_capex = ess.cost_energy + ess.cost_power * ess.p2e_ratio
    cycle_coef = dt / m * (throughput_c + w * unit_capex / (2.0 * ess.cycle_life))
    lp.add_objective(pcc_import, dt / m * scen.carbon_intensity)
    lp.add_objective(charge, cycle_coef)
    lp.add_objective(discharge, -cycle_coef)
    lp.add_objective(e_rating,
                     horizon / ess.calendar_life * (ess.lca_carbon + w * unit_capex))
    lp.add_objective(pv_rating,
                     horizon / gen.calendar_life * (gen.lca_carbon + w * gen.cost_power))
    if w != 0.0:
        lp.add_objective(pcc_import, w * dt / m * scen.tariff_consumption)
        lp.add_objective(pcc_export, w * dt / m * scen.tariff_injection)
        lp.add_objective(peak, w * net.power_tariff * grid.billing_day_factor / m)
    return lp


# ---------------------------------------------------------------------------
# Solution extraction and verification
# ---------------------------------------------------------------------------

def _extract(program: LinearProgram, x: np.ndarray, config: ValidatedConfig,
             status: str) -> SizingSolution:
    scen = config.scenarios

    def grab(name: str) -> np.ndarray:
        block = program.variable(name)
        return x[block.start:block.start + block.size].reshape(block.shape)

    e_rating = float(grab("energy_rating"))
    blocks = program.variable_blocks
    if "dispatch" in blocks:
        dispatch = grab("dispatch")
    else:
        pcc = grab("pcc_power")
        dispatch = (pcc @ scen.assignment.T) / scen.scenarios_per_day

    solution = SizingSolution(
        ess_energy_rating=e_rating,
        ess_power_rating=float(grab("power_rating")),
        pv_rating=float(grab("pv_rating")),
        dispatch=dispatch,
        pcc_power=grab("pcc_power"),
        pcc_load_split=grab("pcc_import"),
        pcc_gen_split=grab("pcc_export"),
        ess_power=grab("ess_power"),
        converter_power=grab("converter_power"),
        charge_power=grab("charge_power"),
        discharge_power=grab("discharge_power"),
        stored_energy=grab("stored_energy"),
        daily_peak=grab("daily_peak"),
        pcc_indicator=grab("pcc_indicator"),
        ess_indicator=grab("ess_indicator"),
        breakdown=CostBreakdown.compose(
            carbon_pcc=0.0, carbon_ess=0.0, carbon_gen=0.0, cost_ess=0.0,
            cost_gen=0.0, cost_energy=0.0, cost_power=0.0,
            weight=config.weight.carbon_per_currency),
        status=status,
    )
    breakdown = compute_breakdown(solution, scen, config.grid, config.ess,
                                  config.gen, config.net, config.weight)
    return replace(solution, breakdown=breakdown)


def compute_breakdown(sol: SizingSolution, scen: ScenarioSet, grid: TimeGrid,
                      ess: EssParams, gen: GenParams, net: GridParams,
                      weight: Weight) -> CostBreakdown:
    """Recompute all cost components from the solution arrays.

    Independent of the solver: uses the true absolute battery power for
    cycling terms (not the charge-discharge linearization) and re-derives the
    per-scenario peaks from the import/export splits rather than trusting the
    peak variables.
    """
    dt = grid.step_hours
    m = scen.n_scenarios
    horizon = grid.horizon_hours
    throughput = dt * np.abs(sol.ess_power).sum()            # kWh moved, all scenarios

    carbon_pcc = dt / m * float((scen.carbon_intensity * sol.pcc_load_split).sum())
    carbon_ess = (ess.throughput_carbon * throughput / m
                  + sol.ess_energy_rating * horizon * ess.lca_carbon / ess.calendar_life)
    carbon_gen = horizon / gen.calendar_life * sol.pv_rating * gen.lca_carbon

    unit_capex = ess.cost_energy + ess.cost_power * ess.p2e_ratio
    cost_ess = (sol.ess_energy_rating * horizon / ess.calendar_life
                + throughput / (2.0 * ess.cycle_life * m)) * unit_capex
    cost_gen = horizon / gen.calendar_life * sol.pv_rating * gen.cost_power
    cost_energy = dt / m * float(
        (scen.tariff_consumption * sol.pcc_load_split
         + scen.tariff_injection * sol.pcc_gen_split).sum())
    peaks = np.maximum(sol.pcc_load_split.max(axis=0, initial=0.0),
                       -sol.pcc_gen_split.min(axis=0, initial=0.0))
    cost_power = net.power_tariff * grid.billing_day_factor / m * float(peaks.sum())

    return CostBreakdown.compose(
        carbon_pcc=carbon_pcc, carbon_ess=carbon_ess, carbon_gen=carbon_gen,
        cost_ess=cost_ess, cost_gen=cost_gen, cost_energy=cost_energy,
        cost_power=cost_power, weight=weight.carbon_per_currency)


def check_exclusivity(sol: SizingSolution, tol: float,
                      max_offenders: int = 20) -> ExclusivityReport:
    """Verify import/export and charge/discharge splits never overlap.

    Overlap at (step, scenario) is min(positive part, -negative part); the
    check passes when the worst overlap of both families stays within
    ``tol`` (kW).
    """
    pcc_overlap = np.minimum(sol.pcc_load_split, -sol.pcc_gen_split)
    ess_overlap = np.minimum(sol.charge_power, -sol.discharge_power)
    offenders: list[tuple[str, int, int, float]] = []
    for name, overlap in (("pcc", pcc_overlap), ("ess", ess_overlap)):
        bad = np.argwhere(overlap > tol)
        for k, j in bad[:max_offenders]:
            offenders.append((name, int(k), int(j), float(overlap[k, j])))
    max_pcc = float(pcc_overlap.max(initial=0.0))
    max_ess = float(ess_overlap.max(initial=0.0))
    return ExclusivityReport(
        max_import_export_overlap=max_pcc,
        max_charge_discharge_overlap=max_ess,
        tolerance=tol,
        passed=max_pcc <= tol and max_ess <= tol,
        offenders=tuple(offenders[:max_offenders]))


def default_exclusivity_tol(net: GridParams) -> float:
    return 1e-3 * net.pcc_rated


def check_physics(sol: SizingSolution, scen: ScenarioSet, grid: TimeGrid,
                  ess: EssParams, gen: GenParams, net: GridParams,
                  feas_tol: float = 1e-6) -> PhysicsReport:
    """Residuals of every physical constraint family, from raw arrays only.

    The pass threshold is ``feas_tol * scale`` where scale is the larger of
    1 kW, the peak load and the grid connection rating; inequality families
    report only their violation (0 when satisfied).
    """
    dt = grid.step_hours
    e_rating = sol.ess_energy_rating
    scale = objective_scale(scen, net)
    threshold = feas_tol * scale

    pv = pv_generation(scen, gen, sol.pv_rating)
    diff = np.diff(sol.stored_energy, axis=0)
    expected_dispatch = (sol.pcc_power @ scen.assignment.T) / scen.scenarios_per_day
    day_sums = (sol.ess_power.reshape(scen.n_steps, scen.typical_day_count,
                                      scen.scenarios_per_day)
                .sum(axis=(0, 2)))
    dispatch_wide = sol.dispatch @ scen.assignment

    residuals = {
        "storage_initial_level": float(np.abs(sol.stored_energy[0] - ess.soc_start * e_rating).max()),
        "storage_dynamics": float(np.abs(diff - dt * sol.ess_power).max()),
        "storage_level_floor": float(np.maximum(ess.soc_min * e_rating - sol.stored_energy, 0.0).max()),
        "storage_level_ceiling": float(np.maximum(sol.stored_energy - ess.soc_max * e_rating, 0.0).max()),
        "storage_nonnegative": float(np.maximum(-sol.stored_energy, 0.0).max()),
        "converter_rating": float(np.maximum(np.abs(sol.converter_power) - sol.ess_power_rating, 0.0).max()),
        "power_energy_tie": abs(sol.ess_power_rating - ess.p2e_ratio * e_rating),
        "ess_split": float(np.abs(sol.ess_power - sol.charge_power - sol.discharge_power).max()),
        "split_signs": float(max(np.maximum(-sol.charge_power, 0.0).max(),
                                 np.maximum(sol.discharge_power, 0.0).max(),
                                 np.maximum(-sol.pcc_load_split, 0.0).max(),
                                 np.maximum(sol.pcc_gen_split, 0.0).max())),
        "converter_efficiency": float(np.abs(sol.converter_power
                                             - sol.charge_power / ess.efficiency
                                             - ess.efficiency * sol.discharge_power).max()),
        "node_balance": float(np.abs(sol.pcc_power - sol.converter_power
                                     - scen.load + pv).max()),
        "pcc_rating": float(np.maximum(np.abs(sol.pcc_power) - net.pcc_rated, 0.0).max()),
        "pcc_split": float(np.abs(sol.pcc_power - sol.pcc_load_split - sol.pcc_gen_split).max()),
        "storage_day_buffer": float(np.maximum(np.abs(day_sums) - net.buffer_tolerance, 0.0).max()),
        "dispatch_tracking": float(np.maximum(np.abs(sol.pcc_power - dispatch_wide)
                                              - net.tracking_accuracy, 0.0).max()),
        "dispatch_mean": float(np.abs(expected_dispatch - sol.dispatch).max()),
        "peak_cover": float(np.maximum(
            np.maximum(sol.pcc_load_split, -sol.pcc_gen_split) - sol.daily_peak[None, :],
            0.0).max()),
        "indicator_range": float(max(
            np.maximum(sol.pcc_indicator - 1.0, 0.0).max(),
            np.maximum(-sol.pcc_indicator, 0.0).max(),
            np.maximum(sol.ess_indicator - 1.0, 0.0).max(),
            np.maximum(-sol.ess_indicator, 0.0).max())),
    }
    passed = all(value <= threshold for value in residuals.values())
    return PhysicsReport(residuals=residuals, tolerance=threshold, scale=scale,
                         passed=passed)


# ---------------------------------------------------------------------------
# Solving
# ---------------------------------------------------------------------------

_LARGE_PROBLEM_VARIABLES = 500_000


def default_solve_options(problem: LinearProgram) -> SolveOptions:
    """Pick backend options by program size.

    Small and mid-size programs use the simplex default with a tight
    feasibility tolerance.  Very large programs switch to the barrier method
    (with crossover, so solutions stay vertex solutions and the split
    exclusivity checks stay meaningful) at the backend's native tolerance.
    """
    if problem.n_variables > _LARGE_PROBLEM_VARIABLES:
        return SolveOptions(method="highs-ipm", feasibility_tol=1e-7)
    return SolveOptions()


def _exclusivity_families(program: LinearProgram) -> list[ExclusivityFamily]:
    blocks = program.variable_blocks
    return [
        ExclusivityFamily("pcc",
                          positive=blocks["pcc_import"].indices.ravel(),
                          negative=blocks["pcc_export"].indices.ravel(),
                          indicator=blocks["pcc_indicator"].indices.ravel()),
        ExclusivityFamily("ess",
                          positive=blocks["charge_power"].indices.ravel(),
                          negative=blocks["discharge_power"].indices.ravel(),
                          indicator=blocks["ess_indicator"].indices.ravel()),
    ]


def solve(problem: LinearProgram, config: ValidatedConfig,
          solver: SolveOptions | None = None, exact: bool = False,
          exclusivity_tol: float | None = None
          ) -> tuple[SizingSolution, SolverReport]:
    """Solve a built program and extract the verified solution.

    In exact mode (oracle-scale instances only) branch-and-bound drives the
    split indicators to true exclusivity.  The returned solution's breakdown
    is recomputed from the solution arrays; if the splits are exclusive but
    the recomputed objective disagrees with the solver's by more than 1e-6
    relative, the solve is treated as a backend failure.

    Raises:
        Infeasible: with a hint naming the relaxation knobs to loosen.
        Unbounded, BackendFailure, ObjectiveMismatch.
    """
    solver = solver or default_solve_options(problem)
    tol = (default_exclusivity_tol(config.net)
           if exclusivity_tol is None else exclusivity_tol)
    if exact:
        entries = config.n_steps * config.n_scenarios
        if entries > _EXACT_MODE_ENTRY_LIMIT:
            raise ValueError(
                f"exact mode is reserved for oracle-scale instances "
                f"(n_steps*n_scenarios <= {_EXACT_MODE_ENTRY_LIMIT}, got {entries})")
        result = solve_exact(problem, _exclusivity_families(problem), solver,
                             overlap_tol=tol)
    else:
        result = solve_linear(problem, solver)

    report = SolverReport(status=result.status, objective=result.objective,
                          primal=result.x, max_residual=result.max_residual,
                          wall_time=result.wall_time, iterations=result.iterations,
                          message=result.message)
    if result.status == "infeasible":
        raise Infeasible(
            "sizing program infeasible; consider loosening tracking_accuracy, "
            "buffer_tolerance, or raising pcc_rated")
    if result.status == "unbounded":
        raise Unbounded("sizing program unbounded; check cost signs (e.g. an "
                        "injection tariff above the consumption tariff with a "
                        "zero-carbon grid rewards unlimited export)")
    if result.status != "optimal":
        raise BackendFailure(f"LP backend ended with status {result.status!r}: "
                             f"{result.message}")

    solution = _extract(problem, result.x, config, status=result.status)
    exclusivity = check_exclusivity(solution, tol)
    if exclusivity.passed:
        gap = abs(solution.breakdown.objective - result.objective)
        if gap > _OBJECTIVE_AGREEMENT_RTOL * max(1.0, abs(result.objective)):
            raise ObjectiveMismatch(
                f"recomputed objective {solution.breakdown.objective:.9g} vs "
                f"solver {result.objective:.9g} (gap {gap:.3g}) with exclusive "
                f"splits; the backend answer is not trustworthy")
    return solution, report


def size(config: ValidatedConfig, options: BuildOptions | None = None,
         solver: SolveOptions | None = None, exact: bool = False
         ) -> tuple[SizingSolution, SolverReport, LinearProgram]:
    """Build + solve in one call; returns the program for inspection."""
    problem = build_problem(config.scenarios, config.ess, config.gen,
                            config.net, config.grid, config.weight, options)
    solution, report = solve(problem, config, solver=solver, exact=exact)
    return solution, report, problem
