"""Independent brute-force verifier for tiny sizing instances.

Everything here is deliberately dumb and solver-free: ratings live on an
explicit grid, battery trajectories are enumerated on per-step grids that a
pattern search shrinks around the incumbent, and the objective is evaluated
from first principles with the true absolute battery power and exact
import/export splits.  Committed day-ahead profiles are never searched: each
candidate's dispatch is the per-typical-day scenario mean, which is optimal
because the tracking band is symmetric around it.

The total number of trajectory evaluations is capped by a guard; exceeding it
raises instead of silently under-searching.  Refining any grid never worsens
the reported optimum (searches only accept improvements).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .model import CostBreakdown, SizingSolution, ValidatedConfig
from .sizing import compute_breakdown, pv_generation

_CHUNK = 1 << 17
_SHRINK = 0.5
_PITCH_FLOOR = 1e-9


class GuardExceeded(RuntimeError):
    """The requested grids would exceed the evaluation budget."""


@dataclass(frozen=True)
class TinyInstance:
    """A sizing instance small enough to verify exhaustively.

    ``energy_levels`` / ``pv_levels`` discretize the two ratings over
    [0, cap]; ``power_levels`` discretizes each per-step battery power.
    ``refine_passes`` bounds the pattern-search depth.  The guard counts
    every evaluated trajectory across the whole search.
    """

    config: ValidatedConfig
    energy_levels: int = 11
    pv_levels: int = 11
    power_levels: int = 9
    refine_passes: int = 60
    pv_rating_max: float | None = None
    evaluation_guard: int = 10_000_000

    def __post_init__(self) -> None:
        scen = self.config.scenarios
        if scen.n_steps > 4 or scen.n_scenarios > 2 or scen.typical_day_count > 2:
            raise ValueError(
                f"oracle instances must satisfy n_steps <= 4, n_scenarios <= 2, "
                f"typical_day_count <= 2; got ({scen.n_steps}, {scen.n_scenarios}, "
                f"{scen.typical_day_count})")

    @property
    def energy_rating_max(self) -> float:
        return self.config.ess.rated_power_cap / self.config.ess.p2e_ratio

    @property
    def pv_rating_cap(self) -> float:
        """Upper end of the PV grid.

        Defaults to the largest rating any feasible point can use: above it
        the PV output at some (step, scenario) would push the grid power
        below -pcc_rated even with the battery charging flat out, so both
        the exact optimum and the oracle optimum lie below the cap.
        """
        if self.pv_rating_max is not None:
            return self.pv_rating_max
        scen, ess, net, gen = (self.config.scenarios, self.config.ess,
                               self.config.net, self.config.gen)
        slope = gen.irradiance_to_power_ratio / gen.peak_irradiance
        output = slope * scen.irradiance
        active = output > 1e-12
        if not active.any():
            return 0.0
        headroom = (scen.load + net.pcc_rated
                    + ess.rated_power_cap / ess.efficiency)
        return float((headroom[active] / output[active]).min())


@dataclass(frozen=True, eq=False)
class OracleResult:
    """Best grid point found, or infeasibility if no grid point qualified."""

    feasible: bool
    energy_rating: float
    pv_rating: float
    objective: float
    ess_power: np.ndarray | None
    evaluations: int


class _Budget:
    def __init__(self, guard: int):
        self.guard = guard
        self.used = 0

    def spend(self, count: int) -> None:
        if self.used + count > self.guard:
            raise GuardExceeded(
                f"oracle would need more than {self.guard} trajectory evaluations "
                f"({self.used} used, {count} more requested); shrink the grids")
        self.used += count


class _Env:
    """Precomputed constants for vectorized trajectory evaluation."""

    def __init__(self, config: ValidatedConfig):
        scen, grid = config.scenarios, config.grid
        ess, gen, net, weight = config.ess, config.gen, config.net, config.weight
        self.config = config
        self.n = scen.n_steps
        self.m = scen.n_scenarios
        self.n_tp = scen.typical_day_count
        self.n_sc = scen.scenarios_per_day
        self.dt = grid.step_hours
        self.horizon = grid.horizon_hours
        self.load = scen.load
        self.ci = scen.carbon_intensity
        self.p_cons = scen.tariff_consumption
        self.p_inj = scen.tariff_injection
        self.eta = ess.efficiency
        self.m_ess = ess.big_m_effective
        self.pcc_rated = net.pcc_rated
        self.eps_t = net.tracking_accuracy
        self.eps_buffer = net.buffer_tolerance
        self.w = weight.carbon_per_currency
        self.unit_capex = ess.cost_energy + ess.cost_power * ess.p2e_ratio
        self.ess = ess
        self.gen = gen
        self.net = net
        self.grid = grid
        scale = max(1.0, float(np.abs(scen.load).max(initial=0.0)), net.pcc_rated)
        self.eps = 1e-9 * scale

    def battery_box(self, energy_rating: float) -> tuple[float, float]:
        """Feasible per-step battery power interval (battery side)."""
        p_rated = self.ess.p2e_ratio * energy_rating
        low = -min(self.m_ess, p_rated / self.eta)
        high = min(self.m_ess, self.eta * p_rated)
        return low, high

    def evaluate(self, energy_rating: float, pv_rating: float,
                 batch: np.ndarray, budget: _Budget) -> np.ndarray:
        """Objective of each trajectory in ``batch`` (inf when infeasible)."""
        budget.spend(batch.shape[0])
        ess, gen = self.ess, self.gen
        p_rated = ess.p2e_ratio * energy_rating
        eps = self.eps
        eps_e = 1e-9 * max(1.0, energy_rating)

        p = batch
        conv = np.where(p >= 0.0, p / self.eta, p * self.eta)
        feasible = (np.abs(conv) <= p_rated + eps).all(axis=(1, 2))
        feasible &= (np.abs(p) <= self.m_ess + eps).all(axis=(1, 2))

        energy = ess.soc_start * energy_rating + self.dt * np.cumsum(p, axis=1)
        feasible &= (energy >= ess.soc_min * energy_rating - eps_e).all(axis=(1, 2))
        feasible &= (energy <= ess.soc_max * energy_rating + eps_e).all(axis=(1, 2))

        pv = pv_generation(self.config.scenarios, gen, pv_rating)
        pcc = conv + self.load[None, :, :] - pv[None, :, :]
        feasible &= (np.abs(pcc) <= self.pcc_rated + eps).all(axis=(1, 2))

        day_shape = (p.shape[0], self.n, self.n_tp, self.n_sc)
        day_sums = p.reshape(day_shape).sum(axis=(1, 3))
        feasible &= (np.abs(day_sums) <= self.eps_buffer + eps).all(axis=1)

        pcc_days = pcc.reshape(day_shape)
        dispatch = pcc_days.mean(axis=3)
        feasible &= (np.abs(pcc_days - dispatch[..., None])
                     <= self.eps_t + eps).all(axis=(1, 2, 3))

        imports = np.maximum(pcc, 0.0)
        exports = np.minimum(pcc, 0.0)
        throughput = self.dt * np.abs(p).sum(axis=(1, 2))
        carbon_pcc = self.dt / self.m * (self.ci[None] * imports).sum(axis=(1, 2))
        carbon_ess = (ess.throughput_carbon * throughput / self.m
                      + energy_rating * self.horizon * ess.lca_carbon / ess.calendar_life)
        carbon_gen = self.horizon / gen.calendar_life * pv_rating * gen.lca_carbon
        cost_ess = (energy_rating * self.horizon / ess.calendar_life
                    + throughput / (2.0 * ess.cycle_life * self.m)) * self.unit_capex
        cost_gen = self.horizon / gen.calendar_life * pv_rating * gen.cost_power
        cost_energy = self.dt / self.m * (self.p_cons[None] * imports
                                          + self.p_inj[None] * exports).sum(axis=(1, 2))
        peaks = np.maximum(imports.max(axis=1), -exports.min(axis=1))
        cost_power = (self.net.power_tariff * self.grid.billing_day_factor
                      / self.m * peaks.sum(axis=1))
        objective = (carbon_pcc + carbon_ess + carbon_gen
                     + self.w * (cost_ess + cost_gen + cost_energy + cost_power))
        return np.where(feasible, objective, np.inf)


def _cartesian_chunks(grids: np.ndarray):
    """Yield (dims, chunk) slabs of the cartesian product of per-dim grids."""
    dims, levels = grids.shape
    total = levels ** dims
    shape = (levels,) * dims
    for start in range(0, total, _CHUNK):
        flat = np.arange(start, min(start + _CHUNK, total))
        multi = np.array(np.unravel_index(flat, shape))
        yield grids[np.arange(dims)[:, None], multi]


def _trajectory_search(env: _Env, energy_rating: float, pv_rating: float,
                       levels: int, passes: int, budget: _Budget,
                       init: np.ndarray | None = None,
                       init_pitch: float = 1.0
                       ) -> tuple[float, np.ndarray | None]:
    """Pattern search over per-step battery powers at fixed ratings.

    Each pass enumerates the full cartesian grid of ``levels`` offsets per
    step around the center (so coupled moves across scenarios are in the
    stencil), recenters on strict improvement without shrinking, and halves
    the pitch on a stalled pass.  The trajectory problem is jointly convex,
    so the incumbent converges to the true inner optimum as the pitch drops.
    ``init`` warm-starts the center (clipped into the battery box);
    ``init_pitch`` scales the starting pitch relative to the half-box.
    """
    if levels < 2 or levels % 2 == 0:
        raise ValueError("pattern search needs an odd number of levels >= 3")
    dims = env.n * env.m
    low, high = env.battery_box(energy_rating)
    half_box = max(high - low, 0.0) / 2.0

    # Seed with the zero trajectory (feasible on any sanely relaxed instance)
    # and the warm start if provided; keep the better of the two.
    seeds = [np.zeros((env.n, env.m)) if low <= 0.0 <= high
             else np.full((env.n, env.m), (low + high) / 2.0)]
    if init is not None:
        seeds.append(np.clip(np.asarray(init, dtype=float), low, high))
    batch = np.stack(seeds)
    objectives = env.evaluate(energy_rating, pv_rating, batch, budget)
    idx = int(np.argmin(objectives))
    best_obj = float(objectives[idx])
    best = batch[idx].copy()
    center = best.ravel().copy()

    pitch = half_box * init_pitch
    tol = _PITCH_FLOOR * max(1.0, half_box)
    offsets = np.linspace(-1.0, 1.0, levels)
    for _ in range(passes):
        if pitch <= tol or half_box <= 0.0:
            break
        grids = np.clip(center[:, None] + pitch * offsets[None, :], low, high)
        improved = False
        for slab in _cartesian_chunks(grids):
            batch = slab.T.reshape(-1, env.n, env.m)
            objectives = env.evaluate(energy_rating, pv_rating, batch, budget)
            idx = int(np.argmin(objectives))
            if objectives[idx] < best_obj:
                best_obj = float(objectives[idx])
                best = batch[idx].copy()
                improved = True
        if improved:
            center = best.ravel().copy()
        else:
            pitch *= _SHRINK
    feasible = np.isfinite(best_obj)
    return best_obj, (best if feasible else None)


def brute_force_dispatch(inst: TinyInstance, energy_rating: float,
                         pv_rating: float) -> OracleResult:
    """Exhaustively optimize the battery trajectories at fixed ratings."""
    env = _Env(inst.config)
    budget = _Budget(inst.evaluation_guard)
    dims = env.n * env.m
    per_pass = inst.power_levels ** dims
    projected = per_pass * inst.refine_passes
    if projected > inst.evaluation_guard:
        raise GuardExceeded(
            f"trajectory search needs about {projected} evaluations "
            f"({inst.power_levels}^{dims} x {inst.refine_passes} passes) "
            f"> guard {inst.evaluation_guard}")
    objective, trajectory = _trajectory_search(
        env, energy_rating, pv_rating, inst.power_levels, inst.refine_passes, budget)
    return OracleResult(feasible=trajectory is not None,
                        energy_rating=energy_rating, pv_rating=pv_rating,
                        objective=objective, ess_power=trajectory,
                        evaluations=budget.used)


class _RatingSearch:
    """Nested 1-D refinements over (energy rating, PV rating).

    The rating objective F(e, g) — the inner trajectory optimum — is convex
    but only piecewise linear, so a 2-D compass walk can stall where the
    descent cone slips between stencil directions.  Minimizing over g inside
    a 1-D search over e avoids that: both line functions are convex in one
    variable, where a shrinking 3-point pattern cannot stall.  Evaluations
    are cached per (e, g) and capped by ``point_budget``.
    """

    def __init__(self, env: _Env, inst: TinyInstance, budget: _Budget,
                 inner_passes: int, point_budget: int):
        self.env = env
        self.inst = inst
        self.budget = budget
        self.inner_passes = inner_passes
        self.points_left = point_budget
        self.cache: dict[tuple[float, float], float] = {}
        self.best = (np.inf, 0.0, 0.0, None)  # objective, e, g, trajectory

    def seed(self, objective: float, e: float, g: float, traj) -> None:
        self.cache[(e, g)] = objective
        if objective < self.best[0]:
            self.best = (objective, e, g, traj)

    def evaluate(self, e: float, g: float) -> float:
        key = (e, g)
        if key in self.cache:
            return self.cache[key]
        if self.points_left <= 0:
            return np.inf
        self.points_left -= 1
        obj, traj = _trajectory_search(self.env, e, g, self.inst.power_levels,
                                       self.inner_passes, self.budget,
                                       init=self.best[3])
        self.cache[key] = obj
        if obj < self.best[0]:
            self.best = (obj, e, g, traj)
        return obj

    def line_min_g(self, e: float, g0: float, pitch: float, max_iters: int = 16
                   ) -> float:
        """1-D pattern minimization of F(e, .) starting at g0."""
        cap = self.inst.pv_rating_cap
        g = float(np.clip(g0, 0.0, cap))
        value = self.evaluate(e, g)
        tol = _PITCH_FLOOR * max(1.0, cap)
        for _ in range(max_iters):
            if pitch <= tol or self.points_left <= 0:
                break
            candidates = [float(np.clip(g + s * pitch, 0.0, cap))
                          for s in (-1.0, 1.0)]
            values = [self.evaluate(e, c) if c != g else value
                      for c in candidates]
            idx = int(np.argmin(values))
            if values[idx] < value:
                g, value = candidates[idx], values[idx]
            else:
                pitch *= _SHRINK
        return value

    def refine(self, e0: float, g0: float, pitch_e: float, pitch_g: float,
               max_iters: int = 24) -> None:
        """1-D pattern minimization over e, each point minimized over g."""
        cap = self.inst.energy_rating_max
        e = float(np.clip(e0, 0.0, cap))
        value = self.line_min_g(e, g0, pitch_g)
        tol = _PITCH_FLOOR * max(1.0, cap)
        for _ in range(max_iters):
            if pitch_e <= tol or self.points_left <= 0:
                break
            improved = False
            for s in (-1.0, 1.0):
                candidate = float(np.clip(e + s * pitch_e, 0.0, cap))
                if candidate == e:
                    continue
                cand_value = self.line_min_g(candidate, self.best[2], pitch_g)
                if cand_value < value:
                    e, value = candidate, cand_value
                    improved = True
            if not improved:
                pitch_e *= _SHRINK
                pitch_g = max(pitch_g * _SHRINK, tol)


def brute_force_size(inst: TinyInstance, coarse_passes: int = 10,
                     refine_inner_passes: int = 15,
                     refine_point_budget: int = 800) -> OracleResult:
    """Grid-scan the ratings, then refine the best cell, then polish.

    Stage 1 evaluates every rating grid cell with a short trajectory search;
    stage 2 runs nested 1-D pattern refinements around the best cell with at
    most ``refine_point_budget`` rating evaluations of ``refine_inner_passes``
    each; stage 3 re-solves the winning ratings at full depth.  Only strict
    improvements replace the incumbent, so refining never worsens the
    reported optimum.
    """
    env = _Env(inst.config)
    budget = _Budget(inst.evaluation_guard)
    dims = env.n * env.m
    per_pass = inst.power_levels ** dims
    cells = inst.energy_levels * inst.pv_levels
    projected = per_pass * (cells * coarse_passes
                            + refine_point_budget * refine_inner_passes
                            + inst.refine_passes)
    if projected > inst.evaluation_guard:
        raise GuardExceeded(
            f"rating search needs about {projected} evaluations > guard "
            f"{inst.evaluation_guard}; shrink the grids")

    e_grid = np.linspace(0.0, inst.energy_rating_max, inst.energy_levels)
    g_grid = np.linspace(0.0, inst.pv_rating_cap, inst.pv_levels)

    search = _RatingSearch(env, inst, budget, refine_inner_passes,
                           refine_point_budget)
    for e_rating in e_grid:
        for pv_rating in g_grid:
            obj, traj = _trajectory_search(env, e_rating, pv_rating,
                                           inst.power_levels, coarse_passes,
                                           budget)
            search.seed(obj, float(e_rating), float(pv_rating), traj)

    if search.best[3] is None:
        return OracleResult(feasible=False, energy_rating=0.0, pv_rating=0.0,
                            objective=np.inf, ess_power=None,
                            evaluations=budget.used)

    pitch_e = (e_grid[1] - e_grid[0]) if inst.energy_levels > 1 else 1.0
    pitch_g = (g_grid[1] - g_grid[0]) if inst.pv_levels > 1 else 1.0
    search.refine(search.best[1], search.best[2], pitch_e, pitch_g)

    best = search.best
    obj, traj = _trajectory_search(env, best[1], best[2], inst.power_levels,
                                   inst.refine_passes, budget, init=best[3])
    if obj < best[0]:
        best = (obj, best[1], best[2], traj)
    return OracleResult(feasible=True, energy_rating=best[1], pv_rating=best[2],
                        objective=best[0], ess_power=best[3],
                        evaluations=budget.used)


def trajectory_solution(config: ValidatedConfig, energy_rating: float,
                        pv_rating: float, ess_power: np.ndarray) -> SizingSolution:
    """Build a full solution record from a battery trajectory.

    All derived arrays follow deterministically: exact splits, per-day mean
    dispatch, binary indicators.  Used to cross-check the breakdown and
    physics verifiers against oracle-optimal trajectories.
    """
    scen, grid, ess, gen = (config.scenarios, config.grid, config.ess, config.gen)
    ess_power = np.asarray(ess_power, dtype=float)
    conv = np.where(ess_power >= 0.0, ess_power / ess.efficiency,
                    ess_power * ess.efficiency)
    pv = pv_generation(scen, gen, pv_rating)
    pcc = conv + scen.load - pv
    imports = np.maximum(pcc, 0.0)
    exports = np.minimum(pcc, 0.0)
    charge = np.maximum(ess_power, 0.0)
    discharge = np.minimum(ess_power, 0.0)
    stored = np.vstack([np.full((1, scen.n_scenarios), ess.soc_start * energy_rating),
                        ess.soc_start * energy_rating
                        + grid.step_hours * np.cumsum(ess_power, axis=0)])
    dispatch = (pcc @ scen.assignment.T) / scen.scenarios_per_day
    peaks = np.maximum(imports.max(axis=0, initial=0.0),
                       -exports.min(axis=0, initial=0.0))
    placeholder = CostBreakdown.compose(
        carbon_pcc=0.0, carbon_ess=0.0, carbon_gen=0.0, cost_ess=0.0,
        cost_gen=0.0, cost_energy=0.0, cost_power=0.0,
        weight=config.weight.carbon_per_currency)
    solution = SizingSolution(
        ess_energy_rating=float(energy_rating),
        ess_power_rating=float(ess.p2e_ratio * energy_rating),
        pv_rating=float(pv_rating),
        dispatch=dispatch,
        pcc_power=pcc,
        pcc_load_split=imports,
        pcc_gen_split=exports,
        ess_power=ess_power,
        converter_power=conv,
        charge_power=charge,
        discharge_power=discharge,
        stored_energy=stored,
        daily_peak=peaks,
        pcc_indicator=(pcc < 0.0).astype(float),
        ess_indicator=(ess_power < 0.0).astype(float),
        breakdown=placeholder,
        status="oracle",
    )
    breakdown = compute_breakdown(solution, scen, grid, ess, gen,
                                  config.net, config.weight)
    return replace(solution, breakdown=breakdown)
