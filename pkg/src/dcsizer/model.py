"""Domain types for the storage/PV sizing engine.

Units are fixed package-wide: power in kW, energy in kWh, carbon in gCO2eq,
irradiance in W/m^2, money in a generic currency unit.  Scenario matrices are
(n_steps, n_scenarios) float64 arrays; the scenarios belonging to one typical
day occupy contiguous columns so per-typical-day aggregation stays blockwise.

All types are frozen dataclasses, safe to share across workers.  Construction
is cheap and permissive; :func:`validate_params` performs the full invariant
check and is the single gate before any computation.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

SEASONS = ("winter", "spring", "summer", "autumn")
DAY_TYPES = ("weekday", "weekend")


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------

class ValidationError(ValueError):
    """A configuration violates a documented invariant.

    Carries the full list of issues found (not only the one that triggered
    the raise) so callers can report everything at once.
    """

    def __init__(self, message: str, issues: tuple["ValidationIssue", ...] = ()):
        super().__init__(message)
        self.issues = issues


class DimensionMismatch(ValidationError):
    """Scenario matrices (or the assignment matrix) disagree on shape."""


class InvariantViolation(ValidationError):
    """A scalar parameter violates its documented bound or ordering."""


class AssignmentMatrixInvalid(ValidationError):
    """The typical-day assignment matrix breaks its row/column sum laws."""


# ---------------------------------------------------------------------------
# Serialization helpers
# ---------------------------------------------------------------------------

def _encode(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, _Serializable):
        return value.to_dict()
    if isinstance(value, tuple):
        return [_encode(v) for v in value]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


class _Serializable:
    """Dict round-trip for frozen dataclasses holding scalars and arrays.

    ``to_dict`` emits JSON-ready payloads (arrays as nested lists); the
    default ``from_dict`` feeds them back through the constructor, relying on
    each class's ``__post_init__`` array coercion.  Classes with nested
    dataclass fields override ``from_dict``.
    """

    def to_dict(self) -> dict:
        return {f.name: _encode(getattr(self, f.name)) for f in dataclasses.fields(self)}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]):
        names = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in names})


def _coerce_arrays(obj: Any, *names: str) -> None:
    for name in names:
        value = getattr(obj, name)
        if value is None:
            continue
        arr = np.ascontiguousarray(np.asarray(value, dtype=np.float64))
        object.__setattr__(obj, name, arr)


# ---------------------------------------------------------------------------
# Core types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TimeGrid(_Serializable):
    """Discretization of the planning horizon.

    Attributes:
        step_count: number of time steps per horizon (e.g. 96 for a day at
            quarter-hour resolution).
        step_hours: step length in hours.
        billing_day_factor: multiplier converting the per-scenario peak-power
            tariff into a per-horizon charge (plain config scalar, default 1).
    """

    step_count: int
    step_hours: float
    billing_day_factor: float = 1.0

    @property
    def horizon_hours(self) -> float:
        """Total horizon length in hours (exactly step_count * step_hours)."""
        return self.step_count * self.step_hours


@dataclass(frozen=True)
class DayLabel(_Serializable):
    """Label of a historical or typical day.

    ``irradiance_cluster`` is None until clustering assigns one; clusters are
    indexed by ascending daily surface energy (0 = dimmest days).
    """

    season: str
    day_type: str
    irradiance_cluster: int | None = None


@dataclass(frozen=True, eq=False)
class ScenarioSet(_Serializable):
    """Stochastic inputs on the (n_steps, n_scenarios) grid.

    Columns are ordered typical-day-major: scenarios ``j*scenarios_per_day``
    through ``(j+1)*scenarios_per_day - 1`` belong to typical day ``j``.
    ``assignment`` is the (typical_day_count, n_scenarios) binary matrix with
    ``assignment[j, m] = 1`` iff scenario m belongs to typical day j.
    """

    load: np.ndarray                # kW
    irradiance: np.ndarray          # W/m^2
    carbon_intensity: np.ndarray    # gCO2eq/kWh
    tariff_consumption: np.ndarray  # currency/kWh
    tariff_injection: np.ndarray    # currency/kWh
    assignment: np.ndarray          # binary, (typical_day_count, n_scenarios)
    typical_day_count: int
    scenarios_per_day: int
    labels: tuple[DayLabel, ...] | None = None

    def __post_init__(self) -> None:
        _coerce_arrays(self, "load", "irradiance", "carbon_intensity",
                       "tariff_consumption", "tariff_injection", "assignment")
        if self.labels is not None and not isinstance(self.labels, tuple):
            object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def n_steps(self) -> int:
        return self.load.shape[0]

    @property
    def n_scenarios(self) -> int:
        return self.load.shape[1]

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ScenarioSet":
        data = dict(data)
        labels = data.get("labels")
        if labels is not None:
            data["labels"] = tuple(DayLabel.from_dict(d) for d in labels)
        return cls(**{k: v for k, v in data.items()
                      if k in {f.name for f in dataclasses.fields(cls)}})


@dataclass(frozen=True)
class EssParams(_Serializable):
    """Battery storage parameters.

    Attributes:
        p2e_ratio: fixed power-to-energy ratio (1/h); the power rating is
            tied to the energy rating through it.
        soc_min / soc_max / soc_start: state-of-charge fractions of the
            energy rating (bounds and initial fill level).
        cycle_life: full equivalent cycles over the battery's life; lifetime
            throughput equals 2 * cycle_life * energy rating.
        calendar_life: shelf life in hours.
        lca_carbon: embodied (life-cycle) carbon per installed kWh, gCO2eq.
        cost_energy / cost_power: installed cost per kWh and per kW.
        efficiency: one-way converter efficiency in (0, 1]; a full
            store-and-release round trip returns efficiency**2.
        rated_power_cap: upper bound on the converter power rating, kW.
        big_m: exclusivity relaxation constant for the charge/discharge
            split, kW; None selects the tightest valid value
            (rated_power_cap).
    """

    p2e_ratio: float
    soc_min: float
    soc_max: float
    soc_start: float
    cycle_life: float
    calendar_life: float
    lca_carbon: float
    cost_energy: float
    cost_power: float
    efficiency: float
    rated_power_cap: float
    big_m: float | None = None

    @property
    def big_m_effective(self) -> float:
        return self.rated_power_cap if self.big_m is None else self.big_m

    @property
    def throughput_carbon(self) -> float:
        """Embodied carbon per kWh of throughput (gCO2eq/kWh).

        Spreads the per-kWh embodied carbon over the lifetime throughput of
        2 * cycle_life kWh per installed kWh.
        """
        return self.lca_carbon / (2.0 * self.cycle_life)


@dataclass(frozen=True)
class GenParams(_Serializable):
    """PV generator parameters.

    Attributes:
        irradiance_to_power_ratio: fraction of the rated power produced at
            peak irradiance, in [0, 1].
        peak_irradiance: irradiance at which a plant outputs
            irradiance_to_power_ratio * rating, W/m^2.
        calendar_life: plant life in hours.
        lca_carbon: embodied carbon per installed kW, gCO2eq.
        cost_power: installed cost per kW.
    """

    irradiance_to_power_ratio: float
    peak_irradiance: float
    calendar_life: float
    lca_carbon: float
    cost_power: float


@dataclass(frozen=True)
class GridParams(_Serializable):
    """Grid-connection parameters.

    Attributes:
        pcc_rated: rating of the point of common coupling, kW (import and
            export symmetric).
        power_tariff: charge per kW of per-scenario peak power, pre-scaled to
            the billing convention (multiplied by billing_day_factor).
        tracking_accuracy: allowed deviation of realized grid power from the
            committed day-ahead profile, kW.
        buffer_tolerance: allowed residual of the battery's summed power over
            one typical day (kW summed over steps and scenarios); 0 enforces
            strict zero-average cycling.
        big_m: exclusivity relaxation constant for the import/export split,
            kW; None selects the tightest valid value (pcc_rated).
    """

    pcc_rated: float
    power_tariff: float
    tracking_accuracy: float
    buffer_tolerance: float = 0.0
    big_m: float | None = None

    @property
    def big_m_effective(self) -> float:
        return self.pcc_rated if self.big_m is None else self.big_m


@dataclass(frozen=True)
class Weight(_Serializable):
    """Carbon-vs-money scalarization weight, in gCO2eq per currency unit.

    Zero means pure carbon minimization; the inverse is the monetary value
    attached to one gram of CO2-equivalent.
    """

    carbon_per_currency: float


@dataclass(frozen=True)
class CostBreakdown(_Serializable):
    """The seven objective components plus the scalarized aggregate.

    Carbon components in gCO2eq per horizon, financial components in currency
    per horizon.  ``objective`` is the carbon total plus ``weight`` times the
    financial total.
    """

    carbon_pcc: float
    carbon_ess: float
    carbon_gen: float
    cost_ess: float
    cost_gen: float
    cost_energy: float
    cost_power: float
    weight: float
    objective: float

    @classmethod
    def compose(cls, *, carbon_pcc: float, carbon_ess: float, carbon_gen: float,
                cost_ess: float, cost_gen: float, cost_energy: float,
                cost_power: float, weight: float) -> "CostBreakdown":
        carbon = carbon_pcc + carbon_ess + carbon_gen
        financial = cost_ess + cost_gen + cost_energy + cost_power
        return cls(carbon_pcc=carbon_pcc, carbon_ess=carbon_ess,
                   carbon_gen=carbon_gen, cost_ess=cost_ess, cost_gen=cost_gen,
                   cost_energy=cost_energy, cost_power=cost_power,
                   weight=weight, objective=carbon + weight * financial)

    @property
    def carbon_total(self) -> float:
        return self.carbon_pcc + self.carbon_ess + self.carbon_gen

    @property
    def financial_total(self) -> float:
        return self.cost_ess + self.cost_gen + self.cost_energy + self.cost_power

    def to_dict(self) -> dict:
        # The totals are the quantities most consumers want; emit them even
        # though they are derived (from_dict ignores unknown keys).
        out = super().to_dict()
        out["carbon_total"] = self.carbon_total
        out["financial_total"] = self.financial_total
        return out

    def consistency_residual(self) -> float:
        """Relative residual of objective == carbon + weight * financial."""
        recomposed = self.carbon_total + self.weight * self.financial_total
        scale = max(1.0, abs(self.objective), abs(recomposed))
        return abs(self.objective - recomposed) / scale


@dataclass(frozen=True, eq=False)
class SizingSolution(_Serializable):
    """Optimal ratings plus every per-scenario trajectory of the program.

    Sign conventions: ``ess_power`` > 0 charges the battery (battery side);
    ``converter_power`` > 0 draws from the node (grid side); ``pcc_power`` > 0
    imports from the grid.  ``pcc_load_split`` (>= 0) and ``pcc_gen_split``
    (<= 0) partition ``pcc_power``; ``charge_power`` (>= 0) and
    ``discharge_power`` (<= 0) partition ``ess_power``.  ``pcc_indicator``
    and ``ess_indicator`` are the relaxed exclusivity selectors in [0, 1]
    (1 = export / discharge branch active).
    """

    ess_energy_rating: float          # kWh
    ess_power_rating: float           # kW
    pv_rating: float                  # kW
    dispatch: np.ndarray              # kW, (n_steps, typical_day_count)
    pcc_power: np.ndarray             # kW, (n_steps, n_scenarios)
    pcc_load_split: np.ndarray        # kW, >= 0
    pcc_gen_split: np.ndarray         # kW, <= 0
    ess_power: np.ndarray             # kW, battery side
    converter_power: np.ndarray       # kW, grid side
    charge_power: np.ndarray          # kW, >= 0
    discharge_power: np.ndarray       # kW, <= 0
    stored_energy: np.ndarray         # kWh, (n_steps + 1, n_scenarios)
    daily_peak: np.ndarray            # kW, (n_scenarios,)
    pcc_indicator: np.ndarray         # [0, 1]
    ess_indicator: np.ndarray         # [0, 1]
    breakdown: CostBreakdown
    status: str = "optimal"

    def __post_init__(self) -> None:
        _coerce_arrays(self, "dispatch", "pcc_power", "pcc_load_split",
                       "pcc_gen_split", "ess_power", "converter_power",
                       "charge_power", "discharge_power", "stored_energy",
                       "daily_peak", "pcc_indicator", "ess_indicator")

    @property
    def state_of_charge(self) -> np.ndarray:
        """Stored energy as a fraction of the energy rating (zeros if 0)."""
        if self.ess_energy_rating <= 0.0:
            return np.zeros_like(self.stored_energy)
        return self.stored_energy / self.ess_energy_rating

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SizingSolution":
        data = dict(data)
        data["breakdown"] = CostBreakdown.from_dict(data["breakdown"])
        return cls(**{k: v for k, v in data.items()
                      if k in {f.name for f in dataclasses.fields(cls)}})


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ValidationIssue(_Serializable):
    """One violated invariant: which rule family, which field, and why."""

    category: str   # "dimension" | "invariant" | "assignment"
    field: str
    message: str


@dataclass(frozen=True)
class ValidatedConfig:
    """Bundle of all inputs that passed :func:`validate_params`."""

    grid: TimeGrid
    scenarios: ScenarioSet
    ess: EssParams
    gen: GenParams
    net: GridParams
    weight: Weight

    @property
    def n_steps(self) -> int:
        return self.grid.step_count

    @property
    def n_scenarios(self) -> int:
        return self.scenarios.n_scenarios


_CATEGORY_ERRORS = {
    "dimension": DimensionMismatch,
    "invariant": InvariantViolation,
    "assignment": AssignmentMatrixInvalid,
}


def _check_finite(issues: list, arr: np.ndarray, field: str) -> None:
    if not np.all(np.isfinite(arr)):
        issues.append(ValidationIssue("invariant", field, f"{field} contains non-finite values"))


def _check_scalar(issues: list, ok: bool, field: str, rule: str) -> None:
    if not ok:
        issues.append(ValidationIssue("invariant", field, rule))


def collect_issues(grid: TimeGrid, scen: ScenarioSet, ess: EssParams,
                   gen: GenParams, net: GridParams, weight: Weight) -> list[ValidationIssue]:
    """Check every documented invariant; return all violations found."""
    issues: list[ValidationIssue] = []

    # Time grid
    _check_scalar(issues, isinstance(grid.step_count, (int, np.integer)) and grid.step_count >= 1,
                  "grid.step_count", f"step_count must be an integer >= 1, got {grid.step_count!r}")
    _check_scalar(issues, grid.step_hours > 0, "grid.step_hours",
                  f"step_hours must be > 0, got {grid.step_hours!r}")
    _check_scalar(issues, np.isfinite(grid.billing_day_factor) and grid.billing_day_factor >= 0,
                  "grid.billing_day_factor",
                  f"billing_day_factor must be finite and >= 0, got {grid.billing_day_factor!r}")

    # Scenario matrix shapes
    matrices = {
        "scenarios.load": scen.load,
        "scenarios.irradiance": scen.irradiance,
        "scenarios.carbon_intensity": scen.carbon_intensity,
        "scenarios.tariff_consumption": scen.tariff_consumption,
        "scenarios.tariff_injection": scen.tariff_injection,
    }
    n_total = scen.typical_day_count * scen.scenarios_per_day
    expected = (grid.step_count, n_total) if grid.step_count >= 1 else scen.load.shape
    for name, arr in matrices.items():
        if arr.ndim != 2 or arr.shape != expected:
            issues.append(ValidationIssue(
                "dimension", name,
                f"{name} has shape {arr.shape}, expected {expected} "
                f"(step_count x typical_day_count*scenarios_per_day)"))
    if not any(i.category == "dimension" for i in issues):
        for name, arr in matrices.items():
            _check_finite(issues, arr, name)
        for name in ("load", "irradiance", "carbon_intensity"):
            arr = matrices[f"scenarios.{name}"]
            if np.all(np.isfinite(arr)) and np.any(arr < 0):
                issues.append(ValidationIssue("invariant", f"scenarios.{name}",
                                              f"{name} must be >= 0 everywhere"))

    # Assignment matrix
    t_m = scen.assignment
    if t_m.ndim != 2 or t_m.shape != (scen.typical_day_count, n_total):
        issues.append(ValidationIssue(
            "dimension", "scenarios.assignment",
            f"assignment has shape {t_m.shape}, expected "
            f"({scen.typical_day_count}, {n_total})"))
    else:
        if not np.all(np.isin(t_m, (0.0, 1.0))):
            issues.append(ValidationIssue("assignment", "scenarios.assignment",
                                          "assignment entries must be 0 or 1"))
        else:
            col = t_m.sum(axis=0)
            row = t_m.sum(axis=1)
            if not np.all(col == 1.0):
                bad = int(np.flatnonzero(col != 1.0)[0])
                issues.append(ValidationIssue(
                    "assignment", "scenarios.assignment",
                    f"each column must contain exactly one 1; column {bad} sums to {col[bad]:g}"))
            if not np.all(row == float(scen.scenarios_per_day)):
                bad = int(np.flatnonzero(row != float(scen.scenarios_per_day))[0])
                issues.append(ValidationIssue(
                    "assignment", "scenarios.assignment",
                    f"each row must sum to scenarios_per_day={scen.scenarios_per_day}; "
                    f"row {bad} sums to {row[bad]:g}"))

    # Labels
    if scen.labels is not None:
        if len(scen.labels) != scen.typical_day_count:
            issues.append(ValidationIssue(
                "dimension", "scenarios.labels",
                f"{len(scen.labels)} labels for {scen.typical_day_count} typical days"))
        for idx, lab in enumerate(scen.labels):
            if lab.season not in SEASONS or lab.day_type not in DAY_TYPES:
                issues.append(ValidationIssue(
                    "invariant", "scenarios.labels",
                    f"label {idx} has unknown season/day_type {lab.season!r}/{lab.day_type!r}"))

    # Battery
    _check_scalar(issues, 0.0 <= ess.soc_min <= ess.soc_start <= ess.soc_max <= 1.0,
                  "ess.soc", f"need 0 <= soc_min <= soc_start <= soc_max <= 1, got "
                  f"min={ess.soc_min!r} start={ess.soc_start!r} max={ess.soc_max!r}")
    _check_scalar(issues, 0.0 < ess.efficiency <= 1.0, "ess.efficiency",
                  f"efficiency must lie in (0, 1], got {ess.efficiency!r}")
    _check_scalar(issues, ess.p2e_ratio > 0, "ess.p2e_ratio",
                  f"p2e_ratio must be > 0, got {ess.p2e_ratio!r}")
    _check_scalar(issues, ess.cycle_life > 0, "ess.cycle_life",
                  f"cycle_life must be > 0, got {ess.cycle_life!r}")
    _check_scalar(issues, ess.calendar_life > 0, "ess.calendar_life",
                  f"calendar_life must be > 0, got {ess.calendar_life!r}")
    _check_scalar(issues, ess.lca_carbon >= 0, "ess.lca_carbon",
                  f"lca_carbon must be >= 0, got {ess.lca_carbon!r}")
    _check_scalar(issues, ess.rated_power_cap >= 0, "ess.rated_power_cap",
                  f"rated_power_cap must be >= 0, got {ess.rated_power_cap!r}")
    if ess.big_m is not None:
        _check_scalar(issues, ess.big_m >= ess.rated_power_cap, "ess.big_m",
                      f"big_m must be >= rated_power_cap, got {ess.big_m!r} < {ess.rated_power_cap!r}")

    # PV
    _check_scalar(issues, 0.0 <= gen.irradiance_to_power_ratio <= 1.0,
                  "gen.irradiance_to_power_ratio",
                  f"irradiance_to_power_ratio must lie in [0, 1], got {gen.irradiance_to_power_ratio!r}")
    _check_scalar(issues, gen.peak_irradiance > 0, "gen.peak_irradiance",
                  f"peak_irradiance must be > 0, got {gen.peak_irradiance!r}")
    _check_scalar(issues, gen.calendar_life > 0, "gen.calendar_life",
                  f"calendar_life must be > 0, got {gen.calendar_life!r}")
    _check_scalar(issues, gen.lca_carbon >= 0, "gen.lca_carbon",
                  f"lca_carbon must be >= 0, got {gen.lca_carbon!r}")

    # Grid connection
    _check_scalar(issues, net.pcc_rated > 0, "net.pcc_rated",
                  f"pcc_rated must be > 0, got {net.pcc_rated!r}")
    _check_scalar(issues, net.tracking_accuracy >= 0, "net.tracking_accuracy",
                  f"tracking_accuracy must be >= 0, got {net.tracking_accuracy!r}")
    _check_scalar(issues, net.buffer_tolerance >= 0, "net.buffer_tolerance",
                  f"buffer_tolerance must be >= 0, got {net.buffer_tolerance!r}")
    if net.big_m is not None:
        _check_scalar(issues, net.big_m >= net.pcc_rated, "net.big_m",
                      f"big_m must be >= pcc_rated, got {net.big_m!r} < {net.pcc_rated!r}")

    # Weight
    _check_scalar(issues, weight.carbon_per_currency >= 0, "weight.carbon_per_currency",
                  f"weight must be >= 0, got {weight.carbon_per_currency!r}")

    return issues


def validate_params(grid: TimeGrid, scen: ScenarioSet, ess: EssParams,
                    gen: GenParams, net: GridParams, weight: Weight) -> ValidatedConfig:
    """Validate every documented invariant and return the checked bundle.

    Pure: inputs are never mutated and identical inputs yield identical
    reports.  On failure raises the error class of the first issue found (in
    deterministic check order), carrying the complete issue list.
    """
    issues = collect_issues(grid, scen, ess, gen, net, weight)
    if issues:
        first = issues[0]
        err_cls = _CATEGORY_ERRORS[first.category]
        summary = "; ".join(f"{i.field}: {i.message}" for i in issues[:5])
        if len(issues) > 5:
            summary += f" (+{len(issues) - 5} more)"
        raise err_cls(summary, issues=tuple(issues))
    return ValidatedConfig(grid=grid, scenarios=scen, ess=ess, gen=gen,
                           net=net, weight=weight)
