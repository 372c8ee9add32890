"""Carbon- and cost-aware battery and PV sizing for dispatchable data centers.

The package sizes a battery system and a PV plant for an existing data
center so that its grid profile can be committed a day ahead and tracked
within a configured accuracy across Monte-Carlo scenarios of typical days,
minimizing a weighted sum of operating carbon, embodied carbon, and cost.

Typical use::

    from dcsizer import config, sizing

    cfg = config.load_run_config("run.ini")
    validated, bundle = config.build_problem_inputs(cfg)
    solution, report, _ = sizing.size(validated)

The command-line tool (``dcsizer validate|size|sweep|baseline``) wraps the
same pipeline and adds delimited outputs plus rendered figures.
"""

from .analysis import (ConvergenceResult, Ecdf, EmissionStats, ParetoPoint,
                       RatioPoint, RatioSweepResult, WeightSweepResult,
                       baseline, convergence_study, daily_emission_stats,
                       emissions_ecdf, sweep_p2e, sweep_weight)
from .config import ConfigError, RunConfig, build_problem_inputs, load_run_config
from .ingest import AlignedDataset, RawTimeSeries, align, load_series, resample, scale_load
from .model import (CostBreakdown, DayLabel, EssParams, GenParams, GridParams,
                    ScenarioSet, SizingSolution, TimeGrid, ValidatedConfig,
                    ValidationError, Weight, validate_params)
from .scenarios import (ScenarioBundle, TypicalDayPlan, build_assignment,
                        generate_scenarios, kmeans_irradiance, label_days,
                        sample_scenarios, select_typical_days)
from .sizing import (BuildOptions, ExclusivityReport, Infeasible, PhysicsReport,
                     SizingError, SolverReport, Unbounded, build_problem,
                     check_exclusivity, check_physics, compute_breakdown,
                     size, solve)

__version__ = "0.1.0"

__all__ = [
    "AlignedDataset", "BuildOptions", "ConfigError", "ConvergenceResult",
    "CostBreakdown", "DayLabel", "Ecdf", "EmissionStats", "EssParams",
    "ExclusivityReport", "GenParams", "GridParams", "Infeasible",
    "ParetoPoint", "PhysicsReport", "RatioPoint", "RatioSweepResult",
    "RawTimeSeries", "RunConfig", "ScenarioBundle", "ScenarioSet",
    "SizingError", "SizingSolution", "SolverReport", "TimeGrid",
    "TypicalDayPlan", "Unbounded", "ValidatedConfig", "ValidationError",
    "Weight", "WeightSweepResult", "align", "baseline", "build_assignment",
    "build_problem", "build_problem_inputs", "check_exclusivity",
    "check_physics", "compute_breakdown", "convergence_study",
    "daily_emission_stats", "emissions_ecdf", "generate_scenarios",
    "kmeans_irradiance", "label_days", "load_run_config", "load_series",
    "resample", "sample_scenarios", "scale_load", "select_typical_days",
    "size", "solve", "sweep_p2e", "sweep_weight", "validate_params",
    "__version__",
]
