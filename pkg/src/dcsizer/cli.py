"""Command-line entry point: validate, size, sweep, baseline.

Exit codes: 0 success, 1 usage, 2 validation (config, inputs, parameters),
3 infeasible sizing program, 4 solver backend failure.  Outputs embed the
config hash and tool version; reruns with identical config bytes and input
files are byte-identical (solver wall times never reach any output file).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .analysis import (Ecdf, baseline, daily_emission_stats, emissions_ecdf,
                       json_default, sweep_p2e, sweep_weight,
                       write_ratio_sweep, write_weight_sweep)
from .config import (ConfigError, RunConfig, build_problem_inputs,
                     load_run_config, with_overrides)
from .ingest import IngestError
from .lp import SolverError
from .model import ValidationError
from .scenarios import ScenarioError, TypicalDayPlan
from .sizing import (Infeasible, SizingError, Unbounded, check_exclusivity,
                     check_physics, default_exclusivity_tol, size)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_INFEASIBLE = 3
EXIT_BACKEND = 4

SCHEMA_VERSION = 1


class UsageError(Exception):
    """Bad command line; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # keep argparse from sys.exit(2) on usage errors
        raise UsageError(message)


def _build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH",
                        help="run configuration file (INI sections or JSON)")
    common.add_argument("--seed", type=int, default=None,
                        help="override the config's random seed")
    common.add_argument("--out", default=None, metavar="DIR",
                        help="override the output directory")
    common.add_argument("--weights", default=None, metavar="W1,W2,...",
                        help="override the weight list (gCO2eq per currency unit)")
    common.add_argument("--ratios", default=None, metavar="R1,R2,...",
                        help="override the power-to-energy ratio list")
    common.add_argument("--exact", action="store_true", default=None,
                        help="branch-and-bound on the split indicators "
                             "(tiny instances only)")
    common.add_argument("--no-figures", action="store_true", default=None,
                        help="skip figure rendering")

    parser = _Parser(prog="dcsizer",
                     description="Carbon- and cost-aware battery/PV sizing "
                                 "for dispatchable data centers")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common],
                   help="parse config and inputs, check every parameter")
    sub.add_parser("size", parents=[common],
                   help="solve the sizing program for the configured weight")
    sub.add_parser("sweep", parents=[common],
                   help="solve once per weight and/or power-to-energy ratio")
    sub.add_parser("baseline", parents=[common],
                   help="cost the data center alone, without storage or PV")
    return parser


def _parse_float_list(text: str | None, flag: str) -> tuple[float, ...] | None:
    if text is None:
        return None
    parts = [p for p in (s.strip() for s in text.split(",")) if p]
    if not parts:
        raise UsageError(f"{flag} needs at least one value")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise UsageError(f"{flag}: could not parse {text!r} as numbers") from None


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------

def _stamp(cfg: RunConfig) -> dict:
    return {"schema_version": SCHEMA_VERSION, "tool_version": __version__,
            "config_hash": cfg.config_hash, "seed": cfg.seed}


def _write_json(path: Path, payload: dict) -> Path:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True, default=json_default)
        handle.write("\n")
    return path


def _write_csv(path: Path, cfg: RunConfig, header: Sequence[str],
               rows) -> Path:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(f"# tool_version={__version__}\n")
        handle.write(f"# config_hash={cfg.config_hash}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


def _fmt(value) -> str:
    return format(float(value), ".10g")


def _typical_day_names(plan: TypicalDayPlan) -> list[str]:
    return [f"td{j:02d}_{e.season}_{e.day_type}_c{e.irradiance_cluster}"
            for j, e in enumerate(plan.entries)]


def _png_metadata(cfg: RunConfig) -> dict:
    return {"Software": f"dcsizer {__version__}",
            "Comment": f"config_hash={cfg.config_hash}"}


def _note(path: Path) -> None:
    print(f"wrote {path}")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_validate(cfg: RunConfig) -> int:
    validated, bundle = build_problem_inputs(cfg)
    scen = validated.scenarios
    print(f"config {cfg.config_path} (sha256 {cfg.config_hash[:12]})")
    print(f"aligned days: {len(bundle.day_labels)}")
    print(f"scenario matrix: {scen.n_steps} steps x {scen.n_scenarios} scenarios "
          f"({scen.typical_day_count} typical days x {scen.scenarios_per_day} draws)")
    print("validation: ok")
    return EXIT_OK


def cmd_size(cfg: RunConfig) -> int:
    validated, bundle = build_problem_inputs(cfg)
    scen, grid = validated.scenarios, validated.grid
    solution, report, _ = size(validated, exact=cfg.exact)
    physics = check_physics(solution, scen, grid, validated.ess, validated.gen,
                            validated.net)
    exclusivity = check_exclusivity(solution,
                                    default_exclusivity_tol(validated.net))
    stats = daily_emission_stats(scen, grid, solution, validated.ess,
                                 validated.gen, include_lca=cfg.include_lca)
    base_stats = daily_emission_stats(scen, grid)

    outdir = cfg.outdir
    outdir.mkdir(parents=True, exist_ok=True)
    names = _typical_day_names(bundle.plan)
    br = solution.breakdown
    _note(_write_json(outdir / "solution.json", {
        **_stamp(cfg),
        "status": solution.status,
        "ratings": {"ess_energy_kwh": solution.ess_energy_rating,
                    "ess_power_kw": solution.ess_power_rating,
                    "pv_kw": solution.pv_rating},
        "breakdown": br.to_dict(),
        "solver": {"status": report.status, "objective": report.objective,
                   "iterations": report.iterations,
                   "max_residual": report.max_residual},
        "checks": {"physics_passed": physics.passed,
                   "exclusivity_passed": exclusivity.passed},
        "daily_emissions": {"mean": stats.mean, "std": stats.std,
                            "include_lca": stats.include_lca},
        "typical_days": names,
    }))
    _note(_write_json(outdir / "physics.json", {
        **_stamp(cfg), "passed": physics.passed, "tolerance": physics.tolerance,
        "scale": physics.scale, "residuals": physics.residuals,
    }))
    _note(_write_json(outdir / "exclusivity.json", {
        **_stamp(cfg), "passed": exclusivity.passed,
        "tolerance": exclusivity.tolerance,
        "max_import_export_overlap": exclusivity.max_import_export_overlap,
        "max_charge_discharge_overlap": exclusivity.max_charge_discharge_overlap,
        "offenders": [list(o) for o in exclusivity.offenders],
    }))

    hours = np.arange(grid.step_count) * grid.step_hours
    _note(_write_csv(outdir / "dispatch.csv", cfg, ["step", "hour", *names],
                     ([k, _fmt(hours[k]), *(_fmt(v) for v in solution.dispatch[k])]
                      for k in range(grid.step_count))))

    td_of = scen.assignment.argmax(axis=0)
    def _trajectory_rows():
        for k in range(grid.step_count):
            for m in range(scen.n_scenarios):
                yield [k, m, names[td_of[m]],
                       _fmt(scen.load[k, m]),
                       _fmt(solution.pcc_power[k, m]),
                       _fmt(solution.pcc_load_split[k, m]),
                       _fmt(solution.pcc_gen_split[k, m]),
                       _fmt(solution.ess_power[k, m]),
                       _fmt(solution.charge_power[k, m]),
                       _fmt(solution.discharge_power[k, m]),
                       _fmt(solution.converter_power[k, m]),
                       _fmt(solution.stored_energy[k, m]),
                       _fmt(solution.stored_energy[k + 1, m]),
                       _fmt(scen.carbon_intensity[k, m])]
    _note(_write_csv(outdir / "trajectories.csv", cfg,
                     ["step", "scenario", "typical_day", "load_kw", "pcc_kw",
                      "pcc_import_kw", "pcc_export_kw", "ess_kw", "charge_kw",
                      "discharge_kw", "converter_kw", "stored_start_kwh",
                      "stored_end_kwh", "carbon_intensity_g_per_kwh"],
                     _trajectory_rows()))

    if cfg.figures:
        from . import report as figures
        figdir = outdir / "figures"
        figdir.mkdir(parents=True, exist_ok=True)
        meta = _png_metadata(cfg)
        _note(figures.plot_dispatch(solution, scen, grid, names,
                                    figdir / "dispatch.png", metadata=meta))
        _note(figures.plot_ecdf(emissions_ecdf(stats.per_scenario),
                                figdir / "emissions_ecdf.png",
                                reference=emissions_ecdf(base_stats.per_scenario),
                                metadata=meta))

    print(f"status: {solution.status}")
    print(f"objective: {br.objective:.6g} gCO2eq/day "
          f"(carbon {br.carbon_total:.6g}, financial {br.financial_total:.6g})")
    print(f"ratings: ess {solution.ess_energy_rating:.6g} kWh / "
          f"{solution.ess_power_rating:.6g} kW, pv {solution.pv_rating:.6g} kW")
    print(f"physics check: {'pass' if physics.passed else 'FAIL'} "
          f"(worst {physics.worst[0]} = {physics.worst[1]:.3g})")
    print(f"exclusivity check: {'pass' if exclusivity.passed else 'FAIL'}")
    if not (physics.passed and exclusivity.passed):
        print("post-solve verification failed; treat the answer as unreliable",
              file=sys.stderr)
        return EXIT_BACKEND
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    if cfg.weights is None and cfg.ratios is None:
        raise UsageError("sweep needs a weight list and/or a ratio list "
                         "(--weights/--ratios or [objective] weights/ratios)")
    validated, _ = build_problem_inputs(cfg)
    cfg.outdir.mkdir(parents=True, exist_ok=True)
    meta = _png_metadata(cfg)
    statuses: list[str] = []
    if cfg.weights is not None:
        result = sweep_weight(validated, cfg.weights)
        statuses += [p.status for p in result.points]
        for path in write_weight_sweep(result, cfg.outdir, cfg.config_hash,
                                       cfg.seed, __version__):
            _note(path)
        if cfg.figures:
            from . import report as figures
            _note(figures.plot_weight_sweep(
                result, cfg.outdir / "figures_weight_sweep.png", metadata=meta))
        for p in result.points:
            extra = (f"objective {p.breakdown.objective:.6g}"
                     if p.breakdown else p.message)
            print(f"weight {p.weight:g}: {p.status} {extra}")
    if cfg.ratios is not None:
        result = sweep_p2e(validated, cfg.ratios)
        statuses += [p.status for p in result.points]
        for path in write_ratio_sweep(result, cfg.outdir, cfg.config_hash,
                                      cfg.seed, __version__):
            _note(path)
        if cfg.figures:
            from . import report as figures
            _note(figures.plot_ratio_sweep(
                result, cfg.outdir / "figures_ratio_sweep.png", metadata=meta))
        for p in result.points:
            extra = (f"objective {p.breakdown.objective:.6g}"
                     if p.breakdown else p.message)
            print(f"ratio {p.ratio:g}: {p.status} {extra}")
        if result.best_ratio is not None:
            print(f"best ratio: {result.best_ratio:g}")
    if any(s == "optimal" for s in statuses):
        return EXIT_OK
    if any(s == "infeasible" for s in statuses):
        return EXIT_INFEASIBLE
    return EXIT_BACKEND


def cmd_baseline(cfg: RunConfig) -> int:
    validated, _ = build_problem_inputs(cfg)
    scen, grid = validated.scenarios, validated.grid
    br = baseline(scen, grid, validated.net,
                  weight=validated.weight.carbon_per_currency)
    stats = daily_emission_stats(scen, grid)
    ecdf = emissions_ecdf(stats.per_scenario)
    cfg.outdir.mkdir(parents=True, exist_ok=True)
    _note(_write_json(cfg.outdir / "baseline.json", {
        **_stamp(cfg),
        "breakdown": br.to_dict(),
        "daily_emissions": {"mean": stats.mean, "std": stats.std,
                            "per_scenario": stats.per_scenario.tolist()},
    }))
    if cfg.figures:
        from . import report as figures
        figdir = cfg.outdir / "figures"
        figdir.mkdir(parents=True, exist_ok=True)
        _note(figures.plot_ecdf(ecdf, figdir / "baseline_ecdf.png",
                                title="Baseline daily emissions ECDF",
                                metadata=_png_metadata(cfg)))
    print(f"baseline objective: {br.objective:.6g} gCO2eq/day "
          f"(carbon {br.carbon_total:.6g}, financial {br.financial_total:.6g})")
    return EXIT_OK


_COMMANDS = {"validate": cmd_validate, "size": cmd_size, "sweep": cmd_sweep,
             "baseline": cmd_baseline}


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        weights = _parse_float_list(args.weights, "--weights")
        ratios = _parse_float_list(args.ratios, "--ratios")
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        cfg = load_run_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    cfg = with_overrides(cfg, seed=args.seed, outdir=args.out, weights=weights,
                         ratios=ratios,
                         exact=True if args.exact else None,
                         figures=False if args.no_figures else None)

    try:
        return _COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationError as exc:
        print("parameter validation failed:", file=sys.stderr)
        for issue in exc.issues:
            print(f"  [{issue.category}] {issue.field}: {issue.message}",
                  file=sys.stderr)
        return EXIT_VALIDATION
    except Unbounded as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ConfigError, IngestError, ScenarioError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (SolverError, SizingError) as exc:
        print(f"backend failure: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except ValueError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
