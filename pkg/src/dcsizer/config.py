"""Declarative run configuration for the command-line tool.

A run is described by one INI-style file (sections of key=value pairs) or an
equivalent JSON object; every key is schema-checked so a typo fails loudly
instead of silently using a default.  The raw config bytes are hashed and the
hash is embedded in every output file, making runs auditable end to end.
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import dataclass, replace
from pathlib import Path

from .ingest import align, load_series, resample, scale_load, AlignedDataset
from .model import (EssParams, GenParams, GridParams, TimeGrid,
                    ValidatedConfig, Weight, validate_params)
from .scenarios import ScenarioBundle, generate_scenarios


class ConfigError(ValueError):
    """Malformed or incomplete run configuration."""


_QUANTITY_KEYS = (
    ("load", "load"),
    ("irradiance", "irradiance"),
    ("carbon_intensity", "carbon_intensity"),
    ("price_consumption", "price_cons"),
    ("price_injection", "price_inj"),
)

# section -> key -> (kind, required, default); kinds are converter names.
_SCHEMA: dict[str, dict[str, tuple[str, bool, object]]] = {
    "inputs": {
        "load": ("path", True, None),
        "irradiance": ("path", True, None),
        "carbon_intensity": ("path", True, None),
        "price_consumption": ("path", True, None),
        "price_injection": ("path", True, None),
        "load_rated_power": ("float_or_none", False, None),
    },
    "time": {
        "step_minutes": ("int", True, None),
        "timezone": ("str", False, "UTC"),
        "billing_day_factor": ("float", False, 1.0),
    },
    "scenarios": {
        "typical_days": ("int", True, None),
        "scenarios_per_day": ("int", True, None),
        "irradiance_clusters": ("int", False, 3),
        "stratify_weekdays": ("bool", False, True),
        "paired_sampling": ("bool", False, False),
    },
    "ess": {
        "p2e_ratio": ("float", True, None),
        "soc_min": ("float", True, None),
        "soc_max": ("float", True, None),
        "soc_start": ("float", True, None),
        "cycle_life": ("float", True, None),
        "calendar_life_hours": ("float", True, None),
        "lca_carbon_per_kwh": ("float", True, None),
        "cost_per_kwh": ("float", True, None),
        "cost_per_kw": ("float", True, None),
        "efficiency": ("float", True, None),
        "rated_power_cap": ("float", True, None),
        "big_m": ("float_or_none", False, None),
    },
    "pv": {
        "irradiance_to_power_ratio": ("float", True, None),
        "peak_irradiance": ("float", True, None),
        "calendar_life_hours": ("float", True, None),
        "lca_carbon_per_kw": ("float", True, None),
        "cost_per_kw": ("float", True, None),
    },
    "grid": {
        "pcc_rated": ("float", True, None),
        "power_tariff": ("float", True, None),
        "tracking_accuracy": ("float", True, None),
        "buffer_tolerance": ("float", False, 0.0),
        "big_m": ("float_or_none", False, None),
    },
    "objective": {
        "weight": ("float", False, 0.0),
        "weights": ("float_list_or_none", False, None),
        "ratios": ("float_list_or_none", False, None),
    },
    "run": {
        "seed": ("int", True, None),
        "outdir": ("str", False, "out"),
        "exact": ("bool", False, False),
        "include_lca": ("bool", False, True),
        "figures": ("bool", False, True),
    },
}

_TRUE = frozenset({"1", "true", "yes", "on"})
_FALSE = frozenset({"0", "false", "no", "off"})


@dataclass(frozen=True)
class RunConfig:
    """Everything one run needs, plus the hash of the file that defined it."""

    config_path: Path
    config_hash: str
    input_paths: dict[str, Path]
    load_rated_power: float | None
    step_minutes: int
    timezone: str
    billing_day_factor: float
    typical_days: int
    scenarios_per_day: int
    irradiance_clusters: int
    stratify_weekdays: bool
    paired_sampling: bool
    ess: EssParams
    gen: GenParams
    net: GridParams
    weight: float
    weights: tuple[float, ...] | None
    ratios: tuple[float, ...] | None
    seed: int
    outdir: Path
    exact: bool
    include_lca: bool
    figures: bool

    @property
    def step_hours(self) -> float:
        return self.step_minutes / 60.0


def config_digest(path) -> str:
    """SHA-256 hex digest of the raw config file bytes."""
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _convert(section: str, key: str, kind: str, raw):
    where = f"[{section}] {key}"
    try:
        if kind == "str" or kind == "path":
            return str(raw)
        if kind == "int":
            if isinstance(raw, bool):
                raise ValueError
            if isinstance(raw, int):
                return raw
            if isinstance(raw, float) and raw.is_integer():
                return int(raw)
            return int(str(raw).strip())
        if kind in ("float", "float_or_none"):
            if isinstance(raw, bool):
                raise ValueError
            return float(raw) if not isinstance(raw, str) else float(raw.strip())
        if kind == "bool":
            if isinstance(raw, bool):
                return raw
            text = str(raw).strip().lower()
            if text in _TRUE:
                return True
            if text in _FALSE:
                return False
            raise ValueError
        if kind == "float_list_or_none":
            if isinstance(raw, str):
                parts = [p for p in (s.strip() for s in raw.split(",")) if p]
            else:
                parts = list(raw)
            if not parts:
                raise ConfigError(f"{where}: list must be non-empty")
            return tuple(float(p) for p in parts)
    except ConfigError:
        raise
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected {kind.replace('_', ' ')}, "
                          f"got {raw!r}") from None
    raise AssertionError(f"unknown kind {kind}")


def _read_sections(path: Path) -> dict[str, dict[str, object]]:
    if path.suffix.lower() == ".json":
        try:
            payload = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(payload, dict):
            raise ConfigError(f"{path}: top level must be an object of sections")
        sections: dict[str, dict[str, object]] = {}
        for name, body in payload.items():
            if not isinstance(body, dict):
                raise ConfigError(f"{path}: section {name!r} must be an object")
            sections[str(name)] = {str(k): v for k, v in body.items()}
        return sections
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as handle:
            parser.read_file(handle)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return {name: dict(parser.items(name)) for name in parser.sections()}


def load_run_config(path) -> RunConfig:
    """Parse and schema-check a run configuration file.

    Raises:
        ConfigError: unknown section/key, missing required key, or a value
            that does not convert to its declared type.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    digest = config_digest(path)
    sections = _read_sections(path)

    unknown_sections = sorted(set(sections) - set(_SCHEMA))
    if unknown_sections:
        raise ConfigError(f"unknown config section(s): {', '.join(unknown_sections)}")
    values: dict[str, dict[str, object]] = {}
    for section, keys in _SCHEMA.items():
        body = sections.get(section, {})
        unknown = sorted(set(body) - set(keys))
        if unknown:
            raise ConfigError(f"[{section}]: unknown key(s): {', '.join(unknown)}")
        parsed: dict[str, object] = {}
        for key, (kind, required, default) in keys.items():
            if key in body:
                parsed[key] = _convert(section, key, kind, body[key])
            elif required:
                raise ConfigError(f"[{section}] {key}: required key missing")
            else:
                parsed[key] = default
        values[section] = parsed

    base = path.parent
    inputs = values["inputs"]
    input_paths = {config_key: (base / str(inputs[config_key])).resolve()
                   for config_key, _ in _QUANTITY_KEYS}
    ess_v = values["ess"]
    ess = EssParams(
        p2e_ratio=ess_v["p2e_ratio"], soc_min=ess_v["soc_min"],
        soc_max=ess_v["soc_max"], soc_start=ess_v["soc_start"],
        cycle_life=ess_v["cycle_life"], calendar_life=ess_v["calendar_life_hours"],
        lca_carbon=ess_v["lca_carbon_per_kwh"], cost_energy=ess_v["cost_per_kwh"],
        cost_power=ess_v["cost_per_kw"], efficiency=ess_v["efficiency"],
        rated_power_cap=ess_v["rated_power_cap"], big_m=ess_v["big_m"])
    pv_v = values["pv"]
    gen = GenParams(
        irradiance_to_power_ratio=pv_v["irradiance_to_power_ratio"],
        peak_irradiance=pv_v["peak_irradiance"],
        calendar_life=pv_v["calendar_life_hours"],
        lca_carbon=pv_v["lca_carbon_per_kw"], cost_power=pv_v["cost_per_kw"])
    grid_v = values["grid"]
    net = GridParams(
        pcc_rated=grid_v["pcc_rated"], power_tariff=grid_v["power_tariff"],
        tracking_accuracy=grid_v["tracking_accuracy"],
        buffer_tolerance=grid_v["buffer_tolerance"], big_m=grid_v["big_m"])

    time_v, scen_v, obj_v, run_v = (values["time"], values["scenarios"],
                                    values["objective"], values["run"])
    if time_v["step_minutes"] <= 0 or 1440 % time_v["step_minutes"] != 0:
        raise ConfigError(f"[time] step_minutes: {time_v['step_minutes']} must "
                          f"divide 1440")
    outdir = Path(str(run_v["outdir"]))
    if not outdir.is_absolute():
        outdir = base / outdir
    return RunConfig(
        config_path=path, config_hash=digest, input_paths=input_paths,
        load_rated_power=inputs["load_rated_power"],
        step_minutes=time_v["step_minutes"], timezone=str(time_v["timezone"]),
        billing_day_factor=time_v["billing_day_factor"],
        typical_days=scen_v["typical_days"],
        scenarios_per_day=scen_v["scenarios_per_day"],
        irradiance_clusters=scen_v["irradiance_clusters"],
        stratify_weekdays=scen_v["stratify_weekdays"],
        paired_sampling=scen_v["paired_sampling"],
        ess=ess, gen=gen, net=net,
        weight=obj_v["weight"], weights=obj_v["weights"], ratios=obj_v["ratios"],
        seed=run_v["seed"], outdir=outdir, exact=run_v["exact"],
        include_lca=run_v["include_lca"], figures=run_v["figures"])


def with_overrides(cfg: RunConfig, seed: int | None = None,
                   outdir=None, weights=None, ratios=None,
                   exact: bool | None = None,
                   figures: bool | None = None) -> RunConfig:
    """Apply command-line overrides on top of a parsed config."""
    changes: dict[str, object] = {}
    if seed is not None:
        changes["seed"] = seed
    if outdir is not None:
        changes["outdir"] = Path(outdir)
    if weights is not None:
        changes["weights"] = tuple(float(w) for w in weights)
    if ratios is not None:
        changes["ratios"] = tuple(float(r) for r in ratios)
    if exact is not None:
        changes["exact"] = exact
    if figures is not None:
        changes["figures"] = figures
    return replace(cfg, **changes) if changes else cfg


# ---------------------------------------------------------------------------
# Pipeline: config file -> validated scenario problem
# ---------------------------------------------------------------------------

def load_dataset(cfg: RunConfig) -> AlignedDataset:
    """Read, resample, scale and align the five input series."""
    step_hours = cfg.step_hours
    prepared = []
    for config_key, quantity in _QUANTITY_KEYS:
        series = load_series(cfg.input_paths[config_key], quantity)
        series = resample(series, step_hours)
        if quantity == "load" and cfg.load_rated_power is not None:
            series = scale_load(series, cfg.load_rated_power)
        prepared.append(series)
    return align(prepared, step_hours, tz=cfg.timezone)


def build_problem_inputs(cfg: RunConfig, dataset: AlignedDataset | None = None
                         ) -> tuple[ValidatedConfig, ScenarioBundle]:
    """Dataset -> scenarios -> validated parameter set, all from one config."""
    if dataset is None:
        dataset = load_dataset(cfg)
    bundle = generate_scenarios(
        dataset, n_td=cfg.typical_days, n_sc=cfg.scenarios_per_day,
        k=cfg.irradiance_clusters, seed=cfg.seed,
        stratify_weekdays=cfg.stratify_weekdays,
        paired_sampling=cfg.paired_sampling)
    grid = TimeGrid(step_count=dataset.samples_per_day, step_hours=cfg.step_hours,
                    billing_day_factor=cfg.billing_day_factor)
    validated = validate_params(grid, bundle.scenario_set, cfg.ess, cfg.gen,
                                cfg.net, Weight(carbon_per_currency=cfg.weight))
    return validated, bundle
