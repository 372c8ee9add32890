"""Scenario generation: labeling, clustering, selection, sampling.

Historical days are labeled by meteorological season (DJF/MAM/JJA/SON) and
weekday/weekend, then clustered within each season by daily irradiance
surface energy (1-D K-Means).  Typical days are selected so cluster
populations keep their ratios (largest-remainder rounding), and each typical
day receives ``scenarios_per_day`` Monte-Carlo draws of matching historical
days, independently per stochastic quantity unless ``paired_sampling`` ties
load, carbon intensity and tariffs to a common draw.

Every operation is deterministic given its seed; sub-seeds are spawned from a
single SeedSequence so results never depend on call interleaving.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .ingest import QUANTITIES, AlignedDataset
from .model import DAY_TYPES, SEASONS, DayLabel, ScenarioSet

_MONTH_SEASON = {12: "winter", 1: "winter", 2: "winter",
                 3: "spring", 4: "spring", 5: "spring",
                 6: "summer", 7: "summer", 8: "summer",
                 9: "autumn", 10: "autumn", 11: "autumn"}

_KMEANS_MAX_ITER = 100


class ScenarioError(ValueError):
    """Base class for scenario-generation failures."""


class InsufficientDays(ScenarioError):
    """A season holds fewer days than requested clusters."""


class InfeasibleStratification(ScenarioError):
    """Typical-day selection cannot honor the stratification rules."""


class EmptyPool(ScenarioError):
    """No historical day matches a typical day's labels."""


class DegenerateClustersWarning(UserWarning):
    """All days of a season share one surface energy; extra clusters stay empty."""


class ReplacementSamplingWarning(UserWarning):
    """A pool smaller than scenarios_per_day was sampled with replacement."""


# ---------------------------------------------------------------------------
# Labeling
# ---------------------------------------------------------------------------

def label_days(dataset: AlignedDataset, tz: str | None = None) -> tuple[DayLabel, ...]:
    """Label every dataset day with (season, day_type); cluster stays unset.

    The dataset's days were already grouped into calendar dates in the
    alignment timezone, so ``tz`` may only restate that zone.
    """
    if not dataset.dates:
        raise ValueError("dataset has no days")
    if tz is not None and tz != dataset.timezone:
        raise ValueError(
            f"labels must use the alignment timezone {dataset.timezone!r}; "
            f"re-align the dataset to label in {tz!r}")
    return tuple(
        DayLabel(season=_MONTH_SEASON[d.month],
                 day_type="weekend" if d.weekday() >= 5 else "weekday")
        for d in dataset.dates
    )


# ---------------------------------------------------------------------------
# Clustering
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ClusterResult:
    """Per-day irradiance cluster ids plus per-season diagnostics.

    ``clusters[d]`` indexes ascending surface-energy centroids within day
    d's season (0 = dimmest).  ``inertia_history`` records the K-Means
    objective after each update step; it never increases.
    """

    clusters: np.ndarray                      # int, one entry per dataset day
    centroids: dict[str, np.ndarray]          # season -> (k,) ascending
    inertia_history: dict[str, np.ndarray]    # season -> per-iteration objective
    k: int


def surface_energy(dataset: AlignedDataset) -> np.ndarray:
    """Daily irradiance surface energy, Wh/m^2 per day."""
    return dataset.step_hours * dataset.quantity("irradiance").sum(axis=1)


def _kmeans_1d(values: np.ndarray, k: int, rng: np.random.Generator
               ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """1-D K-Means: k-means++ init, stop when assignments stabilize.

    Returns (assignments reindexed by ascending centroid, sorted centroids,
    inertia history).  Empty clusters are reseeded at the point farthest from
    its current centroid; exactly identical values collapse to cluster 0.
    """
    if np.ptp(values) == 0.0:
        warnings.warn("all days share one surface energy; clusters beyond 0 stay empty",
                      DegenerateClustersWarning, stacklevel=3)
        return (np.zeros(values.size, dtype=np.intp),
                np.full(k, values[0], dtype=float), np.zeros(1))

    centroids = np.empty(k)
    centroids[0] = values[rng.integers(values.size)]
    for c in range(1, k):
        d2 = np.min((values[:, None] - centroids[None, :c]) ** 2, axis=1)
        total = d2.sum()
        if total <= 0.0:
            centroids[c:] = values[rng.integers(values.size, size=k - c)]
            break
        centroids[c] = values[rng.choice(values.size, p=d2 / total)]

    assign = None
    history: list[float] = []
    for _ in range(_KMEANS_MAX_ITER):
        new_assign = np.abs(values[:, None] - centroids[None, :]).argmin(axis=1)
        for c in range(k):
            if not np.any(new_assign == c):
                own_dist = np.abs(values - centroids[new_assign])
                farthest = int(own_dist.argmax())
                if own_dist[farthest] == 0.0:
                    continue    # nothing left to split off
                new_assign[farthest] = c
                centroids[c] = values[farthest]
        for c in range(k):
            members = values[new_assign == c]
            if members.size:
                centroids[c] = members.mean()
        history.append(float(((values - centroids[new_assign]) ** 2).sum()))
        if assign is not None and np.array_equal(new_assign, assign):
            break
        assign = new_assign

    order = np.argsort(centroids, kind="stable")
    remap = np.empty(k, dtype=np.intp)
    remap[order] = np.arange(k)
    return remap[assign], centroids[order], np.asarray(history)


def kmeans_irradiance(dataset: AlignedDataset, k: int = 3, seed: int = 0) -> ClusterResult:
    """Cluster each season's days by daily surface energy.

    Raises:
        InsufficientDays: a season has fewer than k days.
    """
    if k < 1:
        raise ValueError(f"cluster count must be >= 1, got {k}")
    labels = label_days(dataset)
    energies = surface_energy(dataset)
    clusters = np.full(dataset.n_days, -1, dtype=np.intp)
    centroids: dict[str, np.ndarray] = {}
    histories: dict[str, np.ndarray] = {}
    children = np.random.SeedSequence(seed).spawn(len(SEASONS))
    for season, child in zip(SEASONS, children):
        members = np.flatnonzero([lab.season == season for lab in labels])
        if members.size == 0:
            continue
        if members.size < k:
            raise InsufficientDays(
                f"{season}: {members.size} day(s) but k={k} clusters requested")
        rng = np.random.default_rng(child)
        assign, cents, history = _kmeans_1d(energies[members], k, rng)
        clusters[members] = assign
        centroids[season] = cents
        histories[season] = history
    return ClusterResult(clusters=clusters, centroids=centroids,
                         inertia_history=histories, k=k)


def apply_clusters(labels: Sequence[DayLabel], result: ClusterResult) -> tuple[DayLabel, ...]:
    """Attach cluster ids to day labels."""
    if len(labels) != result.clusters.size:
        raise ValueError(f"{len(labels)} labels vs {result.clusters.size} cluster entries")
    return tuple(replace(lab, irradiance_cluster=int(c))
                 for lab, c in zip(labels, result.clusters))


# ---------------------------------------------------------------------------
# Typical-day selection
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TypicalDayEntry:
    """One typical day: its labels plus (after sampling) the drawn day indices."""

    season: str
    day_type: str
    irradiance_cluster: int
    samples: dict[str, tuple[int, ...]] | None = None

    @property
    def label(self) -> DayLabel:
        return DayLabel(self.season, self.day_type, self.irradiance_cluster)


@dataclass(frozen=True)
class TypicalDayPlan:
    """The ordered list of typical days driving scenario assembly."""

    entries: tuple[TypicalDayEntry, ...]

    @property
    def n_typical_days(self) -> int:
        return len(self.entries)


def largest_remainder(populations: Sequence[float], total: int) -> np.ndarray:
    """Apportion ``total`` slots proportionally to populations.

    Floors the exact quotas, then hands leftover slots to the largest
    remainders (ties to the lower index).  Guarantees
    |count - exact quota| < 1 for every entry.
    """
    populations = np.asarray(populations, dtype=float)
    if populations.sum() <= 0:
        raise ValueError("populations must have a positive sum")
    quotas = populations / populations.sum() * total
    counts = np.floor(quotas).astype(int)
    leftover = total - int(counts.sum())
    order = np.lexsort((np.arange(quotas.size), -(quotas - counts)))
    counts[order[:leftover]] += 1
    return counts


def select_typical_days(labels: Sequence[DayLabel], n_td: int, seed: int = 0,
                        stratify_weekdays: bool = True) -> TypicalDayPlan:
    """Pick ``n_td`` typical days per season, preserving cluster ratios.

    With ``stratify_weekdays`` (the default), ``n_td`` must be a multiple of
    7 and each weekday receives ``n_td/7`` typical days; otherwise the
    weekday/weekend split follows the season's own population by largest
    remainder.  Cluster ids are apportioned by largest remainder over the
    season's cluster populations and matched to day slots in a seeded random
    order.

    Raises:
        InfeasibleStratification: missing season, unlabeled clusters, or
            ``n_td`` incompatible with the stratification rule.
    """
    if n_td < 1:
        raise InfeasibleStratification(f"need at least 1 typical day per season, got {n_td}")
    if stratify_weekdays and n_td % 7 != 0:
        raise InfeasibleStratification(
            f"day-of-week stratification needs a multiple of 7 typical days per "
            f"season, got {n_td}")
    if any(lab.irradiance_cluster is None for lab in labels):
        raise InfeasibleStratification("labels carry no irradiance clusters; cluster first")

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    entries: list[TypicalDayEntry] = []
    for season in SEASONS:
        season_labels = [lab for lab in labels if lab.season == season]
        if not season_labels:
            raise InfeasibleStratification(f"no historical days in {season}")

        k = max(lab.irradiance_cluster for lab in season_labels) + 1
        cluster_pop = [sum(lab.irradiance_cluster == c for lab in season_labels)
                       for c in range(k)]
        cluster_counts = largest_remainder(cluster_pop, n_td)
        cluster_ids = np.repeat(np.arange(k), cluster_counts)
        cluster_ids = rng.permutation(cluster_ids)

        if stratify_weekdays:
            # n_td/7 slots per weekday, Monday..Sunday.
            day_types = ["weekend" if wd >= 5 else "weekday"
                         for wd in range(7) for _ in range(n_td // 7)]
        else:
            type_pop = [sum(lab.day_type == t for lab in season_labels) for t in DAY_TYPES]
            type_counts = largest_remainder(type_pop, n_td)
            day_types = [t for t, c in zip(DAY_TYPES, type_counts) for _ in range(c)]

        entries.extend(
            TypicalDayEntry(season=season, day_type=day_type,
                            irradiance_cluster=int(cluster))
            for day_type, cluster in zip(day_types, cluster_ids))
    return TypicalDayPlan(entries=tuple(entries))


# ---------------------------------------------------------------------------
# Sampling and assembly
# ---------------------------------------------------------------------------

def build_assignment(n_tp: int, n_sc: int) -> np.ndarray:
    """Binary (n_tp, n_tp*n_sc) matrix mapping scenarios to typical days.

    Scenarios are ordered typical-day-major, so the matrix is block
    diagonal: row j holds ones exactly in columns j*n_sc .. (j+1)*n_sc - 1.
    """
    if n_tp < 1 or n_sc < 1:
        raise ValueError(f"need n_tp, n_sc >= 1, got ({n_tp}, {n_sc})")
    return np.kron(np.eye(n_tp), np.ones((1, n_sc)))


def _pool(labels: Sequence[DayLabel], season: str, day_type: str | None = None,
          cluster: int | None = None) -> np.ndarray:
    hits = [i for i, lab in enumerate(labels)
            if lab.season == season
            and (day_type is None or lab.day_type == day_type)
            and (cluster is None or lab.irradiance_cluster == cluster)]
    return np.asarray(hits, dtype=np.intp)


def _draw(rng: np.random.Generator, pool: np.ndarray, n_sc: int,
          what: str) -> np.ndarray:
    if pool.size == 0:
        raise EmptyPool(f"no historical days match {what}")
    replacing = pool.size < n_sc
    if replacing:
        warnings.warn(f"pool for {what} has {pool.size} day(s) < {n_sc} scenarios; "
                      f"sampling with replacement", ReplacementSamplingWarning,
                      stacklevel=3)
    return rng.choice(pool, size=n_sc, replace=replacing)


def sample_scenarios(plan: TypicalDayPlan, dataset: AlignedDataset,
                     labels: Sequence[DayLabel], n_sc: int, seed: int = 0,
                     paired_sampling: bool = False
                     ) -> tuple[ScenarioSet, TypicalDayPlan]:
    """Draw ``n_sc`` historical days per typical day and assemble matrices.

    Load, carbon intensity and tariffs are drawn from the typical day's
    (season, day_type) pool; irradiance from its (season, cluster) pool.
    Draws are independent per quantity unless ``paired_sampling`` reuses one
    (season, day_type) draw for load, carbon intensity and both tariffs.
    Pools smaller than ``n_sc`` are sampled with replacement (with a
    warning); larger pools are subsampled without replacement.

    Returns the scenario set and the plan with sampled day indices recorded.

    Raises:
        EmptyPool: a typical day's labels match no historical day.
    """
    if n_sc < 1:
        raise ValueError(f"need at least 1 scenario per typical day, got {n_sc}")
    if any(lab.irradiance_cluster is None for lab in labels):
        raise ValueError("historical labels carry no irradiance clusters; cluster first")

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    n_tp = plan.n_typical_days
    n_steps = dataset.samples_per_day
    matrices = {q: np.empty((n_steps, n_tp * n_sc)) for q in QUANTITIES}
    filled: list[TypicalDayEntry] = []

    for j, entry in enumerate(plan.entries):
        where = f"(season={entry.season}, day_type={entry.day_type})"
        type_pool = _pool(labels, entry.season, day_type=entry.day_type)
        cluster_pool = _pool(labels, entry.season, cluster=entry.irradiance_cluster)
        samples: dict[str, tuple[int, ...]] = {}
        shared = _draw(rng, type_pool, n_sc, where) if paired_sampling else None
        for quantity in QUANTITIES:
            if quantity == "irradiance":
                days = _draw(rng, cluster_pool, n_sc,
                             f"(season={entry.season}, cluster={entry.irradiance_cluster})")
            elif shared is not None:
                days = shared
            else:
                days = _draw(rng, type_pool, n_sc, where)
            samples[quantity] = tuple(int(d) for d in days)
            cols = slice(j * n_sc, (j + 1) * n_sc)
            matrices[quantity][:, cols] = dataset.quantity(quantity)[days].T
        filled.append(replace(entry, samples=samples))

    scen = ScenarioSet(
        load=matrices["load"],
        irradiance=matrices["irradiance"],
        carbon_intensity=matrices["carbon_intensity"],
        tariff_consumption=matrices["price_cons"],
        tariff_injection=matrices["price_inj"],
        assignment=build_assignment(n_tp, n_sc),
        typical_day_count=n_tp,
        scenarios_per_day=n_sc,
        labels=tuple(e.label for e in filled),
    )
    return scen, TypicalDayPlan(entries=tuple(filled))


@dataclass(frozen=True, eq=False)
class ScenarioBundle:
    """Everything the pipeline produced for one seed."""

    scenario_set: ScenarioSet
    plan: TypicalDayPlan
    day_labels: tuple[DayLabel, ...]
    cluster_result: ClusterResult
    seed: int


def generate_scenarios(dataset: AlignedDataset, n_td: int, n_sc: int,
                       k: int = 3, seed: int = 0, stratify_weekdays: bool = True,
                       paired_sampling: bool = False) -> ScenarioBundle:
    """Run the full pipeline: label, cluster, select, sample.

    Sub-seeds for clustering, selection and sampling are spawned from one
    SeedSequence, so the result is a pure function of (dataset, arguments).
    """
    root = np.random.SeedSequence(seed)
    cluster_seed, select_seed, sample_seed = (
        int(child.generate_state(1)[0]) for child in root.spawn(3))
    base_labels = label_days(dataset)
    clustering = kmeans_irradiance(dataset, k=k, seed=cluster_seed)
    labels = apply_clusters(base_labels, clustering)
    plan = select_typical_days(labels, n_td, seed=select_seed,
                               stratify_weekdays=stratify_weekdays)
    scen, filled = sample_scenarios(plan, dataset, labels, n_sc,
                                    seed=sample_seed,
                                    paired_sampling=paired_sampling)
    return ScenarioBundle(scenario_set=scen, plan=filled, day_labels=labels,
                          cluster_result=clustering, seed=seed)


# ---------------------------------------------------------------------------
# Scenario dump
# ---------------------------------------------------------------------------

def dump_scenarios(scen: ScenarioSet, outdir, plan: TypicalDayPlan | None = None,
                   seed: int | None = None) -> list[Path]:
    """Write one CSV per quantity plus a JSON sidecar.

    Each CSV holds n_steps rows and one column per scenario, headed
    ``td{j}_s{i}``.  The sidecar records the assignment matrix, typical-day
    labels, sampled day indices (when a filled plan is given) and the seed.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    header = ",".join(f"td{j}_s{i}"
                      for j in range(scen.typical_day_count)
                      for i in range(scen.scenarios_per_day))
    written: list[Path] = []
    arrays = {
        "load": scen.load,
        "irradiance": scen.irradiance,
        "carbon_intensity": scen.carbon_intensity,
        "price_cons": scen.tariff_consumption,
        "price_inj": scen.tariff_injection,
    }
    for name, arr in arrays.items():
        path = outdir / f"scenario_{name}.csv"
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(header + "\n")
            for row in arr:
                handle.write(",".join(format(v, ".10g") for v in row) + "\n")
        written.append(path)

    sidecar = {
        "assignment": scen.assignment.astype(int).tolist(),
        "typical_day_count": scen.typical_day_count,
        "scenarios_per_day": scen.scenarios_per_day,
        "labels": [lab.to_dict() for lab in scen.labels] if scen.labels else None,
        "sampled_days": ([{q: list(e.samples[q]) for q in sorted(e.samples)}
                          for e in plan.entries]
                         if plan is not None and plan.entries
                         and plan.entries[0].samples is not None else None),
        "seed": seed,
    }
    side_path = outdir / "scenario_meta.json"
    with open(side_path, "w", encoding="utf-8") as handle:
        json.dump(sidecar, handle, indent=2, sort_keys=True)
        handle.write("\n")
    written.append(side_path)
    return written
