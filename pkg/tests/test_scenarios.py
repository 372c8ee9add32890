"""Scenario pipeline: labeling, clustering, selection, sampling."""

import datetime as dt

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dcsizer.ingest import AlignedDataset
from dcsizer.model import DayLabel
from dcsizer.scenarios import (DegenerateClustersWarning, EmptyPool,
                               InfeasibleStratification, InsufficientDays,
                               ReplacementSamplingWarning, TypicalDayEntry,
                               TypicalDayPlan, apply_clusters,
                               build_assignment, generate_scenarios,
                               kmeans_irradiance, label_days,
                               largest_remainder, sample_scenarios,
                               select_typical_days, surface_energy)
from helpers import QUANTITIES, synthetic_dataset

SEASONS = ("winter", "spring", "summer", "autumn")


def flat_dataset(dates, energies=None, samples=24) -> AlignedDataset:
    """Dataset of constant-profile days; irradiance integrates to `energies`."""
    dates = tuple(dates)
    n = len(dates)
    if energies is None:
        energies = np.full(n, 2400.0)
    step_hours = 24.0 / samples
    values = {q: np.full((n, samples), 1.0) for q in QUANTITIES}
    values["irradiance"] = (np.asarray(energies, dtype=float)[:, None]
                            / (samples * step_hours)) * np.ones((n, samples))
    return AlignedDataset(dates=dates, values=values, step_hours=step_hours,
                          timezone="UTC")


def dates_from(start: dt.date, n: int, weekdays_only=False):
    out, day = [], start
    while len(out) < n:
        if not weekdays_only or day.weekday() < 5:
            out.append(day)
        day += dt.timedelta(days=1)
    return out


# ---------------------------------------------------------------------------
# Day labeling
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("date,season,day_type", [
    (dt.date(2023, 7, 12), "summer", "weekday"),    # a Wednesday
    (dt.date(2023, 1, 1), "winter", "weekend"),     # a Sunday
    (dt.date(2023, 3, 1), "spring", "weekday"),
    (dt.date(2023, 10, 14), "autumn", "weekend"),
    (dt.date(2023, 12, 1), "winter", "weekday"),
])
def test_label_examples(date, season, day_type):
    data = flat_dataset([date])
    (label,) = label_days(data)
    assert label == DayLabel(season=season, day_type=day_type)


def test_labels_cover_dataset_in_order():
    dates = dates_from(dt.date(2023, 2, 25), 6)
    labels = label_days(flat_dataset(dates))
    assert len(labels) == 6
    assert [l.season for l in labels] == ["winter"] * 4 + ["spring"] * 2


# ---------------------------------------------------------------------------
# Irradiance clustering
# ---------------------------------------------------------------------------

def test_kmeans_splits_well_separated_energies():
    dates = dates_from(dt.date(2023, 7, 3), 7)      # one season only
    energies = [1.0, 1.0, 1.0, 5.0, 5.0, 9.0, 9.0]
    data = flat_dataset(dates, energies)
    result = kmeans_irradiance(data, k=3, seed=0)
    np.testing.assert_array_equal(result.clusters, [0, 0, 0, 1, 1, 2, 2])
    np.testing.assert_allclose(result.centroids["summer"], [1.0, 5.0, 9.0])


def test_clusters_indexed_by_ascending_energy():
    dates = dates_from(dt.date(2023, 7, 3), 9)
    energies = [9.0, 1.0, 5.0, 9.0, 1.0, 5.0, 9.0, 1.0, 5.0]
    result = kmeans_irradiance(flat_dataset(dates, energies), k=3, seed=4)
    # cluster ids must sort with energy: dimmest day -> 0, brightest -> 2
    np.testing.assert_array_equal(result.clusters,
                                  [2, 0, 1, 2, 0, 1, 2, 0, 1])


def test_identical_energies_degenerate_warning():
    dates = dates_from(dt.date(2023, 7, 3), 5)
    data = flat_dataset(dates, [4.0] * 5)
    with pytest.warns(DegenerateClustersWarning):
        result = kmeans_irradiance(data, k=3, seed=0)
    np.testing.assert_array_equal(result.clusters, 0)


def test_insufficient_days_per_season():
    dates = dates_from(dt.date(2023, 7, 3), 2)
    with pytest.raises(InsufficientDays):
        kmeans_irradiance(flat_dataset(dates), k=3, seed=0)


def test_surface_energy_uses_step_length():
    data = flat_dataset([dt.date(2023, 7, 3)], [2400.0], samples=96)
    np.testing.assert_allclose(surface_energy(data), [2400.0])


def test_kmeans_deterministic_in_seed():
    data = synthetic_dataset(days=120)
    a = kmeans_irradiance(data, k=3, seed=5)
    b = kmeans_irradiance(data, k=3, seed=5)
    np.testing.assert_array_equal(a.clusters, b.clusters)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.integers(2, 4))
def test_kmeans_objective_never_increases(seed, k):
    data = synthetic_dataset(days=90, seed=seed % 1000)
    result = kmeans_irradiance(data, k=k, seed=seed)
    for history in result.inertia_history.values():
        assert np.all(np.diff(history) <= 1e-9 * max(1.0, history[0]))


def test_apply_clusters_attaches_ids():
    dates = dates_from(dt.date(2023, 7, 3), 7)
    data = flat_dataset(dates, [1, 1, 1, 5, 5, 9, 9])
    labels = label_days(data)
    result = kmeans_irradiance(data, k=3, seed=0)
    labeled = apply_clusters(labels, result)
    assert [l.irradiance_cluster for l in labeled] == [0, 0, 0, 1, 1, 2, 2]
    assert all(l.season == "summer" for l in labeled)


# ---------------------------------------------------------------------------
# Apportionment and selection
# ---------------------------------------------------------------------------

def test_largest_remainder_even_split():
    np.testing.assert_array_equal(largest_remainder([30, 30, 30], 3), [1, 1, 1])


def test_largest_remainder_proportional():
    np.testing.assert_array_equal(largest_remainder([50, 25, 25], 4), [2, 1, 1])


def test_largest_remainder_total_preserved():
    counts = largest_remainder([7, 3, 2, 1], 5)
    assert counts.sum() == 5
    quotas = np.array([7, 3, 2, 1]) / 13 * 5
    assert np.all(np.abs(counts - quotas) < 1.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(1, 500), min_size=1, max_size=8),
       st.integers(1, 40))
def test_largest_remainder_properties(populations, total):
    counts = largest_remainder(populations, total)
    assert counts.sum() == total
    quotas = np.asarray(populations, float) / sum(populations) * total
    assert np.all(np.abs(counts - quotas) < 1.0)


def season_labels(cluster_counts, day_type="weekday"):
    """Labels for all four seasons with the given per-cluster populations."""
    labels = []
    for season in SEASONS:
        for cluster, count in enumerate(cluster_counts):
            labels.extend(DayLabel(season, day_type, cluster)
                          for _ in range(count))
    return labels


def test_selection_preserves_cluster_ratios():
    labels = season_labels([30, 30, 30])
    plan = select_typical_days(labels, 3, seed=0, stratify_weekdays=False)
    assert plan.n_typical_days == 12            # 3 per season
    for season in SEASONS:
        clusters = sorted(e.irradiance_cluster for e in plan.entries
                          if e.season == season)
        assert clusters == [0, 1, 2]


def test_selection_cluster_apportionment():
    labels = season_labels([50, 25, 25])
    plan = select_typical_days(labels, 4, seed=1, stratify_weekdays=False)
    for season in SEASONS:
        clusters = [e.irradiance_cluster for e in plan.entries
                    if e.season == season]
        assert sorted(clusters) == [0, 0, 1, 2]


def test_selection_day_type_follows_population():
    labels = []
    for season in SEASONS:                      # 10 weekdays, 4 weekend days
        labels.extend(DayLabel(season, "weekday", 0) for _ in range(10))
        labels.extend(DayLabel(season, "weekend", 0) for _ in range(4))
    plan = select_typical_days(labels, 3, seed=0, stratify_weekdays=False)
    for season in SEASONS:
        types = [e.day_type for e in plan.entries if e.season == season]
        assert types.count("weekday") == 2 and types.count("weekend") == 1


def test_stratified_selection_needs_multiple_of_seven():
    labels = season_labels([10, 10, 10])
    with pytest.raises(InfeasibleStratification):
        select_typical_days(labels, 3, stratify_weekdays=True)


def test_stratified_selection_gives_one_slot_per_weekday():
    labels = []
    for season in SEASONS:
        labels.extend(DayLabel(season, "weekday", 0) for _ in range(20))
        labels.extend(DayLabel(season, "weekend", 0) for _ in range(8))
    plan = select_typical_days(labels, 7, seed=0, stratify_weekdays=True)
    for season in SEASONS:
        types = [e.day_type for e in plan.entries if e.season == season]
        assert types.count("weekday") == 5 and types.count("weekend") == 2


def test_selection_missing_season_is_infeasible():
    labels = [DayLabel("summer", "weekday", 0)] * 10
    with pytest.raises(InfeasibleStratification):
        select_typical_days(labels, 1, stratify_weekdays=False)


def test_selection_requires_clustered_labels():
    labels = [DayLabel(season, "weekday", None) for season in SEASONS]
    with pytest.raises(InfeasibleStratification):
        select_typical_days(labels, 1, stratify_weekdays=False)


# ---------------------------------------------------------------------------
# Assignment matrix
# ---------------------------------------------------------------------------

def test_build_assignment_examples():
    np.testing.assert_array_equal(build_assignment(1, 1), [[1.0]])
    np.testing.assert_array_equal(build_assignment(2, 2),
                                  [[1, 1, 0, 0], [0, 0, 1, 1]])
    np.testing.assert_array_equal(build_assignment(2, 3),
                                  [[1, 1, 1, 0, 0, 0], [0, 0, 0, 1, 1, 1]])


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 12), st.integers(1, 12))
def test_build_assignment_sums(n_tp, n_sc):
    t_m = build_assignment(n_tp, n_sc)
    assert t_m.shape == (n_tp, n_tp * n_sc)
    np.testing.assert_array_equal(t_m.sum(axis=0), 1.0)
    np.testing.assert_array_equal(t_m.sum(axis=1), float(n_sc))


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

def single_pool_setup():
    """One July weekday in the dataset; plan that demands it."""
    data = flat_dataset([dt.date(2023, 7, 3)], [5.0])
    labels = (DayLabel("summer", "weekday", 0),)
    plan = TypicalDayPlan(entries=(
        TypicalDayEntry("summer", "weekday", 0),))
    return data, labels, plan


def test_small_pool_sampled_with_replacement():
    data, labels, plan = single_pool_setup()
    with pytest.warns(ReplacementSamplingWarning):
        scen, filled = sample_scenarios(plan, data, labels, 5, seed=0)
    assert scen.n_scenarios == 5
    np.testing.assert_array_equal(scen.irradiance,
                                  np.full((24, 5), 5.0 / 24.0))
    assert filled.entries[0].samples["load"] == (0, 0, 0, 0, 0)


def test_empty_pool_raises():
    data, labels, _ = single_pool_setup()
    plan = TypicalDayPlan(entries=(
        TypicalDayEntry("winter", "weekend", 0),))
    with pytest.raises(EmptyPool):
        sample_scenarios(plan, data, labels, 2, seed=0)


def test_sampling_draws_from_matching_pools():
    dates = dates_from(dt.date(2023, 7, 3), 10, weekdays_only=True)
    energies = [1, 1, 1, 1, 1, 9, 9, 9, 9, 9]
    data = flat_dataset(dates, energies)
    labels = apply_clusters(label_days(data),
                            kmeans_irradiance(data, k=2, seed=0))
    plan = TypicalDayPlan(entries=(
        TypicalDayEntry("summer", "weekday", 1),))
    scen, filled = sample_scenarios(plan, data, labels, 4, seed=3)
    # irradiance columns must all come from the bright cluster
    np.testing.assert_allclose(scen.irradiance, 9.0 / 24.0)
    assert all(idx >= 5 for idx in filled.entries[0].samples["irradiance"])


def test_paired_sampling_shares_draws():
    data = synthetic_dataset(days=364)
    paired = generate_scenarios(data, 2, 4, k=2, seed=11,
                                stratify_weekdays=False, paired_sampling=True)
    for entry in paired.plan.entries:
        assert entry.samples["load"] == entry.samples["carbon_intensity"]
        assert entry.samples["load"] == entry.samples["price_cons"]
        assert entry.samples["load"] == entry.samples["price_inj"]


def test_independent_sampling_differs_somewhere():
    data = synthetic_dataset(days=364)
    bundle = generate_scenarios(data, 2, 4, k=2, seed=11,
                                stratify_weekdays=False, paired_sampling=False)
    assert any(e.samples["load"] != e.samples["carbon_intensity"]
               for e in bundle.plan.entries)


# ---------------------------------------------------------------------------
# Full pipeline
# ---------------------------------------------------------------------------

def test_generate_scenarios_shapes_and_determinism():
    data = synthetic_dataset(days=364)
    a = generate_scenarios(data, 2, 3, k=3, seed=42, stratify_weekdays=False)
    b = generate_scenarios(data, 2, 3, k=3, seed=42, stratify_weekdays=False)
    scen = a.scenario_set
    assert scen.typical_day_count == 8          # 2 per season
    assert scen.n_scenarios == 24
    assert scen.n_steps == 24
    for field in ("load", "irradiance", "carbon_intensity",
                  "tariff_consumption", "tariff_injection", "assignment"):
        np.testing.assert_array_equal(getattr(scen, field),
                                      getattr(b.scenario_set, field))
    assert a.plan == b.plan


def test_generate_scenarios_seed_changes_draws():
    data = synthetic_dataset(days=364)
    a = generate_scenarios(data, 1, 3, seed=1, stratify_weekdays=False)
    b = generate_scenarios(data, 1, 3, seed=2, stratify_weekdays=False)
    assert not np.array_equal(a.scenario_set.load, b.scenario_set.load)


def test_generated_labels_match_plan():
    data = synthetic_dataset(days=364)
    bundle = generate_scenarios(data, 1, 2, seed=3, stratify_weekdays=False)
    scen = bundle.scenario_set
    assert scen.labels is not None
    assert len(scen.labels) == scen.typical_day_count
    seasons = [lab.season for lab in scen.labels]
    assert seasons == ["winter", "spring", "summer", "autumn"]
