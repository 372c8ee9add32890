"""Data model: serialization round trips and parameter validation."""

import dataclasses

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dcsizer.model import (AssignmentMatrixInvalid, CostBreakdown, DayLabel,
                           DimensionMismatch, EssParams, GenParams, GridParams,
                           InvariantViolation, ScenarioSet, SizingSolution,
                           TimeGrid, ValidationError, Weight, collect_issues,
                           validate_params)
from helpers import (constant_scenario_set, default_ess, default_gen,
                     default_net, make_config, make_scenario_set, zero_solution)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def test_scalar_types_round_trip():
    for obj in (TimeGrid(step_count=24, step_hours=0.25, billing_day_factor=30.0),
                DayLabel(season="summer", day_type="weekend", irradiance_cluster=2),
                default_ess(), default_gen(), default_net(), Weight(42.5)):
        assert type(obj).from_dict(obj.to_dict()) == obj


def test_scenario_set_round_trip():
    scen = make_scenario_set(n=4, n_tp=2, n_sc=3, seed=1)
    scen = dataclasses.replace(
        scen, labels=(DayLabel("winter", "weekday", 0), DayLabel("summer", "weekend", 1)))
    back = ScenarioSet.from_dict(scen.to_dict())
    for field in ("load", "irradiance", "carbon_intensity",
                  "tariff_consumption", "tariff_injection", "assignment"):
        np.testing.assert_array_equal(getattr(back, field), getattr(scen, field))
    assert back.labels == scen.labels
    assert (back.typical_day_count, back.scenarios_per_day) == (2, 3)


def test_to_dict_is_json_ready():
    import json
    scen = make_scenario_set()
    text = json.dumps(scen.to_dict())          # must not raise on ndarrays
    assert ScenarioSet.from_dict(json.loads(text)).n_steps == scen.n_steps


def test_cost_breakdown_compose_and_totals():
    bd = CostBreakdown.compose(carbon_pcc=10.0, carbon_ess=2.0, carbon_gen=3.0,
                               cost_ess=4.0, cost_gen=5.0, cost_energy=6.0,
                               cost_power=7.0, weight=2.0)
    assert bd.carbon_total == pytest.approx(15.0)
    assert bd.financial_total == pytest.approx(22.0)
    assert bd.objective == pytest.approx(15.0 + 2.0 * 22.0)
    assert bd.consistency_residual() <= 1e-12


def test_solution_round_trip_and_soc():
    sol = zero_solution(3, 2, ess_energy_rating=10.0, ess_power_rating=5.0,
                        pv_rating=2.0, stored_energy=np.full((4, 2), 5.0))
    back = SizingSolution.from_dict(sol.to_dict())
    np.testing.assert_array_equal(back.stored_energy, sol.stored_energy)
    assert back.breakdown.objective == sol.breakdown.objective
    assert back.ess_energy_rating == 10.0
    np.testing.assert_allclose(sol.state_of_charge, 0.5)


def test_zero_energy_rating_soc_is_finite():
    soc = zero_solution(2, 1).state_of_charge
    assert np.all(np.isfinite(soc))
    np.testing.assert_array_equal(soc, 0.0)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def test_validate_accepts_well_formed_instance():
    cfg = make_config(n=24, n_tp=2, n_sc=3, seed=3)
    assert cfg.n_steps == 24
    assert cfg.n_scenarios == 6


def test_soc_ordering_violation_names_field():
    with pytest.raises(InvariantViolation) as err:
        make_config(ess=default_ess(soc_min=0.9, soc_max=0.1, soc_start=0.5))
    assert "soc" in str(err.value)
    assert any(issue.field == "ess.soc" for issue in err.value.issues)


def test_assignment_row_sums_must_match_scenarios_per_day():
    scen = make_scenario_set(n=4, n_tp=2, n_sc=20, seed=0)
    bad = scen.assignment.copy()
    bad[0, 19], bad[1, 19] = 0.0, 1.0          # row sums become 19 and 21
    scen = dataclasses.replace(scen, assignment=bad)
    with pytest.raises(AssignmentMatrixInvalid) as err:
        make_config(scen=scen)
    assert "row" in str(err.value)


def test_assignment_column_sums_must_be_one():
    scen = make_scenario_set(n=4, n_tp=2, n_sc=2, seed=0)
    bad = scen.assignment.copy()
    bad[:, 0] = 0.0
    with pytest.raises(AssignmentMatrixInvalid):
        make_config(scen=dataclasses.replace(scen, assignment=bad))


def test_assignment_entries_must_be_binary():
    scen = make_scenario_set(n=4, n_tp=1, n_sc=2, seed=0)
    bad = scen.assignment.copy()
    bad[0, 0] = 0.5
    with pytest.raises(AssignmentMatrixInvalid):
        make_config(scen=dataclasses.replace(scen, assignment=bad))


def test_shape_mismatch_is_dimension_error():
    scen = make_scenario_set(n=4, n_tp=1, n_sc=2)
    scen = dataclasses.replace(scen, load=scen.load[:3])
    with pytest.raises(DimensionMismatch) as err:
        validate_params(TimeGrid(step_count=4, step_hours=1.0), scen,
                        default_ess(), default_gen(), default_net(), Weight(0.0))
    assert "load" in str(err.value) and "shape" in str(err.value)


def test_negative_load_rejected():
    scen = make_scenario_set(n=3, n_tp=1, n_sc=2)
    load = scen.load.copy()
    load[1, 0] = -5.0
    with pytest.raises(InvariantViolation) as err:
        make_config(scen=dataclasses.replace(scen, load=load))
    assert "load" in str(err.value)


def test_non_finite_matrix_rejected():
    scen = make_scenario_set(n=3, n_tp=1, n_sc=2)
    ci = scen.carbon_intensity.copy()
    ci[0, 0] = np.nan
    with pytest.raises(InvariantViolation):
        make_config(scen=dataclasses.replace(scen, carbon_intensity=ci))


def test_negative_tariffs_allowed():
    scen = make_scenario_set(n=3, n_tp=1, n_sc=2)
    inj = scen.tariff_injection.copy()
    inj[0, 0] = -0.02                          # negative feed-in price is legal
    make_config(scen=dataclasses.replace(scen, tariff_injection=inj))


@pytest.mark.parametrize("field,value", [
    ("efficiency", 0.0), ("efficiency", 1.2), ("p2e_ratio", 0.0),
    ("cycle_life", -1.0), ("calendar_life", 0.0), ("lca_carbon", -1.0),
    ("rated_power_cap", -10.0),
])
def test_battery_scalar_invariants(field, value):
    with pytest.raises(InvariantViolation) as err:
        make_config(ess=default_ess(**{field: value}))
    assert field in str(err.value)


def test_big_m_below_power_cap_rejected():
    with pytest.raises(InvariantViolation) as err:
        make_config(ess=default_ess(big_m=50.0, rated_power_cap=200.0))
    assert "big_m" in str(err.value)


@pytest.mark.parametrize("kwargs", [
    dict(irradiance_to_power_ratio=1.5), dict(peak_irradiance=0.0),
    dict(calendar_life=-1.0), dict(lca_carbon=-5.0),
])
def test_pv_scalar_invariants(kwargs):
    with pytest.raises(InvariantViolation):
        make_config(gen=default_gen(**kwargs))


@pytest.mark.parametrize("kwargs", [
    dict(pcc_rated=0.0), dict(tracking_accuracy=-1.0), dict(buffer_tolerance=-0.1),
])
def test_grid_scalar_invariants(kwargs):
    with pytest.raises(InvariantViolation):
        make_config(net=default_net(**kwargs))


def test_negative_weight_rejected():
    with pytest.raises(InvariantViolation):
        make_config(weight=-1.0)


def test_collect_issues_reports_everything_at_once():
    scen = make_scenario_set(n=3, n_tp=1, n_sc=2)
    issues = collect_issues(
        TimeGrid(step_count=3, step_hours=1.0), scen,
        default_ess(soc_min=0.9, soc_max=0.1, efficiency=2.0),
        default_gen(peak_irradiance=-1.0), default_net(), Weight(0.0))
    fields = {i.field for i in issues}
    assert {"ess.soc", "ess.efficiency", "gen.peak_irradiance"} <= fields


def test_validate_is_pure():
    scen = make_scenario_set(n=4, n_tp=2, n_sc=2, seed=9)
    frozen = {f: getattr(scen, f).copy() for f in
              ("load", "irradiance", "carbon_intensity",
               "tariff_consumption", "tariff_injection", "assignment")}
    grid = TimeGrid(step_count=4, step_hours=1.0)
    args = (grid, scen, default_ess(), default_gen(), default_net(), Weight(1.0))
    first = validate_params(*args)
    second = validate_params(*args)
    for f, before in frozen.items():
        np.testing.assert_array_equal(getattr(scen, f), before)
    assert first.scenarios is scen and second.scenarios is scen


def test_error_carries_all_issues():
    with pytest.raises(ValidationError) as err:
        make_config(ess=default_ess(soc_min=0.9, soc_max=0.1, cycle_life=0.0))
    assert len(err.value.issues) >= 2


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_soc_triple_accepted_iff_ordered(lo, start, hi):
    ess = default_ess(soc_min=lo, soc_start=start, soc_max=hi)
    issues = collect_issues(TimeGrid(step_count=2, step_hours=1.0),
                            constant_scenario_set(2), ess, default_gen(),
                            default_net(), Weight(0.0))
    violated = any(i.field == "ess.soc" for i in issues)
    assert violated == (not lo <= start <= hi)
