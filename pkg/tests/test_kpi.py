import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from builders import square, toy_doc, toy_spec
from cellopt import io, kpi
from cellopt.errors import DegenerateKpiError
from cellopt.kpi import BaselineStats, KpiScaler, KpiVector, fitness, normalize, stats_from_rows
from cellopt.surrogate import MotionTrace


def robot_trace(q2, n=5, actor=1):
    rows = np.column_stack((np.arange(n) * 0.01, np.full(n, actor), np.zeros(n), np.zeros(n), np.zeros(n), np.full(n, q2)))
    return MotionTrace(0, (), rows)


def test_inverse_manipulability_quarter_turn():
    doc = toy_doc()
    doc["agents"][1]["link_lengths"] = [0.5, 0.5]
    spec = io.spec_from_dict(doc)
    assert kpi.inverse_manipulability(spec, [robot_trace(math.pi / 2)]) == pytest.approx(4.0, rel=1e-12)


def test_inverse_manipulability_singular_is_clamped():
    spec = toy_spec()
    assert kpi.inverse_manipulability(spec, [robot_trace(0.0)]) == pytest.approx(1 / spec.kpi.epsilon_m)


def test_surface_bounding_box():
    doc = toy_doc()
    doc["resources"] = [
        {"name": "a", "coords": [0.1, 0.1], "footprint": square(0.1), "bounds": [[-1, 1], [-1, 1]]},
        {"name": "b", "coords": [0.9, 0.4], "footprint": square(0.1), "bounds": [[-1, 1], [-1, 1]]},
    ]
    spec = io.spec_from_dict(doc)
    # footprints touch x = 0, x = 1, y = 0, y = 0.5
    assert kpi.occupied_surface(spec, np.array([0.1, 0.1, 0.9, 0.4])) == pytest.approx(0.5)


def human_trace(dist, n=10):
    # human base of the toy cell is (0, -1)
    rows = np.column_stack((np.arange(n) * 0.01, np.zeros(n), np.zeros(n), np.full(n, -1 + dist), np.full(n, np.nan), np.full(n, np.nan)))
    return MotionTrace(0, (), rows)


def test_short_reach_is_class_one():
    spec = toy_spec()
    assert kpi.ergonomics_score(spec, [human_trace(0.1), human_trace(0.39)]) == 1


def test_ergonomics_rounds_half_up():
    spec = toy_spec()
    # equal numbers of class 1 and class 2 samples: mean 1.5 -> 2
    assert kpi.ergonomics_score(spec, [human_trace(0.2), human_trace(0.5)]) == 2
    assert kpi.ergonomics_score(spec, [human_trace(0.9)]) == 4
    assert kpi.round_half_up(2.5) == 3 and kpi.round_half_up(2.4999) == 2


def test_posture_thresholds():
    assert kpi.posture_class(np.array([0.0, 0.39, 0.4, 0.59, 0.6, 0.8, 5.0]), (0.4, 0.6, 0.8)).tolist() == [1, 1, 2, 2, 3, 4, 4]


def stats():
    return BaselineStats([10.0, 2.0, 5.0, 1.0], [2.0, 0.5, 1.0, 0.25], 124)


def test_normalize_centering_and_scale():
    s = stats()
    assert np.all(normalize(KpiVector(s.mean), s).normalized == 0)
    assert np.allclose(normalize(KpiVector(s.mean + s.std), s).normalized, 1.0)


def test_fitness_examples():
    assert fitness(KpiVector(np.zeros(4), False, np.zeros(4)), (0.3, 0.2, 0.4, 0.1)) == 0
    assert fitness(KpiVector(np.zeros(4), False, np.ones(4))) == pytest.approx(1.0)
    assert fitness(KpiVector(np.zeros(4), True, np.ones(4))) == math.inf


def test_fitness_requires_normalized():
    with pytest.raises(ValueError):
        fitness(KpiVector(np.zeros(4)))


def test_degenerate_baseline():
    with pytest.raises(DegenerateKpiError):
        stats_from_rows([[1, 1, 1, 1]])
    with pytest.raises(DegenerateKpiError) as err:
        stats_from_rows([[1, 1, 1, 1], [2, 1, 3, 4]])
    assert "ergonomics" in str(err.value)


def test_sample_std():
    s = stats_from_rows([[1, 1, 1, 1], [3, 2, 5, 2]])
    assert np.allclose(s.std, np.std([[1, 1, 1, 1], [3, 2, 5, 2]], axis=0, ddof=1))


@given(st.lists(st.floats(-5, 5), min_size=4, max_size=4), st.floats(0.01, 100))
@settings(max_examples=100)
def test_sigma_scaling_scales_fitness(raw_offset, c):
    s = stats()
    v = KpiVector(s.mean + np.array(raw_offset))
    f1 = fitness(normalize(v, s))
    f2 = fitness(normalize(v, s.scaled(c)))
    assert f2 == pytest.approx(f1 / c, rel=1e-9, abs=1e-12)


def test_flag_dominance():
    s = stats()
    worst_safe = fitness(normalize(KpiVector(s.mean + 1e6 * s.std), s))
    assert fitness(normalize(KpiVector(s.mean, True), s)) > worst_safe


def test_scaler_matches_functions():
    rows = np.array([[30.0, 1, 4.0, 0.5], [35.0, 2, 5.0, 0.6], [40.0, 1, 6.5, 0.4]])
    sc = KpiScaler().fit(rows)
    s = stats_from_rows(rows)
    expected = [fitness(normalize(KpiVector(r), s)) for r in rows]
    assert np.allclose(sc.score_samples(rows), expected)
    assert np.allclose(sc.inverse_transform(sc.transform(rows)), rows)
    assert sc.score_samples(rows, safety=[False, True, False])[1] == math.inf


def test_compute_raw_on_fixture(estop, rng):
    from cellopt.feasibility import sample
    from cellopt.scheduler import schedule_list
    from cellopt.surrogate import plan_all

    x = sample(estop, rng)
    tau, traces = plan_all(estop, x)
    sched = schedule_list(estop, x.allocation, tau)
    v = kpi.compute_raw(estop, x, sched, traces)
    assert v.cycle_time == sched.makespan
    assert v.ergonomics in (1, 2, 3, 4)
    assert 0 < v.inverse_manipulability <= 1 / estop.kpi.epsilon_m
    assert v.surface > 0


def test_baseline_self_consistency(estop):
    stats_, rows = kpi.build_baseline(estop, 40, seed=3)
    assert len(rows) == 40
    raw = np.array([r.raw for r in rows])
    z = normalize(KpiVector(raw.mean(axis=0)), stats_).normalized
    assert np.all(np.abs(z) < 1e-12)
    again, _ = kpi.build_baseline(estop, 40, seed=3)
    assert again == stats_


def test_baseline_too_small(estop):
    with pytest.raises(DegenerateKpiError):
        kpi.build_baseline(estop, 1, seed=0)


def test_fixed_layout_surface_only_counts_movables():
    spec = toy_spec()
    # one movable 0.2 x 0.2 square; the fixed resource is ignored
    assert kpi.occupied_surface(spec, np.array([0.0, 0.0])) == pytest.approx(0.04)
