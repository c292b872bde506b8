import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from shortnoma.channel import (ScenarioFading, ScenarioFixed, db_to_linear, linear_to_db, monte_carlo_average,
                               monte_carlo_values, sample_fading_pair, sample_fading_raw, solve_objective,
                               summarize)
from shortnoma.noma import SystemParams


def test_db_conversions():
    assert db_to_linear(0.0) == 1.0
    assert db_to_linear(40.0) == pytest.approx(1e4, rel=1e-15)
    assert db_to_linear(30.0) == pytest.approx(1e3, rel=1e-15)
    assert linear_to_db(db_to_linear(17.3)) == pytest.approx(17.3)


def test_fixed_scenario_gains():
    g = ScenarioFixed(0.8, 0.2).gains()
    assert (g.h1, g.h2) == pytest.approx((0.64, 0.04))
    g = ScenarioFixed(0.8, 0.2, sigma1_sq=2.0, sigma2_sq=0.5).gains()
    assert (g.h1, g.h2) == pytest.approx((0.32, 0.08))
    with pytest.raises(ValueError):
        ScenarioFixed(0.2, 0.8).gains()


@pytest.mark.parametrize("kw", [dict(d1=60, d2=20), dict(d1=20, d2=60, alpha=0), dict(d1=20, d2=60, realizations=0)])
def test_fading_validation(kw):
    with pytest.raises(ValueError):
        ScenarioFading(**kw)


def test_sampling_deterministic():
    sc = ScenarioFading(20, 60, seed=11, realizations=10)
    assert sample_fading_pair(sc, 3) == sample_fading_pair(sc, 3)
    assert sample_fading_pair(sc, 3) != sample_fading_pair(sc, 4)
    with pytest.raises(IndexError):
        sample_fading_pair(sc, 10)


def test_unit_variance_and_path_loss_mean():
    sc = ScenarioFading(20, 60, alpha=2, seed=3, realizations=100_000)
    raw = np.array([sample_fading_raw(sc, i) for i in range(sc.realizations)])
    assert raw[:, 0].mean() * 20.0 ** 4 == pytest.approx(1.0, abs=0.02)
    assert raw[:, 1].mean() * 60.0 ** 4 == pytest.approx(1.0, abs=0.02)
    assert raw[:, 0].mean() == pytest.approx(20.0 ** -4, rel=0.03)


def test_distance_scaling():
    a = ScenarioFading(20, 60, seed=5, realizations=50)
    b = ScenarioFading(40, 120, seed=5, realizations=50)
    for i in range(50):
        ra, rb = sample_fading_raw(a, i), sample_fading_raw(b, i)
        assert rb[0] == pytest.approx(ra[0] * 2.0 ** -4, rel=1e-12)
        assert rb[1] == pytest.approx(ra[1] * 2.0 ** -4, rel=1e-12)


@given(st.integers(0, 2 ** 32), st.integers(0, 999))
def test_labels_ordered(seed, index):
    g = sample_fading_pair(ScenarioFading(20, 21, seed=seed, realizations=1000), index)
    assert g.h1 > g.h2


def test_single_realization_matches_direct_solve():
    sc = ScenarioFading(1.0, 3.0, seed=2, realizations=1)
    params = SystemParams(100, 1e4, 1.0)
    mc = monte_carlo_average(sc, params, "noma")
    assert mc.mean == solve_objective(sample_fading_pair(sc, 0), params, "noma")
    assert mc.stderr == 0.0


def test_prefix_consistency():
    params = SystemParams(100, 1e4, 1.0)
    small = ScenarioFading(1.0, 3.0, seed=9, realizations=6)
    big = ScenarioFading(1.0, 3.0, seed=9, realizations=12)
    v_small = monte_carlo_values(small, params, "oma")
    v_big = monte_carlo_values(big, params, "oma")
    np.testing.assert_array_equal(v_small, v_big[:6])
    assert summarize(v_big[:6]).mean == summarize(v_small).mean


def test_parallel_matches_serial():
    params = SystemParams(100, 1e4, 1.0)
    sc = ScenarioFading(1.0, 3.0, seed=4, realizations=8)
    a = monte_carlo_average(sc, params, "noma", workers=1)
    b = monte_carlo_average(sc, params, "noma", workers=2)
    assert a.mean == b.mean and a.stderr == b.stderr
    np.testing.assert_array_equal(a.values, b.values)


def test_fig9_ordering_small():
    sc = ScenarioFading(20, 60, alpha=2, seed=0, realizations=6)
    params = SystemParams(200, db_to_linear(100.0), 2.0)
    m = {s: monte_carlo_average(sc, params, s).mean for s in ("noma", "oma", "oma-fixed")}
    assert m["noma"] >= m["oma"] >= m["oma-fixed"]


def test_unknown_solver():
    with pytest.raises(ValueError):
        monte_carlo_values(ScenarioFading(1, 2), SystemParams(10, 1.0, 0.0), "tdma")
