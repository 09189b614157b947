import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from donorgraph.metrics import graph_score, nse, r_squared, rmse, score_and_error


def test_r_squared_examples():
    obs = np.array([1.0, 2.0, 3.0])
    assert r_squared(obs, obs) == 1.0
    assert r_squared(obs, 2 * obs + 5) == pytest.approx(1.0, abs=1e-15)
    assert r_squared(obs, [1.0, 2.0, 2.0]) == pytest.approx(0.75, abs=1e-15)


def test_r_squared_undefined():
    with pytest.raises(ValueError):
        r_squared([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        r_squared([1.0, 2.0, 3.0], [2.0, 2.0, 2.0])
    with pytest.raises(ValueError):
        r_squared([1.0, 2.0], [1.0])


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.1, 100), st.floats(-100, 100))
def test_r_squared_affine_invariance(seed, a, b):
    rng = np.random.default_rng(seed)
    obs, est = rng.normal(size=(2, 50))
    base = r_squared(obs, est)
    assert abs(r_squared(obs, a * est + b) - base) < 1e-12
    assert abs(r_squared(a * obs + b, est) - base) < 1e-12


def test_nse_examples(rng):
    obs = rng.normal(size=30)
    assert nse(obs, obs) == 1.0
    assert nse(obs, np.full(30, obs.mean())) == pytest.approx(0.0, abs=1e-15)
    assert nse([0.0, 1.0, 2.0], [0.0, 0.0, 2.0]) == 0.5
    with pytest.raises(ValueError):
        nse([2.0, 2.0], [1.0, 3.0])


def test_rmse():
    assert rmse([0.0, 0.0], [3.0, 4.0]) == pytest.approx(np.sqrt(12.5))


def test_score_and_error_examples(rng):
    obs = rng.normal(size=(40, 3))
    assert score_and_error(obs, obs).error == 0.0
    noisy = obs + rng.normal(scale=10.0, size=obs.shape)
    assert score_and_error(obs, noisy, 0.7).error == 1.0


def test_score_and_error_worked():
    # build series with R^2 exactly 0.8 and 0.5
    x = np.array([1.0, -1.0, 1.0, -1.0])
    u = np.array([1.0, 1.0, -1.0, -1.0])

    def with_r2(r2):
        r = np.sqrt(r2)
        return r * x + np.sqrt(1 - r2) * u

    obs = np.column_stack([x, x])
    est = np.column_stack([with_r2(0.8), with_r2(0.5)])
    rep = score_and_error(obs, est, 0.7)
    assert rep.per_gauge_r2 == pytest.approx([0.8, 0.5], abs=1e-12)
    assert rep.total_score == pytest.approx(0.8, abs=1e-12)
    assert rep.error == pytest.approx(0.6, abs=1e-12)


def test_score_targets_and_missing(rng):
    obs = rng.normal(size=(20, 3))
    est = obs.copy()
    est[:, 2] = np.nan
    rep = score_and_error(obs, est, 0.7, target_ids=["b", "c"], gauge_ids=["a", "b", "c"])
    assert rep.gauge_ids == ["b", "c"]
    assert rep.per_gauge_score == [1.0, 0.0]
    assert rep.error == 0.5
    d = rep.to_dict()
    assert d["gauges"][1]["r2"] is None
    with pytest.raises(ValueError):
        score_and_error(obs, est[:, :2])
    with pytest.raises(ValueError):
        score_and_error(obs, obs, target_ids=[], gauge_ids=["a", "b", "c"])


def test_score_strict_threshold():
    x = np.array([1.0, -1.0, 1.0, -1.0])
    u = np.array([1.0, 1.0, -1.0, -1.0])
    # R^2 == gamma is not above the threshold
    est = np.sqrt(0.5) * x + np.sqrt(0.5) * u
    assert score_and_error(x[:, None], est[:, None], gamma=0.5 + 1e-12).total_score == 0.0


def test_graph_score_examples():
    assert graph_score([0.9, 0.8, 0.6], 0.7) == pytest.approx(1.7)
    assert graph_score([0.92, 0.81, 0.65], 0.7) == pytest.approx(1.73)
    assert graph_score([0.1, 0.2], 0.7) == 0.0
    assert graph_score([], 0.7) == 0.0
