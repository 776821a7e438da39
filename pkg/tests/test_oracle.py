import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_data, random_partition
from rglasso.errors import NoConvergence
from rglasso.groups import make_partition, singleton_partition
from rglasso.kkt import QuadraticData, check_optimality
from rglasso.lambda_path import icap_full_path
from rglasso.oracle import (OracleConfig, lasso_oracle, oracle_objective, oracle_solve, project_l1_ball,
                            prox_linf, wabs_bisection)


def test_zero_r():
    part = make_partition(3, [3])
    w = oracle_solve(QuadraticData(np.eye(3), np.zeros(3), 1.0), part)
    assert not w.any()


def test_scalar_soft_threshold():
    data = QuadraticData(np.array([[1.0]]), np.array([2.0]), 0.5)
    part = make_partition(1, [1])
    assert oracle_solve(data, part)[0] == pytest.approx(1.5)
    assert oracle_solve(data, part, OracleConfig(method="active-pattern-enumeration"))[0] == pytest.approx(1.5)
    assert lasso_oracle(data.R, data.r, 0.5)[0] == pytest.approx(1.5)


def test_config_validation():
    with pytest.raises(ValueError):
        OracleConfig(tol=0)
    with pytest.raises(ValueError):
        OracleConfig(method="newton")


def test_methods_agree(rng):
    enum = OracleConfig(method="active-pattern-enumeration")
    for _ in range(40):
        p = int(rng.integers(2, 8))
        part = random_partition(rng, p, max_size=3)
        if len(part.groups) > 4:
            continue
        data = random_data(rng, p)
        a = oracle_solve(data, part)
        b = oracle_solve(data, part, enum)
        assert np.abs(a - b).max() <= 1e-7
        assert check_optimality(a, data, part).passed


def test_enumeration_size_cap(rng):
    data = random_data(rng, 13)
    with pytest.raises(ValueError):
        oracle_solve(data, make_partition(13, [13]), OracleConfig(method="active-pattern-enumeration"))


def test_mutual_optimality_with_path(rng):
    for _ in range(40):
        p = int(rng.integers(3, 15))
        part = random_partition(rng, p)
        data = random_data(rng, p)
        w_path = icap_full_path(data, part)[0]
        w_or = oracle_solve(data, part)
        f_path, f_or = oracle_objective(w_path, data, part), oracle_objective(w_or, data, part)
        assert f_or <= f_path + 1e-9 and f_path <= f_or + 1e-9


def test_lasso_oracle_is_singleton_group_oracle(rng):
    for _ in range(20):
        p = int(rng.integers(2, 10))
        data = random_data(rng, p)
        a = lasso_oracle(data.R, data.r, data.lam)
        b = oracle_solve(data, singleton_partition(p))
        assert np.abs(a - b).max() <= 1e-7


def test_no_convergence(rng):
    data = random_data(rng, 10, lam=0.01)
    with pytest.raises(NoConvergence):
        oracle_solve(data, make_partition(10, [5, 5]), OracleConfig(max_iters=3))
    with pytest.raises(NoConvergence):
        lasso_oracle(data.R, data.r, 0.01, max_sweeps=1)


vec = st.lists(st.floats(-10, 10, allow_nan=False), min_size=1, max_size=8)


@settings(max_examples=200, deadline=None)
@given(vec, st.floats(0.0, 20.0))
def test_projection_properties(u, radius):
    u = np.array(u)
    x = project_l1_ball(u, radius)
    assert np.abs(x).sum() <= radius + 1e-9
    assert np.all(x * u >= -1e-12)
    if np.abs(u).sum() <= radius:
        np.testing.assert_array_equal(x, u)


@settings(max_examples=200, deadline=None)
@given(vec, st.floats(0.01, 5.0))
def test_prox_linf_optimality(u, t):
    u = np.array(u)
    x = prox_linf(u, t)
    f = lambda z: t * np.abs(z).max() + 0.5 * ((z - u) ** 2).sum()
    rng = np.random.default_rng(0)
    for _ in range(20):
        assert f(x) <= f(x + 1e-3 * rng.standard_normal(u.size)) + 1e-12


def test_wabs_bisection_reference():
    lo, hi = wabs_bisection([1.0], [0.0], 2.0)
    assert lo == pytest.approx(-2.0) and hi == pytest.approx(2.0)
    assert wabs_bisection([1.0, 1.0], [0.0, 4.0], 3.0) is None
    lo, hi = wabs_bisection([1.0], [0.0], 1.0, slope_offset=-1.0)
    assert lo == pytest.approx(-0.5) and hi == np.inf
