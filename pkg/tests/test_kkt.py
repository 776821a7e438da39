import numpy as np
import pytest

from conftest import random_data, random_partition
from rglasso.errors import BadConfig, SingularSystem
from rglasso.groups import ActiveSets, SignMatrix, apply_action, build_sign_matrix, compute_sets, make_partition
from rglasso.kkt import (CompactSolution, QuadraticData, assemble_system, check_optimality, compute_subgradients,
                         lift_matrix, mixed_norm, objective, reconstruct_w, solution_from_w, solve_active,
                         solve_for_sets, subgradient_violation)
from rglasso.oracle import oracle_solve


def test_mixed_norm_examples():
    part = make_partition(4, [2, 2])
    assert mixed_norm(np.zeros(4), part) == 0
    assert mixed_norm(np.array([1.0, -2, 3, 0]), part) == 5
    assert mixed_norm(np.array([1.0, -2, 3]), make_partition(3, [1, 1, 1])) == 6


def test_objective_scalar():
    data = QuadraticData(np.array([[1.0]]), np.array([2.0]), 0.5)
    part = make_partition(1, [1])
    assert objective(np.zeros(1), data, part) == 0
    assert objective(np.array([1.5]), data, part) == pytest.approx(-1.125)


def test_objective_matches_weighted_residuals(rng):
    p, n, gamma, lam = 6, 30, 0.93, 0.4
    X = rng.standard_normal((n, p))
    y = rng.standard_normal(n)
    wts = gamma ** np.arange(n - 1, -1, -1)
    R = (X * wts[:, None]).T @ X
    r = X.T @ (wts * y)
    part = make_partition(p, [2, 4])
    data = QuadraticData(R, r, lam, gamma)
    for _ in range(10):
        w = rng.standard_normal(p)
        raw = 0.5 * np.sum(wts * (y - X @ w) ** 2) + lam * mixed_norm(w, part)
        assert objective(w, data, part) == pytest.approx(raw - 0.5 * np.sum(wts * y ** 2), abs=1e-8)


def test_objective_convex(rng):
    part = make_partition(5, [2, 3])
    data = random_data(rng, 5)
    for _ in range(100):
        w1, w2 = rng.standard_normal(5), rng.standard_normal(5)
        t = float(rng.uniform())
        lhs = objective(t * w1 + (1 - t) * w2, data, part)
        assert lhs <= t * objective(w1, data, part) + (1 - t) * objective(w2, data, part) + 1e-12


def test_quadratic_data_validation():
    with pytest.raises(BadConfig):
        QuadraticData(np.eye(2), np.zeros(2), -1.0)
    with pytest.raises(BadConfig):
        QuadraticData(np.eye(2), np.zeros(2), 1.0, gamma=1.5)
    with pytest.raises(BadConfig):
        QuadraticData(np.array([[1.0, 2.0], [0.0, 1.0]]), np.zeros(2), 1.0).validate()
    with pytest.raises(BadConfig):
        QuadraticData(-np.eye(2), np.zeros(2), 1.0).validate()


def test_assemble_examples():
    part = make_partition(1, [1])
    sets = apply_action(ActiveSets.empty(part), 4, 0)
    H, b, e = assemble_system(QuadraticData(np.array([[2.0]]), np.array([3.0]), 1.0), sets, SignMatrix(np.ones(1)))
    assert H.tolist() == [[2.0]] and b.tolist() == [3.0] and e.tolist() == [1.0]

    part2 = make_partition(2, [2])
    H, b, e = assemble_system(QuadraticData(np.eye(2), np.zeros(2), 1.0), ActiveSets.empty(part2), SignMatrix(np.zeros(2)))
    assert H.shape == (0, 0) and b.shape == (0,)

    sets = apply_action(ActiveSets.empty(part2), 4, 0)
    H, _, _ = assemble_system(QuadraticData(np.eye(2), np.zeros(2), 1.0), sets, SignMatrix(np.array([1.0, -1.0])))
    assert H[0, 0] == 2.0


def test_solve_active_examples():
    v = solve_active(np.array([[1.0]]), np.array([2.0]), np.array([1.0]), 0.5)
    assert v.tolist() == [1.5]
    b = np.array([1.0, -2.0])
    np.testing.assert_allclose(solve_active(np.eye(2), b, np.array([1.0, 0.0]), 0.0), b)


def test_solve_active_singular():
    with pytest.raises(SingularSystem):
        solve_active(np.zeros((2, 2)), np.ones(2), np.ones(2), 1.0)


def test_subgradient_scalar_identity():
    part = make_partition(1, [1])
    data = QuadraticData(np.array([[1.0]]), np.array([2.0]), 0.5)
    sets = apply_action(ActiveSets.empty(part), 4, 0)
    S = SignMatrix(np.ones(1))
    sol = solve_for_sets(data, sets, S)
    lzA, lzC = compute_subgradients(data, sets, S, sol.v)
    assert lzA.tolist() == [0.5] and lzC.size == 0


def test_zero_solution_subgradient_is_r(rng):
    part = make_partition(4, [2, 2])
    data = random_data(rng, 4)
    sets = ActiveSets.empty(part)
    lzA, lzC = compute_subgradients(data, sets, SignMatrix(np.zeros(4)), np.zeros(0))
    np.testing.assert_allclose(lzC, data.r)


def test_reconstruct_examples():
    part = make_partition(2, [2])
    assert not reconstruct_w(ActiveSets.empty(part), SignMatrix(np.zeros(2)), np.zeros(0), 2).any()
    sets = apply_action(ActiveSets.empty(part), 4, 0)
    w = reconstruct_w(sets, SignMatrix(np.array([1.0, -1.0])), np.array([2.0]), 2)
    assert w.tolist() == [2.0, -2.0]


def test_check_optimality_zero_solution(rng):
    part = make_partition(6, [3, 3])
    data = random_data(rng, 6)
    lmax = max(np.abs(data.r[list(g)]).sum() for g in part.groups)
    assert check_optimality(np.zeros(6), data.with_lambda(lmax * 1.001), part).passed
    rep = check_optimality(np.zeros(6), data.with_lambda(lmax * 0.9), part)
    assert not rep.passed
    worst = max(range(2), key=lambda m: np.abs(data.r[list(part.groups[m])]).sum())
    assert any(f.group == worst for f in rep.failures)
    assert f"group {worst + 1}" in str(rep)


def test_closed_form_at_oracle_sets(rng):
    for _ in range(25):
        p = int(rng.integers(3, 10))
        part = random_partition(rng, p)
        data = random_data(rng, p)
        w_ref = oracle_solve(data, part)
        if not w_ref.any():
            continue
        sets = compute_sets(w_ref, part, tol=1e-9, rtol=1e-7)
        S = build_sign_matrix(w_ref, sets)
        sol = solve_for_sets(data, sets, S)
        assert np.abs(sol.w - w_ref).max() <= 1e-6
        # KKT residual on A and B holds by construction
        T = lift_matrix(sets, S)
        resid = T.T @ (data.R @ sol.w - data.r) + data.lam * np.r_[np.ones(len(sets.P)), np.zeros(len(sets.B_idx))]
        assert np.abs(resid).max() <= 1e-8
        assert check_optimality(sol.w, data, part).passed
        viol = subgradient_violation(sol, data)
        assert max(viol.values()) <= 1e-8


def test_check_optimality_agrees_with_perturbation_probe(rng):
    for _ in range(8):
        p = int(rng.integers(3, 8))
        part = random_partition(rng, p)
        data = random_data(rng, p)
        w = oracle_solve(data, part)
        assert check_optimality(w, data, part).passed
        f0 = objective(w, data, part)
        deltas = rng.standard_normal((1000, p))
        deltas *= 1e-3 * rng.uniform(size=(1000, 1)) / np.linalg.norm(deltas, axis=1, keepdims=True)
        assert all(objective(w + d, data, part) >= f0 - 1e-12 for d in deltas)
        # a visibly suboptimal point fails both tests
        w_bad = w + 0.05 * rng.standard_normal(p)
        assert not check_optimality(w_bad, data, part).passed
        assert any(objective(w_bad + d, data, part) < objective(w_bad, data, part)
                   for d in deltas * 10)


def test_compact_solution_helpers(rng):
    part = make_partition(5, [2, 3])
    data = random_data(rng, 5, lam=0.1)
    w = oracle_solve(data, part)
    sol = solution_from_w(w, data, part, tol=1e-12)
    np.testing.assert_allclose(sol.w, w, atol=1e-12)
    assert sol.a.size == len(sol.sets.P)
    np.testing.assert_allclose(sol.subgradient(0.1), sol.lz / 0.1)
    with pytest.raises(BadConfig):
        sol.subgradient(0.0)
    zero = CompactSolution.zero(part, data.r)
    assert not zero.w.any()
    np.testing.assert_allclose(zero.lz_C, data.r)
