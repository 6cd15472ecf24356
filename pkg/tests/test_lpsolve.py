import numpy as np
import pytest

from lpreg.lpsolve import (
    FLAG_DEGENERATE,
    LpProblem,
    LpSolution,
    lp_minimize,
    lp_minimize_batch,
)


def brute_force_1d(y, w, p, pad=0.25, step=1e-4):
    """Grid search over the response range, then golden-section refinement."""
    lo, hi = y.min() - pad, y.max() + pad
    grid = np.arange(lo, hi, step)
    obj = (w[None, :] * np.abs(y[None, :] - grid[:, None]) ** p).sum(axis=1)
    b = grid[np.argmin(obj)]
    a, c = b - 2 * step, b + 2 * step
    f = lambda t: float((w * np.abs(y - t) ** p).sum())  # noqa: E731
    gr = (np.sqrt(5.0) - 1.0) / 2.0
    x1, x2 = c - gr * (c - a), a + gr * (c - a)
    for _ in range(90):
        if f(x1) < f(x2):
            c, x2 = x2, x1
            x1 = c - gr * (c - a)
        else:
            a, x1 = x1, x2
            x2 = a + gr * (c - a)
    return (a + c) / 2.0


def constant_problem(y, p, w=None, start=None):
    y = np.asarray(y, float)
    w = np.ones_like(y) if w is None else np.asarray(w, float)
    start = np.array([np.average(y, weights=np.maximum(w, 1e-300))]) if start is None else start
    return LpProblem(y, np.ones((y.size, 1)), w, p, start)


class TestExamples:
    def test_weighted_mean_p2(self):
        sol = lp_minimize(constant_problem([0.0, 1.0], 2.0))
        assert sol.coefficients[0] == pytest.approx(0.5, abs=1e-12)

    def test_symmetry_p4(self):
        sol = lp_minimize(constant_problem([0.0, 1.0], 4.0))
        assert sol.coefficients[0] == pytest.approx(0.5, abs=1e-10)

    def test_three_point_p4(self):
        # min b^4 + 2(1-b)^4; stationarity gives b = 2^(1/3) / (1 + 2^(1/3))
        y = np.array([0.0, 1.0, 1.0])
        sol = lp_minimize(constant_problem(y, 4.0))
        oracle = brute_force_1d(y, np.ones(3), 4.0)
        assert sol.coefficients[0] == pytest.approx(oracle, abs=1e-6)
        assert sol.coefficients[0] == pytest.approx(0.5575066659755579, abs=1e-8)

    def test_objective_consistent_with_coefficients(self):
        y = np.array([0.0, 1.0, 1.0])
        sol = lp_minimize(constant_problem(y, 4.0))
        direct = float(np.sum(np.abs(y - sol.coefficients[0]) ** 4))
        assert sol.objective == pytest.approx(direct, rel=1e-12)


class TestOracleEquivalence:
    @pytest.mark.parametrize("p", [1.3, 3.0, 7.0])
    def test_random_constant_problems(self, p):
        rng = np.random.default_rng(101)
        for _ in range(120):
            n = int(rng.integers(2, 13))
            y = rng.normal(0.0, 1.0, n)
            w = rng.uniform(0.05, 1.0, n)
            sol = lp_minimize(constant_problem(y, p, w))
            assert abs(sol.coefficients[0] - brute_force_1d(y, w, p)) < 1e-3

    def test_least_squares_reduction(self):
        rng = np.random.default_rng(202)
        for _ in range(250):
            n = int(rng.integers(3, 51))
            d = int(rng.integers(1, 4))
            X = rng.normal(size=(n, d))
            y = rng.normal(size=n)
            w = rng.uniform(0.01, 1.0, n)
            sol = lp_minimize(LpProblem(y, X, w, 2.0, np.zeros(d)))
            sw = np.sqrt(w)
            ref = np.linalg.lstsq(X * sw[:, None], y * sw, rcond=None)[0]
            np.testing.assert_allclose(sol.coefficients, ref, atol=1e-8)


class TestProperties:
    @pytest.mark.parametrize("p", [1.0, 1.5, 4.0, 11.0])
    def test_monotone_descent(self, p):
        # The iterate path is deterministic, so capped runs expose its prefix.
        rng = np.random.default_rng(7)
        y = rng.normal(0.0, 1.0, 20)
        X = np.column_stack([np.ones(20), rng.normal(size=20)])
        w = rng.uniform(0.1, 1.0, 20)
        start = np.zeros(2)
        objs = [
            lp_minimize(LpProblem(y, X, w, p, start), max_iter=k).objective
            for k in range(1, 25)
        ]
        assert np.all(np.diff(objs) <= 1e-14)

    def test_translation_equivariance(self):
        rng = np.random.default_rng(8)
        y = rng.normal(0.0, 1.0, 15)
        w = rng.uniform(0.1, 1.0, 15)
        c = 3.7
        base = lp_minimize(constant_problem(y, 5.0, w))
        shifted = lp_minimize(constant_problem(y + c, 5.0, w))
        assert shifted.coefficients[0] - base.coefficients[0] == pytest.approx(c, abs=1e-10)

    def test_p1_runs_and_matches_oracle(self):
        rng = np.random.default_rng(9)
        y = rng.normal(0.0, 1.0, 11)
        w = np.ones(11)
        sol = lp_minimize(constant_problem(y, 1.0, w))
        # weighted median is a minimizer of the L1 objective
        oracle_obj = (w * np.abs(y - np.median(y))).sum()
        assert sol.objective <= oracle_obj + 1e-8

    def test_exponent_below_one_rejected(self):
        with pytest.raises(ValueError):
            constant_problem([0.0, 1.0], 0.9)

    def test_batch_matches_single(self):
        rng = np.random.default_rng(10)
        G, n = 17, 12
        y = rng.normal(size=(G, n))
        X = np.stack([np.column_stack([np.ones(n), rng.normal(size=n)]) for _ in range(G)])
        w = rng.uniform(0.1, 1.0, size=(G, n))
        start = np.zeros((G, 2))
        out = lp_minimize_batch(y, X, w, 3.0, start)
        for g in range(G):
            sol = lp_minimize(LpProblem(y[g], X[g], w[g], 3.0, start[g]))
            np.testing.assert_allclose(out["beta"][g], sol.coefficients, atol=1e-12)


class TestDegenerate:
    def test_too_few_weighted_rows(self):
        y = np.array([1.0, 2.0, 3.0])
        X = np.column_stack([np.ones(3), np.arange(3.0)])
        w = np.array([1.0, 0.0, 0.0])
        sol = lp_minimize(LpProblem(y, X, w, 4.0, np.zeros(2)))
        assert sol.condition_flag == FLAG_DEGENERATE
        assert np.all(np.isfinite(sol.coefficients))

    def test_rank_deficient_design(self):
        y = np.array([1.0, 2.0, 3.0, 4.0])
        x = np.ones(4)
        X = np.column_stack([np.ones(4), x])  # duplicate columns
        sol = lp_minimize(LpProblem(y, X, np.ones(4), 2.0, np.zeros(2)))
        assert sol.condition_flag == FLAG_DEGENERATE
        assert np.all(np.isfinite(sol.coefficients))

    def test_solution_type(self):
        sol = lp_minimize(constant_problem([0.0, 1.0], 2.0))
        assert isinstance(sol, LpSolution)
        assert sol.converged
