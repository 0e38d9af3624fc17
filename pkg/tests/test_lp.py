import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from guidepath.lp import LinearProgram, solve_lp
from oracles import brute_force, random_bounded_lp


def check_feasible(lp, x, tol=1e-7):
    assert np.all(x >= lp.lb - tol) and np.all(x <= lp.ub + tol)
    if len(lp.b_ineq):
        scale = np.maximum(1.0, np.abs(lp.A_ineq).max(axis=1))
        assert np.all((lp.A_ineq @ x - lp.b_ineq) / scale <= tol)
    if len(lp.b_eq):
        scale = np.maximum(1.0, np.abs(lp.A_eq).max(axis=1))
        assert np.all(np.abs(lp.A_eq @ x - lp.b_eq) / scale <= tol)


def test_single_variable():
    sol = solve_lp(LinearProgram([1.0], A_ineq=[[-1.0]], b_ineq=[-1.0], lb=[-np.inf], ub=[np.inf]))
    assert sol.status == "optimal"
    assert sol.values[0] == pytest.approx(1.0)
    assert sol.objective_value == pytest.approx(1.0)


def test_degenerate_face():
    sol = solve_lp(LinearProgram([-1.0, -1.0], A_ineq=[[1.0, 1.0]], b_ineq=[1.0]))
    assert sol.status == "optimal"
    assert sol.objective_value == pytest.approx(-1.0)
    assert sol.values.sum() == pytest.approx(1.0)


def test_infeasible_and_unbounded():
    assert solve_lp(LinearProgram([1.0], A_ineq=[[1.0]], b_ineq=[-1.0])).status == "infeasible"
    assert solve_lp(LinearProgram([-1.0], A_ineq=[[-1.0]], b_ineq=[0.0])).status == "unbounded"
    free = solve_lp(LinearProgram([1.0, 0.0], A_eq=[[1.0, -1.0]], b_eq=[0.0], lb=[-np.inf, -np.inf]))
    assert free.status == "unbounded"


def test_equality_and_free_variables():
    # min x + 2y  s.t.  x + y = 3, x - y <= 1, y free, x in [0, 10]
    lp = LinearProgram([1.0, 2.0], [[1.0, 1.0]], [3.0], [[1.0, -1.0]], [1.0], [0.0, -np.inf], [10.0, np.inf])
    sol = solve_lp(lp)
    assert sol.status == "optimal"
    np.testing.assert_allclose(sol.values, [2.0, 1.0], atol=1e-9)


def test_redundant_equalities():
    lp = LinearProgram([1.0, 1.0], [[1.0, 2.0], [2.0, 4.0]], [2.0, 4.0])
    sol = solve_lp(lp)
    assert sol.status == "optimal" and sol.objective_value == pytest.approx(1.0)


def test_dual_certificate(rng):
    """Weak duality: the reported multipliers give a lower bound that meets
    the primal objective on problems with only inequality rows and x >= 0."""
    for _ in range(30):
        n, m = 3, 4
        A = rng.uniform(0.1, 2, (m, n))
        b = rng.uniform(1, 3, m)
        c = -rng.uniform(0.1, 1, n)
        sol = solve_lp(LinearProgram(c, A_ineq=A, b_ineq=b))
        assert sol.status == "optimal"
        y = sol.duals_ineq
        assert np.all(y <= 1e-9)
        # c - A^T y >= 0 makes y dual feasible; b.y bounds the optimum
        assert np.all(c - A.T @ y >= -1e-9)
        assert float(b @ y) == pytest.approx(sol.objective_value, abs=1e-9)


def test_random_bounded_against_brute_force(rng):
    for k in range(150):
        lp = random_bounded_lp(rng, infeasible=(k % 5 == 0))
        status, val = brute_force(lp)
        sol = solve_lp(lp)
        assert sol.status == status
        if status == "optimal":
            assert sol.objective_value == pytest.approx(val, abs=1e-6)
            check_feasible(lp, sol.values)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 100.0))
def test_row_scaling_keeps_status(seed, factor):
    r = np.random.default_rng(seed)
    lp = random_bounded_lp(r, infeasible=bool(seed % 3 == 0))
    base = solve_lp(lp)
    k = int(r.integers(0, len(lp.b_ineq)))
    A = lp.A_ineq.copy()
    b = lp.b_ineq.copy()
    A[k] *= factor
    b[k] *= factor
    scaled = solve_lp(LinearProgram(lp.c, lp.A_eq, lp.b_eq, A, b, lp.lb, lp.ub))
    assert scaled.status == base.status
    if base.status == "optimal":
        assert scaled.objective_value == pytest.approx(base.objective_value, abs=1e-6)


def test_deterministic(rng):
    lp = random_bounded_lp(rng)
    a, b = solve_lp(lp), solve_lp(lp)
    assert a.status == b.status
    assert a.values.tobytes() == b.values.tobytes()


def test_malformed_input():
    with pytest.raises(ValueError):
        LinearProgram([1.0, 2.0], A_ineq=[[1.0, 2.0]], b_ineq=[1.0, 2.0])
    with pytest.raises(ValueError):
        LinearProgram([np.nan])
    with pytest.raises(ValueError):
        LinearProgram([1.0], lb=[np.inf])
