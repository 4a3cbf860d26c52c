import numpy as np
import pytest
from scipy.optimize import linprog as scipy_linprog

from arena.lp import LinearProgram, lp_solve


def test_single_variable_box():
    res = lp_solve(LinearProgram(c=[1.0], a_ub=[[1.0]], b_ub=[3.0]))
    assert res.status == "optimal"
    assert res.objective == pytest.approx(3.0)


def test_two_variable_vertex():
    res = lp_solve(LinearProgram(c=[1.0, 1.0], a_ub=[[1, 2], [3, 1]], b_ub=[4, 6]))
    assert res.status == "optimal"
    assert res.objective == pytest.approx(2.8, abs=1e-9)
    assert res.x == pytest.approx([1.6, 1.2], abs=1e-9)


def test_infeasible():
    res = lp_solve(LinearProgram(c=[1.0], a_ub=[[1.0]], b_ub=[-1.0]))
    assert res.status == "infeasible"


def test_unbounded():
    assert lp_solve(LinearProgram(c=[1.0])).status == "unbounded"


def test_equality_and_free_variables():
    # max x - y with x + y = 1, y free but pushed to its lower bound 0 is
    # unbounded below for y... bound y in [-2, None] to pin the optimum.
    lp = LinearProgram(
        c=[1.0, -1.0],
        a_eq=[[1.0, 1.0]],
        b_eq=[1.0],
        bounds=[(0.0, None), (-2.0, None)],
    )
    res = lp_solve(lp)
    assert res.status == "optimal"
    assert res.objective == pytest.approx(5.0)
    assert res.x == pytest.approx([3.0, -2.0])


def test_minimization_direction():
    lp = LinearProgram(c=[2.0, 1.0], a_ub=[[-1, -1]], b_ub=[-3.0], maximize=False)
    res = lp_solve(lp)
    assert res.status == "optimal"
    assert res.objective == pytest.approx(3.0)
    assert res.x == pytest.approx([0.0, 3.0])


def test_redundant_equalities():
    lp = LinearProgram(
        c=[1.0, 1.0],
        a_eq=[[1.0, 1.0], [2.0, 2.0]],
        b_eq=[1.0, 2.0],
    )
    res = lp_solve(lp)
    assert res.status == "optimal"
    assert res.objective == pytest.approx(1.0)


def test_against_scipy_on_random_programs(rng):
    agree = 0
    for trial in range(120):
        n = int(rng.integers(2, 6))
        m = int(rng.integers(1, 7))
        c = rng.uniform(-2, 2, size=n)
        a_ub = rng.uniform(-2, 2, size=(m, n))
        b_ub = rng.uniform(-1, 2, size=m)
        use_eq = trial % 3 == 0
        a_eq = rng.uniform(-1, 1, size=(1, n)) if use_eq else None
        b_eq = rng.uniform(0, 1, size=1) if use_eq else None
        ours = lp_solve(LinearProgram(c=c, a_ub=a_ub, b_ub=b_ub, a_eq=a_eq, b_eq=b_eq))
        ref = scipy_linprog(-c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
                            bounds=[(0, None)] * n, method="highs")
        if ref.status == 2:
            assert ours.status == "infeasible"
        elif ref.status == 3:
            assert ours.status == "unbounded"
        else:
            assert ours.status == "optimal"
            assert ours.objective == pytest.approx(-ref.fun, abs=1e-7)
            agree += 1
    assert agree > 40  # plenty of bounded-optimal instances in the mix
