import numpy as np
import pytest
from scipy.optimize import linprog

from treem3n.lp import LPError, simplex


def check_certificate(c, A, b, res, tol=1e-8):
    assert np.all(res.x >= -tol)
    assert np.allclose(A @ res.x, b, atol=tol)
    # dual feasibility and zero duality gap certify optimality
    assert np.all(A.T @ res.duals <= c + tol)
    assert b @ res.duals == pytest.approx(c @ res.x, abs=tol)


def random_bounded_lp(rng, m, n):
    A = rng.normal(size=(m, n))
    x0 = rng.random(n)
    A = np.vstack([A, np.ones(n)])  # keeps the feasible set bounded
    b = A @ x0
    c = rng.normal(size=n)
    return c, A, b


def test_matches_highs_on_random_lps(rng):
    for _ in range(40):
        m, n = int(rng.integers(1, 6)), int(rng.integers(6, 12))
        c, A, b = random_bounded_lp(rng, m, n)
        res = simplex(c, A, b)
        ref = linprog(c, A_eq=A, b_eq=b, bounds=(0, None), method="highs")
        assert ref.status == 0
        assert res.value == pytest.approx(ref.fun, abs=1e-8)
        check_certificate(c, A, b, res)


def test_redundant_and_negative_rows(rng):
    c, A, b = random_bounded_lp(rng, 3, 8)
    A2 = np.vstack([A, A[0] + A[1], -A[2]])
    b2 = np.concatenate([b, [b[0] + b[1], -b[2]]])
    res = simplex(c, A2, b2)
    assert res.value == pytest.approx(simplex(c, A, b).value, abs=1e-9)
    check_certificate(c, A2, b2, res)


def test_infeasible_and_unbounded():
    with pytest.raises(LPError, match="infeasible"):
        simplex([1.0, 1.0], [[1.0, 1.0], [1.0, 1.0]], [1.0, 2.0])
    with pytest.raises(LPError, match="unbounded"):
        simplex([-1.0, 0.0], [[1.0, -1.0]], [0.0])


def test_pivot_guard(rng):
    c, A, b = random_bounded_lp(rng, 4, 10)
    with pytest.raises(LPError, match="pivot guard"):
        simplex(c, A, b, max_iter=1)


def test_degenerate_cycling_example():
    # Beale's example cycles under textbook Dantzig pricing
    c = np.array([-0.75, 150.0, -0.02, 6.0, 0, 0, 0])
    A = np.array([[0.25, -60.0, -0.04, 9.0, 1, 0, 0],
                  [0.5, -90.0, -0.02, 3.0, 0, 1, 0],
                  [0.0, 0.0, 1.0, 0.0, 0, 0, 1]])
    b = np.array([0.0, 0.0, 1.0])
    res = simplex(c, A, b)
    assert res.value == pytest.approx(-0.05, abs=1e-12)
    check_certificate(c, A, b, res)
