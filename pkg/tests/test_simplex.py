import numpy as np
import pytest
from scipy.optimize import linprog

from riskauction.simplex import linprog_max


def _highs(c, A_ub, b_ub, A_eq, b_eq, upper):
    bounds = [(0, None if np.isinf(u) else u) for u in upper]
    return linprog(-c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")


def _random_lp(rng):
    n = int(rng.integers(2, 9))
    m_ub = int(rng.integers(0, 6))
    m_eq = int(rng.integers(0, 3))
    x0 = rng.uniform(0, 1, n)  # feasible by construction
    A_ub = rng.normal(size=(m_ub, n))
    b_ub = A_ub @ x0 + rng.uniform(0, 1, m_ub)
    A_eq = rng.normal(size=(m_eq, n))
    b_eq = A_eq @ x0
    upper = np.where(rng.random(n) < 0.7, rng.uniform(1, 3, n), np.inf)
    c = rng.normal(size=n)
    return c, A_ub, b_ub, A_eq, b_eq, upper


@pytest.mark.parametrize("seed", range(60))
def test_matches_highs_on_random_lps(seed):
    c, A_ub, b_ub, A_eq, b_eq, upper = _random_lp(np.random.default_rng(seed))
    ref = _highs(c, A_ub, b_ub, A_eq, b_eq, upper)
    res = linprog_max(c, A_ub, b_ub, A_eq, b_eq, upper)
    if ref.status == 3:
        assert res.status == "unbounded"
        return
    assert ref.status == 0
    assert res.status == "optimal"
    assert res.objective == pytest.approx(-ref.fun, rel=1e-8, abs=1e-8)
    x = res.x
    assert np.all(x >= -1e-9) and np.all(x <= upper + 1e-9)
    if A_ub.size:
        assert np.all(A_ub @ x <= b_ub + 1e-8)
    if A_eq.size:
        np.testing.assert_allclose(A_eq @ x, b_eq, atol=1e-8)


def test_infeasible():
    res = linprog_max([1.0, 1.0], A_ub=[[1.0, 1.0]], b_ub=[-1.0])
    assert res.status == "infeasible"


def test_unbounded():
    res = linprog_max([1.0, 0.0], A_ub=[[-1.0, 1.0]], b_ub=[1.0])
    assert res.status == "unbounded"


def test_upper_bounds_without_rows():
    res = linprog_max([1.0, -2.0, 3.0], upper=[2.0, 5.0, 0.5])
    assert res.status == "optimal"
    np.testing.assert_allclose(res.x, [2.0, 0.0, 0.5])
    assert res.objective == pytest.approx(3.5)


def test_beale_cycling_example():
    # classic instance on which Dantzig's rule without anti-cycling loops forever
    c = np.array([0.75, -150.0, 0.02, -6.0])
    A = np.array([[0.25, -60.0, -0.04, 9.0], [0.5, -90.0, -0.02, 3.0], [0.0, 0.0, 1.0, 0.0]])
    b = np.array([0.0, 0.0, 1.0])
    res = linprog_max(c, A, b)
    assert res.status == "optimal"
    assert res.objective == pytest.approx(0.05, abs=1e-12)


def test_equality_only():
    res = linprog_max([1.0, 2.0], A_eq=[[1.0, 1.0]], b_eq=[1.0])
    np.testing.assert_allclose(res.x, [0.0, 1.0], atol=1e-12)
