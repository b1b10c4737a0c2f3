"""Descent wrapper contract."""

import numpy as np
import pytest

from xferxai.errors import NonFiniteError
from xferxai.optimize import minimize


def quadratic(x):
    return float((x[0] - 3.0) ** 2 + 2.0 * (x[1] + 1.0) ** 2)


def quadratic_grad(x):
    return np.array([2.0 * (x[0] - 3.0), 4.0 * (x[1] + 1.0)])


def test_minimize_reaches_the_optimum():
    res = minimize(quadratic, [0.0, 0.0], gradient=quadratic_grad)
    assert res.converged
    assert np.allclose(res.solution, [3.0, -1.0], atol=1e-6)
    assert res.fun == pytest.approx(0.0, abs=1e-10)
    assert res.final_gradient_norm <= 1e-6
    assert res.iterations > 0


def test_minimize_without_explicit_gradient():
    res = minimize(quadratic, [10.0, 10.0])
    assert np.allclose(res.solution, [3.0, -1.0], atol=1e-4)


def test_minimize_is_deterministic():
    a = minimize(quadratic, [5.0, 5.0], gradient=quadratic_grad)
    b = minimize(quadratic, [5.0, 5.0], gradient=quadratic_grad)
    assert a.solution.tolist() == b.solution.tolist()
    assert a.iterations == b.iterations


def test_non_finite_start_raises():
    with pytest.raises(NonFiniteError):
        minimize(lambda x: float("nan"), [0.0])


def test_non_finite_during_search_raises():
    def cliff(x):
        # minimum at 5 sits past the edge, so the search must step onto NaN
        return float("nan") if x[0] > 4.5 else float((x[0] - 5.0) ** 2) * 1e8

    with pytest.raises(NonFiniteError):
        minimize(cliff, [0.0], gradient=lambda x: np.array([2e8 * (x[0] - 5.0)]))


def test_max_iter_limits_work():
    res = minimize(quadratic, [100.0, 100.0], gradient=quadratic_grad, max_iter=1)
    assert res.iterations <= 1
    assert not res.converged
