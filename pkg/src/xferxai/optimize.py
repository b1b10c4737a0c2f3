"""Quasi-Newton minimization behind the transfer trainer.

Thin contract wrapper over SciPy's BFGS: deterministic for fixed
inputs, reports iterations and the final gradient norm, and surfaces
line-search failure as a flag on the best iterate instead of an
exception.
"""

from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .errors import NonFiniteError


@dataclass
class MinimizeResult:
    solution: np.ndarray
    fun: float
    iterations: int
    final_gradient_norm: float
    converged: bool
    line_search_failed: bool
    message: str


def minimize(objective, x0, gradient=None, max_iter=1000, grad_tolerance=1e-8,
             seed=None):
    """BFGS descent from x0 until the gradient norm meets the tolerance.

    ``seed`` is not used by the descent itself (BFGS is deterministic);
    it is accepted so callers can thread the seed that generated x0
    into their reports.
    """
    x0 = np.asarray(x0, dtype=float)
    f0 = objective(x0)
    if not np.isfinite(f0):
        raise NonFiniteError("objective is non-finite at the starting point")

    def checked(x):
        value = objective(x)
        if not np.isfinite(value):
            raise NonFiniteError("objective became non-finite during the search")
        return value

    res = scipy.optimize.minimize(
        checked,
        x0,
        jac=gradient,
        method="BFGS",
        options={"maxiter": int(max_iter), "gtol": float(grad_tolerance)},
    )
    grad_norm = float(np.max(np.abs(res.jac))) if res.jac is not None else np.nan
    return MinimizeResult(
        solution=np.asarray(res.x, dtype=float),
        fun=float(res.fun),
        iterations=int(res.nit),
        final_gradient_norm=grad_norm,
        converged=bool(res.status == 0),
        line_search_failed=bool(res.status == 2),
        message=str(res.message),
    )
