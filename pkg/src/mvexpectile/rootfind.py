"""Damped Newton iteration with a central finite-difference Jacobian."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


class ConvergenceError(RuntimeError):
    """Iteration budget exhausted before reaching the requested tolerance."""

    def __init__(self, message, best_point=None, residual_norm=None, iterations=0):
        super().__init__(message)
        self.best_point = None if best_point is None else np.asarray(best_point, dtype=float)
        self.residual_norm = residual_norm
        self.iterations = iterations


@dataclass
class NewtonResult:
    x: np.ndarray
    norm: float
    iterations: int
    stalled: bool


def fd_jacobian(fun, x, f0=None, steps=None, rel_step=1e-6):
    """Central differences; ``steps`` overrides the default 1e-6 * (1 + |x|)."""
    x = np.asarray(x, dtype=float)
    if steps is None:
        steps = rel_step * (1.0 + np.abs(x))
    m = (f0 if f0 is not None else fun(x)).size
    jac = np.empty((m, x.size))
    for j in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[j] += steps[j]
        xm[j] -= steps[j]
        jac[:, j] = (fun(xp) - fun(xm)) / (xp[j] - xm[j])
    return jac


def damped_newton(
    fun: Callable[[np.ndarray], np.ndarray],
    x0,
    tol: float,
    max_iter: int = 100,
    norm: Callable[[np.ndarray, np.ndarray], float] | None = None,
    rel_step: float = 1e-6,
    max_halvings: int = 40,
) -> NewtonResult:
    """Solve ``fun(x) = 0`` from ``x0``.

    ``norm(x, f)`` is the convergence metric (max-norm of ``f`` by default).
    Each iteration backtracks from the full Newton step; when the full step
    is accepted the doubled step is tried as well, which restores fast
    convergence at roots where the Jacobian is singular. The difference step
    shrinks with the last Newton step so the Jacobian stays resolved near
    such roots. Iteration continues past ``tol`` while it still improves.
    The result is flagged ``stalled`` when no step reduces the metric
    before ``tol`` is met.
    """
    if norm is None:
        norm = lambda x, f: float(np.max(np.abs(f)))  # noqa: E731
    x = np.array(x0, dtype=float)
    f = fun(x)
    cur = norm(x, f)
    base = rel_step * (1.0 + np.abs(x))
    steps = base.copy()
    it = 0
    while it < max_iter and cur > 0.0:
        it += 1
        jac = fd_jacobian(fun, x, f, steps)
        try:
            step = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(jac, -f, rcond=None)[0]
        if not np.all(np.isfinite(step)):
            return NewtonResult(x, cur, it, cur > tol)
        lam = 1.0
        best = None
        for _ in range(max_halvings):
            xn = x + lam * step
            fn = fun(xn)
            nn = norm(xn, fn)
            if np.isfinite(nn) and nn < cur:
                best = (xn, fn, nn, lam)
                break
            lam *= 0.5
        if best is None:
            return NewtonResult(x, cur, it, cur > tol)
        if best[3] == 1.0:
            x2 = x + 2.0 * step
            f2 = fun(x2)
            n2 = norm(x2, f2)
            if np.isfinite(n2) and n2 < best[2]:
                best = (x2, f2, n2, 2.0)
        xn, fn, nn, lam = best
        moved = np.abs(xn - x)
        base = rel_step * (1.0 + np.abs(xn))
        steps = np.clip(1e-2 * moved, 1e-12 * (1.0 + np.abs(xn)), base)
        x, f, cur = xn, fn, nn
        if cur <= tol and (lam < 1.0 or np.all(moved <= 4e-16 * (1.0 + np.abs(x)))):
            break
    return NewtonResult(x, cur, it, False)
