"""Exact multivariate Sigma-expectiles under independence or comonotonicity.

The expectile ``x`` solves, for every component ``k``,

    sum_i pi[k, i] * l(i, k)(x_i, x_k) = 0

with the pair terms

    l(i, j)(x_i, x_j) = alpha * E[(X_i - x_i)_+ 1{X_j > x_j}]
                        - (1 - alpha) * E[(x_i - X_i)_+ 1{X_j < x_j}],

which have closed forms in terms of marginal partial moments when the
margins are independent or comonotonic.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize

from . import margins as mg
from .margins import MarginSpec, Pareto, Burr, ScaledStudent
from .rootfind import ConvergenceError, damped_newton


class Dependence(str, enum.Enum):
    INDEPENDENT = "independent"
    COMONOTONIC = "comonotonic"


def _weights_array(weights, d):
    w = np.asarray(weights, dtype=float)
    if w.shape != (d, d):
        raise ValueError(f"weight matrix must be {d}x{d}, got shape {w.shape}")
    if not np.allclose(w, w.T, rtol=0, atol=0):
        raise ValueError("weight matrix must be symmetric")
    if np.any(w < 0) or np.any(np.diag(w) <= 0):
        raise ValueError("weights must be nonnegative with a positive diagonal")
    return w


@dataclass(frozen=True)
class ExpectileProblem:
    margins: tuple
    weights: np.ndarray = field(default=None, compare=False)
    dependence: Dependence = Dependence.INDEPENDENT
    alpha: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "margins", tuple(self.margins))
        d = len(self.margins)
        if d < 1:
            raise ValueError("need at least one margin")
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        w = np.ones((d, d)) if self.weights is None else _weights_array(self.weights, d)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "dependence", Dependence(self.dependence))

    @property
    def d(self) -> int:
        return len(self.margins)

    def with_alpha(self, alpha: float) -> "ExpectileProblem":
        return ExpectileProblem(self.margins, self.weights, self.dependence, alpha)

    def to_dict(self) -> dict:
        return {
            "margins": [m.to_dict() for m in self.margins],
            "weights": self.weights.tolist(),
            "dependence": self.dependence.value,
            "alpha": self.alpha,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ExpectileProblem":
        ms = [MarginSpec.from_dict(m) for m in obj["margins"]]
        return cls(ms, obj.get("weights"), Dependence(obj.get("dependence", "independent")), float(obj["alpha"]))


@dataclass
class ExpectileSolution:
    point: np.ndarray
    residual_norm: float
    iterations: int

    def to_dict(self) -> dict:
        return {
            "point": [float(v) for v in self.point],
            "residual_norm": float(self.residual_norm),
            "iterations": int(self.iterations),
        }


def self_term(alpha, m: MarginSpec, x):
    return alpha * mg.upper_partial_moment(m, x) - (1 - alpha) * mg.lower_partial_moment(m, x)


def pair_term_independent(alpha, m_i: MarginSpec, m_j: MarginSpec, x_i, x_j):
    sj = mg.survival(m_j, x_j)
    return alpha * sj * mg.upper_partial_moment(m_i, x_i) - (1 - alpha) * (1 - sj) * mg.lower_partial_moment(
        m_i, x_i
    )


def _same_shape(f_i, f_j) -> bool:
    if type(f_i) is not type(f_j):
        return False
    if isinstance(f_i, Pareto):
        return f_i.a == f_j.a
    if isinstance(f_i, Burr):
        return f_i.a == f_j.a and f_i.tau == f_j.tau
    return f_i.z == f_j.z


def pseudo_inverse_match(m_i: MarginSpec, m_j: MarginSpec, x_j):
    """mu with F_i(mu) = F_j(x_j), the comonotonic partner of x_j."""
    if m_i == m_j:
        return x_j
    fi, fj = m_i.family, m_j.family
    y = (x_j - m_j.location) / m_j.scale_mult
    if _same_shape(fi, fj):
        if isinstance(fi, Pareto):
            yi = fi.b / fj.b * max(y, 0.0)
        elif isinstance(fi, Burr):
            yi = (fi.b / fj.b) ** (1 / fi.tau) * max(y, 0.0)
        else:
            yi = fi.scale / fj.scale * y
        return m_i.location + m_i.scale_mult * yi
    s = mg.survival(m_j, x_j)
    if s >= 1.0:
        return m_i.lower_endpoint
    if s <= 0.0:
        return math.inf
    return mg.inverse_survival(m_i, s)


def pair_term_comonotonic(alpha, m_i: MarginSpec, m_j: MarginSpec, x_i, x_j):
    mu = pseudo_inverse_match(m_i, m_j, x_j)
    sj = mg.survival(m_j, x_j)
    up = sj * max(mu - x_i, 0.0) + mg.upper_partial_moment(m_i, max(x_i, mu))
    down = (1 - sj) * max(x_i - mu, 0.0) + mg.lower_partial_moment(m_i, min(x_i, mu))
    return alpha * up - (1 - alpha) * down


def _pair_term(dep: Dependence):
    return pair_term_comonotonic if dep is Dependence.COMONOTONIC else pair_term_independent


def system_residual(problem: ExpectileProblem, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.d,):
        raise ValueError(f"expected a point of length {problem.d}")
    pair = _pair_term(problem.dependence)
    a = problem.alpha
    w = problem.weights
    out = np.empty(problem.d)
    for k, mk in enumerate(problem.margins):
        r = w[k, k] * self_term(a, mk, x[k])
        for i, mi in enumerate(problem.margins):
            if i != k and w[k, i] != 0:
                r += w[k, i] * pair(a, mi, mk, x[i], x[k])
        out[k] = r
    return out


def residual_scale(problem: ExpectileProblem, x) -> np.ndarray:
    """Per-component normaliser |x_k| * P(X_k > x_k) + 1 for the convergence metric."""
    return np.array([abs(xk) * mg.survival(m, xk) + 1.0 for m, xk in zip(problem.margins, x)])


def scaled_residual_norm(problem: ExpectileProblem, x, r=None) -> float:
    if r is None:
        r = system_residual(problem, x)
    return float(np.max(np.abs(r) / residual_scale(problem, x)))


def _bracket_decreasing(g, x0, span):
    """Find lo < hi with g(lo) > 0 > g(hi) for a decreasing g."""
    lo, hi = x0 - span, x0 + span
    glo, ghi = g(lo), g(hi)
    step = span
    for _ in range(200):
        if glo > 0 and ghi < 0:
            return lo, hi
        step *= 2.0
        if glo <= 0:
            lo -= step
            glo = g(lo)
        if ghi >= 0:
            hi += step
            ghi = g(hi)
    raise ConvergenceError("could not bracket a root")


def univariate_expectile(m: MarginSpec, alpha: float, tol: float = 1e-12) -> float:
    """Zero of ``self_term(alpha, m, .)``; equals the mean at alpha = 1/2."""
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    g = lambda x: self_term(alpha, m, x)  # noqa: E731
    start = mg.mean(m)
    if g(start) == 0.0:
        return start
    if alpha > 0.5:
        start = max(start, float(mg.quantile(m, alpha)) * 0.5)
    span = max(abs(start), m.scale_mult, 1.0)
    lo, hi = _bracket_decreasing(g, start, span)
    return optimize.brentq(g, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500)


def _gauss_seidel(problem: ExpectileProblem, x, tol, sweeps):
    x = np.array(x, dtype=float)
    for _ in range(sweeps):
        for k in range(problem.d):

            def g(t, k=k):
                y = x.copy()
                y[k] = t
                return system_residual(problem, y)[k]

            span = max(abs(x[k]) * 0.1, problem.margins[k].scale_mult)
            lo, hi = _bracket_decreasing(g, x[k], span)
            x[k] = optimize.brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
        if scaled_residual_norm(problem, x) <= tol:
            break
    return x


def _comonotonic_curve_polish(problem: ExpectileProblem, x):
    """Re-solve on the curve of common quantile levels, ``x_i = F_i^{-1}(1 - s)``.

    Comonotonic roots lie on this curve, where the system's Jacobian is
    singular in the transverse direction, so Newton pins the point down only
    to about the square root of machine precision. Along the curve the summed
    residual is a monotone scalar function of ``log s`` with a simple root.
    Returns None when no bracket is found.
    """
    ms = problem.margins

    def curve(u):
        return np.array([mg.inverse_survival(m, math.exp(u)) for m in ms])

    def g(u):
        return float(np.sum(system_residual(problem, curve(u))))

    s0 = mg.survival(ms[0], x[0])
    if not 0.0 < s0 < 1.0:
        return None
    u_max = math.log1p(-1e-15)
    u0 = min(math.log(s0), u_max)
    lo, hi, step = u0 - 1e-3, min(u0 + 1e-3, u_max), 1e-3
    for _ in range(60):
        glo, ghi = g(lo), g(hi)
        if glo <= 0.0 <= ghi:
            break
        step *= 2.0
        if glo > 0.0:
            lo -= step
        if ghi < 0.0:
            if hi >= u_max:
                return None
            hi = min(hi + step, u_max)
    else:
        return None
    u = optimize.brentq(g, lo, hi, xtol=1e-15, maxiter=500)
    return curve(u)


def solve_multivariate_expectile(
    problem: ExpectileProblem, tol: float = 1e-9, max_iter: int = 100
) -> ExpectileSolution:
    """Solve the first-order system by damped Newton, with Gauss-Seidel fallback.

    Newton starts from the vector of univariate expectiles. If it stalls, each
    coordinate is solved in turn by bracketing (every residual component is
    decreasing in its own coordinate) and Newton is restarted from there.
    Comonotonic solutions are finally refined along the curve of common
    quantile levels, and that point is kept when it satisfies the system at
    least as well.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    x0 = np.array([univariate_expectile(m, problem.alpha) for m in problem.margins])
    fun = lambda x: system_residual(problem, x)  # noqa: E731
    norm = lambda x, f: scaled_residual_norm(problem, x, f)  # noqa: E731
    res = damped_newton(fun, x0, tol, max_iter, norm)
    total = res.iterations
    best_x, best_norm = res.x, res.norm
    if res.norm > tol and total < max_iter:
        x1 = _gauss_seidel(problem, res.x, tol, sweeps=max(1, min(50, max_iter - total)))
        total += 1
        res = damped_newton(fun, x1, tol, max(1, max_iter - total), norm)
        total += res.iterations
        if res.norm < best_norm:
            best_x, best_norm = res.x, res.norm
    if problem.dependence is Dependence.COMONOTONIC and problem.d > 1:
        xc = _comonotonic_curve_polish(problem, best_x)
        if xc is not None:
            nc = scaled_residual_norm(problem, xc)
            if nc <= max(tol, best_norm):
                best_x, best_norm = xc, nc
    if not best_norm <= tol:
        raise ConvergenceError(
            f"expectile solver did not converge: residual {best_norm:.3e} > {tol:.1e}",
            best_point=best_x,
            residual_norm=best_norm,
            iterations=total,
        )
    return ExpectileSolution(best_x, best_norm, total)


__all__ = [
    "Dependence",
    "ExpectileProblem",
    "ExpectileSolution",
    "self_term",
    "pair_term_independent",
    "pair_term_comonotonic",
    "pseudo_inverse_match",
    "system_residual",
    "scaled_residual_norm",
    "univariate_expectile",
    "solve_multivariate_expectile",
]
