"""Extreme-level limits of multivariate expectiles.

As alpha -> 1 the vector ``((1 - alpha) / P(X_1 > e_1), e_2 / e_1, ..., e_d / e_1)``
converges to a limit ``(eta, beta_2, ..., beta_d)`` that depends only on the
common tail index ``theta``, the tail-equivalence constants ``c`` and the
bivariate upper tail dependence functions ``lambda(u, v)``.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import mpmath
import numpy as np
from scipy import integrate

from . import margins as mg
from .rootfind import ConvergenceError, damped_newton, fd_jacobian


@dataclass(frozen=True)
class LimitVector:
    eta: float
    beta: np.ndarray

    def __post_init__(self):
        b = np.array(self.beta, dtype=float)
        if b.ndim != 1 or b.size < 1:
            raise ValueError("beta must be a non-empty vector")
        if b[0] != 1.0:
            raise ValueError("beta[0] must equal 1")
        if np.any(b < 0) or self.eta < 0:
            raise ValueError("eta and beta must be nonnegative")
        b.setflags(write=False)
        object.__setattr__(self, "beta", b)
        object.__setattr__(self, "eta", float(self.eta))

    def to_dict(self) -> dict:
        return {"eta": self.eta, "beta": [float(v) for v in self.beta]}

    @classmethod
    def from_dict(cls, obj) -> "LimitVector":
        return cls(float(obj["eta"]), obj["beta"])


class ModelKind(str, enum.Enum):
    INDEPENDENT = "independent"
    COMONOTONIC = "comonotonic"
    ARCHIMEDEAN = "archimedean"
    TABULATED = "tabulated"


def _check_homogeneous(fn, rng_seed=12345, n=64, rtol=1e-9):
    rng = np.random.default_rng(rng_seed)
    for _ in range(n):
        u, v = rng.uniform(0.0, 5.0, size=2)
        t = rng.uniform(0.05, 20.0)
        val = fn(u, v)
        if not (-1e-12 <= val <= min(u, v) * (1 + rtol) + 1e-12):
            raise ValueError(f"tail dependence function violates 0 <= lambda <= min at ({u}, {v})")
        scaled = fn(t * u, t * v)
        if abs(scaled - t * val) > rtol * max(1.0, abs(t * val)):
            raise ValueError(f"tail dependence function is not 1-homogeneous at ({u}, {v}), t={t}")


@dataclass(frozen=True)
class TailDependenceModel:
    """Bivariate upper tail dependence ``lambda(u, v)`` shared by all pairs.

    Tabulated models carry one callable per unordered pair ``(i, k)``;
    missing pairs fall back to ``default`` (``None`` meaning asymptotic
    independence). Callables are checked for bounds and 1-homogeneity on
    admission.
    """

    kind: ModelKind
    theta_psi: Optional[float] = None
    pairs: dict = field(default_factory=dict, compare=False)
    default: Optional[Callable[[float, float], float]] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        if self.kind is ModelKind.ARCHIMEDEAN:
            if self.theta_psi is None or not self.theta_psi > 0:
                raise ValueError("Archimedean model requires theta_psi > 0")
        if self.kind is ModelKind.TABULATED:
            for fn in list(self.pairs.values()) + ([self.default] if self.default else []):
                _check_homogeneous(fn)

    @classmethod
    def independent(cls):
        return cls(ModelKind.INDEPENDENT)

    @classmethod
    def comonotonic(cls):
        return cls(ModelKind.COMONOTONIC)

    @classmethod
    def archimedean(cls, theta_psi: float):
        return cls(ModelKind.ARCHIMEDEAN, float(theta_psi))

    @classmethod
    def tabulated(cls, pairs: dict, default=None):
        norm = {tuple(sorted(k)): v for k, v in pairs.items()}
        return cls(ModelKind.TABULATED, None, norm, default)

    def pair_function(self, i: int, k: int):
        """lambda for the ordered pair (i, k), or None under asymptotic independence."""
        if self.kind is ModelKind.TABULATED:
            fn = self.pairs.get(tuple(sorted((i, k))), self.default)
            if fn is None:
                return None
            # stored for the sorted pair; arguments are (u for i, v for k)
            return fn if i <= k else (lambda u, v: fn(v, u))
        if self.kind is ModelKind.INDEPENDENT:
            return None
        if self.kind is ModelKind.COMONOTONIC:
            return _lam_min
        return functools.partial(_lam_archimedean, theta_psi=self.theta_psi)


def _lam_min(u, v):
    return min(u, v)


def _lam_archimedean(u, v, theta_psi):
    # (u^-s + v^-s)^(-1/s) with s = 1/theta_psi, factored through min(u, v)
    lo, hi = min(u, v), max(u, v)
    if lo == 0:
        return 0 * lo
    if hi == math.inf:
        return lo
    return lo * (1 + (lo / hi) ** (1 / theta_psi)) ** (-theta_psi)


def lambda_bivariate(model: TailDependenceModel, u: float, v: float) -> float:
    if u < 0 or v < 0:
        raise ValueError("tail dependence arguments must be nonnegative")
    if model.kind is ModelKind.TABULATED:
        fn = model.default if model.default is not None else (lambda a, b: 0.0)
        return float(fn(u, v))
    lam = model.pair_function(0, 1)
    return 0.0 if lam is None else float(lam(u, v))


def _tail_integral(lam, theta, a, r):
    """int_r^inf lam(a * t**-theta, 1) dt for a 1-homogeneous lam.

    The piece beyond t = max(r, 1) uses v = t**(1 - theta), under which the
    integrand becomes lam(a, t**theta) / (theta - 1), bounded on a finite
    interval. Any piece on [r, 1) is integrated directly.
    """
    # comonotonic kink sits where t**theta = a
    tk = a ** (1.0 / theta)
    head = 0.0
    if r < 1.0:
        pts = [tk] if r < tk < 1.0 else None
        head, _ = integrate.quad(lambda t: lam(a * t ** (-theta), 1.0), r, 1.0, points=pts, epsabs=0.0, epsrel=1e-13)
        r = 1.0
    vmax = r ** (1.0 - theta)
    p = theta / (theta - 1.0)

    def g(v):
        if v <= 0.0:
            return lam(a, math.inf) / (theta - 1.0)
        return lam(a, v ** (-p)) / (theta - 1.0)

    kink = tk ** (1.0 - theta)
    pts = [kink] if 0.0 < kink < vmax else None
    val, _ = integrate.quad(g, 0.0, vmax, points=pts, epsabs=0.0, epsrel=1e-13, limit=200)
    return head + val


def integral_lambda_tail(model: TailDependenceModel, theta, c_i, c_k, beta_i, beta_k, pair=(0, 1)) -> float:
    """int_{beta_i/beta_k}^inf lambda_ik((c_i/c_k) t**-theta, 1) dt."""
    if not theta > 1:
        raise ValueError(f"integral diverges unless theta > 1, got theta={theta}")
    if min(c_i, c_k, beta_i, beta_k) <= 0:
        raise ValueError("c and beta must be positive")
    lam = model.pair_function(*pair)
    if lam is None:
        return 0.0
    return _tail_integral(lam, theta, c_i / c_k, beta_i / beta_k)


def integral_lambda_unit(model: TailDependenceModel, theta, c_i, c_k, beta_i, beta_k, pair=(0, 1)) -> float:
    """int_1^inf lambda_ik(t**-theta, (c_k/c_i) (beta_k/beta_i)**-theta) dt, by quadrature."""
    if not theta > 1:
        raise ValueError(f"integral diverges unless theta > 1, got theta={theta}")
    lam = model.pair_function(*pair)
    if lam is None:
        return 0.0
    w = (c_k / c_i) * (beta_k / beta_i) ** (-theta)
    # lam(t^-theta, w) = w * lam(t^-theta / w, 1)
    return w * _tail_integral(lam, theta, 1.0 / w, 1.0)


def _check_theta_c(theta, c):
    c = np.asarray(c, dtype=float)
    if not theta > 1:
        raise ValueError(f"theta must exceed 1, got {theta}")
    if c.ndim != 1 or c.size < 1 or c[0] != 1.0 or np.any(c <= 0):
        raise ValueError("c must be a positive vector with c[0] = 1")
    return c


def limit_comonotonic(theta: float, c) -> LimitVector:
    c = _check_theta_c(theta, c)
    return LimitVector(1.0 / (theta - 1.0), c ** (1.0 / theta))


def limit_independent(theta: float, c) -> LimitVector:
    c = _check_theta_c(theta, c)
    beta = c ** (1.0 / (theta - 1.0))
    return LimitVector(1.0 / ((theta - 1.0) * beta.sum()), beta)


def limit_independent_weighted(theta: float, c, weights) -> np.ndarray:
    """Per-component limits of (1 - alpha) / P(X_k > e_k) for a general weight matrix."""
    c = _check_theta_c(theta, c)
    w = np.asarray(weights, dtype=float)
    d = c.size
    if w.shape != (d, d) or np.any(w < 0) or np.any(np.diag(w) <= 0):
        raise ValueError("invalid weight matrix")
    pw = c ** (1.0 / (theta - 1.0))
    eta = np.empty(d)
    for k in range(d):
        s = sum(w[j, k] / w[k, k] * pw[j] for j in range(1, d))
        eta[k] = pw[k] / ((theta - 1.0) * (1.0 + s))
    return eta


def limit_dominant(theta: float, d: int) -> LimitVector:
    if not theta > 1:
        raise ValueError(f"theta must exceed 1, got {theta}")
    beta = np.zeros(d)
    beta[0] = 1.0
    return LimitVector(1.0 / (theta - 1.0), beta)


def _residual_terms(theta, c, model, eta, beta, w, tail_integral):
    d = len(c)
    out = []
    for k in range(d):
        r = 1 / (theta - 1) - eta * beta[k] ** theta / c[k]
        for i in range(d):
            if i == k or w[i][k] == 0:
                continue
            lam = model.pair_function(i, k)
            integ = 0 if lam is None else tail_integral(lam, theta, c[i] / c[k], beta[i] / beta[k])
            r += w[i][k] / w[k][k] * (integ - eta * beta[k] ** (theta - 1) * beta[i] / c[k])
        out.append(r)
    return out


def limit_residual(theta, c, model: TailDependenceModel, eta, beta, weights=None) -> np.ndarray:
    """Residual of the limit system, one equation per component k.

    1/(theta-1) - eta beta_k^theta / c_k
      + sum_{i != k} (pi_ik / pi_k) (I_ik - eta beta_k^(theta-1) beta_i / c_k)
    """
    c = np.asarray(c, dtype=float)
    beta = np.asarray(beta, dtype=float)
    w = np.ones((c.size, c.size)) if weights is None else np.asarray(weights, dtype=float)
    return np.array(_residual_terms(theta, c, model, eta, beta, w, _tail_integral))


def _tail_integral_mp(lam, theta, a, r):
    vmax = r ** (1 - theta)
    p = theta / (theta - 1)

    def g(v):
        return lam(a, v ** (-p)) / (theta - 1)

    kink = a ** ((1 - theta) / theta)
    pts = [0, kink, vmax] if 0 < kink < vmax else [0, vmax]
    return mpmath.quad(g, pts)


def _polish_degenerate(theta, c, model, y, weights, dps=40, max_iter=40):
    """Newton in extended precision, for roots where the Jacobian is singular.

    Such roots are fixed only by second-order terms, so double-precision
    residuals locate them to about the square root of machine epsilon.
    """
    d = len(c)
    w = [[1] * d for _ in range(d)] if weights is None else np.asarray(weights, dtype=float).tolist()
    with mpmath.workdps(dps):
        th = mpmath.mpf(theta)
        cm = [mpmath.mpf(float(v)) for v in c]
        wm = [[mpmath.mpf(float(v)) for v in row] for row in w]

        def fun(yv):
            eta = mpmath.exp(yv[0])
            beta = [mpmath.mpf(1)] + [mpmath.exp(v) for v in yv[1:]]
            return mpmath.matrix(_residual_terms(th, cm, model, eta, beta, wm, _tail_integral_mp))

        def nrm(f):
            return max(abs(v) for v in f)

        yv = mpmath.matrix([mpmath.mpf(float(v)) for v in y])
        f = fun(yv)
        cur = nrm(f)
        h = mpmath.mpf(10) ** (-dps // 2 + 2)
        floor = mpmath.mpf(10) ** (-dps + 8)
        for _ in range(max_iter):
            if cur <= floor:
                break
            jac = mpmath.matrix(d, d)
            for j in range(d):
                yp, ym = yv.copy(), yv.copy()
                yp[j] += h
                ym[j] -= h
                col = (fun(yp) - fun(ym)) / (2 * h)
                for i in range(d):
                    jac[i, j] = col[i]
            try:
                step = mpmath.lu_solve(jac, -f)
            except ZeroDivisionError:
                break
            best = None
            lam = mpmath.mpf(1)
            for _ in range(60):
                yn = yv + lam * step
                fn = fun(yn)
                if nrm(fn) < cur:
                    best = (yn, fn)
                    break
                lam /= 2
            if best is None:
                break
            if lam == 1:
                y2 = yv + 2 * step
                f2 = fun(y2)
                if nrm(f2) < nrm(best[1]):
                    best = (y2, f2)
            yv, f = best
            cur = nrm(f)
        return np.array([float(v) for v in yv]), float(cur)


def eta_free_residual(theta, c, model: TailDependenceModel, beta) -> np.ndarray:
    """Eta-free form of the limit system, for k = 2..d.

    sum_i int_{beta_i}^inf lambda_ik(c_i t^-theta, c_k beta_k^-theta) dt
      - sum_i int_{beta_i}^inf lambda_i1(c_i t^-theta, 1) dt,
    where lambda_kk = min.
    """
    c = np.asarray(c, dtype=float)
    beta = np.asarray(beta, dtype=float)
    d = c.size

    def side(k):
        total = 0.0
        for i in range(d):
            if i == k:
                # int_{beta_k}^inf min(c_k t^-theta, c_k beta_k^-theta) dt
                total += c[k] * beta[k] ** (1.0 - theta) / (theta - 1.0)
                continue
            # substitute t = s * beta_k to reuse the (c_i/c_k, beta_i/beta_k) form
            integ = integral_lambda_tail(model, theta, c[i], c[k], beta[i], beta[k], pair=(i, k))
            total += c[k] * beta[k] ** (1.0 - theta) * integ
        return total

    ref = side(0)
    return np.array([side(k) - ref for k in range(1, d)])


def solve_limit_system(
    theta: float,
    c,
    model: TailDependenceModel,
    init: Optional[LimitVector] = None,
    tol: float = 1e-12,
    max_iter: int = 100,
    weights=None,
) -> LimitVector:
    """Solve for (eta, beta_2..beta_d) by damped Newton in log coordinates."""
    c = _check_theta_c(theta, c)
    d = c.size
    if init is None:
        init = limit_independent(theta, c)
    if init.beta.size != d or init.eta <= 0 or np.any(init.beta <= 0):
        raise ValueError("initial limit vector must be positive and match the dimension")
    y0 = np.concatenate([[math.log(init.eta)], np.log(init.beta[1:])])

    def unpack(y):
        return math.exp(y[0]), np.concatenate([[1.0], np.exp(y[1:])])

    def fun(y):
        eta, beta = unpack(y)
        return limit_residual(theta, c, model, eta, beta, weights)

    res = damped_newton(fun, y0, tol, max_iter)
    y = res.x
    if res.norm <= tol and d > 1 and model.kind is not ModelKind.INDEPENDENT:
        sv = np.linalg.svd(fd_jacobian(fun, y, steps=np.full(d, 1e-7)), compute_uv=False)
        if sv[-1] < 1e-5 * sv[0]:
            y, _ = _polish_degenerate(theta, c, model, y, weights)
    eta, beta = unpack(y)
    norm = float(np.max(np.abs(fun(y))))
    if not norm <= tol:
        raise ConvergenceError(
            f"limit system did not converge: residual {norm:.3e} > {tol:.1e}",
            best_point=np.concatenate([[eta], beta]),
            residual_norm=norm,
            iterations=res.iterations,
        )
    if weights is None and d > 1:
        cross = eta_free_residual(theta, c, model, beta)
        scale = max(1.0, float(np.max(c * beta ** (1.0 - theta))) / (theta - 1.0))
        if np.max(np.abs(cross)) > 1e-6 * scale:
            raise ConvergenceError(
                "limit solution fails the eta-free cross-check",
                best_point=np.concatenate([[eta], beta]),
                residual_norm=float(np.max(np.abs(cross))),
                iterations=res.iterations,
            )
    return LimitVector(eta, beta)


def asymptotic_expectile_approx(margins, limit: LimitVector, alpha: float) -> np.ndarray:
    """VaR_alpha(X_1) * eta**(1/theta) * beta."""
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    m1 = margins[0]
    theta = mg.tail_index(m1)
    return float(mg.quantile(m1, alpha)) * limit.eta ** (1.0 / theta) * np.asarray(limit.beta, dtype=float)


def limit_from_margins(margins, model: TailDependenceModel, **kw) -> LimitVector:
    """Limit vector for margins with equivalent tails (c computed against the first)."""
    theta = mg.tail_index(margins[0])
    c = np.array([mg.tail_equivalence(m, margins[0]) for m in margins])
    if model.kind is ModelKind.COMONOTONIC:
        return limit_comonotonic(theta, c)
    if model.kind is ModelKind.INDEPENDENT:
        return limit_independent(theta, c)
    return solve_limit_system(theta, c, model, **kw)


__all__ = [
    "LimitVector",
    "ModelKind",
    "TailDependenceModel",
    "lambda_bivariate",
    "integral_lambda_tail",
    "integral_lambda_unit",
    "limit_comonotonic",
    "limit_independent",
    "limit_independent_weighted",
    "limit_dominant",
    "limit_residual",
    "eta_free_residual",
    "solve_limit_system",
    "asymptotic_expectile_approx",
    "limit_from_margins",
]
