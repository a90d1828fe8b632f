"""Parametric heavy-tailed margins.

Three base families are supported, each with a closed-form or
incomplete-beta expression for the survival function, the inverse
survival function and the upper partial moment ``E[(Y - y)_+]``:

* ``Pareto(a, b)``: Lomax form, ``P(Y > y) = (b / (b + y))**a`` for ``y >= 0``
* ``Burr(a, b, tau)``: ``P(Y > y) = (b / (b + y**tau))**a`` for ``y >= 0``
* ``ScaledStudent(scale, z)``: ``Y = scale * T`` with ``T`` Student-t, ``z`` dof

A :class:`MarginSpec` wraps a base family with an affine map
``X = location + scale_mult * Y``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy import integrate, special


class TailMismatchError(ValueError):
    """Raised when two margins do not have equivalent tails."""


@dataclass(frozen=True)
class Pareto:
    a: float
    b: float

    def __post_init__(self):
        if not self.a > 1:
            raise ValueError(f"Pareto shape must exceed 1 for a finite mean, got a={self.a}")
        if not self.b > 0:
            raise ValueError(f"Pareto scale must be positive, got b={self.b}")

    lower = 0.0

    @property
    def theta(self) -> float:
        return float(self.a)

    @property
    def tail_constant(self) -> float:
        # P(Y > y) ~ tail_constant * y**(-theta)
        return self.b**self.a

    def sf(self, y):
        y = np.asarray(y, dtype=float)
        return np.where(y > 0, np.exp(-self.a * np.log1p(np.maximum(y, 0.0) / self.b)), 1.0)

    def isf(self, s):
        s = np.asarray(s, dtype=float)
        return self.b * np.expm1(-np.log(s) / self.a)

    def mean(self) -> float:
        return self.b / (self.a - 1)

    def upper_pm(self, y):
        y = np.asarray(y, dtype=float)
        yp = np.maximum(y, 0.0)
        tail = self.b / (self.a - 1) * np.exp((1 - self.a) * np.log1p(yp / self.b))
        return np.where(y > 0, tail, self.mean() - y)

    def lower_pm(self, y):
        y = np.asarray(y, dtype=float)
        yp = np.maximum(y, 0.0)
        # x - int_0^x sf(t) dt, written to avoid cancellation near 0
        val = yp + self.b / (self.a - 1) * np.expm1((1 - self.a) * np.log1p(yp / self.b))
        return np.where(y > 0, val, 0.0)

    def params(self) -> dict:
        return {"a": self.a, "b": self.b}


@dataclass(frozen=True)
class Burr:
    a: float
    b: float
    tau: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0 and self.tau > 0):
            raise ValueError(f"Burr parameters must be positive, got {self}")
        if not self.a * self.tau > 1:
            raise ValueError(f"Burr requires a*tau > 1 for a finite mean, got {self.a * self.tau}")

    lower = 0.0

    @property
    def theta(self) -> float:
        return float(self.a * self.tau)

    @property
    def tail_constant(self) -> float:
        return self.b**self.a

    def sf(self, y):
        y = np.asarray(y, dtype=float)
        yp = np.maximum(y, 0.0)
        return np.where(y > 0, np.exp(-self.a * np.log1p(yp**self.tau / self.b)), 1.0)

    def isf(self, s):
        s = np.asarray(s, dtype=float)
        return (self.b * np.expm1(-np.log(s) / self.a)) ** (1 / self.tau)

    def _beta_const(self) -> float:
        p = 1 / self.tau
        return self.b**p * p * special.beta(p, self.a - p)

    def mean(self) -> float:
        return self._beta_const()

    def upper_pm(self, y):
        # int_y^inf (1 + t**tau / b)**(-a) dt; with w = s / (1 + s), s = t**tau / b,
        # this is b**(1/tau)/tau * B(p, a - p) * I_{1 - w}(a - p, p), p = 1/tau.
        y = np.asarray(y, dtype=float)
        yp = np.maximum(y, 0.0)
        p = 1 / self.tau
        q = 1.0 / (1.0 + yp**self.tau / self.b)
        tail = self._beta_const() * special.betainc(self.a - p, p, q)
        return np.where(y > 0, tail, self.mean() - y)

    def lower_pm(self, y):
        y = np.asarray(y, dtype=float)
        yp = np.maximum(y, 0.0)
        p = 1 / self.tau
        s = yp**self.tau / self.b
        w = s / (1.0 + s)
        head = self._beta_const() * special.betainc(p, self.a - p, w)
        return np.where(y > 0, yp - head, 0.0)

    def params(self) -> dict:
        return {"a": self.a, "b": self.b, "tau": self.tau}


@dataclass(frozen=True)
class ScaledStudent:
    scale: float
    z: float

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"Student scale must be positive, got {self.scale}")
        if not self.z > 1:
            raise ValueError(f"Student dof must exceed 1 for a finite mean, got z={self.z}")

    lower = -math.inf

    @property
    def theta(self) -> float:
        return float(self.z)

    @property
    def tail_constant(self) -> float:
        z = self.z
        logk = (
            special.gammaln((z + 1) / 2)
            - special.gammaln(z / 2)
            - 0.5 * math.log(math.pi)
            + 0.5 * (z - 1) * math.log(z)
        )
        return math.exp(logk) * self.scale**z

    def _t_pdf(self, t):
        z = self.z
        logc = special.gammaln((z + 1) / 2) - special.gammaln(z / 2) - 0.5 * math.log(z * math.pi)
        return np.exp(logc - (z + 1) / 2 * np.log1p(t * t / z))

    def _t_upper_pm(self, t):
        # E[(T - t)_+] = (z + t^2) / (z - 1) * f(t) - t * P(T > t)
        z = self.z
        return (z + t * t) / (z - 1) * self._t_pdf(t) - t * special.stdtr(z, -t)

    def sf(self, y):
        y = np.asarray(y, dtype=float)
        return special.stdtr(self.z, -y / self.scale)

    def isf(self, s):
        s = np.asarray(s, dtype=float)
        return -self.scale * special.stdtrit(self.z, s)

    def mean(self) -> float:
        return 0.0

    def upper_pm(self, y):
        y = np.asarray(y, dtype=float)
        return self.scale * self._t_upper_pm(y / self.scale)

    def lower_pm(self, y):
        # symmetry: E[(y - Y)_+] = E[(Y - (-y))_+]
        y = np.asarray(y, dtype=float)
        return self.scale * self._t_upper_pm(-y / self.scale)

    def params(self) -> dict:
        return {"scale": self.scale, "z": self.z}


Family = Union[Pareto, Burr, ScaledStudent]

_FAMILY_NAMES = {Pareto: "pareto", Burr: "burr", ScaledStudent: "student"}
_FAMILY_TYPES = {v: k for k, v in _FAMILY_NAMES.items()}


@dataclass(frozen=True)
class MarginSpec:
    """A base family under the affine map ``x = location + scale_mult * y``."""

    family: Family
    location: float = 0.0
    scale_mult: float = 1.0

    def __post_init__(self):
        if not self.scale_mult > 0:
            raise ValueError(f"scale_mult must be positive, got {self.scale_mult}")

    def _std(self, x):
        return (np.asarray(x, dtype=float) - self.location) / self.scale_mult

    @property
    def lower_endpoint(self) -> float:
        return self.location + self.scale_mult * self.family.lower

    def to_dict(self) -> dict:
        return {
            "family": _FAMILY_NAMES[type(self.family)],
            "params": self.family.params(),
            "location": self.location,
            "scale": self.scale_mult,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "MarginSpec":
        try:
            ftype = _FAMILY_TYPES[obj["family"]]
        except KeyError:
            raise ValueError(f"unknown margin family {obj.get('family')!r}") from None
        fam = ftype(**{k: float(v) for k, v in obj["params"].items()})
        return cls(fam, float(obj.get("location", 0.0)), float(obj.get("scale", 1.0)))


def pareto(a, b, location=0.0, scale=1.0) -> MarginSpec:
    return MarginSpec(Pareto(a, b), location, scale)


def burr(a, b, tau, location=0.0, scale=1.0) -> MarginSpec:
    return MarginSpec(Burr(a, b, tau), location, scale)


def student(scale, z, location=0.0, scale_mult=1.0) -> MarginSpec:
    return MarginSpec(ScaledStudent(scale, z), location, scale_mult)


def _out(v):
    return float(v) if np.ndim(v) == 0 else v


def survival(m: MarginSpec, x):
    """P(X > x)."""
    return _out(m.family.sf(m._std(x)))


def cdf(m: MarginSpec, x):
    return _out(1.0 - m.family.sf(m._std(x)))


def inverse_survival(m: MarginSpec, s):
    """Upper quantile: the x with P(X > x) = s, accurate for small s."""
    s = np.asarray(s, dtype=float)
    return _out(m.location + m.scale_mult * m.family.isf(s))


def quantile(m: MarginSpec, p):
    p_arr = np.asarray(p, dtype=float)
    if np.any((p_arr <= 0) | (p_arr >= 1)):
        raise ValueError(f"quantile level must lie in (0, 1), got {p}")
    return inverse_survival(m, 1.0 - p_arr)


def mean(m: MarginSpec) -> float:
    return m.location + m.scale_mult * m.family.mean()


def upper_partial_moment(m: MarginSpec, x):
    """E[(X - x)_+]."""
    return _out(m.scale_mult * m.family.upper_pm(m._std(x)))


def lower_partial_moment(m: MarginSpec, x):
    """E[(x - X)_+]."""
    return _out(m.scale_mult * m.family.lower_pm(m._std(x)))


def tail_index(m: MarginSpec) -> float:
    return m.family.theta


def tail_constant(m: MarginSpec) -> float:
    """Constant C with P(X > x) ~ C x**(-theta) as x grows."""
    return m.family.tail_constant * m.scale_mult ** m.family.theta


def tail_equivalence(m: MarginSpec, ref: MarginSpec) -> float:
    """lim P(X > x) / P(X_ref > x); requires identical tail indices."""
    if tail_index(m) != tail_index(ref):
        raise TailMismatchError(
            f"tail indices differ ({tail_index(m)} vs {tail_index(ref)}); tails are not equivalent"
        )
    return tail_constant(m) / tail_constant(ref)


def inverse_transform_sample(m: MarginSpec, u):
    p = np.asarray(u, dtype=float)
    if np.any((p <= 0) | (p >= 1)):
        raise ValueError("uniforms must lie in (0, 1)")
    return quantile(m, p)


def partial_moment_quadrature(m: MarginSpec, x: float, cut: float = 1e-12) -> float:
    """E[(X - x)_+] by adaptive quadrature of the survival function.

    The integral is truncated at the ``1 - cut`` quantile and the remainder
    beyond it is replaced by the regular-variation tail ``q * sf(q) / (theta - 1)``.
    """
    q = float(inverse_survival(m, cut))
    theta = tail_index(m)
    if x >= q:
        return float(x * survival(m, x) / (theta - 1))
    lo = x
    acc = 0.0
    if lo < m.lower_endpoint:
        acc += m.lower_endpoint - lo
        lo = m.lower_endpoint
    # split geometrically so the heavy tail does not starve the adaptive rule
    edges = [lo]
    step = max(abs(lo), m.scale_mult, 1.0)
    while edges[-1] + step < q:
        edges.append(edges[-1] + step)
        step *= 4.0
    edges.append(q)
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(lambda t: survival(m, t), a, b, epsabs=0.0, epsrel=1e-12, limit=200)
        acc += val
    return acc + q * cut / (theta - 1)


__all__ = [
    "Pareto",
    "Burr",
    "ScaledStudent",
    "MarginSpec",
    "TailMismatchError",
    "pareto",
    "burr",
    "student",
    "survival",
    "cdf",
    "quantile",
    "inverse_survival",
    "mean",
    "upper_partial_moment",
    "lower_partial_moment",
    "tail_index",
    "tail_constant",
    "tail_equivalence",
    "inverse_transform_sample",
    "partial_moment_quadrature",
]
