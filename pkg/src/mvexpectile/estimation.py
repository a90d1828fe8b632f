"""Extreme-value estimators of multivariate expectiles from a sample.

All estimators share one number ``k`` of upper order statistics: the Hill
index of the row norms, the tail-equivalence ratios of the margins, and the
Weissman extrapolation of the first margin's quantile.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np


class TailTooHeavyError(ValueError):
    """Raised when the estimated tail index does not support a finite mean."""


@dataclass(frozen=True)
class SampleMatrix:
    data: np.ndarray

    def __post_init__(self):
        a = np.array(self.data, dtype=float)
        if a.ndim == 1:
            a = a[:, None]
        if a.ndim != 2 or a.shape[0] < 2 or a.shape[1] < 1:
            raise ValueError(f"samples must be an n x d matrix with n >= 2, got shape {a.shape}")
        a.setflags(write=False)
        object.__setattr__(self, "data", a)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    def column(self, i: int) -> np.ndarray:
        return self.data[:, i]

    def to_csv(self, target) -> None:
        """Write to a path or an open text handle, header ``x1,...,xd``."""
        if hasattr(target, "write"):
            self._write_rows(target)
        else:
            with open(target, "w", newline="") as fh:
                self._write_rows(fh)

    def _write_rows(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{i + 1}" for i in range(self.d)])
        for row in self.data:
            w.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path) -> "SampleMatrix":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows:
            raise ValueError(f"{path}: empty sample file")
        header = rows[0]
        expected = [f"x{i + 1}" for i in range(len(header))]
        if [h.strip() for h in header] != expected:
            raise ValueError(f"{path}: header must be {','.join(expected)}")
        body = [r for r in rows[1:] if r]
        if any(len(r) != len(header) for r in body):
            raise ValueError(f"{path}: ragged rows")
        return cls(np.array([[float(v) for v in r] for r in body]))


@dataclass(frozen=True)
class TailEstimates:
    gamma_hat: float
    c_hat: np.ndarray
    k: int

    def to_dict(self) -> dict:
        return {"gamma_hat": float(self.gamma_hat), "c_hat": [float(v) for v in self.c_hat], "k": int(self.k)}


def kth_upper_order_stat(column, k: int) -> float:
    """The k-th largest value (k = 1 is the maximum)."""
    x = np.asarray(column, dtype=float)
    n = x.size
    if not 1 <= k <= n:
        raise IndexError(f"k must lie in [1, {n}], got {k}")
    return float(np.partition(x, n - k)[n - k])


def _check_k(k, n):
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < n = {n}, got {k}")


def hill_estimator(values, k: int) -> float:
    """Mean log-excess of the k largest values over the (k+1)-th largest."""
    z = np.asarray(values, dtype=float)
    n = z.size
    _check_k(k, n)
    top = np.sort(np.partition(z, n - k - 1)[n - k - 1 :])
    if top[0] <= 0:
        raise ValueError("the k+1 largest values must be strictly positive")
    return float(np.mean(np.log(top[1:] / top[0])))


def row_norms(samples: SampleMatrix, norm: str = "l1") -> np.ndarray:
    if norm == "l1":
        return np.abs(samples.data).sum(axis=1)
    if norm == "max":
        return np.abs(samples.data).max(axis=1)
    raise ValueError(f"unknown norm {norm!r}")


def tail_equivalence_estimates(samples: SampleMatrix, k: int, gamma_hat: float) -> np.ndarray:
    """c_i = (X_i threshold / X_1 threshold) ** (1 / gamma_hat), thresholds at the k-th largest."""
    _check_k(k, samples.n)
    thr = np.array([kth_upper_order_stat(samples.column(i), k) for i in range(samples.d)])
    if np.any(thr <= 0):
        raise ValueError(f"order statistic thresholds must be positive at k={k}: {thr}")
    c = (thr / thr[0]) ** (1.0 / gamma_hat)
    c[0] = 1.0
    return c


def weissman_quantile(column, k: int, gamma_hat: float, alpha: float) -> float:
    x = np.asarray(column, dtype=float)
    _check_k(k, x.size)
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return kth_upper_order_stat(x, k) * (k / ((1.0 - alpha) * x.size)) ** gamma_hat


def tail_estimates(samples: SampleMatrix, k: int, norm: str = "l1") -> TailEstimates:
    g = hill_estimator(row_norms(samples, norm), k)
    return TailEstimates(g, tail_equivalence_estimates(samples, k, g), k)


def _prefactor(samples, k, alpha, est: TailEstimates):
    g = est.gamma_hat
    if not g < 1:
        raise TailTooHeavyError(f"gamma_hat = {g:.4f} >= 1: the estimated tail has no finite mean")
    var = weissman_quantile(samples.column(0), k, g, alpha)
    return var * (g / (1.0 - g)) ** g


def extreme_expectile_independent(samples: SampleMatrix, k: int, alpha: float, norm: str = "l1", estimates=None):
    """Extreme L1-expectile estimate for asymptotically independent margins."""
    est = estimates if estimates is not None else tail_estimates(samples, k, norm)
    base = _prefactor(samples, k, alpha, est)
    g = est.gamma_hat
    w = est.c_hat ** (g / (1.0 - g))
    return base * w.sum() ** (-g) * w


def extreme_expectile_comonotonic(samples: SampleMatrix, k: int, alpha: float, norm: str = "l1", estimates=None):
    """Extreme L1-expectile estimate for comonotonic margins."""
    est = estimates if estimates is not None else tail_estimates(samples, k, norm)
    base = _prefactor(samples, k, alpha, est)
    return base * est.c_hat**est.gamma_hat


def k_growth_diagnostic(n: int, k: int, alpha: float) -> float:
    """sqrt(k) / sqrt(1 + log(k / (n (1 - alpha)))**2); should grow with n."""
    if not (1 <= k < n and 0 < alpha < 1):
        raise ValueError("need 1 <= k < n and 0 < alpha < 1")
    return math.sqrt(k) / math.sqrt(1.0 + math.log(k / (n * (1.0 - alpha))) ** 2)
