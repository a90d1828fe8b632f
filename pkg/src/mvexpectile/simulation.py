"""Seeded sampling and the experiment harness behind the convergence tables.

Replication ``r`` of an experiment with master seed ``s`` draws from its own
Philox stream, seeded by ``SeedSequence(entropy=s, spawn_key=(r,))`` (the
boxplot study uses ``spawn_key=(n, r)``). Every replication is therefore
reproducible on its own, and the output does not depend on how replications
are scheduled across worker processes.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from . import margins as mg
from .estimation import (
    SampleMatrix,
    TailTooHeavyError,
    extreme_expectile_comonotonic,
    extreme_expectile_independent,
    tail_estimates,
)
from .expectile import Dependence, ExpectileProblem, solve_multivariate_expectile
from .margins import MarginSpec
from .rootfind import ConvergenceError

SWEEP_HEADER = ("alpha", "k", "n", "rep", "component", "exact", "estimate", "ratio", "error_flag")
BOXPLOT_HEADER = ("n", "k", "rep", "component", "c_hat", "gamma_hat", "error_flag")


class DependenceStructure(str, enum.Enum):
    INDEPENDENT = "independent"
    COMONOTONIC = "comonotonic"


def make_rng(seed, *key: int) -> np.random.Generator:
    """Philox generator for ``(seed, key)``; a Generator passes through untouched."""
    if isinstance(seed, np.random.Generator):
        return seed
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def open_uniforms(rng: np.random.Generator, size) -> np.ndarray:
    """Uniforms on the open interval (0, 1): midpoints of a 2**-53 grid."""
    return (rng.integers(0, 2**53, size=size, dtype=np.int64) + 0.5) * 2.0**-53


def draw_sample(margins: Sequence[MarginSpec], dep, n: int, seed) -> SampleMatrix:
    """n observations of the margins coupled by ``dep``.

    Each column is ``inverse_survival(margin, s)``; comonotonic rows share one
    ``s``, independent rows use one per column.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    dep = DependenceStructure(dep)
    rng = make_rng(seed)
    d = len(margins)
    if dep is DependenceStructure.COMONOTONIC:
        s = open_uniforms(rng, n)
        cols = [np.asarray(mg.inverse_survival(m, s), dtype=float) for m in margins]
    else:
        s = open_uniforms(rng, (n, d))
        cols = [np.asarray(mg.inverse_survival(m, s[:, j]), dtype=float) for j, m in enumerate(margins)]
    data = np.column_stack(cols)
    if n == 1:
        # SampleMatrix needs two rows; single draws are returned as a bare array
        return data
    return SampleMatrix(data)


class ReferenceCurveError(ConvergenceError):
    def __init__(self, alpha, inner: ConvergenceError):
        super().__init__(
            f"exact solver failed at alpha={alpha!r}: {inner}",
            best_point=inner.best_point,
            residual_norm=inner.residual_norm,
            iterations=inner.iterations,
        )
        self.alpha = alpha


def exact_reference_curve(problem: ExpectileProblem, alpha_grid, tol: float = 1e-9) -> list[tuple[float, np.ndarray]]:
    """Exact expectile of ``problem`` at every level of ``alpha_grid``."""
    out = []
    for a in alpha_grid:
        try:
            sol = solve_multivariate_expectile(problem.with_alpha(float(a)), tol=tol)
        except ConvergenceError as exc:
            raise ReferenceCurveError(float(a), exc) from exc
        out.append((float(a), sol.point))
    return out


def default_k_grid(n: int) -> list[int]:
    return sorted({max(1, n // q) for q in (200, 100, 50, 20)})


@dataclass(frozen=True)
class ExperimentConfig:
    margins: tuple
    dependence: DependenceStructure
    alpha_grid: tuple
    n: int
    k_grid: tuple = None
    replications: int = 100
    master_seed: int = 0
    norm: str = "l1"

    def __post_init__(self):
        object.__setattr__(self, "margins", tuple(self.margins))
        object.__setattr__(self, "dependence", DependenceStructure(self.dependence))
        object.__setattr__(self, "alpha_grid", tuple(float(a) for a in self.alpha_grid))
        k = default_k_grid(self.n) if self.k_grid is None else self.k_grid
        object.__setattr__(self, "k_grid", tuple(int(v) for v in k))
        if not self.margins:
            raise ValueError("need at least one margin")
        if not self.alpha_grid or not self.k_grid:
            raise ValueError("alpha_grid and k_grid must be nonempty")
        if any(not 0 < a < 1 for a in self.alpha_grid):
            raise ValueError("alpha levels must lie in (0, 1)")
        if min(self.k_grid) < 1 or self.n < max(self.k_grid) + 1:
            raise ValueError(f"need 1 <= k and n >= max(k_grid) + 1, got n={self.n}, k_grid={self.k_grid}")
        if self.replications < 1:
            raise ValueError("replications must be positive")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")

    @property
    def d(self) -> int:
        return len(self.margins)

    def problem(self) -> ExpectileProblem:
        return ExpectileProblem(self.margins, None, Dependence(self.dependence.value), 0.5)

    def to_dict(self) -> dict:
        return {
            "margins": [m.to_dict() for m in self.margins],
            "dependence": self.dependence.value,
            "alpha_grid": list(self.alpha_grid),
            "k_grid": list(self.k_grid),
            "n": self.n,
            "replications": self.replications,
            "master_seed": self.master_seed,
            "norm": self.norm,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        return cls(
            margins=[MarginSpec.from_dict(m) for m in obj["margins"]],
            dependence=obj["dependence"],
            alpha_grid=obj["alpha_grid"],
            n=int(obj["n"]),
            k_grid=obj.get("k_grid"),
            replications=int(obj.get("replications", 100)),
            master_seed=int(obj.get("master_seed", 0)),
            norm=obj.get("norm", "l1"),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


@dataclass(frozen=True)
class ExperimentRecord:
    alpha: float
    k: int
    n: int
    rep: int
    component: int
    exact: float
    estimate: float
    ratio: float
    error_flag: int

    def row(self) -> list[str]:
        return [
            _fmt(self.alpha),
            str(self.k),
            str(self.n),
            str(self.rep),
            str(self.component),
            _fmt(self.exact),
            _fmt(self.estimate),
            _fmt(self.ratio),
            str(self.error_flag),
        ]


def _fmt(v: float) -> str:
    return repr(float(v))


def _ratio(est, exact):
    if math.isfinite(exact) and exact != 0 and math.isfinite(est):
        return est / exact
    return math.nan


def _replication_estimates(config: ExperimentConfig, rep: int):
    """(estimates[alpha, k, component], flags[k]) for one replication."""
    sample = draw_sample(config.margins, config.dependence, config.n, make_rng(config.master_seed, rep))
    estimator = (
        extreme_expectile_comonotonic
        if config.dependence is DependenceStructure.COMONOTONIC
        else extreme_expectile_independent
    )
    est = np.full((len(config.alpha_grid), len(config.k_grid), config.d), np.nan)
    flags = np.zeros(len(config.k_grid), dtype=np.int8)
    for j, k in enumerate(config.k_grid):
        try:
            te = tail_estimates(sample, k, config.norm)
            for i, a in enumerate(config.alpha_grid):
                est[i, j] = estimator(sample, k, a, estimates=te)
        except (TailTooHeavyError, ValueError):
            flags[j] = 1
            est[:, j] = np.nan
    return rep, est, flags


def _replication_task(args):
    cfg_dict, rep = args
    return _replication_estimates(ExperimentConfig.from_dict(cfg_dict), rep)


def _map_replications(fn, args, jobs: int):
    if jobs <= 1:
        return [fn(a) for a in args]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, args, chunksize=max(1, len(args) // (4 * jobs))))


@dataclass
class SweepResult:
    config: ExperimentConfig
    exact: np.ndarray  # (alpha, component)
    estimates: np.ndarray  # (rep, alpha, k, component)
    flags: np.ndarray  # (rep, k)

    def records(self) -> Iterator[ExperimentRecord]:
        """Records in canonical (alpha, k, rep, component) order."""
        cfg = self.config
        for i, a in enumerate(cfg.alpha_grid):
            for j, k in enumerate(cfg.k_grid):
                for r in range(cfg.replications):
                    for c in range(cfg.d):
                        ex = float(self.exact[i, c])
                        es = float(self.estimates[r, i, j, c])
                        yield ExperimentRecord(a, k, cfg.n, r, c + 1, ex, es, _ratio(es, ex), int(self.flags[r, j]))

    def ratios(self) -> np.ndarray:
        """estimate / exact with shape (rep, alpha, k, component)."""
        return self.estimates / self.exact[None, :, None, :]

    def write_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for rec in self.records():
            w.writerow(rec.row())

    def to_csv_string(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


def run_k_sweep(config: ExperimentConfig, jobs: int = 1, log=None) -> SweepResult:
    """Exact expectiles against per-replication estimates over the (alpha, k) grid.

    One sample is drawn per replication and shared by every (alpha, k) pair,
    as the same data would be reused when reading a convergence plot.
    Replications where an estimate fails (for instance a Hill index >= 1)
    are flagged instead of aborting the sweep.
    """
    curve = exact_reference_curve(config.problem(), config.alpha_grid)
    exact = np.array([p for _, p in curve])
    if log:
        for a, p in curve:
            log(f"exact alpha={a}: {np.array2string(p, precision=6)}")
    cfg_dict = config.to_dict()
    results = _map_replications(_replication_task, [(cfg_dict, r) for r in range(config.replications)], jobs)
    est = np.empty((config.replications, len(config.alpha_grid), len(config.k_grid), config.d))
    flags = np.zeros((config.replications, len(config.k_grid)), dtype=np.int8)
    for rep, e, f in results:
        est[rep] = e
        flags[rep] = f
    if log:
        for j, k in enumerate(config.k_grid):
            med = np.nanmedian(est[:, :, j, :] / exact[None], axis=0) if not np.all(flags[:, j]) else None
            log(f"k={k}: flagged={int(flags[:, j].sum())} median ratio per alpha={None if med is None else med.round(4).tolist()}")
    return SweepResult(config, exact, est, flags)


@dataclass(frozen=True)
class BoxplotConfig:
    margins: tuple
    dependence: DependenceStructure
    n_grid: tuple
    k_fraction: float = 0.01
    k_by_n: dict = field(default=None)
    replications: int = 100
    master_seed: int = 0
    norm: str = "l1"

    def __post_init__(self):
        object.__setattr__(self, "margins", tuple(self.margins))
        object.__setattr__(self, "dependence", DependenceStructure(self.dependence))
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        if self.k_by_n is not None:
            object.__setattr__(self, "k_by_n", {int(n): int(k) for n, k in self.k_by_n.items()})
        if not self.n_grid:
            raise ValueError("n_grid must be nonempty")
        for n in self.n_grid:
            k = self.k_for(n)
            if not 1 <= k < n:
                raise ValueError(f"k={k} invalid for n={n}")
        if self.replications < 1:
            raise ValueError("replications must be positive")

    def k_for(self, n: int) -> int:
        if self.k_by_n is not None:
            if n not in self.k_by_n:
                raise ValueError(f"k_by_n has no entry for n={n}")
            return self.k_by_n[n]
        return max(1, int(round(self.k_fraction * n)))

    def to_dict(self) -> dict:
        out = {
            "margins": [m.to_dict() for m in self.margins],
            "dependence": self.dependence.value,
            "n_grid": list(self.n_grid),
            "k_fraction": self.k_fraction,
            "replications": self.replications,
            "master_seed": self.master_seed,
            "norm": self.norm,
        }
        if self.k_by_n is not None:
            out["k_by_n"] = {str(n): k for n, k in self.k_by_n.items()}
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "BoxplotConfig":
        return cls(
            margins=[MarginSpec.from_dict(m) for m in obj["margins"]],
            dependence=obj["dependence"],
            n_grid=obj["n_grid"],
            k_fraction=float(obj.get("k_fraction", 0.01)),
            k_by_n=obj.get("k_by_n"),
            replications=int(obj.get("replications", 100)),
            master_seed=int(obj.get("master_seed", 0)),
            norm=obj.get("norm", "l1"),
        )


def _boxplot_task(args):
    cfg_dict, n, rep = args
    cfg = BoxplotConfig.from_dict(cfg_dict)
    k = cfg.k_for(n)
    sample = draw_sample(cfg.margins, cfg.dependence, n, make_rng(cfg.master_seed, n, rep))
    try:
        te = tail_estimates(sample, k, cfg.norm)
        return n, rep, k, te.c_hat, te.gamma_hat, 0
    except ValueError:
        return n, rep, k, np.full(len(cfg.margins), np.nan), math.nan, 1


@dataclass
class BoxplotResult:
    config: BoxplotConfig
    rows: list  # (n, rep, k, c_hat, gamma_hat, flag), sorted by (n, rep)

    def c_hat(self, n: int, component: int = 2) -> np.ndarray:
        return np.array([r[3][component - 1] for r in self.rows if r[0] == n])

    def gamma_hat(self, n: int) -> np.ndarray:
        return np.array([r[4] for r in self.rows if r[0] == n])

    def write_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BOXPLOT_HEADER)
        for n, rep, k, c, g, flag in self.rows:
            for j, cj in enumerate(c):
                w.writerow([str(n), str(k), str(rep), str(j + 1), _fmt(cj), _fmt(g), str(flag)])

    def to_csv_string(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


def run_boxplot_study(config: BoxplotConfig, jobs: int = 1, log=None) -> BoxplotResult:
    """Distribution of the tail-equivalence estimates over replications, per sample size."""
    cfg_dict = config.to_dict()
    args = [(cfg_dict, n, r) for n in config.n_grid for r in range(config.replications)]
    rows = sorted(_map_replications(_boxplot_task, args, jobs), key=lambda t: (config.n_grid.index(t[0]), t[1]))
    if log:
        for n in config.n_grid:
            c2 = [r[3][-1] for r in rows if r[0] == n]
            log(f"n={n}: median c_hat[last]={float(np.nanmedian(c2)):.4f}")
    return BoxplotResult(config, rows)


__all__ = [
    "SWEEP_HEADER",
    "BOXPLOT_HEADER",
    "DependenceStructure",
    "ExperimentConfig",
    "ExperimentRecord",
    "BoxplotConfig",
    "make_rng",
    "open_uniforms",
    "draw_sample",
    "exact_reference_curve",
    "default_k_grid",
    "run_k_sweep",
    "run_boxplot_study",
    "SweepResult",
    "BoxplotResult",
]
