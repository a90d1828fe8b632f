"""Acceptance criteria, one test per criterion at the stated tolerances.

Each test prints a single PASS/FAIL line (collected again in the terminal
summary) before asserting.
"""

import time
from pathlib import Path

import numpy as np

from mvexpectile import asymptotics as asy
from mvexpectile import cli
from mvexpectile import estimation as est
from mvexpectile import margins as mg
from mvexpectile import simulation as sim
from mvexpectile.expectile import (
    ExpectileProblem,
    scaled_residual_norm,
    solve_multivariate_expectile,
    univariate_expectile,
)

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
P10, P15 = mg.pareto(2, 10), mg.pareto(2, 15)
ALPHAS = [1 - 1e-3, 1 - 1e-4, 1 - 1e-5, 1 - 1e-6]


def _ratio_and_eta(margins, dep, alpha):
    e = solve_multivariate_expectile(ExpectileProblem(margins, dependence=dep, alpha=alpha)).point
    return e[1] / e[0], (1 - alpha) / mg.survival(margins[0], e[0])


def test_acceptance_01_comonotonic_limit(acceptance_report):
    t0 = time.perf_counter()
    ratio, eta = _ratio_and_eta([P10, P15], "comonotonic", 1 - 1e-6)
    elapsed = time.perf_counter() - t0
    ok = abs(ratio / 1.5 - 1) <= 0.02 and abs(eta - 1) <= 0.05 and elapsed < 60
    acceptance_report(1, ok, f"e2/e1={ratio:.6f} (target 1.5, 2%), eta={eta:.6f} (target 1, 5%), {elapsed:.2f}s")
    assert ok


def test_acceptance_02_independent_limit(acceptance_report):
    vals = [_ratio_and_eta([P10, P15], "independent", a) for a in ALPHAS]
    gaps = [abs(r - 2.25) for r, _ in vals]
    ratio, eta = vals[-1]
    target_eta = 1 / 3.25
    ok = (
        all(g2 < g1 for g1, g2 in zip(gaps, gaps[1:]))
        and abs(ratio / 2.25 - 1) <= 0.10
        and abs(eta / target_eta - 1) <= 0.10
    )
    acceptance_report(
        2, ok, f"ratios={[round(float(r), 5) for r, _ in vals]} (|r-2.25| decreasing), eta={eta:.5f} vs {target_eta:.5f}"
    )
    assert ok


def test_acceptance_03_dominant_tail(acceptance_report):
    ms = [mg.pareto(2, 10), mg.pareto(3, 10)]
    vals = [_ratio_and_eta(ms, "independent", a) for a in ALPHAS]
    ratios = [r for r, _ in vals]
    eta = vals[-1][1]
    ok = all(b < a for a, b in zip(ratios, ratios[1:])) and ratios[-1] < 0.15 and abs(eta - 1) <= 0.10
    acceptance_report(3, ok, f"ratios={[round(float(r), 5) for r in ratios]} (decreasing, last<0.15), eta={eta:.5f}")
    assert ok


def test_acceptance_04_limit_solver_oracles(acceptance_report):
    rng = np.random.default_rng(20240404)
    worst = 0.0
    for _ in range(20):
        theta = float(rng.uniform(1.2, 5.0))
        d = int(rng.integers(2, 5))
        c = np.concatenate([[1.0], rng.uniform(0.2, 5.0, d - 1)])
        for model, oracle in (
            (asy.TailDependenceModel.comonotonic(), asy.limit_comonotonic),
            (asy.TailDependenceModel.independent(), asy.limit_independent),
        ):
            got, want = asy.solve_limit_system(theta, c, model), oracle(theta, c)
            err = max(abs(got.eta / want.eta - 1), float(np.max(np.abs(got.beta / want.beta - 1))))
            worst = max(worst, err)
    arch = asy.solve_limit_system(2.0, [1.0, 1.0], asy.TailDependenceModel.archimedean(2.0))
    arch_err = max(abs(arch.eta - 0.75), abs(arch.beta[1] - 1.0))
    ok = worst <= 1e-8 and arch_err <= 1e-6
    acceptance_report(4, ok, f"worst relative error over 40 solves={worst:.2e}, archimedean error={arch_err:.2e}")
    assert ok


def test_acceptance_05_hill_c_weissman(acceptance_report):
    n, k, reps, alpha = 100_000, 1000, 100, 0.999
    g, c2, var = [], [], []
    for r in range(reps):
        s = sim.draw_sample([P10, P15], "independent", n, sim.make_rng(5005, r))
        te = est.tail_estimates(s, k)
        g.append(te.gamma_hat)
        c2.append(te.c_hat[1])
        var.append(est.weissman_quantile(s.column(0), k, te.gamma_hat, alpha))
    true_var = 10 * (1000**0.5 - 1)
    mg_, mc, mv = np.median(g), np.median(c2), np.median(var)
    ok = 0.45 <= mg_ <= 0.55 and abs(mc / 2.25 - 1) <= 0.15 and abs(mv / true_var - 1) <= 0.15
    acceptance_report(
        5, ok, f"median gamma={mg_:.4f}, median c2={mc:.4f} (2.25), median VaR={mv:.2f} ({true_var:.2f})"
    )
    assert ok


def _median_ratios(margins, dep, n, k, reps, seed, alpha=0.999):
    cfg = sim.ExperimentConfig(margins, dep, [alpha], n, [k], replications=reps, master_seed=seed)
    res = sim.run_k_sweep(cfg)
    return np.nanmedian(res.ratios()[:, 0, 0, :], axis=0), int(res.flags.sum())


def test_acceptance_06_estimator_vs_exact(acceptance_report):
    t0 = time.perf_counter()
    ind, f1 = _median_ratios([P10, P15], "independent", 100_000, 1000, 100, 6006)
    com, f2 = _median_ratios([P10, P15], "comonotonic", 100_000, 1000, 100, 6007)
    elapsed = time.perf_counter() - t0
    ok = all(0.8 <= v <= 1.25 for v in (*ind, *com)) and elapsed < 600 and f1 + f2 == 0
    acceptance_report(
        6, ok, f"median ratios independent={np.round(ind, 4).tolist()}, comonotonic={np.round(com, 4).tolist()}, "
        f"{elapsed:.1f}s"
    )
    assert ok


def test_acceptance_07_burr_and_student(acceptance_report):
    burr = [mg.burr(4, 10, 0.75), mg.burr(4, 15, 0.75)]
    stud = [mg.student(1, 2), mg.student(2, 2)]
    out = {}
    for name, ms in (("burr", burr), ("student", stud)):
        for dep, seed in (("independent", 7007), ("comonotonic", 7008)):
            out[f"{name}-{dep}"] = _median_ratios(ms, dep, 10_000, 100, 100, seed)[0]
    ok = all(0.75 <= v <= 1.33 for r in out.values() for v in r)
    acceptance_report(7, ok, ", ".join(f"{k}={np.round(v, 4).tolist()}" for k, v in out.items()))
    assert ok


def test_acceptance_08_solver_suite(acceptance_report):
    pool = [P10, P15, mg.burr(4, 10, 0.75), mg.burr(4, 15, 0.75), mg.student(1, 2), mg.student(2, 2)]
    worst_res = 0.0
    for i in range(len(pool)):
        for j in range(len(pool)):
            for dep in ("independent", "comonotonic"):
                for a in (0.1, 0.5, 0.9, 0.999, 1 - 1e-6):
                    prob = ExpectileProblem([pool[i], pool[j]], dependence=dep, alpha=a)
                    sol = solve_multivariate_expectile(prob)
                    worst_res = max(worst_res, scaled_residual_norm(prob, sol.point))
    mean_err = abs(solve_multivariate_expectile(ExpectileProblem([P10], alpha=0.5)).point[0] - 10) / 10
    como_err = 0.0
    for m in pool:
        for a in (0.3, 0.9, 0.999):
            u = univariate_expectile(m, a)
            p = solve_multivariate_expectile(ExpectileProblem([m, m, m], dependence="comonotonic", alpha=a)).point
            como_err = max(como_err, float(np.max(np.abs(p - u))) / max(1.0, abs(u)))
    equi_err = 0.0
    for i, j in ((0, 1), (2, 3), (4, 5), (0, 4), (1, 2)):
        for dep in ("independent", "comonotonic"):
            for a in (0.5, 0.99):
                ms = [pool[i], pool[j]]
                base = solve_multivariate_expectile(ExpectileProblem(ms, dependence=dep, alpha=a)).point
                for shift, scale in ((7.5, 1.0), (-3.0, 1.0), (0.0, 3.0), (0.0, 0.25)):
                    moved = [mg.MarginSpec(m.family, m.location * scale + shift, m.scale_mult * scale) for m in ms]
                    p = solve_multivariate_expectile(ExpectileProblem(moved, dependence=dep, alpha=a)).point
                    want = scale * base + shift
                    equi_err = max(equi_err, float(np.max(np.abs(p - want) / np.maximum(np.abs(want), 1.0))))
    ok = worst_res <= 1e-9 and mean_err <= 1e-8 and como_err <= 1e-8 and equi_err <= 1e-8
    acceptance_report(
        8, ok, f"max residual={worst_res:.2e}, mean err={mean_err:.2e}, comonotonic err={como_err:.2e}, "
        f"equivariance err={equi_err:.2e}"
    )
    assert ok


def test_acceptance_09_partial_moment_identity(acceptance_report):
    families = [P10, mg.pareto(3.5, 2, location=-1), mg.burr(4, 10, 0.75), mg.burr(1.5, 3, 2), mg.student(1, 2),
                mg.student(2, 4.5, location=3)]
    # 50 levels spread on the logit scale between 1e-6 and 1 - 1e-6
    z = np.linspace(np.log(1e-6 / (1 - 1e-6)), np.log((1 - 1e-6) / 1e-6), 50)
    levels = 1 / (1 + np.exp(-z))
    worst = 0.0
    for m in families:
        xs = mg.quantile(m, levels)
        lhs = mg.upper_partial_moment(m, xs) - mg.lower_partial_moment(m, xs)
        rhs = mg.mean(m) - xs
        worst = max(worst, float(np.max(np.abs(lhs - rhs) / np.abs(rhs))))
    ok = worst <= 1e-8
    acceptance_report(9, ok, f"worst relative error over {len(families)} margins x 50 points={worst:.2e}")
    assert ok


def test_acceptance_10_determinism(tmp_path, acceptance_report, capsys):
    configs = sorted(CONFIGS.glob("sweep_*.json"))
    assert configs
    mismatched = []
    for cfg in configs:
        a, b = tmp_path / f"{cfg.stem}-a.csv", tmp_path / f"{cfg.stem}-b.csv"
        assert cli.main(["sweep", "--config", str(cfg), "--jobs", "1", "--output", str(a)]) == 0
        assert cli.main(["sweep", "--config", str(cfg), "--jobs", "3", "--output", str(b)]) == 0
        if a.read_bytes() != b.read_bytes():
            mismatched.append(cfg.name)
    capsys.readouterr()
    ok = not mismatched
    acceptance_report(10, ok, f"{len(configs)} sweep configs run with --jobs 1 and 3, mismatched={mismatched}")
    assert ok
