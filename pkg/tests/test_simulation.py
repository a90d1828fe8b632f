import csv
import io

import numpy as np
import pytest

from mvexpectile import estimation as est
from mvexpectile import margins as mg
from mvexpectile import simulation as sim
from mvexpectile.expectile import ExpectileProblem, univariate_expectile

P10, P15 = mg.pareto(2, 10), mg.pareto(2, 15)


def test_open_uniforms_strictly_inside_unit_interval():
    u = sim.open_uniforms(sim.make_rng(1), 100_000)
    assert u.min() > 0 and u.max() < 1
    assert abs(u.mean() - 0.5) < 0.01


def test_draw_sample_comonotonic_rank_identity():
    s = sim.draw_sample([P10, P15, mg.student(1, 2)], "comonotonic", 5000, 42)
    order = np.argsort(s.column(0), kind="stable")
    for j in (1, 2):
        assert np.array_equal(np.argsort(s.column(j), kind="stable"), order)


def test_draw_sample_deterministic():
    a = sim.draw_sample([P10, P15], "independent", 1000, 9)
    b = sim.draw_sample([P10, P15], "independent", 1000, 9)
    c = sim.draw_sample([P10, P15], "independent", 1000, 10)
    assert np.array_equal(a.data, b.data)
    assert not np.array_equal(a.data, c.data)


def test_replication_streams_are_distinct_and_reproducible():
    x = sim.open_uniforms(sim.make_rng(5, 0), 10)
    y = sim.open_uniforms(sim.make_rng(5, 1), 10)
    assert not np.array_equal(x, y)
    assert np.array_equal(x, sim.open_uniforms(sim.make_rng(5, 0), 10))


def test_draw_sample_mean_pareto():
    means = [sim.draw_sample([P10], "independent", 100_000, sim.make_rng(3, r)).column(0).mean() for r in range(100)]
    assert np.median(means) == pytest.approx(10, rel=0.03)


def test_draw_sample_marginal_distribution():
    s = sim.draw_sample([mg.burr(4, 10, 0.75)], "independent", 100_000, 0)
    x = np.sort(s.column(0))
    ecdf = np.arange(1, x.size + 1) / x.size
    assert np.max(np.abs(ecdf - mg.cdf(mg.burr(4, 10, 0.75), x))) < 0.01


def test_exact_reference_curve_comonotonic_identical():
    prob = ExpectileProblem([P10, P10], dependence="comonotonic")
    for a, p in sim.exact_reference_curve(prob, [0.6, 0.9, 0.99]):
        u = univariate_expectile(P10, a)
        assert p == pytest.approx([u, u], rel=1e-8)


def test_exact_reference_curve_mean_and_asymptotics():
    (a, p), = sim.exact_reference_curve(ExpectileProblem([P10]), [0.5])
    assert p[0] == pytest.approx(10)
    alpha = 1 - 1e-6
    (a, p), = sim.exact_reference_curve(ExpectileProblem([P10, P15], dependence="comonotonic"), [alpha])
    target = np.array([mg.quantile(P10, alpha), mg.quantile(P15, alpha)])  # (theta-1)^(-1/theta) = 1
    assert p == pytest.approx(target, rel=0.02)


def test_exact_reference_curve_reports_alpha(monkeypatch):
    from mvexpectile.rootfind import ConvergenceError

    def boom(problem, tol):
        raise ConvergenceError("nope", best_point=[1.0], residual_norm=1.0, iterations=3)

    monkeypatch.setattr(sim, "solve_multivariate_expectile", boom)
    with pytest.raises(sim.ReferenceCurveError) as info:
        sim.exact_reference_curve(ExpectileProblem([P10]), [0.75])
    assert info.value.alpha == 0.75


def test_default_k_grid():
    assert sim.default_k_grid(100_000) == [500, 1000, 2000, 5000]


def test_experiment_config_validation_and_round_trip():
    cfg = sim.ExperimentConfig([P10, P15], "independent", [0.999], 10_000, replications=3, master_seed=2**63)
    assert cfg.k_grid == (50, 100, 200, 500)
    assert sim.ExperimentConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ValueError):
        sim.ExperimentConfig([P10], "independent", [0.999], 100, k_grid=[100])
    with pytest.raises(ValueError):
        sim.ExperimentConfig([P10], "independent", [], 100, k_grid=[10])
    with pytest.raises(ValueError):
        sim.ExperimentConfig([P10], "independent", [0.9], 100, k_grid=[10], master_seed=-1)


def _small_config(dep="independent", reps=4):
    return sim.ExperimentConfig([P10, P15], dep, [0.99, 0.999], 5000, [50, 100], replications=reps, master_seed=17)


@pytest.mark.parametrize("dep", ["independent", "comonotonic"])
def test_sweep_records_match_direct_calls(dep):
    cfg = _small_config(dep, reps=1)
    res = sim.run_k_sweep(cfg)
    sample = sim.draw_sample(cfg.margins, dep, cfg.n, sim.make_rng(cfg.master_seed, 0))
    fn = est.extreme_expectile_comonotonic if dep == "comonotonic" else est.extreme_expectile_independent
    recs = list(res.records())
    assert len(recs) == 2 * 2 * 1 * 2
    for r in recs:
        direct = fn(sample, r.k, r.alpha)[r.component - 1]
        assert r.estimate == direct
        assert r.ratio == pytest.approx(r.estimate / r.exact)
        assert r.error_flag == 0


def test_sweep_csv_header_and_canonical_order():
    text = sim.run_k_sweep(_small_config()).to_csv_string()
    lines = text.splitlines()
    assert lines[0] == "alpha,k,n,rep,component,exact,estimate,ratio,error_flag"
    rows = list(csv.DictReader(io.StringIO(text)))
    keys = [(float(r["alpha"]), int(r["k"]), int(r["rep"]), int(r["component"])) for r in rows]
    assert keys == sorted(keys)
    assert len(rows) == 2 * 2 * 4 * 2


def test_sweep_deterministic_across_jobs():
    cfg = _small_config(reps=5)
    a = sim.run_k_sweep(cfg, jobs=1).to_csv_string()
    b = sim.run_k_sweep(cfg, jobs=3).to_csv_string()
    assert a == b


def test_sweep_flags_heavy_tails_instead_of_aborting():
    cfg = sim.ExperimentConfig([mg.pareto(1.05, 1)], "independent", [0.99], 2000, [1000], replications=3)
    res = sim.run_k_sweep(cfg)
    recs = list(res.records())
    assert len(recs) == 3
    flagged = [r for r in recs if r.error_flag]
    assert flagged
    assert all(np.isnan(r.estimate) and np.isnan(r.ratio) for r in flagged)


def test_boxplot_identical_columns_give_unit_c_hat():
    cfg = sim.BoxplotConfig([P10, P10], "comonotonic", [1000], replications=5)
    res = sim.run_boxplot_study(cfg)
    assert np.all(res.c_hat(1000) == 1.0)


def test_boxplot_csv():
    cfg = sim.BoxplotConfig([P10, P15], "independent", [1000, 2000], k_by_n={1000: 10, 2000: 40}, replications=3)
    text = sim.run_boxplot_study(cfg).to_csv_string()
    lines = text.splitlines()
    assert lines[0] == "n,k,rep,component,c_hat,gamma_hat,error_flag"
    assert len(lines) == 1 + 2 * 3 * 2
    assert lines[1].startswith("1000,10,0,1,1.0,")
    assert sim.run_boxplot_study(cfg, jobs=2).to_csv_string() == text


@pytest.mark.slow
def test_boxplot_spread_and_location():
    cfg = sim.BoxplotConfig([P10, P15], "independent", [1000, 10_000, 100_000], k_fraction=0.01, replications=100,
                            master_seed=2024)
    res = sim.run_boxplot_study(cfg)
    c_big = res.c_hat(100_000)
    q1, q3 = np.percentile(c_big, [25, 75])
    assert q1 <= 2.25 <= q3
    mads = [np.median(np.abs(res.c_hat(n) - np.median(res.c_hat(n)))) for n in cfg.n_grid]
    assert mads[0] > mads[1] > mads[2]
