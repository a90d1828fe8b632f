"""Exact expectiles against their extreme-level limits as alpha approaches 1.

Prints, for the comonotonic, independent and dominant-tail Pareto models,
the ratio e2/e1 and (1 - alpha) / P(X1 > e1) next to the limit values
(eta, beta2) from the closed forms.

    python3 scripts/limit_convergence.py [--csv results/limit_convergence.csv]
"""

import argparse
import csv
import sys

from mvexpectile import asymptotics as asy
from mvexpectile import margins as mg
from mvexpectile.expectile import ExpectileProblem, solve_multivariate_expectile

ALPHAS = [1 - 10.0**-p for p in range(2, 8)]


def models():
    p10, p15 = mg.pareto(2, 10), mg.pareto(2, 15)
    yield "comonotonic", [p10, p15], "comonotonic", asy.limit_comonotonic(2, [1, 2.25])
    yield "independent", [p10, p15], "independent", asy.limit_independent(2, [1, 2.25])
    yield "dominant", [p10, mg.pareto(3, 10)], "independent", asy.limit_dominant(2, 2)


def main(argv=None):
    p = argparse.ArgumentParser(description="exact vs limit expectile ratios")
    p.add_argument("--csv", help="also write the table to this CSV file")
    args = p.parse_args(argv)
    rows = []
    for name, ms, dep, lim in models():
        for a in ALPHAS:
            e = solve_multivariate_expectile(ExpectileProblem(ms, dependence=dep, alpha=a)).point
            eta = (1 - a) / mg.survival(ms[0], e[0])
            rows.append((name, a, e[0], e[1], e[1] / e[0], lim.beta[1], eta, lim.eta))
    header = ("model", "alpha", "e1", "e2", "ratio", "beta2_limit", "eta", "eta_limit")
    print(f"{'model':>12} {'alpha':>10} {'e1':>12} {'e2':>12} {'e2/e1':>9} {'beta2':>7} {'eta':>8} {'eta_lim':>8}")
    for r in rows:
        print(f"{r[0]:>12} {r[1]:>10.7f} {r[2]:>12.4f} {r[3]:>12.4f} {r[4]:>9.5f} {r[5]:>7.4f} {r[6]:>8.5f} {r[7]:>8.5f}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows([[repr(v) if isinstance(v, float) else v for v in r] for r in rows])
    return 0


if __name__ == "__main__":
    sys.exit(main())
