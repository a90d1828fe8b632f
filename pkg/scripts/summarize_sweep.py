"""Median and quartiles of estimate/exact ratios per (alpha, k, component) from a sweep CSV.

    python3 scripts/summarize_sweep.py results/sweep_pareto_independent.csv
"""

import csv
import sys
from collections import defaultdict

import numpy as np


def summarize(path):
    groups = defaultdict(list)
    flagged = defaultdict(int)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            key = (float(row["alpha"]), int(row["k"]), int(row["component"]))
            if row["error_flag"] != "0":
                flagged[key] += 1
                continue
            groups[key].append(float(row["ratio"]))
    rows = []
    for key in sorted(groups):
        r = np.array(groups[key])
        q1, med, q3 = np.percentile(r, [25, 50, 75])
        rows.append((*key, len(r), flagged[key], q1, med, q3))
    return rows


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    if not argv:
        print(__doc__, file=sys.stderr)
        return 2
    for path in argv:
        print(f"# {path}")
        print(f"{'alpha':>8} {'k':>6} {'comp':>4} {'reps':>5} {'flag':>4} {'q25':>8} {'median':>8} {'q75':>8}")
        for alpha, k, comp, n, nf, q1, med, q3 in summarize(path):
            print(f"{alpha:>8} {k:>6} {comp:>4} {n:>5} {nf:>4} {q1:>8.4f} {med:>8.4f} {q3:>8.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
