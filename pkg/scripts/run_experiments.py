"""Run every sweep and boxplot config in configs/ and write CSV tables to results/.

    python3 scripts/run_experiments.py [--jobs N] [--only PATTERN] [--replications R]

Each table is produced through the CLI, so the output is byte-identical to
``mvexpectile sweep --config ...`` with the same settings.
"""

import argparse
import fnmatch
import sys
import time
from pathlib import Path

from mvexpectile import cli

ROOT = Path(__file__).resolve().parent.parent


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--only", default="*", help="glob on config file names")
    p.add_argument("--replications", type=int, help="override the replication count (desk-scale knob)")
    p.add_argument("--out", default=str(ROOT / "results"))
    args = p.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    configs = sorted(ROOT.glob("configs/sweep_*.json")) + sorted(ROOT.glob("configs/boxplot_*.json"))
    status = 0
    for cfg in configs:
        if not fnmatch.fnmatch(cfg.name, args.only):
            continue
        verb = "sweep" if cfg.name.startswith("sweep_") else "boxplot"
        argv_ = [verb, "--config", str(cfg), "--jobs", str(args.jobs), "--output", str(out / f"{cfg.stem}.csv")]
        if args.replications:
            argv_ += ["--set", f"replications={args.replications}"]
        t0 = time.perf_counter()
        code = cli.main(argv_)
        print(f"{cfg.name}: exit {code} in {time.perf_counter() - t0:.1f}s", file=sys.stderr)
        status = status or code
    return status


if __name__ == "__main__":
    sys.exit(main())
