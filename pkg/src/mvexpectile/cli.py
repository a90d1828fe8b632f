"""Command-line front end.

    mvexpectile VERB --config FILE [--output FILE] [--set key=value ...]
                     [--model M] [--seed S] [--jobs N]

Exit codes: 0 success, 2 usage error, 3 missing or unreadable config,
4 config schema violation or invalid model parameters, 5 solver or
estimator failure (diagnostic JSON on stderr), 6 I/O failure on data or
output files. A relative ``samples`` path in an estimate config is
resolved against the config file's directory.
"""

from __future__ import annotations

import argparse
import copy
import io
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from . import asymptotics as asy
from . import estimation as est
from . import simulation as sim
from .expectile import ExpectileProblem, solve_multivariate_expectile
from .margins import MarginSpec
from .rootfind import ConvergenceError
from .schemas import CONFIG_SCHEMAS, validate

VERBS = ("exact", "limit", "estimate", "simulate", "sweep", "boxplot")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MISSING_CONFIG = 3
EXIT_SCHEMA = 4
EXIT_SOLVER = 5
EXIT_IO = 6


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


@dataclass
class Command:
    verb: str
    config_path: str
    output: str | None = None
    overrides: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    jobs: int = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(EXIT_USAGE, f"{self.format_usage()}{self.prog}: error: {message}")


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mvexpectile", description="Multivariate expectiles of heavy-tailed vectors.")
    p.add_argument("verb", choices=VERBS)
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--output", help="output file (stdout when omitted)")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a scalar config leaf; dotted keys reach into nested objects and lists")
    p.add_argument("--model", choices=("indep", "como", "archimedean"), help="limit: tail dependence model")
    p.add_argument("--seed", type=int, help="override master_seed")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for sweep and boxplot")
    return p


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _parse_override(item: str):
    key, sep, value = item.partition("=")
    if not sep or not key:
        raise CliError(EXIT_USAGE, f"--set expects KEY=VALUE, got {item!r}")
    return key, _parse_value(value)


def apply_override(config: dict, key: str, value) -> None:
    """Set a scalar leaf addressed by a dotted path such as ``margins.0.params.a``."""
    parts = key.split(".")
    node = config
    for p in parts[:-1]:
        node = node[int(p)] if isinstance(node, list) else node.setdefault(p, {})
    last = parts[-1]
    if isinstance(node, list):
        node[int(last)] = value
    else:
        node[last] = value


def parse_command(argv) -> Command:
    """Parse and validate argv; raises ``CliError`` carrying the exit code."""
    args = _build_parser().parse_args(list(argv))
    if args.jobs < 1:
        raise CliError(EXIT_USAGE, "--jobs must be at least 1")
    if not args.config:
        raise CliError(EXIT_MISSING_CONFIG, f"{args.verb}: --config is required")
    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as exc:
        raise CliError(EXIT_MISSING_CONFIG, f"cannot read config {args.config}: {exc}") from exc
    try:
        config = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_SCHEMA, f"config {args.config} is not valid JSON: {exc}") from exc
    if not isinstance(config, dict):
        raise CliError(EXIT_SCHEMA, "config must be a JSON object")
    overrides = dict(_parse_override(s) for s in args.overrides)
    if args.model is not None:
        overrides["model"] = args.model
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    config = copy.deepcopy(config)
    try:
        for k, v in overrides.items():
            apply_override(config, k, v)
    except (KeyError, IndexError, ValueError, TypeError) as exc:
        raise CliError(EXIT_SCHEMA, f"cannot apply override: {exc}") from exc
    try:
        validate(config, CONFIG_SCHEMAS[args.verb])
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise CliError(EXIT_SCHEMA, f"config violates the {args.verb} schema at {where}: {exc.message}") from exc
    return Command(args.verb, args.config, args.output, overrides, config, args.jobs)


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _json_text(obj) -> str:
    return json.dumps(obj) + "\n"


def _run_exact(cmd: Command):
    cfg = cmd.config
    problem = ExpectileProblem(
        [MarginSpec.from_dict(m) for m in cfg["margins"]],
        cfg.get("weights"),
        cfg.get("dependence", "independent"),
        cfg["alpha"],
    )
    sol = solve_multivariate_expectile(problem, tol=cfg.get("tol", 1e-9))
    return _json_text(sol.to_dict())


def _run_limit(cmd: Command):
    cfg = cmd.config
    theta, c = float(cfg["theta"]), np.asarray(cfg["c"], dtype=float)
    model = cfg["model"]
    weights = cfg.get("weights")
    if model == "como" and weights is None:
        lv = asy.limit_comonotonic(theta, c)
    elif model == "indep" and weights is None:
        lv = asy.limit_independent(theta, c)
    else:
        tdm = {
            "indep": asy.TailDependenceModel.independent,
            "como": asy.TailDependenceModel.comonotonic,
        }.get(model)
        tdm = tdm() if tdm else asy.TailDependenceModel.archimedean(float(cfg["theta_psi"]))
        lv = asy.solve_limit_system(theta, c, tdm, weights=weights)
    return _json_text(lv.to_dict())


def _run_estimate(cmd: Command):
    cfg = cmd.config
    path = Path(cfg["samples"])
    if not path.is_absolute():
        path = Path(cmd.config_path).resolve().parent / path
    try:
        samples = est.SampleMatrix.from_csv(path)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read samples {cfg['samples']}: {exc}") from exc
    except ValueError as exc:
        raise CliError(EXIT_IO, f"malformed samples file: {exc}") from exc
    k, alpha, norm = cfg["k"], cfg["alpha"], cfg.get("norm", "l1")
    te = est.tail_estimates(samples, k, norm)
    fn = est.extreme_expectile_comonotonic if cfg["dependence"] == "comonotonic" else est.extreme_expectile_independent
    e = fn(samples, k, alpha, estimates=te)
    out = te.to_dict()
    out["expectile"] = [float(v) for v in e]
    out["k_diagnostic"] = est.k_growth_diagnostic(samples.n, k, alpha)
    return _json_text(out)


def _run_simulate(cmd: Command):
    cfg = cmd.config
    sample = sim.draw_sample(
        [MarginSpec.from_dict(m) for m in cfg["margins"]],
        cfg["dependence"],
        cfg["n"],
        sim.make_rng(cfg.get("master_seed", 0)),
    )
    buf = io.StringIO()
    sample.to_csv(buf)
    return buf.getvalue()


def _run_sweep(cmd: Command):
    config = sim.ExperimentConfig.from_dict(cmd.config)
    return sim.run_k_sweep(config, jobs=cmd.jobs, log=_log).to_csv_string()


def _run_boxplot(cmd: Command):
    config = sim.BoxplotConfig.from_dict(cmd.config)
    return sim.run_boxplot_study(config, jobs=cmd.jobs, log=_log).to_csv_string()


_RUNNERS = {
    "exact": _run_exact,
    "limit": _run_limit,
    "estimate": _run_estimate,
    "simulate": _run_simulate,
    "sweep": _run_sweep,
    "boxplot": _run_boxplot,
}


def _failure(kind: str, exc: Exception) -> dict:
    out = {"error": kind, "message": str(exc)}
    if isinstance(exc, ConvergenceError):
        out["best_point"] = None if exc.best_point is None else [float(v) for v in exc.best_point]
        out["residual_norm"] = None if exc.residual_norm is None else float(exc.residual_norm)
        out["iterations"] = int(exc.iterations)
    return out


def run_command(cmd: Command, stdout=None) -> int:
    """Execute a parsed command and return its exit status."""
    stdout = sys.stdout if stdout is None else stdout
    try:
        text = _RUNNERS[cmd.verb](cmd)
    except CliError as exc:
        _log(str(exc))
        return exc.code
    except ConvergenceError as exc:
        sys.stderr.write(_json_text(_failure("non_convergence", exc)))
        return EXIT_SOLVER
    except est.TailTooHeavyError as exc:
        sys.stderr.write(_json_text(_failure("tail_too_heavy", exc)))
        return EXIT_SOLVER
    except OSError as exc:
        _log(f"I/O failure: {exc}")
        return EXIT_IO
    except ValueError as exc:
        # values that pass the schema but violate a model constraint, e.g. Pareto a <= 1
        _log(f"invalid configuration: {exc}")
        return EXIT_SCHEMA
    if cmd.output is None:
        stdout.write(text)
        stdout.flush()
        return EXIT_OK
    try:
        with open(cmd.output, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        _log(f"cannot write {cmd.output}: {exc}")
        return EXIT_IO
    return EXIT_OK


def main(argv=None) -> int:
    try:
        cmd = parse_command(sys.argv[1:] if argv is None else argv)
    except CliError as exc:
        _log(str(exc))
        return exc.code
    return run_command(cmd)


if __name__ == "__main__":
    sys.exit(main())
