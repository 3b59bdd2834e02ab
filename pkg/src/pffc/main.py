from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from . import __version__
from .baselines import PgdParams, default_pgd_params, pgd_run
from .checks import SUITES, run_suite
from .config.settings import PROBLEMS, SOLVERS, RunConfig, get_log_level, get_workers, load_env, load_run_config
from .core import ProblemInstance, SolverParams
from .errors import (
    ConfigError,
    ExactMinUnavailableError,
    InfeasibleError,
    NoPathExistsError,
    OracleFailure,
    ProjectionUnavailableError,
)
from .flows import format_network
from .problems import (
    build_extension_demo,
    build_minflow,
    build_one_dim,
    build_r4nr_problem,
    default_network,
    gen_r4nr,
    load_r4nr,
    save_r4nr,
)
from .solver import RunReport, configure_parsel1, configure_parsel2, run_many
from .utils.reporting import write_trajectory_csv

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_ORACLE = 3


def build_problem(cfg: RunConfig) -> ProblemInstance:
    """Instantiate the configured problem with the configured LMO budget."""

    params = dict(cfg.problem_params)
    if cfg.lmo_power_iters is not None and cfg.problem != "r4nr":
        raise ConfigError("an inexact (power) LMO is only available for r4nr")
    if cfg.problem == "custom-1d":
        problem = build_one_dim()
    elif cfg.problem == "ext-1d":
        problem = build_extension_demo(x1=float(params.get("x1", 0.5)))
    elif cfg.problem == "minflow":
        _, problem = build_minflow(
            net=params.get("graph"),
            coeff_rule=params.get("coeff_rule", "default"),
            formulation=params.get("formulation", "F1"),
            coefficients=params.get("coefficients"),
        )
    else:
        fixture = params.get("fixture")
        if fixture:
            inst = load_r4nr(fixture)
        else:
            inst = gen_r4nr(
                n=params["n"],
                q=params["q"],
                p=params["p"],
                rank=params["rank"],
                laplace_scale=params.get("laplace_scale", 2.0),
                gamma=params.get("gamma"),
                seed=params.get("seed", 0),
            )
        problem = build_r4nr_problem(
            inst,
            mode=params.get("mode", "full"),
            batch=params.get("batch", 1),
            power_iters=cfg.lmo_power_iters,
        )
    if cfg.delta:
        problem = replace(problem, constants=replace(problem.constants, delta=cfg.delta))
    return problem


def build_params(cfg: RunConfig, problem: ProblemInstance) -> SolverParams | PgdParams:
    if cfg.solver == "pgd":
        pgd = cfg.pgd
        params = default_pgd_params(problem, cfg.T, pgd.get("step_rule", "constant"))
        if pgd.get("c") is not None:
            params = replace(params, c=float(pgd["c"]))
        return params
    if cfg.schedule == "parsel1":
        return replace(configure_parsel1(float(cfg.schedule_params["epsilon"])), delta=cfg.delta)
    if cfg.schedule == "parsel2":
        return configure_parsel2(cfg.T, problem.constants)
    sp = cfg.schedule_params
    return SolverParams(
        T=cfg.T,
        eta=float(sp["eta"]),
        alpha=float(sp["alpha"]),
        beta=float(sp["beta"]),
        delta=cfg.delta,
    )


def _output_for(base: Path, seed: int, many: bool) -> Path:
    if not many:
        return base
    return base.with_name(f"{base.stem}_seed{seed}{base.suffix or '.csv'}")


def _parse_seeds(raw: str | None) -> list[int] | None:
    if raw is None:
        return None
    try:
        return [int(s) for s in raw.split(",") if s.strip()]
    except ValueError as exc:
        raise ConfigError(f"--seeds must be comma-separated integers, got {raw!r}") from exc


def cmd_solve(args: argparse.Namespace) -> int:
    overrides = {
        "problem.kind": args.problem,
        "solver": args.solver,
        "T": args.T,
        "delta": args.delta,
        "seed": args.seed,
        "output": args.output,
        "stride": args.stride,
        "lmo": args.lmo,
        "measure_gap": args.measure_gap,
    }
    cfg = load_run_config(args.config, overrides)
    seeds = _parse_seeds(args.seeds) or [cfg.seed]
    try:
        problem = build_problem(cfg)
    except (TypeError, KeyError) as exc:
        raise ConfigError(f"bad parameters for problem {cfg.problem!r}: {exc}") from exc
    params = build_params(cfg, problem)

    print(f"[pffc] Solving {problem.name} with {cfg.solver} (T={params.T}, seeds={seeds})")
    if isinstance(params, PgdParams):
        reports: list[RunReport] = [
            pgd_run(problem, params, seed, record_stride=cfg.stride) for seed in seeds
        ]
    else:
        reports = run_many(
            problem,
            params,
            seeds,
            workers=args.workers or get_workers(),
            record_stride=cfg.stride,
            measure_gap=cfg.measure_gap,
        )
    for report in reports:
        out = write_trajectory_csv(report.trajectory, _output_for(cfg.output, report.seed, len(seeds) > 1))
        gap = "" if report.f_star is None else f" gap={report.gap:.6g} ({report.f_star_tag})"
        extras = "".join(f" {name}={value:.6g}" for name, value in report.extras.items())
        print(
            f"[pffc] seed={report.seed} f(x_bar)={report.final_objective:.8g} "
            f"violation={report.final_violation:.3g}{gap}{extras}"
        )
        if report.stats.measured_gaps:
            summary = report.stats.summary(problem.constants.D)
            print(
                f"[pffc] lmo gaps: count={summary['gap_count']:.0f} mean={summary['gap_mean']:.3e} "
                f"max={summary['gap_max']:.3e} max/D^2={summary['gap_max_frac_d2']:.3e}"
            )
        print(f"[pffc] Trajectory saved to: {out}")
    return EXIT_OK


def cmd_check(args: argparse.Namespace) -> int:
    report = run_suite(args.suite, seed=args.seed, quick=args.quick)
    for line in report.lines():
        print(f"[pffc] {line}")
    status = "passed" if report.passed else "FAILED"
    print(f"[pffc] suite {args.suite} {status}")
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def cmd_gen(args: argparse.Namespace) -> int:
    out = Path(args.out)
    if args.kind == "minflow":
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(format_network(default_network()), encoding="utf-8", newline="\n")
    else:
        inst = gen_r4nr(
            n=args.n,
            q=args.q,
            p=args.p,
            rank=args.rank,
            laplace_scale=args.laplace_scale,
            gamma=args.gamma,
            seed=args.seed,
        )
        save_r4nr(inst, out)
    print(f"[pffc] Wrote {args.kind} fixture to: {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pffc",
        description="Projection-free primal-dual solver for constrained nonsmooth problems.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None, help="overrides PFFC_LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="run a solver and write the trajectory CSV")
    solve.add_argument("--config", default=None, help="YAML or JSON run configuration")
    solve.add_argument("--problem", choices=PROBLEMS, default=None)
    solve.add_argument("--solver", choices=SOLVERS, default=None)
    solve.add_argument("--T", type=int, default=None)
    solve.add_argument("--delta", type=float, default=None)
    solve.add_argument("--seed", type=int, default=None)
    solve.add_argument("--seeds", default=None, help="comma-separated seeds, one CSV each")
    solve.add_argument("--workers", type=int, default=None)
    solve.add_argument("--output", default=None)
    solve.add_argument("--stride", type=int, default=None)
    solve.add_argument("--lmo", default=None, help="'exact' or 'power:<iterations>'")
    solve.add_argument(
        "--measure-gap", action="store_true", default=None, help="fill the lmo_gap column (pffc solver only)"
    )
    solve.set_defaults(handler=cmd_solve)

    check = sub.add_parser("check", help="run a property suite")
    check.add_argument("suite", choices=SUITES)
    check.add_argument("--seed", type=int, default=0)
    check.add_argument("--quick", action="store_true", help="shorter horizons")
    check.set_defaults(handler=cmd_check)

    gen = sub.add_parser("gen", help="write a problem fixture")
    gen.add_argument("kind", choices=("minflow", "r4nr"))
    gen.add_argument("--out", required=True)
    gen.add_argument("--seed", type=int, default=7)
    gen.add_argument("--n", type=int, default=50)
    gen.add_argument("--q", type=int, default=20)
    gen.add_argument("--p", type=int, default=30)
    gen.add_argument("--rank", type=int, default=5)
    gen.add_argument("--laplace-scale", type=float, default=2.0)
    gen.add_argument("--gamma", type=float, default=None)
    gen.set_defaults(handler=cmd_gen)
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    """Parse *argv*, dispatch to a subcommand and return its exit code.

    Exit codes: 0 success, 1 failed check, 2 configuration error, 3 oracle
    failure.
    """

    load_env()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    level = logging.getLevelName((args.log_level or get_log_level()).upper())
    logging.basicConfig(
        level=level if isinstance(level, int) else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.handler(args)
    except (OracleFailure, InfeasibleError, NoPathExistsError) as exc:
        print(f"[pffc] oracle failure: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except (ConfigError, ProjectionUnavailableError, ExactMinUnavailableError, ValueError) as exc:
        print(f"[pffc] configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"[pffc] I/O error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


__all__ = [
    "EXIT_OK",
    "EXIT_CHECK_FAILED",
    "EXIT_CONFIG",
    "EXIT_ORACLE",
    "build_problem",
    "build_params",
    "build_parser",
    "run",
]


if __name__ == "__main__":
    sys.exit(run())
