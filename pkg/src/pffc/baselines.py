"""Projected subgradient descent, the projection-based reference solver."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass
from typing import Literal

import numpy as np
import pandas as pd

from .core import ProblemInstance
from .errors import InvalidParametersError, ProjectionUnavailableError
from .oracles import OracleStats, project
from .solver import RunReport, constraint_violation, evaluate_diagnostics, record_schedule
from .utils.reporting import TRAJECTORY_COLUMNS

logger = logging.getLogger(__name__)

StepRule = Literal["constant", "decaying"]


@dataclass(frozen=True)
class PgdParams:
    """``T`` iterations with step ``c / sqrt(T)`` (constant) or ``c / sqrt(t)`` (decaying).

    ``c = 0`` is accepted and leaves the iterates at the start point.
    """

    T: int
    step_rule: StepRule = "constant"
    c: float = 1.0

    def __post_init__(self) -> None:
        if int(self.T) != self.T or self.T < 1:
            raise InvalidParametersError(f"T must be a positive integer, got {self.T}")
        if self.step_rule not in ("constant", "decaying"):
            raise InvalidParametersError(f"unknown step rule {self.step_rule!r}")
        if not (self.c >= 0 and math.isfinite(self.c)):
            raise InvalidParametersError(f"step constant c must be >= 0, got {self.c}")

    def step_size(self, t: int) -> float:
        if self.step_rule == "constant":
            return self.c / math.sqrt(self.T)
        return self.c / math.sqrt(t)


def default_pgd_params(
    problem: ProblemInstance, T: int, step_rule: StepRule = "constant"
) -> PgdParams:
    """Step constant ``c = D / L``; ``c = D`` when ``L = 0``."""

    consts = problem.constants
    c = consts.D / consts.L if consts.L > 0 else consts.D
    return PgdParams(T=T, step_rule=step_rule, c=c)


def pgd_run(
    problem: ProblemInstance,
    params: PgdParams,
    seed: int,
    *,
    record_stride: int | None = None,
) -> RunReport:
    """Run ``x_{t+1} = proj_X(x_t - step_t s_t)`` and report the average of ``x_1..x_T``.

    The trajectory has the same columns as the primal-dual solver's; the
    drift, multiplier and LMO-gap columns are ``nan``.

    Raises
    ------
    ProjectionUnavailableError
        If the feasible set has no Euclidean projection.
    """

    feasible = problem.feasible_set
    if getattr(feasible, "project", None) is None:
        raise ProjectionUnavailableError(
            f"{type(feasible).__name__} has no projection; projected subgradient descent needs one"
        )
    logger.info("pgd %s: T=%d rule=%s c=%.4g seed=%d", problem.name, params.T, params.step_rule, params.c, seed)
    rng = np.random.default_rng(seed)
    stats = OracleStats()
    record_at = set(record_schedule(params.T, record_stride))
    start = time.perf_counter()

    x = np.array(problem.initial_point, dtype=np.float64)
    sum_x = x.copy()
    rows: list[dict[str, float]] = []
    t = 1
    while True:
        if t in record_at:
            xbar = sum_x / t
            rows.append(
                {
                    "t": t,
                    "obj_avg": problem.objective.value(xbar),
                    "violation_l2": constraint_violation(problem, xbar),
                    "q_norm": math.nan,
                    "w_norm": math.nan,
                    "lmo_gap": math.nan,
                    "wall_ms": 1000 * (time.perf_counter() - start),
                }
            )
        if t >= params.T:
            break
        tick = time.perf_counter()
        s = problem.objective.subgradient(x, rng)
        stats.subgrad_calls += 1
        stats.subgrad_seconds += time.perf_counter() - tick
        x = project(feasible, x - params.step_size(t) * s, stats)
        sum_x += x
        t += 1

    final_average = sum_x / params.T
    report = RunReport(
        final_average=final_average,
        trajectory=pd.DataFrame(rows, columns=list(TRAJECTORY_COLUMNS)),
        params=params,
        seed=seed,
        final_objective=problem.objective.value(final_average),
        final_violation=constraint_violation(problem, final_average),
        stats=stats,
        problem_name=problem.name,
        solver="pgd",
        f_star=problem.f_star,
        f_star_tag=problem.f_star_tag,
        extras=evaluate_diagnostics(problem, final_average),
    )
    logger.info("pgd %s done: f(x_bar)=%.6g", problem.name, report.final_objective)
    return report


__all__ = ["PgdParams", "StepRule", "default_pgd_params", "pgd_run"]
