"""Projection-free primal-dual method for nonsmooth problems with functional constraints.

The method keeps two sequences. ``x_t`` lives in the feasible set and is only
ever produced by the linear minimisation oracle; ``y_t`` lives in the
auxiliary set and takes a closed-form proximal step. The drift ``Q_t``
accumulates ``y - x`` and steers the LMO; the multipliers ``W_t`` handle the
functional constraints ``h_i(x) <= 0``. One iteration, in order::

    x_{t+1} = lmo(-Q_t; delta)
    p_t     = eta Q_t + s_t + beta sum_i (W_i + h_i(y_t)) g_i
    y_{t+1} = proj(((alpha + 2 G^2 beta) y_t + eta x_{t+1} - p_t) / (alpha + 2 G^2 beta + eta))
    Q_{t+1} = Q_t + y_{t+1} - x_{t+1}
    (s, g, h) sampled fresh at y_{t+1}
    W_{t+1} = max(W_t + h(y_t) + <g_t, y_{t+1} - y_t>, [-h(y_{t+1})]_+)

The ``W`` update uses the subgradients and values cached at ``y_t``, not the
fresh ones. With no constraints ``G = 0``, ``beta = 1`` and every ``W`` term
is skipped. The returned point is the average of ``x_1 .. x_T``.
"""

from __future__ import annotations

import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Optional, Sequence

import numpy as np
import pandas as pd

from .core import (
    ConstraintVec,
    Point,
    ProblemConstants,
    ProblemInstance,
    SolverParams,
    add,
    axpy,
    inner,
    l2_norm,
    norm,
    positive_part,
    scale,
)
from .errors import (
    BadDimsError,
    DegenerateConstantsError,
    ExactMinUnavailableError,
    InvalidParametersError,
    NonPositiveEpsilonError,
    OracleNotConvergedError,
)
from .oracles import (
    ExactMinSet,
    LmoQuery,
    OracleStats,
    SubgradientSample,
    lmo,
    lmo_sigma_ratio,
    measure_lmo_gap,
    project,
    sample_subgradients,
)
from .utils.reporting import TRAJECTORY_COLUMNS

logger = logging.getLogger(__name__)

_LOG_EVERY = 1000
_GEOMETRIC_POINTS = 200
_FULL_RECORD_LIMIT = 10_000


# ---------------------------------------------------------------- schedules


def configure_parsel1(epsilon: float) -> SolverParams:
    """``eta = eps``, ``alpha = beta = 1/eps``, ``T = ceil(1/eps^2)``.

    Raises
    ------
    NonPositiveEpsilonError
        If ``epsilon`` is not a positive finite number.
    """

    if not (epsilon > 0 and math.isfinite(epsilon)):
        raise NonPositiveEpsilonError(f"epsilon must be positive, got {epsilon}")
    inv_sq = 1.0 / epsilon**2
    # 1/0.1**2 is 100.00000000000001 in floating point
    T = max(1, math.ceil(inv_sq * (1 - 1e-12)))
    return SolverParams(T=T, eta=epsilon, alpha=1.0 / epsilon, beta=1.0 / epsilon)


def configure_parsel2(T: int, c: ProblemConstants) -> SolverParams:
    """Constant-aware schedule.

    ``alpha = L sqrt(T) / D``, ``eta = L / sqrt(T (D^2 + 2 delta))`` and
    ``beta = sqrt(T) / (G D)``; ``beta = 1`` when there are no constraints.

    Raises
    ------
    DegenerateConstantsError
        If ``L = 0``, ``D = 0``, or ``G = 0`` with constraints present.
    """

    if int(T) != T or T < 1:
        raise InvalidParametersError(f"T must be a positive integer, got {T}")
    if c.L <= 0 or c.D <= 0:
        raise DegenerateConstantsError(f"schedule needs L > 0 and D > 0, got L={c.L}, D={c.D}")
    root_t = math.sqrt(T)
    alpha = c.L * root_t / c.D
    eta = c.L / math.sqrt(T * (c.D**2 + 2 * c.delta))
    if c.m == 0:
        beta = 1.0
    elif c.G <= 0:
        raise DegenerateConstantsError("G must be positive when constraints are present")
    else:
        beta = root_t / (c.G * c.D)
    return SolverParams(T=int(T), eta=eta, alpha=alpha, beta=beta, delta=c.delta)


# -------------------------------------------------------------------- state


@dataclass(frozen=True)
class SolverState:
    """Iterates at step ``t`` plus the subgradient sample drawn at ``y_t``."""

    t: int
    x: Point
    y: Point
    Q: Point
    W: ConstraintVec
    sample: SubgradientSample
    sum_x: Point
    sum_y: Point
    # gap of the LMO call that produced x_t; nan when not measured
    lmo_gap: float = math.nan


def init_state(
    problem: ProblemInstance,
    rng: np.random.Generator,
    stats: OracleStats | None = None,
) -> SolverState:
    """``x_1 = y_1 = `` initial point, ``Q_1 = 0``, ``W_1 = [-h(y_1)]_+``."""

    x1 = np.array(problem.initial_point, dtype=np.float64)
    sample = sample_subgradients(problem, x1, rng, stats)
    return SolverState(
        t=1,
        x=x1,
        y=x1.copy(),
        Q=np.zeros_like(x1),
        W=positive_part(-sample.constraint_values),
        sample=sample,
        sum_x=x1.copy(),
        sum_y=x1.copy(),
    )


def _prox_weight(problem: ProblemInstance, params: SolverParams) -> float:
    """``alpha + 2 G^2 beta``, or plain ``alpha`` without constraints."""

    if problem.m == 0:
        return params.alpha
    return params.alpha + 2 * problem.constants.G**2 * params.beta


def drift_direction(problem: ProblemInstance, params: SolverParams, state: SolverState) -> Point:
    """``p_t = eta Q_t + s_t + beta sum_i (W_i + h_i(y_t)) g_i``."""

    p = axpy(params.eta, state.Q, state.sample.objective_subgradient)
    if problem.m:
        weights = state.W + state.sample.constraint_values
        for w_i, g_i in zip(weights, state.sample.constraint_subgradients):
            p = axpy(params.beta * w_i, g_i, p)
    return p


def closed_form_y(
    problem: ProblemInstance,
    params: SolverParams,
    state: SolverState,
    x_next: Point,
    stats: OracleStats | None = None,
) -> Point:
    """Projected proximal step that gives ``y_{t+1}``."""

    k = _prox_weight(problem, params)
    p = drift_direction(problem, params, state)
    y_tilde = (k * state.y + params.eta * x_next - p) / (k + params.eta)
    return project(problem.auxiliary_set, y_tilde, stats)


def update_multipliers(
    state: SolverState, y_next: Point, fresh: SubgradientSample
) -> ConstraintVec:
    """``W_{t+1}`` from the sample cached at ``y_t`` and the fresh ``h(y_{t+1})``."""

    cached = state.sample
    if cached.constraint_values.size == 0:
        return state.W
    dy = y_next - state.y
    linearised = np.array(
        [
            w + h + inner(g, dy)
            for w, h, g in zip(state.W, cached.constraint_values, cached.constraint_subgradients)
        ]
    )
    return np.maximum(linearised, positive_part(-fresh.constraint_values))


def step(
    problem: ProblemInstance,
    params: SolverParams,
    state: SolverState,
    rng: np.random.Generator,
    stats: OracleStats | None = None,
    measure_gap: bool = False,
) -> SolverState:
    """Advance one iteration from ``t`` to ``t + 1``.

    Raises
    ------
    InvalidParametersError
        If ``state.t`` has already reached ``params.T``.
    OracleFailure
        Propagated from the oracles.
    """

    if state.t >= params.T:
        raise InvalidParametersError(f"cannot step past T={params.T} (t={state.t})")

    direction = -state.Q
    x_next = lmo(problem.feasible_set, LmoQuery(direction, params.delta), rng, stats)
    gap = math.nan
    if measure_gap:
        gap = measure_lmo_gap(problem.feasible_set, x_next, direction)
        if stats is not None:
            stats.measured_gaps.append(gap)
            stats.sigma_ratios.append(lmo_sigma_ratio(direction, gap))

    y_next = closed_form_y(problem, params, state, x_next, stats)
    q_next = add(state.Q, axpy(-1.0, x_next, y_next))
    fresh = sample_subgradients(problem, y_next, rng, stats)
    w_next = update_multipliers(state, y_next, fresh)

    return SolverState(
        t=state.t + 1,
        x=x_next,
        y=y_next,
        Q=q_next,
        W=w_next,
        sample=fresh,
        sum_x=add(state.sum_x, x_next),
        sum_y=add(state.sum_y, y_next),
        lmo_gap=gap,
    )


# --------------------------------------------------------------------- runs


def record_schedule(T: int, stride: int | None = None) -> tuple[int, ...]:
    """Iterations at which a trajectory row is written; always ends with ``T``.

    An explicit *stride* records ``1, 1 + stride, ...``. Otherwise every
    iteration is recorded up to ``T = 10_000`` and a geometric grid of about
    200 points beyond that.
    """

    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    if stride is not None:
        if stride < 1:
            raise ValueError(f"stride must be >= 1, got {stride}")
        ts = list(range(1, T + 1, stride))
    elif T <= _FULL_RECORD_LIMIT:
        ts = list(range(1, T + 1))
    else:
        grid = np.unique(np.round(np.geomspace(1, T, _GEOMETRIC_POINTS)).astype(int))
        ts = [int(t) for t in grid]
    if ts[-1] != T:
        ts.append(T)
    return tuple(ts)


@dataclass
class RunReport:
    """Outcome of one run: the averaged iterate, its trajectory and diagnostics.

    ``min_w`` and ``min_w_plus_h`` are the smallest values of ``W_{i,t}`` and
    ``W_{i,t} + h_i(y_t)`` seen over the run (``inf`` without constraints).
    """

    final_average: Point
    trajectory: pd.DataFrame
    params: Any
    seed: int
    final_objective: float
    final_violation: float
    stats: OracleStats
    problem_name: str = "problem"
    solver: str = "pffc"
    final_state: Optional[SolverState] = None
    min_w: float = math.inf
    min_w_plus_h: float = math.inf
    max_q_norm: float = math.nan
    f_star: Optional[float] = None
    f_star_tag: Optional[str] = None
    extras: dict = field(default_factory=dict)

    @property
    def gap(self) -> float:
        """``f(x_bar_T) - f*``, or nan when ``f*`` is unknown."""

        if self.f_star is None:
            return math.nan
        return self.final_objective - self.f_star


def constraint_violation(problem: ProblemInstance, x: Point) -> float:
    """``||[h(x)]_+||_2``; 0 without constraints."""

    if problem.m == 0:
        return 0.0
    values = np.array([h.value(x) for h in problem.constraints])
    return l2_norm(positive_part(values))


def evaluate_diagnostics(problem: ProblemInstance, x: Point) -> dict[str, float]:
    """Evaluate the problem's extra diagnostics at *x* (typically ``x_bar_T``)."""

    return {name: float(fn(x)) for name, fn in problem.diagnostics.items()}


def trajectory_row(
    problem: ProblemInstance, state: SolverState, elapsed_ms: float
) -> dict[str, float]:
    xbar = state.sum_x / state.t
    return {
        "t": state.t,
        "obj_avg": problem.objective.value(xbar),
        "violation_l2": constraint_violation(problem, xbar),
        "q_norm": norm(state.Q),
        "w_norm": l2_norm(state.W),
        "lmo_gap": state.lmo_gap,
        "wall_ms": elapsed_ms,
    }


def run(
    problem: ProblemInstance,
    params: SolverParams,
    seed: int,
    *,
    record_stride: int | None = None,
    measure_gap: bool = False,
) -> RunReport:
    """Run ``T - 1`` steps from the initial point and return the average of ``x_1..x_T``.

    Every run owns its RNG (``numpy.random.default_rng(seed)``) and its
    :class:`OracleStats`, so equal seeds give identical trajectories.

    Raises
    ------
    ExactMinUnavailableError
        If ``measure_gap`` is set on a set without an exact linear minimum.
    """

    if measure_gap and not isinstance(problem.feasible_set, ExactMinSet):
        raise ExactMinUnavailableError(
            f"{type(problem.feasible_set).__name__} cannot measure LMO gaps"
        )
    logger.info(
        "run %s: T=%d eta=%.4g alpha=%.4g beta=%.4g delta=%.3g seed=%d",
        problem.name, params.T, params.eta, params.alpha, params.beta, params.delta, seed,
    )
    rng = np.random.default_rng(seed)
    stats = OracleStats()
    record_at = set(record_schedule(params.T, record_stride))
    start = time.perf_counter()

    state = init_state(problem, rng, stats)
    rows: list[dict[str, float]] = []
    min_w, min_wh, max_q = math.inf, math.inf, 0.0

    while True:
        if problem.m:
            min_w = min(min_w, float(np.min(state.W)))
            min_wh = min(min_wh, float(np.min(state.W + state.sample.constraint_values)))
        max_q = max(max_q, norm(state.Q))
        if state.t in record_at:
            rows.append(trajectory_row(problem, state, 1000 * (time.perf_counter() - start)))
        if state.t % _LOG_EVERY == 0:
            logger.debug("t=%d |Q|=%.4g |W|=%.4g", state.t, norm(state.Q), l2_norm(state.W))
        if state.t >= params.T:
            break
        state = step(problem, params, state, rng, stats, measure_gap)

    final_average = scale(1.0 / params.T, state.sum_x)
    trajectory = pd.DataFrame(rows, columns=list(TRAJECTORY_COLUMNS))
    report = RunReport(
        final_average=final_average,
        trajectory=trajectory,
        params=params,
        seed=seed,
        final_objective=problem.objective.value(final_average),
        final_violation=constraint_violation(problem, final_average),
        stats=stats,
        problem_name=problem.name,
        final_state=state,
        min_w=min_w,
        min_w_plus_h=min_wh,
        max_q_norm=max_q,
        f_star=problem.f_star,
        f_star_tag=problem.f_star_tag,
        extras=evaluate_diagnostics(problem, final_average),
    )
    logger.info(
        "run %s done: f(x_bar)=%.6g violation=%.3g max|Q|=%.4g in %.1f ms",
        problem.name, report.final_objective, report.final_violation, max_q,
        1000 * (time.perf_counter() - start),
    )
    return report


def _with_exact_oracles(problem: ProblemInstance) -> ProblemInstance:
    feasible = problem.feasible_set
    if getattr(feasible, "power_iters", None) is not None:
        return replace(problem, feasible_set=replace(feasible, power_iters=None))
    return problem


def reference_solve(problem: ProblemInstance, T: int, seed: int = 0) -> tuple[float, str]:
    """Stand-in for ``f*`` from a run ten times longer with exact LMOs.

    The value is tagged ``"reference"``: it is an estimate, not the optimum.
    """

    exact = _with_exact_oracles(problem)
    params = configure_parsel2(10 * T, exact.constants)
    report = run(exact, params, seed, record_stride=params.T)
    logger.info("reference value for %s: %.8g (T=%d)", problem.name, report.final_objective, params.T)
    return report.final_objective, "reference"


def run_many(
    problem: ProblemInstance,
    params: SolverParams,
    seeds: Sequence[int],
    *,
    workers: int | None = None,
    **run_kwargs: Any,
) -> list[RunReport]:
    """Run one independent solve per seed on a thread pool; results follow *seeds*."""

    if not seeds:
        return []
    workers = workers or min(len(seeds), os.cpu_count() or 1)
    if workers <= 1:
        return [run(problem, params, seed, **run_kwargs) for seed in seeds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(run, problem, params, seed, **run_kwargs) for seed in seeds]
        return [f.result() for f in futures]


# --------------------------------------------------------- argmin test oracle


def argmin_step_oracle(
    problem: ProblemInstance,
    params: SolverParams,
    state: SolverState,
    x_next: Point,
    tol: float = 1e-10,
    max_iter: int = 100_000,
) -> Point:
    """Minimise the step's strongly convex subproblem numerically over the auxiliary set.

    The subproblem is ``eta <Q_t, y - x_{t+1}> + <s_t, y - y_t> + beta sum_i
    (W_i + h_i(y_t)) (h_i(y_t) + <g_i, y - y_t>) + eta/2 ||y - x_{t+1}||^2 +
    k/2 ||y - y_t||^2`` with ``k = alpha + 2 G^2 beta``. Projected gradient
    descent with step ``1 / (2 (eta + k))`` runs until the gradient-map norm
    drops to *tol*. Only meant for validating :func:`closed_form_y` on small
    problems.

    Raises
    ------
    BadDimsError
        If the problem has more than 20 coordinates.
    OracleNotConvergedError
        If *max_iter* iterations do not reach *tol*.
    """

    if state.y.size > 20:
        raise BadDimsError(f"argmin oracle is limited to 20 coordinates, got {state.y.size}")
    sample = state.sample
    constrained = sample.constraint_values.size > 0
    k = params.alpha + (2 * problem.constants.G**2 * params.beta if constrained else 0.0)
    linear = params.eta * np.asarray(state.Q, dtype=np.float64) + sample.objective_subgradient
    for w_i, h_i, g_i in zip(state.W, sample.constraint_values, sample.constraint_subgradients):
        linear = linear + params.beta * (w_i + h_i) * np.asarray(g_i, dtype=np.float64)
    lr = 1.0 / (2 * (params.eta + k))

    y = np.array(state.y, dtype=np.float64)
    for _ in range(max_iter):
        grad = linear + params.eta * (y - x_next) + k * (y - state.y)
        y_new = problem.auxiliary_set.project(y - lr * grad)
        if norm(y - y_new) / lr <= tol:
            return y_new
        y = y_new
    raise OracleNotConvergedError(f"argmin oracle did not reach {tol} in {max_iter} iterations")


__all__ = [
    "configure_parsel1",
    "configure_parsel2",
    "SolverState",
    "init_state",
    "drift_direction",
    "closed_form_y",
    "update_multipliers",
    "step",
    "record_schedule",
    "RunReport",
    "constraint_violation",
    "evaluate_diagnostics",
    "trajectory_row",
    "run",
    "reference_solve",
    "run_many",
    "argmin_step_oracle",
]
