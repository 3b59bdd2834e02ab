"""Property suites run by ``pffc check``.

Each suite returns a :class:`SuiteReport` of :class:`CheckResult` records.
A check's ``margin`` is its slack: nonnegative when it passes, and the
amount of violation (negative) when it fails.

``invariants``
    multiplier nonnegativity, the drift identity ``Q_T = sum y - sum x``,
    agreement of the closed-form step with a numerical argmin, and
    ``W_{t+1} >= [-h(y_{t+1})]_+``.
``bounds``
    the objective-gap certificate on deterministic problems, the rate trend,
    the drift growth bound, the violation decay and agreement of the four
    Min-Flow formulations with the LP optimum.
``oracles``
    LMO optimality and projection properties for every set, flow LMOs
    against enumeration and an LP, and the inexact nuclear LMO's gaps.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np
from scipy.optimize import linprog

from .bounds import gap_bound, gap_violation_bound, drift_bound
from .core import ProblemConstants, ProblemInstance, SolverParams, inner, norm, positive_part
from .errors import PffcError
from .flows import DagNetwork, capacitated_flow_lmo, dag_shortest_path_lmo, max_flow_value
from .oracles import LmoQuery, lmo
from .problems import (
    build_minflow,
    build_one_dim,
    build_r4nr_problem,
    gen_r4nr,
    max_affine_oracle,
)
from .sets import Box, FullSpace, L2Ball, NuclearBall
from .solver import (
    closed_form_y,
    configure_parsel2,
    init_state,
    argmin_step_oracle,
    run,
    step,
)

logger = logging.getLogger(__name__)

SUITES = ("invariants", "bounds", "oracles")

# desk-scale regression instance shared by the suites
DESK_R4NR = {"n": 50, "q": 20, "p": 30, "rank": 5, "seed": 7}


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    margin: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        text = f"{status} {self.name} margin={self.margin:.3e}"
        return f"{text} {self.detail}" if self.detail else text


@dataclass
class SuiteReport:
    name: str
    results: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def add(self, name: str, margin: float, detail: str = "") -> CheckResult:
        result = CheckResult(name=name, passed=bool(margin >= 0), margin=float(margin), detail=detail)
        self.results.append(result)
        log = logger.info if result.passed else logger.warning
        log("%s/%s", self.name, result.line())
        return result

    def lines(self) -> list[str]:
        return [r.line() for r in self.results]


# ------------------------------------------------------- random instances


def random_dag(
    rng: np.random.Generator,
    n_nodes: int = 6,
    max_edges: int = 12,
    demand: float = 1.0,
    capacity_range: tuple[float, float] = (1.0, 5.0),
) -> DagNetwork:
    """Random DAG on ``0..n-1`` with edges ``i -> j`` for ``i < j``.

    The chain ``0 -> 1 -> ... -> n-1`` guarantees a source-to-sink path; the
    remaining edges are sampled without replacement.
    """

    pairs = [(i, j) for i in range(n_nodes) for j in range(i + 1, n_nodes)]
    chain = {(i, i + 1) for i in range(n_nodes - 1)}
    extra = [pq for pq in pairs if pq not in chain]
    budget = max(0, min(max_edges - len(chain), len(extra)))
    picked = rng.choice(len(extra), size=budget, replace=False) if budget else []
    edges = sorted(chain | {extra[int(i)] for i in picked})
    caps = rng.uniform(*capacity_range, size=len(edges))
    return DagNetwork(
        n_nodes=n_nodes,
        tails=[e[0] for e in edges],
        heads=[e[1] for e in edges],
        capacities=caps,
        source=0,
        sink=n_nodes - 1,
        demand=demand,
    )


def enumerate_min_path_cost(net: DagNetwork, weights: np.ndarray) -> float:
    """``d * min_P sum_{e in P} w_e`` over every simple source-sink path."""

    edge_index = {(u, v): k for k, (u, v) in enumerate(zip(net.tails, net.heads))}
    best = math.inf
    for path in nx.all_simple_paths(net.to_networkx(), net.source, net.sink):
        cost = sum(weights[edge_index[(u, v)]] for u, v in zip(path[:-1], path[1:]))
        best = min(best, cost)
    return net.demand * best


def flow_lp_min(net: DagNetwork, weights: np.ndarray) -> float:
    """``min <w, x>`` over capacitated flows, by linear programming."""

    res = linprog(
        weights,
        A_eq=net.incidence(),
        b_eq=net.supply(),
        bounds=[(0.0, k) for k in net.capacities],
        method="highs",
    )
    if res.status != 0:
        raise PffcError(f"reference LP failed: {res.message}")
    return float(res.fun)


def random_small_problem(rng: np.random.Generator, dim: int, m: int) -> ProblemInstance:
    """Box-constrained problem with max-affine objective and constraints."""

    center = rng.normal(size=dim)
    edge = float(rng.uniform(0.5, 2.0))
    feasible = Box.around(center, edge)
    kind = int(rng.integers(0, 3))
    if kind == 0:
        auxiliary = FullSpace((dim,))
    elif kind == 1:
        auxiliary = Box.around(center, 2 * edge)
    else:
        auxiliary = L2Ball(radius=edge * math.sqrt(dim), center=center)

    def affine(name: str, pieces: int = 3):
        slopes = rng.normal(size=(pieces, dim))
        offsets = rng.normal(size=pieces)
        bound = float(np.max(np.linalg.norm(slopes, axis=1)))
        return max_affine_oracle(slopes, offsets, bound=bound, name=name), bound

    objective, lip = affine("f")
    constraints, bounds = [], []
    for i in range(m):
        oracle, b = affine(f"h{i}")
        constraints.append(oracle)
        bounds.append(b)
    constants = ProblemConstants(
        L=lip,
        G=float(np.linalg.norm(bounds)) if m else 0.0,
        D=feasible.diameter(),
        m=m,
    )
    return ProblemInstance(
        objective=objective,
        constraints=constraints,
        feasible_set=feasible,
        auxiliary_set=auxiliary,
        constants=constants,
        initial_point=feasible.lmo(rng.normal(size=dim)),
        name=f"random-{dim}d",
    )


# ------------------------------------------------------------ invariants


def _invariant_runs(report: SuiteReport, problem: ProblemInstance, T: int, seeds: range) -> None:
    params = configure_parsel2(T, problem.constants)
    min_w, min_wh, worst_identity = math.inf, math.inf, 0.0
    for seed in seeds:
        res = run(problem, params, seed, record_stride=T)
        state = res.final_state
        min_w, min_wh = min(min_w, res.min_w), min(min_wh, res.min_w_plus_h)
        drift = state.sum_y - state.sum_x
        scale = max(1.0, float(np.max(np.abs(state.sum_y))), float(np.max(np.abs(state.sum_x))))
        worst_identity = max(worst_identity, float(np.max(np.abs(state.Q - drift))) / scale)
    tag = f"{problem.name} T={T} runs={len(seeds)}"
    if problem.m:
        report.add(f"W>=0 [{problem.name}]", min_w + 1e-12, tag)
        report.add(f"W+h>=0 [{problem.name}]", min_wh + 1e-12, tag)
    report.add(f"Q_T=T(ybar-xbar) [{problem.name}]", 1e-9 - worst_identity, tag)


def _closed_form_agreement(report: SuiteReport, rng: np.random.Generator, states: int) -> None:
    worst, worst_dominance = 0.0, math.inf
    for _ in range(states):
        dim = int(rng.integers(1, 11))
        problem = random_small_problem(rng, dim, m=int(rng.integers(0, 3)))
        params = SolverParams(
            T=10,
            eta=float(rng.uniform(0.1, 3.0)),
            alpha=float(rng.uniform(0.1, 3.0)),
            beta=float(rng.uniform(0.1, 3.0)),
        )
        state = init_state(problem, rng)
        for _ in range(int(rng.integers(0, 6))):
            state = step(problem, params, state, rng)
        x_next = lmo(problem.feasible_set, LmoQuery(-state.Q), rng)
        closed = closed_form_y(problem, params, state, x_next)
        numeric = argmin_step_oracle(problem, params, state, x_next)
        worst = max(worst, norm(closed - numeric))

        nxt = step(problem, params, state, rng)
        if problem.m:
            slack = nxt.W - positive_part(-nxt.sample.constraint_values)
            worst_dominance = min(worst_dominance, float(np.min(slack)))
    report.add("closed-form step = numerical argmin", 1e-7 - worst, f"states={states} max_dev={worst:.2e}")
    if math.isfinite(worst_dominance):
        report.add("W_{t+1} >= [-h(y_{t+1})]_+", worst_dominance, f"states={states}")


def _suite_invariants(report: SuiteReport, seed: int, quick: bool) -> None:
    runs = range(seed, seed + (3 if quick else 10))
    _, f3 = build_minflow(formulation="F3")
    _invariant_runs(report, f3, 300 if quick else 2000, runs)
    _, f4 = build_minflow(formulation="F4")
    _invariant_runs(report, f4, 300 if quick else 2000, runs)
    desk = gen_r4nr(**DESK_R4NR)
    r4nr = build_r4nr_problem(desk, mode="stochastic", batch=5)
    _invariant_runs(report, r4nr, 100 if quick else 500, runs)
    _closed_form_agreement(report, np.random.default_rng(seed), 10 if quick else 50)


# ---------------------------------------------------------------- bounds


def _decay_margin(early: float, late: float, ratio: float, floor: float = 1e-9) -> float:
    """Passes when ``late <= ratio * early`` or both values are below *floor*."""

    return max(ratio * early - late, floor - max(early, late))


def formulation_agreement(T: int = 2000, seed: int = 0, tol: float = 0.02) -> list[dict[str, float]]:
    """Run every Min-Flow formulation on the shipped instance and compare with the LP ``f*``.

    Each row has the relative objective error and the capacity residual
    ``max(x_bar - k)``; the residual is only a hard requirement for F1 and F2,
    where capacities live in the feasible set.
    """

    rows = []
    for formulation in ("F1", "F2", "F3", "F4"):
        inst, problem = build_minflow(formulation=formulation)
        res = run(problem, configure_parsel2(T, problem.constants), seed, record_stride=T)
        rel = abs(res.final_objective - res.f_star) / max(abs(res.f_star), 1e-12)
        rows.append(
            {
                "formulation": formulation,
                "rel_error": rel,
                "residual": float(np.max(res.final_average - inst.capacities)),
                "violation": res.final_violation,
                "tol": tol,
            }
        )
    return rows


def _suite_bounds(report: SuiteReport, seed: int, quick: bool) -> None:
    horizons = (100, 400) if quick else (100, 400, 1600)
    _, f1 = build_minflow(formulation="F1")
    for problem in (build_one_dim(), f1):
        gaps = {}
        for T in horizons:
            params = configure_parsel2(T, problem.constants)
            res = run(problem, params, seed, record_stride=T)
            bound = gap_bound(params, problem.constants)
            gaps[T] = res.gap
            report.add(
                f"gap<=objective bound [{problem.name} T={T}]",
                bound - res.gap,
                f"gap={res.gap:.4e} bound={bound:.4e}",
            )
            report.add(f"no violation [{problem.name} T={T}]", -res.final_violation)
        first, last = gaps[horizons[0]], gaps[horizons[-1]]
        if not quick:
            report.add(
                f"gap ratio T={horizons[-1]}/T={horizons[0]} <= 0.5 or both <= 1e-9 [{problem.name}]",
                _decay_margin(first, last, 0.5),
                f"gap{horizons[0]}={first:.4e} gap{horizons[-1]}={last:.4e}",
            )

    one_dim = build_one_dim()
    T = 400 if quick else 1600
    params = configure_parsel2(T, one_dim.constants)
    res = run(one_dim, params, seed)
    for mode in ("general", "parsel2"):
        bound = drift_bound(params, one_dim.constants, t=T, mode=mode)
        report.add(
            f"max|Q_t|<=drift bound ({mode}) [{one_dim.name}]",
            bound - res.max_q_norm,
            f"max|Q|={res.max_q_norm:.4e} bound={bound:.4e}",
        )
    q = res.trajectory.set_index("t")["q_norm"]
    quarter = T // 4
    report.add(
        f"|Q_T|/T <= |Q_T/4|/(T/4) [{one_dim.name}]",
        q[quarter] / quarter - q[T] / T,
        f"|Q_{quarter}|={q[quarter]:.4e} |Q_{T}|={q[T]:.4e}",
    )

    if quick:
        return
    for formulation in ("F3", "F4"):
        _, problem = build_minflow(formulation=formulation)
        violations = {}
        for T in (400, 6400):
            params = configure_parsel2(T, problem.constants)
            violations[T] = run(problem, params, seed, record_stride=T).final_violation
        report.add(
            f"violation decay 6400 vs 400 <= 0.6 or both <= 1e-9 [{problem.name}]",
            _decay_margin(violations[400], violations[6400], 0.6),
            f"v400={violations[400]:.4e} v6400={violations[6400]:.4e}",
        )
        bound = gap_violation_bound(problem.constants, 6400, mu_norm=10.0)
        report.add(
            f"violation<=rate bound at mu=10 [{problem.name}]",
            bound - violations[6400],
            f"bound={bound:.4e}",
        )

    for row in formulation_agreement(T=2000, seed=seed):
        name = f"minflow-{row['formulation']}"
        report.add(
            f"within 2% of LP f* at T=2000 [{name}]",
            row["tol"] - row["rel_error"],
            f"rel={row['rel_error']:.3%} residual={row['residual']:.3e}",
        )
        if row["formulation"] in ("F1", "F2"):
            report.add(f"capacities respected [{name}]", 1e-6 - row["residual"])


# --------------------------------------------------------------- oracles


def _lmo_optimality(report: SuiteReport, name: str, feasible, candidates: np.ndarray, rng) -> None:
    worst = math.inf
    for _ in range(20):
        v = rng.normal(size=feasible.shape)
        x = feasible.lmo(v)
        best_candidate = min(inner(z, v) for z in candidates)
        worst = min(worst, best_candidate - inner(x, v) + 1e-9)
        worst = min(worst, 1e-9 - abs(inner(x, v) - feasible.exact_min(v)))
    report.add(f"lmo optimal [{name}]", worst, f"candidates={len(candidates)}")


def _projection_idempotent(report: SuiteReport, name: str, aux, rng) -> None:
    worst = 0.0
    for _ in range(20):
        v = 3 * rng.normal(size=aux.shape)
        p = aux.project(v)
        worst = max(worst, norm(aux.project(p) - p))
        if not aux.contains(p):
            worst = math.inf
    report.add(f"projection feasible and idempotent [{name}]", 1e-9 - worst)


def _suite_oracles(report: SuiteReport, seed: int, quick: bool) -> None:
    rng = np.random.default_rng(seed)
    box = Box.around(rng.normal(size=4), 1.5)
    ball = L2Ball(radius=2.0, center=rng.normal(size=4))
    nuc = NuclearBall(gamma=2.0, rows=4, cols=3)

    box_pts = rng.uniform(box.lower, box.upper, size=(500, 4))
    ball_dirs = rng.normal(size=(500, 4))
    ball_pts = ball.center + ball.radius * ball_dirs / np.linalg.norm(ball_dirs, axis=1, keepdims=True)
    nuc_pts = np.array([nuc.project(3 * rng.normal(size=(4, 3))) for _ in range(300)])
    _lmo_optimality(report, "box", box, box_pts, rng)
    _lmo_optimality(report, "l2-ball", ball, ball_pts, rng)
    _lmo_optimality(report, "nuclear-ball", nuc, nuc_pts, rng)
    for name, aux in (("box", box), ("l2-ball", ball), ("nuclear-ball", nuc)):
        _projection_idempotent(report, name, aux, rng)

    water = NuclearBall(gamma=2.0, rows=2, cols=2).project(np.diag([3.0, 1.0]))
    report.add("water-filling diag(3,1) -> diag(2,0)", 1e-12 - float(np.max(np.abs(water - np.diag([2.0, 0.0])))))

    worst_nuc = 0.0
    wide = NuclearBall(gamma=2.0, rows=5, cols=4)
    for _ in range(20 if quick else 100):
        z = rng.normal(size=(5, 4))
        sigma1 = float(np.linalg.svd(z, compute_uv=False)[0])
        worst_nuc = max(worst_nuc, abs(inner(wide.lmo(z), z) + 2.0 * sigma1))
    report.add("nuclear lmo value = -gamma sigma_1", 1e-9 - worst_nuc)

    worst_path = 0.0
    for _ in range(20 if quick else 100):
        net = random_dag(rng, n_nodes=int(rng.integers(3, 7)), max_edges=12, demand=float(rng.uniform(0.5, 3)))
        w = rng.normal(size=net.n_edges)
        x = dag_shortest_path_lmo(net, w)
        worst_path = max(worst_path, abs(float(x @ w) - enumerate_min_path_cost(net, w)))
    report.add("dag lmo = path enumeration", 1e-9 - worst_path)

    worst_cap = 0.0
    for _ in range(10 if quick else 50):
        net = random_dag(rng, n_nodes=int(rng.integers(3, 7)), max_edges=12)
        net = DagNetwork(
            n_nodes=net.n_nodes,
            tails=net.tails,
            heads=net.heads,
            capacities=net.capacities,
            source=net.source,
            sink=net.sink,
            demand=0.8 * max_flow_value(net),
        )
        w = rng.normal(size=net.n_edges)
        value = float(capacitated_flow_lmo(net, w) @ w)
        ref = flow_lp_min(net, w)
        worst_cap = max(worst_cap, abs(value - ref) / max(1.0, abs(ref)))
    report.add("capacitated lmo = LP optimum", 1e-8 - worst_cap)

    desk = gen_r4nr(**DESK_R4NR)
    inexact = build_r4nr_problem(desk, power_iters=1)
    T = 50 if quick else 200
    res = run(inexact, configure_parsel2(T, inexact.constants), seed, record_stride=T, measure_gap=True)
    summary = res.stats.summary(inexact.constants.D)
    ratios = [r for r in res.stats.sigma_ratios if math.isfinite(r)]
    median_ratio = float(np.median(ratios)) if ratios else math.inf
    detail = (
        f"count={summary['gap_count']:.0f} mean={summary['gap_mean']:.3e} max={summary['gap_max']:.3e} "
        f"mean/D^2={summary['gap_mean_frac_d2']:.3e} max/D^2={summary['gap_max_frac_d2']:.3e} "
        f"median sigma_1/gap={median_ratio:.3e}"
    )
    report.add("inexact nuclear lmo gaps >= 0", summary["gap_min"] + 1e-9, detail)


# ------------------------------------------------------------------ driver


def run_suite(name: str, seed: int = 0, quick: bool = False) -> SuiteReport:
    """Run the named suite; ``quick`` shortens horizons and sample counts.

    Raises
    ------
    ValueError
        On an unknown suite name.
    """

    suites = {
        "invariants": _suite_invariants,
        "bounds": _suite_bounds,
        "oracles": _suite_oracles,
    }
    if name not in suites:
        raise ValueError(f"unknown suite {name!r}; choose from {SUITES}")
    report = SuiteReport(name=name)
    suites[name](report, seed, quick)
    logger.info("suite %s: %s", name, "passed" if report.passed else "FAILED")
    return report


__all__ = [
    "SUITES",
    "DESK_R4NR",
    "CheckResult",
    "SuiteReport",
    "random_dag",
    "enumerate_min_path_cost",
    "flow_lp_min",
    "random_small_problem",
    "formulation_agreement",
    "run_suite",
]
