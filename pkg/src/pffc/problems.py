"""Benchmark problem families wired to concrete oracles.

- Robust reduced-rank regression over a nuclear-norm ball (``r4nr``):
  ``f(c) = (1/n) sum_i ||y_i - c x_i||_2`` with ``||c||_* <= gamma``.
- Minimum convex-cost flow on a DAG (``minflow``) in four formulations that
  differ in which constraints live in the feasible set, which auxiliary set
  is used, and whether capacities are a functional constraint:

  ===========  ==============  =============  ===========
  formulation  feasible set    auxiliary set  constraint
  ===========  ==============  =============  ===========
  F1           capacitated     whole space    none
  F2           capacitated     box            none
  F3           flow polytope   whole space    h_cap
  F4           flow polytope   box            h_cap
  ===========  ==============  =============  ===========

- Two one-dimensional problems: a hand-traceable linear one and the
  Lipschitz-extension demo, plus the 1-D McShane-Whitney extension itself.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import partial
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import linprog, minimize_scalar

from .core import Point, ProblemConstants, ProblemInstance
from .errors import BadDimsError, InfeasibleError, ParseError, ShapeMismatchError, WrongFormulationError
from .flows import CapacitatedFlowPolytope, DagNetwork, FlowPolytope, read_network
from .oracles import FunctionOracle
from .sets import Box, FullSpace, NuclearBall, nuclear_norm

logger = logging.getLogger(__name__)


# ============================================================== R4NR


@dataclass(frozen=True)
class R4nrInstance:
    """Synthetic reduced-rank regression data ``y = c_true x + e``.

    Columns are samples: ``predictors`` is ``p x n``, ``responses`` is
    ``q x n`` and ``c_true`` is ``q x p`` with rank ``rank``.
    """

    predictors: np.ndarray
    responses: np.ndarray
    c_true: np.ndarray
    gamma: float
    rank: int
    laplace_scale: float
    seed: int

    def __post_init__(self) -> None:
        for name in ("predictors", "responses", "c_true"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        p, n = self.predictors.shape
        q, n2 = self.responses.shape
        if n != n2 or self.c_true.shape != (q, p):
            raise BadDimsError(
                f"inconsistent shapes x {self.predictors.shape}, y {self.responses.shape}, "
                f"c {self.c_true.shape}"
            )

    @property
    def n(self) -> int:
        return self.predictors.shape[1]

    @property
    def q(self) -> int:
        return self.responses.shape[0]

    @property
    def p(self) -> int:
        return self.predictors.shape[0]


def _laplace(rng: np.random.Generator, scale: float, size: tuple[int, int]) -> np.ndarray:
    """Laplace(0, scale) samples by inverting the CDF of uniform draws."""

    if scale == 0:
        return np.zeros(size)
    u = rng.uniform(-0.5, 0.5, size=size)
    u = np.clip(u, -0.5 + 1e-16, 0.5 - 1e-16)
    return -scale * np.sign(u) * np.log1p(-2.0 * np.abs(u))


def gen_r4nr(
    n: int,
    q: int,
    p: int,
    rank: int,
    laplace_scale: float = 2.0,
    gamma: float | None = None,
    seed: int = 0,
    gamma_factor: float = 1.2,
) -> R4nrInstance:
    """Generate a reduced-rank regression instance.

    Predictors are i.i.d. standard normal; ``c_true = A B / sqrt(rank)`` with
    standard normal factors; the noise is i.i.d. Laplace with scale
    ``laplace_scale``. When *gamma* is ``None`` the radius defaults to
    ``gamma_factor * ||c_true||_*``.

    Raises
    ------
    BadDimsError
        On non-positive sizes or ``rank > min(q, p)``.
    """

    for name, value in (("n", n), ("q", q), ("p", p), ("rank", rank)):
        if int(value) != value or value < 1:
            raise BadDimsError(f"{name} must be a positive integer, got {value}")
    if rank > min(q, p):
        raise BadDimsError(f"rank {rank} exceeds min(q, p) = {min(q, p)}")
    if laplace_scale < 0:
        raise BadDimsError(f"laplace scale must be >= 0, got {laplace_scale}")

    rng = np.random.default_rng(seed)
    x = rng.standard_normal((p, n))
    a = rng.standard_normal((q, rank))
    b = rng.standard_normal((rank, p))
    c_true = (a @ b) / math.sqrt(rank)
    e = _laplace(rng, laplace_scale, (q, n))
    y = c_true @ x + e
    if gamma is None:
        gamma = gamma_factor * nuclear_norm(c_true)
    logger.debug("generated r4nr n=%d q=%d p=%d rank=%d gamma=%.4g", n, q, p, rank, gamma)
    return R4nrInstance(
        predictors=x,
        responses=y,
        c_true=c_true,
        gamma=float(gamma),
        rank=int(rank),
        laplace_scale=float(laplace_scale),
        seed=int(seed),
    )


def _check_coef(inst: R4nrInstance, c: Point) -> None:
    if np.shape(c) != (inst.q, inst.p):
        raise ShapeMismatchError(f"coefficient must be {inst.q}x{inst.p}, got {np.shape(c)}")


def r4nr_value(inst: R4nrInstance, c: Point) -> float:
    """Average column residual norm ``(1/n) sum_i ||y_i - c x_i||_2``."""

    _check_coef(inst, c)
    residual = inst.responses - c @ inst.predictors
    return float(np.mean(np.linalg.norm(residual, axis=0)))


def r4nr_noiseless_loss(inst: R4nrInstance, c: Point) -> float:
    """Loss against the noiseless responses ``c_true x``."""

    _check_coef(inst, c)
    residual = (inst.c_true - c) @ inst.predictors
    return float(np.mean(np.linalg.norm(residual, axis=0)))


def _residual_subgradient(residual: np.ndarray, x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(residual, axis=0)
    # a zero residual contributes the zero subgradient
    weights = np.divide(1.0, norms, out=np.zeros_like(norms), where=norms > 0)
    return -((residual * weights) @ x.T) / residual.shape[1]


def r4nr_subgradient(
    inst: R4nrInstance,
    c: Point,
    mode: str = "full",
    batch: int = 1,
    rng: np.random.Generator | None = None,
) -> Point:
    """Subgradient of :func:`r4nr_value`.

    ``mode="full"`` averages ``-(r_i / ||r_i||) x_i^T`` over all samples;
    ``mode="stochastic"`` averages it over ``batch`` indices drawn uniformly
    with replacement, which is unbiased for the full subgradient.
    """

    _check_coef(inst, c)
    if mode == "full":
        residual = inst.responses - c @ inst.predictors
        return _residual_subgradient(residual, inst.predictors)
    if mode != "stochastic":
        raise ValueError(f"mode must be 'full' or 'stochastic', got {mode!r}")
    if batch < 1:
        raise ValueError(f"batch must be >= 1, got {batch}")
    if rng is None:
        raise ValueError("stochastic subgradients need an rng")
    idx = rng.integers(0, inst.n, size=batch)
    x = inst.predictors[:, idx]
    residual = inst.responses[:, idx] - c @ x
    return _residual_subgradient(residual, x)


def r4nr_lipschitz(inst: R4nrInstance) -> float:
    """``sqrt((1/n) sum_i ||x_i||^2)``, bounding the second moment of subgradient samples."""

    return float(math.sqrt(np.mean(np.sum(inst.predictors**2, axis=0))))


def build_r4nr_problem(
    inst: R4nrInstance,
    mode: str = "full",
    batch: int = 1,
    power_iters: int | None = None,
) -> ProblemInstance:
    """Regression over the nuclear ball of radius ``inst.gamma``, started at 0.

    Runs report :func:`r4nr_noiseless_loss` of the averaged iterate as the
    ``noiseless_loss`` extra.
    """

    ball = NuclearBall(inst.gamma, inst.q, inst.p, power_iters=power_iters)
    objective = FunctionOracle(
        value_fn=partial(r4nr_value, inst),
        subgradient_fn=lambda c, rng: r4nr_subgradient(inst, c, mode, batch, rng),
        stochastic=mode != "full",
        name="r4nr",
    )
    constants = ProblemConstants(
        L=r4nr_lipschitz(inst), G=0.0, D=ball.diameter(), m=0, delta=0.0
    )
    return ProblemInstance(
        objective=objective,
        constraints=(),
        feasible_set=ball,
        auxiliary_set=FullSpace(ball.shape),
        constants=constants,
        initial_point=np.zeros(ball.shape),
        name="r4nr",
        metadata={"mode": mode, "batch": batch, "power_iters": power_iters},
        diagnostics={"noiseless_loss": partial(r4nr_noiseless_loss, inst)},
    )


def _format_matrix(name: str, arr: np.ndarray) -> list[str]:
    lines = [f"{name} {arr.shape[0]} {arr.shape[1]}"]
    lines.extend(" ".join(repr(float(v)) for v in row) for row in arr)
    return lines


def format_r4nr(inst: R4nrInstance) -> str:
    """Text fixture: a header line, then the three matrices row by row."""

    lines = [
        f"r4nr {inst.n} {inst.q} {inst.p} {inst.rank} {inst.seed} "
        f"{inst.gamma!r} {inst.laplace_scale!r}"
    ]
    lines += _format_matrix("x", inst.predictors)
    lines += _format_matrix("y", inst.responses)
    lines += _format_matrix("c_true", inst.c_true)
    return "\n".join(lines) + "\n"


def parse_r4nr(text: str) -> R4nrInstance:
    rows = text.splitlines()
    try:
        head = rows[0].split()
        if head[0] != "r4nr" or len(head) != 8:
            raise ParseError("fixture must start with 'r4nr n q p rank seed gamma b'")
        rank, seed, gamma, scale = int(head[4]), int(head[5]), float(head[6]), float(head[7])
        mats: dict[str, np.ndarray] = {}
        pos = 1
        for expected in ("x", "y", "c_true"):
            name, r, c = rows[pos].split()
            if name != expected:
                raise ParseError(f"expected matrix {expected!r}, found {name!r}")
            r, c = int(r), int(c)
            block = rows[pos + 1 : pos + 1 + r]
            mats[name] = np.array([[float(v) for v in line.split()] for line in block])
            if mats[name].shape != (r, c):
                raise ParseError(f"matrix {name} is not {r}x{c}")
            pos += 1 + r
    except (IndexError, ValueError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"malformed r4nr fixture: {exc}") from exc
    return R4nrInstance(
        predictors=mats["x"],
        responses=mats["y"],
        c_true=mats["c_true"],
        gamma=gamma,
        rank=rank,
        laplace_scale=scale,
        seed=seed,
    )


def save_r4nr(inst: R4nrInstance, path: str | Path) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(format_r4nr(inst), encoding="utf-8", newline="\n")
    return out


def load_r4nr(path: str | Path) -> R4nrInstance:
    return parse_r4nr(Path(path).read_text(encoding="utf-8"))


# ========================================================== Min-Flow


FORMULATIONS = ("F1", "F2", "F3", "F4")
# accepted names of the shipped coefficient rule
DEFAULT_COEFF_RULES = ("default", "paper_default")

# 6 nodes, 9 edges, max flow 6; node 0 is the source, node 5 the sink
DEFAULT_EDGES: tuple[tuple[int, int, float], ...] = (
    (0, 1, 3),
    (0, 2, 4),
    (1, 2, 1),
    (1, 3, 2),
    (2, 3, 2),
    (2, 4, 3),
    (3, 5, 4),
    (4, 3, 1),
    (4, 5, 2),
)
DEFAULT_DEMAND = 4.1


def default_network() -> DagNetwork:
    """The shipped Min-Flow instance (see ``data/minflow_default.txt``)."""

    tails, heads, caps = zip(*DEFAULT_EDGES)
    return DagNetwork(
        n_nodes=6,
        tails=tails,
        heads=heads,
        capacities=caps,
        source=0,
        sink=5,
        demand=DEFAULT_DEMAND,
    )


@dataclass(frozen=True)
class MinFlowInstance:
    """Convex piecewise-linear cost ``sum_e max{a_e x_e + b_e, c_e}`` on a DAG."""

    net: DagNetwork
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    formulation: str

    def __post_init__(self) -> None:
        if self.formulation not in FORMULATIONS:
            raise WrongFormulationError(
                f"formulation must be one of {FORMULATIONS}, got {self.formulation!r}"
            )
        for name in ("a", "b", "c"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            if arr.shape != (self.net.n_edges,):
                raise ShapeMismatchError(f"coefficient {name} must have {self.net.n_edges} entries")
            if np.any(arr < 0):
                raise ValueError(f"coefficient {name} must be nonnegative")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def capacities(self) -> np.ndarray:
        return np.asarray(self.net.capacities)

    @property
    def has_capacity_constraint(self) -> bool:
        return self.formulation in ("F3", "F4")


def default_coefficients(net: DagNetwork) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``a = exp(k/10)``, ``b = k/10``, ``c = k/5`` per edge."""

    k = np.asarray(net.capacities)
    return np.exp(k / 10.0), k / 10.0, k / 5.0


def _check_flow(inst: MinFlowInstance, x: Point) -> None:
    if np.shape(x) != (inst.net.n_edges,):
        raise ShapeMismatchError(f"flow must have {inst.net.n_edges} entries, got {np.shape(x)}")


def minflow_value(inst: MinFlowInstance, x: Point) -> float:
    _check_flow(inst, x)
    return float(np.sum(np.maximum(inst.a * x + inst.b, inst.c)))


def minflow_subgradient(inst: MinFlowInstance, x: Point) -> Point:
    """``a_e`` where the affine branch is active (ties included), else 0."""

    _check_flow(inst, x)
    return np.where(inst.a * x + inst.b >= inst.c, inst.a, 0.0)


def _require_capacity_constraint(inst: MinFlowInstance) -> None:
    if not inst.has_capacity_constraint:
        raise WrongFormulationError(
            f"formulation {inst.formulation} has no capacity constraint function"
        )


def hcap_value(inst: MinFlowInstance, x: Point) -> float:
    """``max_e (x_e - k_e)``."""

    _require_capacity_constraint(inst)
    _check_flow(inst, x)
    return float(np.max(x - inst.capacities))


def hcap_subgradient(inst: MinFlowInstance, x: Point) -> Point:
    """Basis vector of the most violated edge; ties go to the lowest index."""

    _require_capacity_constraint(inst)
    _check_flow(inst, x)
    g = np.zeros(inst.net.n_edges)
    g[int(np.argmax(x - inst.capacities))] = 1.0
    return g


def y_box_for(net: DagNetwork) -> Box:
    """Auxiliary box ``0 <= x_e <= max{d, k_e}``."""

    return Box(np.zeros(net.n_edges), net.box_upper())


def minflow_lp_optimum(inst: MinFlowInstance) -> tuple[float, np.ndarray]:
    """Exact optimum over capacitated flows via the epigraph LP.

    Variables are the flows ``x`` and epigraph levels ``tau``; the LP is
    ``min sum tau`` subject to ``tau_e >= a_e x_e + b_e``, ``tau_e >= c_e``,
    conservation, and ``0 <= x_e <= k_e``.

    Raises
    ------
    InfeasibleError
        If the LP solver reports no feasible flow.
    """

    net = inst.net
    n_e = net.n_edges
    cost = np.concatenate([np.zeros(n_e), np.ones(n_e)])
    a_ub = np.hstack([np.diag(inst.a), -np.eye(n_e)])
    b_ub = -inst.b
    a_eq = np.hstack([net.incidence(), np.zeros((net.n_nodes, n_e))])
    b_eq = net.supply()
    bounds = [(0.0, k) for k in net.capacities] + [(float(c), None) for c in inst.c]
    res = linprog(cost, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if res.status != 0:
        raise InfeasibleError(f"epigraph LP failed: {res.message}")
    x = np.asarray(res.x[:n_e])
    return float(minflow_value(inst, x)), x


def build_minflow(
    net: DagNetwork | str | Path | None = None,
    coeff_rule: str = "default",
    formulation: str = "F1",
    coefficients: Optional[Sequence[Sequence[float]]] = None,
) -> tuple[MinFlowInstance, ProblemInstance]:
    """Wire a Min-Flow instance into one of the four formulations.

    ``L = ||a||_2`` bounds every objective subgradient; ``G = 1`` because the
    capacity constraint's subgradient is a basis vector. The start point is
    the feasible set's LMO answer for the zero direction.

    Raises
    ------
    ParseError, InvalidNetworkError
        From reading the graph file.
    InfeasibleError
        If the capacities cannot carry the demand.
    WrongFormulationError
        On an unknown formulation.
    """

    if net is None:
        net = default_network()
    elif not isinstance(net, DagNetwork):
        net = read_network(net)
    if coeff_rule in DEFAULT_COEFF_RULES:
        a, b, c = default_coefficients(net)
    elif coeff_rule == "explicit":
        if coefficients is None or len(coefficients) != 3:
            raise ValueError("explicit coefficients need three sequences a, b, c")
        a, b, c = (np.asarray(v, dtype=np.float64) for v in coefficients)
    else:
        raise ValueError(f"coeff_rule must be one of {DEFAULT_COEFF_RULES + ('explicit',)}, got {coeff_rule!r}")
    inst = MinFlowInstance(net=net, a=a, b=b, c=c, formulation=formulation)

    capped = formulation in ("F1", "F2")
    feasible = CapacitatedFlowPolytope(net) if capped else FlowPolytope(net)
    auxiliary = y_box_for(net) if formulation in ("F2", "F4") else FullSpace((net.n_edges,))
    objective = FunctionOracle(
        value_fn=partial(minflow_value, inst),
        subgradient_fn=lambda x, rng: minflow_subgradient(inst, x),
        name="minflow",
    )
    constraints: tuple[FunctionOracle, ...] = ()
    if not capped:
        constraints = (
            FunctionOracle(
                value_fn=partial(hcap_value, inst),
                subgradient_fn=lambda x, rng: hcap_subgradient(inst, x),
                bound=1.0,
                name="h_cap",
            ),
        )
    constants = ProblemConstants(
        L=float(np.linalg.norm(inst.a)),
        G=0.0 if capped else 1.0,
        D=net.diameter(),
        m=len(constraints),
        delta=0.0,
    )
    f_star, _ = minflow_lp_optimum(inst)
    problem = ProblemInstance(
        objective=objective,
        constraints=constraints,
        feasible_set=feasible,
        auxiliary_set=auxiliary,
        constants=constants,
        initial_point=feasible.lmo(np.zeros(net.n_edges)),
        name=f"minflow-{formulation}",
        f_star=f_star,
        f_star_tag="lp",
        metadata={"formulation": formulation},
    )
    return inst, problem


# ========================================================= 1-D problems


def build_one_dim() -> ProblemInstance:
    """``min x`` over ``[0, 1]`` with the whole line as auxiliary set; ``f* = 0``."""

    return ProblemInstance(
        objective=FunctionOracle(
            value_fn=lambda x: float(x[0]),
            subgradient_fn=lambda x, rng: np.ones(1),
            name="linear",
        ),
        constraints=(),
        feasible_set=Box.unit(1),
        auxiliary_set=FullSpace((1,)),
        constants=ProblemConstants(L=1.0, G=0.0, D=1.0, m=0, delta=0.0),
        initial_point=np.ones(1),
        name="custom-1d",
        f_star=0.0,
        f_star_tag="analytic",
    )


def exp_max_value(x: float) -> float:
    """``max{exp(-x), exp(x)}``."""

    return float(math.exp(abs(x)))


def exp_max_subgradient(x: float) -> float:
    """Derivative of the active branch; at 0 the ``exp(x)`` branch is taken."""

    return math.exp(x) if x >= 0 else -math.exp(-x)


def mcshane_whitney_extend_1d(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    lipschitz: float,
    x: float,
    grid: int = 2001,
) -> float:
    """``inf_{z in [lo, hi]} f(z) + L |x - z|``.

    The infimum is located on a uniform grid (plus the clipped point and the
    endpoints) and refined with a bounded scalar search around the best grid
    point. With ``L`` at least the Lipschitz constant of ``f`` on
    ``[lo, hi]`` the result equals ``f(x)`` inside the interval.
    """

    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")

    def objective(z: float) -> float:
        return f(z) + lipschitz * abs(x - z)

    zs = np.linspace(lo, hi, grid)
    vals = np.array([objective(float(z)) for z in zs])
    i = int(np.argmin(vals))
    best = float(vals[i])
    clipped = float(min(max(x, lo), hi))
    best = min(best, objective(clipped))
    left, right = float(zs[max(i - 1, 0)]), float(zs[min(i + 1, grid - 1)])
    if right > left:
        res = minimize_scalar(objective, bounds=(left, right), method="bounded", options={"xatol": 1e-12})
        if res.success:
            best = min(best, float(res.fun))
    return best


def mcshane_whitney_extension(
    f: Callable[[float], float], lo: float, hi: float, lipschitz: float
) -> Callable[[float], float]:
    return partial(mcshane_whitney_extend_1d, f, lo, hi, lipschitz)


def build_extension_demo(x1: float = 0.5) -> ProblemInstance:
    """``max{e^-x, e^x}`` on ``[-1, 1]``, extended to the line with ``L = e``.

    Outside the interval the extension is the line ``e |x|``, so its
    subgradient there is ``e * sign(x)``.
    """

    lip = math.e
    extended = mcshane_whitney_extension(exp_max_value, -1.0, 1.0, lip)

    def subgradient(y: Point, rng: np.random.Generator) -> Point:
        v = float(y[0])
        if abs(v) > 1.0:
            return np.array([math.copysign(lip, v)])
        return np.array([exp_max_subgradient(v)])

    return ProblemInstance(
        objective=FunctionOracle(
            value_fn=lambda y: extended(float(y[0])),
            subgradient_fn=subgradient,
            name="exp-max-extended",
        ),
        constraints=(),
        feasible_set=Box(np.array([-1.0]), np.array([1.0])),
        auxiliary_set=FullSpace((1,)),
        constants=ProblemConstants(L=lip, G=0.0, D=2.0, m=0, delta=0.0),
        initial_point=np.array([x1]),
        name="ext-1d",
        f_star=1.0,
        f_star_tag="analytic",
    )


# ================================================== random test problems


def max_affine_oracle(
    slopes: np.ndarray, offsets: np.ndarray, bound: float | None = None, name: str = "max-affine"
) -> FunctionOracle:
    """``max_j <slopes[j], x> + offsets[j]`` with the first active slope as subgradient."""

    slopes = np.asarray(slopes, dtype=np.float64)
    offsets = np.asarray(offsets, dtype=np.float64)

    def value(x: Point) -> float:
        return float(np.max(slopes @ x + offsets))

    def subgradient(x: Point, rng: np.random.Generator) -> Point:
        return slopes[int(np.argmax(slopes @ x + offsets))].copy()

    return FunctionOracle(value_fn=value, subgradient_fn=subgradient, bound=bound, name=name)


__all__ = [
    "R4nrInstance",
    "gen_r4nr",
    "r4nr_value",
    "r4nr_noiseless_loss",
    "r4nr_subgradient",
    "r4nr_lipschitz",
    "build_r4nr_problem",
    "format_r4nr",
    "parse_r4nr",
    "save_r4nr",
    "load_r4nr",
    "FORMULATIONS",
    "DEFAULT_COEFF_RULES",
    "DEFAULT_EDGES",
    "DEFAULT_DEMAND",
    "default_network",
    "MinFlowInstance",
    "default_coefficients",
    "minflow_value",
    "minflow_subgradient",
    "hcap_value",
    "hcap_subgradient",
    "y_box_for",
    "minflow_lp_optimum",
    "build_minflow",
    "build_one_dim",
    "exp_max_value",
    "exp_max_subgradient",
    "mcshane_whitney_extend_1d",
    "mcshane_whitney_extension",
    "build_extension_demo",
    "max_affine_oracle",
]
