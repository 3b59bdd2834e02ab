"""Oracle contracts and instrumented oracle calls.

The solver never touches a set or a function directly; it goes through the
four calls below, which check shapes, count calls, time them and (when
asked) measure how far an LMO answer is from the exact linear minimum.

- :func:`lmo`: inexact linear minimisation over the feasible set.
- :func:`project`: Euclidean projection onto the auxiliary set.
- :func:`sample_subgradients`: (stochastic) subgradients of ``f`` and every
  ``h_i`` plus the exact constraint values at one point.
- :func:`measure_lmo_gap`: ``<x_ret, v> - min_x <x, v>``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Optional, Protocol, runtime_checkable

import numpy as np

from .core import ConstraintVec, Point, check_same_shape, inner, norm
from .errors import (
    ExactMinUnavailableError,
    OracleFailure,
    ProjectionUnavailableError,
    ShapeMismatchError,
)
from .utils.reporting import gap_summary

if TYPE_CHECKING:
    from .core import ProblemInstance


class SubgradientOracle(Protocol):
    """Value and (stochastic) subgradient of one convex function."""

    bound: Optional[float]

    def value(self, y: Point) -> float:
        ...

    def subgradient(self, y: Point, rng: np.random.Generator) -> Point:
        ...


class FeasibleSet(Protocol):
    """A compact convex set reachable only through linear minimisation."""

    shape: tuple[int, ...]

    def lmo(self, direction: Point, budget: float, rng: np.random.Generator) -> Point:
        ...

    def contains(self, x: Point, tol: float = 1e-8) -> bool:
        ...


@runtime_checkable
class ExactMinSet(Protocol):
    def exact_min(self, direction: Point) -> float:
        ...


class AuxiliarySet(Protocol):
    """A closed convex set with a cheap Euclidean projection."""

    shape: tuple[int, ...]

    def project(self, v: Point) -> Point:
        ...


@dataclass(frozen=True)
class LmoQuery:
    """Direction ``v`` (``-Q_t`` inside the solver) and the budget ``delta``."""

    direction: Point
    budget: float = 0.0

    def __post_init__(self) -> None:
        if self.budget < 0:
            raise ValueError(f"LMO budget must be >= 0, got {self.budget}")


@dataclass(frozen=True)
class SubgradientSample:
    """Subgradients of ``f`` and each ``h_i`` at one point, plus ``h(y)``."""

    objective_subgradient: Point
    constraint_subgradients: tuple[Point, ...]
    constraint_values: ConstraintVec


@dataclass
class OracleStats:
    """Per-run oracle counters. Never shared between runs."""

    lmo_calls: int = 0
    subgrad_calls: int = 0
    projection_calls: int = 0
    measured_gaps: list[float] = field(default_factory=list)
    sigma_ratios: list[float] = field(default_factory=list)
    lmo_seconds: float = 0.0
    subgrad_seconds: float = 0.0
    projection_seconds: float = 0.0

    def summary(self, diameter: float | None = None) -> dict[str, float]:
        """Counts, mean seconds per call and the summary of measured gaps."""

        out: dict[str, float] = {
            "lmo_calls": float(self.lmo_calls),
            "subgrad_calls": float(self.subgrad_calls),
            "projection_calls": float(self.projection_calls),
            "lmo_mean_s": self.lmo_seconds / max(self.lmo_calls, 1),
            "subgrad_mean_s": self.subgrad_seconds / max(self.subgrad_calls, 1),
            "projection_mean_s": self.projection_seconds / max(self.projection_calls, 1),
        }
        if self.measured_gaps:
            out.update(gap_summary(self.measured_gaps, diameter))
        return out


@dataclass(frozen=True)
class FunctionOracle:
    """Subgradient oracle assembled from two callables.

    ``subgradient_fn(y, rng)`` may ignore ``rng`` (deterministic oracle) or
    draw from it (stochastic oracle whose mean is a subgradient).
    """

    value_fn: Callable[[Point], float]
    subgradient_fn: Callable[[Point, np.random.Generator], Point]
    bound: Optional[float] = None
    stochastic: bool = False
    name: str = "f"

    def value(self, y: Point) -> float:
        return float(self.value_fn(y))

    def subgradient(self, y: Point, rng: np.random.Generator) -> Point:
        return np.asarray(self.subgradient_fn(y, rng), dtype=np.float64)


def lmo(
    feasible_set: FeasibleSet,
    query: LmoQuery,
    rng: np.random.Generator,
    stats: OracleStats | None = None,
) -> Point:
    """Call the set's (inexact) linear minimisation oracle.

    Raises
    ------
    ShapeMismatchError
        If the direction does not have the set's shape.
    OracleFailure
        Propagated from iterative LMOs.
    """

    if np.shape(query.direction) != tuple(feasible_set.shape):
        raise ShapeMismatchError(
            f"LMO direction has shape {np.shape(query.direction)}, "
            f"set expects {tuple(feasible_set.shape)}"
        )
    start = time.perf_counter()
    x = feasible_set.lmo(query.direction, query.budget, rng)
    if stats is not None:
        stats.lmo_calls += 1
        stats.lmo_seconds += time.perf_counter() - start
    return x


def project(
    auxiliary_set: AuxiliarySet, v: Point, stats: OracleStats | None = None
) -> Point:
    """Euclidean projection onto the auxiliary set."""

    projector = getattr(auxiliary_set, "project", None)
    if projector is None:
        raise ProjectionUnavailableError(f"{type(auxiliary_set).__name__} has no projection")
    if np.shape(v) != tuple(auxiliary_set.shape):
        raise ShapeMismatchError(
            f"projection input has shape {np.shape(v)}, "
            f"set expects {tuple(auxiliary_set.shape)}"
        )
    start = time.perf_counter()
    p = projector(v)
    if stats is not None:
        stats.projection_calls += 1
        stats.projection_seconds += time.perf_counter() - start
    return p


def sample_subgradients(
    problem: "ProblemInstance",
    y: Point,
    rng: np.random.Generator,
    stats: OracleStats | None = None,
) -> SubgradientSample:
    """Draw ``s`` and ``g_1..g_m`` at *y* and evaluate ``h(y)`` exactly.

    The objective is sampled first and then each constraint in order, so a
    given RNG stream always yields the same sample.

    Raises
    ------
    OracleFailure
        If a constraint subgradient exceeds the oracle's declared bound.
    """

    objective, constraints = problem.objective, problem.constraints
    start = time.perf_counter()
    s = objective.subgradient(y, rng)
    check_same_shape(s, y)
    gs: list[Point] = []
    hs = np.empty(len(constraints), dtype=np.float64)
    for i, oracle in enumerate(constraints):
        g = oracle.subgradient(y, rng)
        check_same_shape(g, y)
        bound = getattr(oracle, "bound", None)
        if bound is not None and norm(g) > bound * (1 + 1e-12) + 1e-12:
            raise OracleFailure(
                f"constraint {i}: subgradient norm {norm(g):.6g} exceeds bound {bound:.6g}"
            )
        gs.append(g)
        hs[i] = oracle.value(y)
    if stats is not None:
        stats.subgrad_calls += 1
        stats.subgrad_seconds += time.perf_counter() - start
    return SubgradientSample(
        objective_subgradient=s,
        constraint_subgradients=tuple(gs),
        constraint_values=hs,
    )


def measure_lmo_gap(feasible_set: FeasibleSet, x_ret: Point, v: Point) -> float:
    """Empirical LMO error ``<x_ret, v> - min_{x in X} <x, v>``.

    Raises
    ------
    ExactMinUnavailableError
        If the set cannot compute the exact linear minimum.
    """

    if not isinstance(feasible_set, ExactMinSet):
        raise ExactMinUnavailableError(
            f"{type(feasible_set).__name__} does not expose an exact linear minimum"
        )
    return inner(x_ret, v) - feasible_set.exact_min(v)


def lmo_sigma_ratio(v: Point, gap: float) -> float:
    """``sigma_1(v) / gap`` for a matrix direction; ``inf`` when the gap is 0."""

    if gap <= 0:
        return float("inf")
    sigma1 = float(np.linalg.norm(v, ord=2)) if np.ndim(v) == 2 else norm(v)
    return sigma1 / gap


__all__ = [
    "SubgradientOracle",
    "FeasibleSet",
    "ExactMinSet",
    "AuxiliarySet",
    "LmoQuery",
    "SubgradientSample",
    "OracleStats",
    "FunctionOracle",
    "lmo",
    "project",
    "sample_subgradients",
    "measure_lmo_gap",
    "lmo_sigma_ratio",
]
