"""Vector-space primitives and the records shared by every other module.

A *Point* is a dense ``float64`` NumPy array: a vector of shape ``(dim,)`` or
a matrix of shape ``(rows, cols)``. The inner product is the dot product for
vectors and the trace form ``Tr(aᵀb)`` for matrices; both reduce to the sum
of elementwise products, so one implementation serves both shapes.

Constraint values ``h(x) = (h_1(x), ..., h_m(x))`` and the multipliers
``W_t`` are plain 1-D arrays of length ``m`` (possibly empty).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Callable, Mapping, Optional, Sequence, TypeAlias

import numpy as np
from numpy.typing import NDArray

from .errors import (
    InconsistentGError,
    InvalidConstantsError,
    InvalidParametersError,
    NegativeBudgetError,
    NonPositiveDiameterError,
    ShapeMismatchError,
)

if TYPE_CHECKING:
    from .oracles import AuxiliarySet, FeasibleSet, SubgradientOracle


Point: TypeAlias = NDArray[np.float64]
ConstraintVec: TypeAlias = NDArray[np.float64]


def as_point(values: object) -> Point:
    """Return *values* as a float64 Point of vector or matrix shape."""

    arr = np.array(values, dtype=np.float64)
    if arr.ndim not in (1, 2) or arr.size == 0:
        raise ShapeMismatchError(
            f"a Point must be a non-empty vector or matrix, got shape {arr.shape}"
        )
    return arr


def check_same_shape(a: Point, b: Point) -> None:
    if np.shape(a) != np.shape(b):
        raise ShapeMismatchError(f"shape mismatch: {np.shape(a)} vs {np.shape(b)}")


def inner(a: Point, b: Point) -> float:
    """Inner product: dot product for vectors, ``Tr(aᵀb)`` for matrices."""

    check_same_shape(a, b)
    return float(np.vdot(a, b))


def norm(a: Point) -> float:
    """Norm induced by :func:`inner` (Euclidean / Frobenius)."""

    return float(np.linalg.norm(a))


def add(a: Point, b: Point) -> Point:
    check_same_shape(a, b)
    return a + b


def scale(s: float, a: Point) -> Point:
    return float(s) * a


def axpy(s: float, x: Point, y: Point) -> Point:
    """Return ``s * x + y``."""

    check_same_shape(x, y)
    return float(s) * x + y


def positive_part(v: ConstraintVec) -> ConstraintVec:
    """Elementwise ``[v]_+ = max{0, v}``."""

    return np.maximum(np.asarray(v, dtype=np.float64), 0.0)


def l2_norm(v: ConstraintVec) -> float:
    return float(np.linalg.norm(np.asarray(v, dtype=np.float64)))


def _frozen(x: Point) -> Point:
    arr = np.array(x, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ProblemConstants:
    """Problem constants used by the schedules and the bound calculators.

    Attributes
    ----------
    L:
        Bound on the second moment of objective subgradients.
    G:
        Aggregate constraint-subgradient bound, ``sqrt(sum G_i^2) <= G``.
    D:
        Diameter bound of the feasible set.
    m:
        Number of functional constraints.
    delta:
        LMO inexactness budget.
    """

    L: float
    G: float
    D: float
    m: int
    delta: float = 0.0


def validate_constants(c: ProblemConstants) -> ProblemConstants:
    """Check the invariants of *c* and return it unchanged.

    ``D`` must be strictly positive; a single-point feasible set is not a
    problem worth solving and every schedule divides by ``D``. With no
    functional constraints (``m == 0``) the aggregate bound ``G`` must be 0.

    Raises
    ------
    NonPositiveDiameterError, NegativeBudgetError, InconsistentGError,
    InvalidConstantsError
    """

    if not all(math.isfinite(v) for v in (c.L, c.G, c.D, c.delta)):
        raise InvalidConstantsError(f"constants must be finite: {c}")
    if c.D <= 0:
        raise NonPositiveDiameterError(f"diameter bound D must be positive, got {c.D}")
    if c.delta < 0:
        raise NegativeBudgetError(f"LMO budget delta must be >= 0, got {c.delta}")
    if c.L < 0 or c.G < 0:
        raise InvalidConstantsError(f"L and G must be >= 0, got L={c.L}, G={c.G}")
    if int(c.m) != c.m or c.m < 0:
        raise InvalidConstantsError(f"m must be a nonnegative integer, got {c.m}")
    if c.m == 0 and c.G != 0:
        raise InconsistentGError(f"m = 0 requires G = 0, got G={c.G}")
    return c


@dataclass(frozen=True)
class SolverParams:
    """Parameters ``(T, eta, alpha, beta, delta)`` of the primal-dual method."""

    T: int
    eta: float
    alpha: float
    beta: float
    delta: float = 0.0

    def __post_init__(self) -> None:
        if int(self.T) != self.T or self.T < 1:
            raise InvalidParametersError(f"T must be a positive integer, got {self.T}")
        for name in ("eta", "alpha", "beta"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise InvalidParametersError(f"{name} must be positive, got {value}")
        if self.delta < 0:
            raise InvalidParametersError(f"delta must be >= 0, got {self.delta}")


@dataclass(frozen=True)
class ProblemInstance:
    """Everything the solver needs to know about one optimisation problem.

    ``f_star`` is the optimal objective value when the builder knows it;
    ``f_star_tag`` says where it came from (``"analytic"``, ``"lp"`` or
    ``"reference"``).
    """

    objective: "SubgradientOracle"
    constraints: Sequence["SubgradientOracle"]
    feasible_set: "FeasibleSet"
    auxiliary_set: "AuxiliarySet"
    constants: ProblemConstants
    initial_point: Point
    name: str = "problem"
    f_star: Optional[float] = None
    f_star_tag: Optional[str] = None
    metadata: dict = field(default_factory=dict, compare=False)
    # extra scalars reported at the averaged iterate, e.g. a noiseless loss
    diagnostics: Mapping[str, Callable[[Point], float]] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        validate_constants(self.constants)
        object.__setattr__(self, "constraints", tuple(self.constraints))
        object.__setattr__(self, "initial_point", _frozen(self.initial_point))
        if len(self.constraints) != self.constants.m:
            raise InvalidConstantsError(
                f"constants.m = {self.constants.m} but "
                f"{len(self.constraints)} constraint oracles were given"
            )
        if tuple(self.feasible_set.shape) != self.initial_point.shape:
            raise ShapeMismatchError(
                f"initial point has shape {self.initial_point.shape}, "
                f"feasible set expects {tuple(self.feasible_set.shape)}"
            )
        contains = getattr(self.feasible_set, "contains", None)
        if contains is not None and not contains(self.initial_point):
            raise InvalidConstantsError("initial point is not in the feasible set")

    @property
    def shape(self) -> tuple[int, ...]:
        return self.initial_point.shape

    @property
    def m(self) -> int:
        return self.constants.m

    def with_initial_point(self, x: Point) -> "ProblemInstance":
        return replace(self, initial_point=np.asarray(x, dtype=np.float64))


__all__ = [
    "Point",
    "ConstraintVec",
    "as_point",
    "check_same_shape",
    "inner",
    "norm",
    "add",
    "scale",
    "axpy",
    "positive_part",
    "l2_norm",
    "ProblemConstants",
    "validate_constants",
    "SolverParams",
    "ProblemInstance",
]
