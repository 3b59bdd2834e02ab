"""Concrete convex sets with their linear minimisation and projection oracles.

Feasible sets (used through :func:`pffc.oracles.lmo`) implement ``lmo``,
``contains`` and ``exact_min``; auxiliary sets implement ``project``. Sets
that are cheap to project onto (box, l2-ball, nuclear ball) implement both,
which is what the projected subgradient baseline relies on.

Tie-breaking among minimisers is fixed per set:

- box: each coordinate takes the lower bound unless its direction entry is
  strictly negative;
- l2-ball: a zero direction returns the centre;
- nuclear ball: a zero direction (or ``gamma == 0``) returns the zero matrix.

The flow polytopes live in :mod:`pffc.flows`.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.utils.extmath import randomized_svd

from .core import Point, check_same_shape, inner, norm
from .errors import InvalidParametersError, ShapeMismatchError, SvdFailure

logger = logging.getLogger(__name__)


def _check_shape(x: Point, shape: tuple[int, ...]) -> None:
    if np.shape(x) != tuple(shape):
        raise ShapeMismatchError(f"expected shape {tuple(shape)}, got {np.shape(x)}")


# --------------------------------------------------------------------- box


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``{x : lower <= x <= upper}``."""

    lower: Point
    upper: Point

    def __post_init__(self) -> None:
        lower = np.array(self.lower, dtype=np.float64)
        upper = np.array(self.upper, dtype=np.float64)
        check_same_shape(lower, upper)
        if np.any(lower > upper):
            raise InvalidParametersError("box lower bounds must not exceed upper bounds")
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def unit(cls, dim: int) -> "Box":
        return cls(np.zeros(dim), np.ones(dim))

    @classmethod
    def around(cls, center: Point, edge: float) -> "Box":
        """Hypercube centred at *center* with the given edge length."""

        c = np.asarray(center, dtype=np.float64)
        return cls(c - edge / 2.0, c + edge / 2.0)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.lower.shape

    def contains(self, x: Point, tol: float = 1e-8) -> bool:
        _check_shape(x, self.shape)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def project(self, v: Point) -> Point:
        return box_project(self, v)

    def lmo(self, direction: Point, budget: float = 0.0, rng: np.random.Generator | None = None) -> Point:
        return box_lmo(self, direction)

    def exact_min(self, direction: Point) -> float:
        return inner(box_lmo(self, direction), direction)

    def diameter(self) -> float:
        return norm(self.upper - self.lower)


def box_project(box: Box, v: Point) -> Point:
    """Clamp *v* into the box."""

    _check_shape(v, box.shape)
    return np.clip(v, box.lower, box.upper)


def box_lmo(box: Box, v: Point) -> Point:
    """Corner of the box minimising ``<x, v>``; zero entries pick the lower bound."""

    _check_shape(v, box.shape)
    return np.where(v < 0, box.upper, box.lower).astype(np.float64)


# ----------------------------------------------------------------- l2-ball


@dataclass(frozen=True)
class L2Ball:
    """Euclidean ball of the given radius around *center* (origin by default)."""

    radius: float
    center: Point

    def __post_init__(self) -> None:
        if not self.radius >= 0:
            raise InvalidParametersError(f"radius must be >= 0, got {self.radius}")
        c = np.array(self.center, dtype=np.float64)
        c.setflags(write=False)
        object.__setattr__(self, "center", c)

    @classmethod
    def origin(cls, radius: float, dim: int) -> "L2Ball":
        return cls(radius, np.zeros(dim))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.center.shape

    def contains(self, x: Point, tol: float = 1e-8) -> bool:
        _check_shape(x, self.shape)
        return norm(x - self.center) <= self.radius + tol

    def project(self, v: Point) -> Point:
        return l2ball_project(self, v)

    def lmo(self, direction: Point, budget: float = 0.0, rng: np.random.Generator | None = None) -> Point:
        return l2ball_lmo(self, direction)

    def exact_min(self, direction: Point) -> float:
        return inner(self.center, direction) - self.radius * norm(direction)

    def diameter(self) -> float:
        return 2.0 * self.radius


def l2ball_project(ball: L2Ball, v: Point) -> Point:
    """Radial scaling of ``v - center`` onto the sphere when outside."""

    _check_shape(v, ball.shape)
    d = v - ball.center
    n = norm(d)
    if n <= ball.radius:
        return np.array(v, dtype=np.float64)
    return ball.center + d * (ball.radius / n)


def l2ball_lmo(ball: L2Ball, v: Point) -> Point:
    _check_shape(v, ball.shape)
    n = norm(v)
    if n == 0.0:
        return np.array(ball.center, dtype=np.float64)
    return ball.center - v * (ball.radius / n)


# -------------------------------------------------------------- full space


@dataclass(frozen=True)
class FullSpace:
    """The whole space as an auxiliary set; projection is the identity."""

    shape: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "shape", tuple(int(s) for s in self.shape))

    def contains(self, x: Point, tol: float = 0.0) -> bool:
        return np.shape(x) == self.shape

    def project(self, v: Point) -> Point:
        return fullspace_project(self, v)


def fullspace_project(space: FullSpace, v: Point) -> Point:
    _check_shape(v, space.shape)
    return np.array(v, dtype=np.float64)


# ------------------------------------------------------------ nuclear ball


def nuclear_norm(c: Point) -> float:
    """Sum of singular values."""

    return float(np.sum(np.linalg.svd(c, compute_uv=False)))


def _svd(z: Point) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    try:
        return np.linalg.svd(z, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise SvdFailure(f"SVD did not converge on a {z.shape} matrix") from exc


@dataclass(frozen=True)
class NuclearBall:
    """Nuclear-norm ball ``{c in R^{rows x cols} : ||c||_* <= gamma}``.

    ``power_iters`` selects the LMO: ``None`` for the exact full-SVD oracle,
    a positive integer for the randomized top-singular-pair oracle with that
    many power iterations (and ``oversamples`` extra random directions).
    """

    gamma: float
    rows: int
    cols: int
    power_iters: int | None = None
    oversamples: int = 1
    shape: tuple[int, int] = field(init=False)

    def __post_init__(self) -> None:
        if not self.gamma >= 0:
            raise InvalidParametersError(f"gamma must be >= 0, got {self.gamma}")
        if self.rows < 1 or self.cols < 1:
            raise InvalidParametersError(f"bad nuclear ball dims {self.rows}x{self.cols}")
        if self.power_iters is not None and self.power_iters < 1:
            raise InvalidParametersError(f"power_iters must be >= 1, got {self.power_iters}")
        object.__setattr__(self, "shape", (int(self.rows), int(self.cols)))

    def contains(self, x: Point, tol: float = 1e-8) -> bool:
        _check_shape(x, self.shape)
        return nuclear_norm(x) <= self.gamma + tol

    def lmo(self, direction: Point, budget: float = 0.0, rng: np.random.Generator | None = None) -> Point:
        if self.power_iters is None:
            return nuclear_lmo_exact(self, direction)
        if rng is None:
            rng = np.random.default_rng()
        return nuclear_lmo_inexact(self, direction, self.power_iters, rng, self.oversamples)

    def exact_min(self, direction: Point) -> float:
        """``min_{||c||_* <= gamma} <c, z> = -gamma * sigma_1(z)``."""

        _check_shape(direction, self.shape)
        return -self.gamma * float(np.linalg.norm(direction, ord=2))

    def project(self, v: Point) -> Point:
        return nuclear_projection(self, v)

    def diameter(self) -> float:
        return 2.0 * self.gamma


def nuclear_lmo_exact(ball: NuclearBall, z: Point) -> Point:
    """Minimiser ``-gamma * u_1 v_1^T`` of ``<c, z>`` over the ball.

    ``u_1, v_1`` come from a full SVD of *z*; the minus sign makes the inner
    product ``-gamma * sigma_1(z)``, the minimum.

    Raises
    ------
    SvdFailure
    """

    _check_shape(z, ball.shape)
    if ball.gamma == 0 or not np.any(z):
        return np.zeros(ball.shape)
    u, _, vt = _svd(z)
    return -ball.gamma * np.outer(u[:, 0], vt[0])


def nuclear_lmo_inexact(
    ball: NuclearBall,
    z: Point,
    power_iters: int,
    rng: np.random.Generator,
    oversamples: int = 1,
) -> Point:
    """Rank-one LMO answer from a randomized top singular pair.

    The randomized range finder runs ``power_iters`` power iterations; its
    seed is drawn from *rng* so runs stay reproducible. The returned point
    always has nuclear norm ``gamma``; its suboptimality is measured after
    the fact with :func:`pffc.oracles.measure_lmo_gap`.
    """

    _check_shape(z, ball.shape)
    if power_iters < 1:
        raise InvalidParametersError(f"power_iters must be >= 1, got {power_iters}")
    if ball.gamma == 0 or not np.any(z):
        return np.zeros(ball.shape)
    seed = int(rng.integers(0, 2**31 - 1))
    try:
        u, _, vt = randomized_svd(
            z,
            n_components=1,
            n_oversamples=oversamples,
            n_iter=power_iters,
            random_state=seed,
        )
    except np.linalg.LinAlgError as exc:
        raise SvdFailure("randomized SVD failed") from exc
    u1 = u[:, 0] / np.linalg.norm(u[:, 0])
    v1 = vt[0] / np.linalg.norm(vt[0])
    return -ball.gamma * np.outer(u1, v1)


def water_filling_threshold(sigma: np.ndarray, gamma: float) -> float:
    """Exact ``zeta >= 0`` with ``sum(max(0, sigma_i - zeta)) == gamma``.

    *sigma* must be sorted in decreasing order and sum to more than *gamma*.
    The root of the piecewise-linear equation lies on the active prefix of
    length ``rho = max{k : sigma_k > (sum_{i<=k} sigma_i - gamma) / k}``.
    """

    cums = np.cumsum(sigma)
    ks = np.arange(1, sigma.size + 1)
    thresholds = (cums - gamma) / ks
    active = np.nonzero(sigma - thresholds > 0)[0]
    rho = int(active[-1]) if active.size else 0
    return max(float(thresholds[rho]), 0.0)


def nuclear_projection(ball: NuclearBall, z: Point) -> Point:
    """Frobenius projection of *z* onto the nuclear ball.

    Inside the ball *z* is returned unchanged; otherwise its singular values
    are soft-thresholded by the water-filling level.
    """

    _check_shape(z, ball.shape)
    if ball.gamma == 0:
        return np.zeros(ball.shape)
    u, s, vt = _svd(z)
    if float(np.sum(s)) <= ball.gamma:
        return np.array(z, dtype=np.float64)
    zeta = water_filling_threshold(s, ball.gamma)
    shrunk = np.maximum(s - zeta, 0.0)
    logger.debug("nuclear projection: zeta=%.6g, rank %d -> %d", zeta, int(np.sum(s > 0)), int(np.sum(shrunk > 0)))
    return (u * shrunk) @ vt


def ball_diameter(gamma: float) -> float:
    """Euclidean diameter bound ``2 * gamma`` of the nuclear ball."""

    if not math.isfinite(gamma) or gamma < 0:
        raise InvalidParametersError(f"gamma must be finite and >= 0, got {gamma}")
    return 2.0 * gamma


__all__ = [
    "Box",
    "box_project",
    "box_lmo",
    "L2Ball",
    "l2ball_project",
    "l2ball_lmo",
    "FullSpace",
    "fullspace_project",
    "nuclear_norm",
    "NuclearBall",
    "nuclear_lmo_exact",
    "nuclear_lmo_inexact",
    "water_filling_threshold",
    "nuclear_projection",
    "ball_diameter",
]
