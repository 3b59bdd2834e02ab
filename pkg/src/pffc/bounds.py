"""Closed-form guarantees for the primal-dual method.

Three families of bounds are computed from :class:`~pffc.core.ProblemConstants`
and :class:`~pffc.core.SolverParams`:

* the ``f``-gap certificate for the averaged iterates (valid for any
  positive parameters) and its closed form under the second schedule;
* the ``sqrt(A0 + A1 mu + A2 mu^2) / sqrt(T)`` bound on the expected
  objective gap and constraint violation under the second schedule;
* the growth bound on ``||Q_t||`` (general parameters, or ``B1 sqrt(t) +
  B2 sqrt(T)`` under the second schedule).

``mu`` is the norm of an optimal multiplier vector, ``lambda`` the norm of
an optimal multiplier of the ``x = y`` coupling constraint and ``h*`` the
norm of ``h`` at an optimum. When ``lambda`` and ``h*`` are unknown they
default to the worst-case values ``L + G mu`` and ``G D``.
"""

from __future__ import annotations

import math
from typing import Literal

from .core import ProblemConstants, SolverParams
from .errors import DegenerateConstantsError

__all__ = [
    "gap_bound",
    "gap_bound_closed_form",
    "gap_violation_constants",
    "gap_violation_bound",
    "drift_constants",
    "drift_bound",
]


def _ratio(num: float, den: float) -> float:
    # 0/0 terms vanish: they only appear multiplied by a power of G
    if num == 0:
        return 0.0
    if den == 0:
        raise DegenerateConstantsError(f"division by zero constant ({num} / 0)")
    return num / den


def _check_nonneg(name: str, value: float) -> None:
    if value < 0 or not math.isfinite(value):
        raise ValueError(f"{name} must be a finite nonnegative number, got {value}")


def gap_bound(params: SolverParams, c: ProblemConstants, T: int | None = None) -> float:
    """Upper bound on ``E[f(x_bar_T)] - f*`` for arbitrary positive parameters.

    ``L^2/(2 T eta) + eta (D^2 + 2 delta)/2 + L^2/(2 alpha) + alpha D^2/(2T)
    + G^2 D^2 beta / T``, with ``delta`` taken from *params*.
    """

    T = params.T if T is None else T
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    L, G, D = c.L, c.G, c.D
    eta, alpha, beta = params.eta, params.alpha, params.beta
    return (
        L**2 / (2 * T * eta)
        + eta * (D**2 + 2 * params.delta) / 2
        + L**2 / (2 * alpha)
        + alpha * D**2 / (2 * T)
        + G**2 * D**2 * beta / T
    )


def gap_bound_closed_form(c: ProblemConstants, T: int) -> float:
    """``(L sqrt(D^2 + 2 delta) + L D + G D) / sqrt(T)``."""

    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    s = math.sqrt(c.D**2 + 2 * c.delta)
    return (c.L * s + c.L * c.D + c.G * c.D) / math.sqrt(T)


def gap_violation_constants(
    c: ProblemConstants, hstar_norm: float | None = None
) -> tuple[float, float, float]:
    """``(A0, A1, A2)`` of the second-schedule gap and violation bound.

    Raises
    ------
    DegenerateConstantsError
        When ``L = 0`` while constraints are present.
    """

    L, G, D = c.L, c.G, c.D
    if L == 0 and G > 0:
        raise DegenerateConstantsError("L = 0 with constraints present")
    h = G * D if hstar_norm is None else hstar_norm
    _check_nonneg("hstar_norm", h)
    s2 = D**2 + 2 * c.delta
    s = math.sqrt(s2)
    g_over_l = _ratio(G, L)
    g3_over_l = _ratio(G**3, L)
    g4_over_l2 = _ratio(G**4, L**2)

    a2 = 55 * g3_over_l * D * s + 83 * G**2 * D**2 + 8 * g4_over_l2 * s2
    a1 = 16 * g3_over_l * s2 + 47 * G**2 * D * s
    a0 = (
        47 * G * L * D**2
        + 47 * G * L * D * s
        + 47 * G**2 * D**2
        + 12 * G**2 * s2
        + 8 * G**2 * D * s
        + 8 * g3_over_l * D * s
        + h**2 * (47 + 8 * g_over_l * s / D)
    )
    return a0, a1, a2


def gap_violation_bound(
    c: ProblemConstants, T: int, mu_norm: float, hstar_norm: float | None = None
) -> float:
    """``sqrt(A0 + A1 mu + A2 mu^2) / sqrt(T)``; 0 when ``G = 0`` and ``h* = 0``."""

    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    _check_nonneg("mu_norm", mu_norm)
    a0, a1, a2 = gap_violation_constants(c, hstar_norm)
    return math.sqrt(a0 + a1 * mu_norm + a2 * mu_norm**2) / math.sqrt(T)


def drift_constants(
    c: ProblemConstants,
    mu_norm: float,
    lambda_norm: float | None = None,
    hstar_norm: float | None = None,
) -> tuple[float, float]:
    """``(B1, B2)`` with ``||Q_t|| <= B1 sqrt(t) + B2 sqrt(T)`` under the second schedule.

    Raises
    ------
    DegenerateConstantsError
        When ``L = 0``, or when ``G = 0`` with a nonzero ``h*``.
    """

    L, G, D = c.L, c.G, c.D
    if L == 0:
        raise DegenerateConstantsError("the Q-growth constants need L > 0")
    _check_nonneg("mu_norm", mu_norm)
    lam = L + G * mu_norm if lambda_norm is None else lambda_norm
    h = G * D if hstar_norm is None else hstar_norm
    _check_nonneg("lambda_norm", lam)
    _check_nonneg("hstar_norm", h)
    s2 = D**2 + 2 * c.delta
    s = math.sqrt(s2)

    b1 = math.sqrt((D / L) * (L + 2 * G * mu_norm**2) * s + s2)
    h_term = _ratio(2 * h**2, G * L * D)
    b2 = (lam / L) * s + math.sqrt(
        s * (h_term + 2 * G * D / L + D) + (L + G * mu_norm) ** 2 * s2 / L**2
    )
    return b1, b2


def drift_bound(
    params: SolverParams,
    c: ProblemConstants,
    t: int,
    T: int | None = None,
    mu_norm: float = 0.0,
    lambda_norm: float | None = None,
    hstar_norm: float | None = None,
    mode: Literal["general", "parsel2"] = "general",
) -> float:
    """Upper bound on ``||Q_t||`` for ``1 <= t <= T``; nondecreasing in *t*.

    In ``"general"`` mode the bound holds for any positive parameters:

    ``sqrt(t) sqrt(2 mu^2/(beta eta) + L^2/(alpha eta) + D^2 + 2 delta)
    + sqrt(2 beta h*^2/eta + 2 G^2 D^2 beta/eta + alpha D^2/eta
    + (L + G mu)^2/eta^2) + lambda/eta``.

    ``"parsel2"`` mode returns ``B1 sqrt(t) + B2 sqrt(T)``.
    """

    T = params.T if T is None else T
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    if mode == "parsel2":
        b1, b2 = drift_constants(c, mu_norm, lambda_norm, hstar_norm)
        return b1 * math.sqrt(t) + b2 * math.sqrt(T)
    if mode != "general":
        raise ValueError(f"mode must be 'general' or 'parsel2', got {mode!r}")

    _check_nonneg("mu_norm", mu_norm)
    L, G, D = c.L, c.G, c.D
    lam = L + G * mu_norm if lambda_norm is None else lambda_norm
    h = G * D if hstar_norm is None else hstar_norm
    eta, alpha, beta = params.eta, params.alpha, params.beta
    s2 = D**2 + 2 * params.delta

    growth = math.sqrt(t) * math.sqrt(
        2 * mu_norm**2 / (beta * eta) + L**2 / (alpha * eta) + s2
    )
    offset = math.sqrt(
        2 * beta * h**2 / eta
        + 2 * G**2 * D**2 * beta / eta
        + alpha * D**2 / eta
        + (L + G * mu_norm) ** 2 / eta**2
    )
    return growth + offset + lam / eta
