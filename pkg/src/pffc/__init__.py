"""Projection-free primal-dual solver for nonsmooth convex problems with
functional constraints.

The solver only touches the feasible set through a linear minimisation
oracle, so it suits sets where projection is expensive (nuclear-norm balls,
flow polytopes). Constraints ``h_i(x) <= 0`` are handled by multipliers.

Typical usage::

    from pffc.problems import build_minflow
    from pffc.solver import configure_parsel2, run

    _, problem = build_minflow(formulation="F3")
    report = run(problem, configure_parsel2(2000, problem.constants), seed=0)
    report.final_objective, report.final_violation

The command-line entry point is ``pffc`` (see :mod:`pffc.main`).
"""

__all__ = [
    "__version__",
]

__version__ = "0.1.0"
