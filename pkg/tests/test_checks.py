from __future__ import annotations

import numpy as np
import pytest

from pffc.checks import (
    SUITES,
    CheckResult,
    SuiteReport,
    _decay_margin,
    enumerate_min_path_cost,
    random_dag,
    random_small_problem,
    run_suite,
)


def test_suite_report_margins() -> None:
    report = SuiteReport("demo")
    ok = report.add("holds", 0.0)
    bad = report.add("breaks", -1e-3, "detail")
    assert ok.passed and not bad.passed
    assert not report.passed
    assert report.lines()[1].startswith("FAIL breaks margin=-1.000e-03")
    assert CheckResult("x", True, 1.0).line() == "PASS x margin=1.000e+00"


def test_random_dag_has_a_chain(rng) -> None:
    net = random_dag(rng, n_nodes=5, max_edges=7)
    assert net.n_edges == 7
    for i in range(4):
        assert (i, i + 1) in set(zip(net.tails, net.heads))
    # only the chain is a path when every off-chain edge is expensive
    w = np.array([0.0 if v == u + 1 else 100.0 for u, v in zip(net.tails, net.heads)])
    assert enumerate_min_path_cost(net, w) == 0.0


def test_random_small_problem(rng) -> None:
    problem = random_small_problem(rng, dim=4, m=2)
    assert problem.shape == (4,)
    assert problem.m == 2
    assert problem.feasible_set.contains(problem.initial_point)


@pytest.mark.parametrize("suite", ["invariants", "oracles"])
def test_quick_suites_pass(suite) -> None:
    report = run_suite(suite, seed=0, quick=True)
    assert report.results
    assert report.passed, "\n".join(report.lines())


def test_quick_bounds_certificates_pass() -> None:
    report = run_suite("bounds", seed=0, quick=True)
    certified = [r for r in report.results if r.name.startswith(("gap<=objective bound", "no violation", "max|Q_t|"))]
    assert len(certified) == 10
    assert all(r.passed for r in certified), "\n".join(r.line() for r in certified)


@pytest.mark.slow
def test_full_oracle_suite_passes() -> None:
    report = run_suite("oracles", seed=1)
    assert report.passed, "\n".join(report.lines())


@pytest.mark.parametrize(
    ("early", "late", "passes"),
    [(1.0, 0.5, True), (1.0, 0.7, False), (0.0, 0.0, True), (1e-13, 5e-10, True), (1e-13, 1e-6, False)],
)
def test_decay_margin(early, late, passes) -> None:
    assert (_decay_margin(early, late, 0.6) >= 0) is passes


@pytest.mark.slow
def test_full_bounds_suite_passes_and_reports_every_trend() -> None:
    report = run_suite("bounds", seed=0)
    assert report.passed, "\n".join(report.lines())
    names = [r.name for r in report.results]
    assert sum(n.startswith("gap ratio") for n in names) == 2
    assert sum(n.startswith("violation decay") for n in names) == 2
    assert sum(n.startswith("|Q_T|/T") for n in names) == 1
    assert sum(n.startswith("within 2% of LP f*") for n in names) == 4
    assert sum(n.startswith("capacities respected") for n in names) == 2


def test_unknown_suite() -> None:
    assert "invariants" in SUITES
    with pytest.raises(ValueError):
        run_suite("everything")
