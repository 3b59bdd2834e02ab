from __future__ import annotations

import math

import numpy as np
import pytest

from pffc.errors import BadDimsError, ParseError, ShapeMismatchError, WrongFormulationError
from pffc.problems import (
    DEFAULT_COEFF_RULES,
    DEFAULT_EDGES,
    MinFlowInstance,
    R4nrInstance,
    build_extension_demo,
    build_minflow,
    build_one_dim,
    build_r4nr_problem,
    default_network,
    exp_max_subgradient,
    exp_max_value,
    format_r4nr,
    gen_r4nr,
    hcap_subgradient,
    hcap_value,
    load_r4nr,
    max_affine_oracle,
    mcshane_whitney_extend_1d,
    minflow_subgradient,
    minflow_value,
    default_coefficients,
    parse_r4nr,
    r4nr_lipschitz,
    r4nr_noiseless_loss,
    r4nr_subgradient,
    r4nr_value,
    save_r4nr,
    y_box_for,
)


# ------------------------------------------------------------------ r4nr


def test_r4nr_shapes(desk_r4nr) -> None:
    assert desk_r4nr.predictors.shape == (30, 50)
    assert desk_r4nr.responses.shape == (20, 50)
    assert desk_r4nr.c_true.shape == (20, 30)
    assert np.linalg.matrix_rank(desk_r4nr.c_true) == 5
    assert (desk_r4nr.n, desk_r4nr.q, desk_r4nr.p) == (50, 20, 30)
    nuclear = np.linalg.svd(desk_r4nr.c_true, compute_uv=False).sum()
    assert desk_r4nr.gamma == pytest.approx(1.2 * nuclear)


def test_r4nr_generation_is_deterministic() -> None:
    a = gen_r4nr(n=10, q=4, p=3, rank=2, seed=3)
    b = gen_r4nr(n=10, q=4, p=3, rank=2, seed=3)
    c = gen_r4nr(n=10, q=4, p=3, rank=2, seed=4)
    assert format_r4nr(a) == format_r4nr(b)
    assert not np.array_equal(a.responses, c.responses)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(n=0, q=4, p=3, rank=1),
        dict(n=5, q=4, p=3, rank=4),
        dict(n=5, q=4, p=3, rank=0),
        dict(n=5, q=4, p=3, rank=1, laplace_scale=-1.0),
    ],
)
def test_r4nr_rejects_bad_sizes(kwargs) -> None:
    with pytest.raises(BadDimsError):
        gen_r4nr(**kwargs)


def test_r4nr_fixture_text(tmp_path) -> None:
    inst = gen_r4nr(n=6, q=3, p=2, rank=1, seed=9)
    text = format_r4nr(inst)
    assert text.splitlines()[0].split()[:6] == ["r4nr", "6", "3", "2", "1", "9"]
    back = parse_r4nr(text)
    np.testing.assert_array_equal(back.predictors, inst.predictors)
    np.testing.assert_array_equal(back.responses, inst.responses)
    np.testing.assert_array_equal(back.c_true, inst.c_true)
    assert back.gamma == inst.gamma
    path = save_r4nr(inst, tmp_path / "nested" / "r4nr.txt")
    assert load_r4nr(path).seed == 9


@pytest.mark.parametrize(
    "text",
    ["", "r4nr 1 1 1\n", "flow 1 1 1 1 0 1.0 2.0\n", "r4nr 1 1 1 1 0 1.0 2.0\ny 1 1\n0.0\n"],
)
def test_r4nr_parse_errors(text) -> None:
    with pytest.raises(ParseError):
        parse_r4nr(text)


def _noiseless(seed: int = 0) -> R4nrInstance:
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((3, 8))
    c = rng.standard_normal((2, 3))
    return R4nrInstance(
        predictors=x, responses=c @ x, c_true=c, gamma=10.0, rank=2, laplace_scale=0.0, seed=seed
    )


def test_r4nr_zero_residual_has_zero_subgradient() -> None:
    inst = _noiseless()
    assert r4nr_value(inst, inst.c_true) == 0.0
    np.testing.assert_array_equal(r4nr_subgradient(inst, inst.c_true), np.zeros((2, 3)))


def test_r4nr_value_at_zero() -> None:
    inst = _noiseless(1)
    expected = np.mean(np.linalg.norm(inst.responses, axis=0))
    assert r4nr_value(inst, np.zeros((2, 3))) == pytest.approx(expected)


def test_r4nr_stochastic_subgradient_is_unbiased() -> None:
    inst = gen_r4nr(n=5, q=2, p=3, rank=1, seed=2)
    c = np.full((2, 3), 0.1)
    rng = np.random.default_rng(0)
    draws = [r4nr_subgradient(inst, c, "stochastic", 1, rng) for _ in range(20_000)]
    full = r4nr_subgradient(inst, c)
    assert np.linalg.norm(np.mean(draws, axis=0) - full) <= 0.1
    # every single-sample subgradient has norm ||x_i||
    second_moment = np.mean([np.sum(d**2) for d in draws[:2000]])
    assert second_moment == pytest.approx(r4nr_lipschitz(inst) ** 2, rel=0.2)


def test_r4nr_subgradient_errors(desk_r4nr) -> None:
    c = np.zeros((20, 30))
    with pytest.raises(ValueError):
        r4nr_subgradient(desk_r4nr, c, mode="stochastic")
    with pytest.raises(ValueError):
        r4nr_subgradient(desk_r4nr, c, mode="minibatch", rng=np.random.default_rng(0))


def test_r4nr_problem(desk_r4nr_problem, desk_r4nr) -> None:
    problem = desk_r4nr_problem
    assert problem.m == 0
    assert problem.constants.D == pytest.approx(2 * desk_r4nr.gamma)
    np.testing.assert_array_equal(problem.initial_point, np.zeros((20, 30)))
    stochastic = build_r4nr_problem(desk_r4nr, mode="stochastic", batch=4)
    assert stochastic.objective.stochastic


def test_r4nr_noiseless_loss(desk_r4nr, desk_r4nr_problem) -> None:
    inst = desk_r4nr
    assert r4nr_noiseless_loss(inst, inst.c_true) == pytest.approx(0.0, abs=1e-12)
    zero = np.zeros((inst.q, inst.p))
    expected = np.mean(np.linalg.norm(inst.c_true @ inst.predictors, axis=0))
    assert r4nr_noiseless_loss(inst, zero) == pytest.approx(expected)
    assert desk_r4nr_problem.diagnostics["noiseless_loss"](zero) == pytest.approx(expected)
    with pytest.raises(ShapeMismatchError):
        r4nr_noiseless_loss(inst, np.zeros((inst.p, inst.q)))


# --------------------------------------------------------------- minflow


def test_default_network_matches_edge_table() -> None:
    net = default_network()
    assert list(zip(net.tails, net.heads, net.capacities)) == [tuple(e) for e in DEFAULT_EDGES]
    assert net.demand == 4.1


def test_minflow_value_and_subgradient() -> None:
    net = default_network()
    a, b, c = default_coefficients(net)
    np.testing.assert_allclose(a, np.exp(np.asarray(net.capacities) / 10))
    inst = MinFlowInstance(net=net, a=a, b=b, c=c, formulation="F1")
    zero = np.zeros(net.n_edges)
    assert minflow_value(inst, zero) == pytest.approx(22 / 5)
    np.testing.assert_array_equal(minflow_subgradient(inst, zero), zero)
    big = np.full(net.n_edges, 10.0)
    np.testing.assert_array_equal(minflow_subgradient(inst, big), a)


def test_capacity_constraint() -> None:
    net = default_network()
    inst = MinFlowInstance(net, *default_coefficients(net), formulation="F3")
    caps = np.asarray(net.capacities, dtype=float)
    x = caps.copy()
    x[2] += 0.5
    assert hcap_value(inst, x) == pytest.approx(0.5)
    np.testing.assert_array_equal(hcap_subgradient(inst, x), np.eye(net.n_edges)[2])
    # ties go to the first edge
    np.testing.assert_array_equal(hcap_subgradient(inst, caps), np.eye(net.n_edges)[0])

    unconstrained = MinFlowInstance(net, *default_coefficients(net), formulation="F1")
    with pytest.raises(WrongFormulationError):
        hcap_value(unconstrained, x)
    with pytest.raises(WrongFormulationError):
        hcap_subgradient(unconstrained, x)


def test_unknown_formulation() -> None:
    with pytest.raises(WrongFormulationError):
        build_minflow(formulation="F5")


def test_minflow_formulations(minflow) -> None:
    inst, problem = minflow
    assert problem.f_star_tag == "lp"
    if not inst.has_capacity_constraint:
        assert problem.f_star <= problem.objective.value(problem.initial_point) + 1e-9
    assert problem.m == (1 if inst.has_capacity_constraint else 0)
    assert problem.constants.G == (1.0 if inst.has_capacity_constraint else 0.0)
    assert problem.constants.L == pytest.approx(np.linalg.norm(inst.a))
    assert inst.net.conservation_residual(problem.initial_point) <= 1e-9


def test_minflow_optimum_is_shared_across_formulations() -> None:
    values = {f: build_minflow(formulation=f)[1].f_star for f in ("F1", "F2", "F3", "F4")}
    assert max(values.values()) - min(values.values()) <= 1e-9


def test_minflow_from_fixture(data_dir) -> None:
    _, from_file = build_minflow(data_dir / "minflow_default.txt", formulation="F2")
    _, builtin = build_minflow(formulation="F2")
    assert from_file.f_star == pytest.approx(builtin.f_star)


def test_minflow_explicit_coefficients() -> None:
    n = len(DEFAULT_EDGES)
    inst, problem = build_minflow(
        coeff_rule="explicit", coefficients=[[1.0] * n, [0.0] * n, [0.0] * n]
    )
    # unit costs: the cheapest route carries 4.1 units over three edges
    assert problem.f_star == pytest.approx(3 * 4.1)
    with pytest.raises(ValueError):
        build_minflow(coeff_rule="random")
    with pytest.raises(ValueError):
        build_minflow(coeff_rule="explicit")


def test_coefficient_rule_aliases() -> None:
    assert "paper_default" in DEFAULT_COEFF_RULES
    short, _ = build_minflow(coeff_rule="default")
    long, problem = build_minflow(coeff_rule="paper_default")
    np.testing.assert_allclose(long.a, short.a)
    np.testing.assert_allclose(long.c, short.c)
    assert problem.f_star == pytest.approx(build_minflow()[1].f_star)


def test_auxiliary_box() -> None:
    box = y_box_for(default_network())
    np.testing.assert_array_equal(box.upper, [4.1, 4.1, 4.1, 4.1, 4.1, 4.1, 4.1, 4.1, 4.1])
    np.testing.assert_array_equal(box.lower, np.zeros(9))


# ------------------------------------------------------------------- 1-D


def test_one_dim_problem(one_dim) -> None:
    assert one_dim.objective.value(np.array([0.25])) == 0.25
    assert one_dim.f_star == 0.0
    np.testing.assert_array_equal(one_dim.initial_point, [1.0])
    assert build_one_dim().name == "custom-1d"


def test_exp_max() -> None:
    assert exp_max_value(-1.0) == pytest.approx(math.e)
    assert exp_max_subgradient(0.0) == 1.0
    assert exp_max_subgradient(-1.0) == pytest.approx(-math.e)


def test_mcshane_whitney_extension() -> None:
    for x in (-2.0, 2.0):
        value = mcshane_whitney_extend_1d(exp_max_value, -1.0, 1.0, math.e, x)
        assert value == pytest.approx(2 * math.e, abs=1e-9)
    for x in np.linspace(-1.0, 1.0, 41):
        value = mcshane_whitney_extend_1d(exp_max_value, -1.0, 1.0, math.e, float(x))
        assert value == pytest.approx(exp_max_value(float(x)), abs=1e-9)
    with pytest.raises(ValueError):
        mcshane_whitney_extend_1d(exp_max_value, 1.0, 1.0, math.e, 0.0)


def test_extension_demo() -> None:
    problem = build_extension_demo(x1=0.5)
    rng = np.random.default_rng(0)
    assert problem.objective.value(np.array([3.0])) == pytest.approx(3 * math.e, abs=1e-9)
    np.testing.assert_allclose(problem.objective.subgradient(np.array([3.0]), rng), [math.e])
    np.testing.assert_allclose(problem.objective.subgradient(np.array([-3.0]), rng), [-math.e])
    assert problem.f_star == 1.0
    assert problem.constants.D == 2.0


def test_max_affine_oracle() -> None:
    oracle = max_affine_oracle(np.array([[1.0, 0.0], [0.0, 2.0]]), np.array([0.0, -1.0]))
    x = np.array([1.0, 2.0])
    assert oracle.value(x) == 3.0
    np.testing.assert_array_equal(oracle.subgradient(x, np.random.default_rng(0)), [0.0, 2.0])
