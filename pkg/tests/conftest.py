from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from pffc.problems import build_minflow, build_one_dim, build_r4nr_problem, gen_r4nr

ROOT = Path(__file__).resolve().parents[1]


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def data_dir() -> Path:
    return ROOT / "data"


@pytest.fixture
def one_dim():
    return build_one_dim()


@pytest.fixture(scope="session")
def desk_r4nr():
    return gen_r4nr(n=50, q=20, p=30, rank=5, seed=7)


@pytest.fixture(scope="session")
def desk_r4nr_problem(desk_r4nr):
    return build_r4nr_problem(desk_r4nr)


@pytest.fixture(scope="session", params=["F1", "F2", "F3", "F4"])
def minflow(request):
    return build_minflow(formulation=request.param)


@pytest.fixture(scope="session")
def minflow_f3():
    return build_minflow(formulation="F3")
