from __future__ import annotations

import pandas as pd
import pytest
import yaml

from pffc import __version__
from pffc.main import EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_OK, build_parser, run
from pffc.utils.reporting import TRAJECTORY_COLUMNS


@pytest.fixture(autouse=True)
def _in_tmp(tmp_path, monkeypatch) -> None:
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("PFFC_SEED", raising=False)


def _trajectory(path) -> pd.DataFrame:
    return pd.read_csv(path).drop(columns="wall_ms")


def test_parser_subcommands() -> None:
    args = build_parser().parse_args(["check", "invariants", "--quick"])
    assert args.suite == "invariants" and args.quick
    args = build_parser().parse_args(["solve", "--T", "7", "--lmo", "power:2"])
    assert args.T == 7 and args.lmo == "power:2"


def test_version_and_usage_errors(capsys) -> None:
    assert run(["--version"]) == EXIT_OK
    assert __version__ in capsys.readouterr().out
    assert run(["solve", "--problem", "lasso"]) == EXIT_CONFIG
    assert run([]) == EXIT_CONFIG


def test_solve_one_dim_writes_trajectory(tmp_path, capsys) -> None:
    out = tmp_path / "runs" / "one.csv"
    assert run(["solve", "--problem", "custom-1d", "--T", "50", "--output", str(out)]) == EXIT_OK
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == ",".join(TRAJECTORY_COLUMNS)
    assert len(lines) == 51
    printed = capsys.readouterr().out
    assert "[pffc] Solving custom-1d with pffc (T=50" in printed
    assert "gap=" in printed


def test_solve_with_stride_and_several_seeds(tmp_path) -> None:
    out = tmp_path / "run.csv"
    code = run(["solve", "--problem", "minflow", "--T", "40", "--stride", "10", "--seeds", "1,2", "--output", str(out)])
    assert code == EXIT_OK
    for seed in (1, 2):
        frame = _trajectory(tmp_path / f"run_seed{seed}.csv")
        assert list(frame["t"]) == [1, 11, 21, 31, 40]


def test_solve_is_reproducible(tmp_path) -> None:
    argv = ["solve", "--problem", "ext-1d", "--T", "30", "--seed", "3", "--output"]
    assert run(argv + [str(tmp_path / "a.csv")]) == EXIT_OK
    assert run(argv + [str(tmp_path / "b.csv")]) == EXIT_OK
    pd.testing.assert_frame_equal(_trajectory(tmp_path / "a.csv"), _trajectory(tmp_path / "b.csv"))


def test_solve_with_two_schedules_is_a_config_error(tmp_path, capsys) -> None:
    config = tmp_path / "both.yaml"
    config.write_text(yaml.safe_dump({"schedule": {"parsel1": {"epsilon": 0.1}, "parsel2": {}}}), encoding="utf-8")
    assert run(["solve", "--config", str(config)]) == EXIT_CONFIG
    assert "configuration error" in capsys.readouterr().err


def test_first_schedule_sets_the_horizon(tmp_path) -> None:
    config = tmp_path / "p1.yaml"
    config.write_text(yaml.safe_dump({"schedule": {"parsel1": {"epsilon": 0.25}}}), encoding="utf-8")
    out = tmp_path / "p1.csv"
    assert run(["solve", "--config", str(config), "--output", str(out)]) == EXIT_OK
    assert _trajectory(out)["t"].iloc[-1] == 16


def test_pgd_needs_a_projection() -> None:
    code = run(["solve", "--problem", "minflow", "--solver", "pgd", "--T", "10"])
    assert code == EXIT_CONFIG


def test_pgd_on_regression(tmp_path) -> None:
    config = tmp_path / "r.yaml"
    config.write_text(
        yaml.safe_dump({"problem": {"kind": "r4nr", "r4nr": {"n": 8, "q": 3, "p": 4, "rank": 1}}}),
        encoding="utf-8",
    )
    out = tmp_path / "pgd.csv"
    assert run(["solve", "--config", str(config), "--solver", "pgd", "--T", "20", "--output", str(out)]) == EXIT_OK
    assert _trajectory(out)["q_norm"].isna().all()


def test_power_lmo_only_for_regression() -> None:
    assert run(["solve", "--problem", "custom-1d", "--lmo", "power:2", "--T", "5"]) == EXIT_CONFIG


def test_gen_minflow_reproduces_fixture(tmp_path, data_dir) -> None:
    out = tmp_path / "flow.txt"
    assert run(["gen", "minflow", "--out", str(out)]) == EXIT_OK
    assert out.read_bytes() == (data_dir / "minflow_default.txt").read_bytes()


def test_gen_r4nr_then_solve(tmp_path) -> None:
    sizes = ["--n", "8", "--q", "3", "--p", "4", "--rank", "2", "--seed", "5"]
    first, second = tmp_path / "a.txt", tmp_path / "b.txt"
    assert run(["gen", "r4nr", "--out", str(first), *sizes]) == EXIT_OK
    assert run(["gen", "r4nr", "--out", str(second), *sizes]) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()

    from_file = tmp_path / "from_file.yaml"
    from_file.write_text(yaml.safe_dump({"problem": {"kind": "r4nr", "r4nr": {"fixture": "a.txt"}}}), encoding="utf-8")
    generated = tmp_path / "generated.yaml"
    generated.write_text(
        yaml.safe_dump({"problem": {"kind": "r4nr", "r4nr": {"n": 8, "q": 3, "p": 4, "rank": 2, "seed": 5}}}),
        encoding="utf-8",
    )
    for config in (from_file, generated):
        code = run(["solve", "--config", str(config), "--T", "25", "--output", str(config.with_suffix(".csv"))])
        assert code == EXIT_OK
    pd.testing.assert_frame_equal(
        _trajectory(from_file.with_suffix(".csv")), _trajectory(generated.with_suffix(".csv"))
    )


def test_check_command(capsys) -> None:
    assert run(["check", "oracles", "--quick"]) == EXIT_OK
    printed = capsys.readouterr().out
    assert "[pffc] suite oracles passed" in printed
    assert EXIT_CHECK_FAILED == 1


def _small_r4nr(tmp_path):
    config = tmp_path / "small.yaml"
    config.write_text(
        yaml.safe_dump({"problem": {"kind": "r4nr", "r4nr": {"n": 8, "q": 3, "p": 4, "rank": 1}}}),
        encoding="utf-8",
    )
    return config


def test_measure_gap_fills_the_gap_column(tmp_path, capsys) -> None:
    out = tmp_path / "gaps.csv"
    argv = ["solve", "--config", str(_small_r4nr(tmp_path)), "--T", "20", "--lmo", "power:2", "--output", str(out)]
    assert run(argv + ["--measure-gap"]) == EXIT_OK
    frame = _trajectory(out)
    assert frame.loc[frame["t"] >= 2, "lmo_gap"].notna().all()
    assert (frame.loc[frame["t"] >= 2, "lmo_gap"] >= -1e-9).all()
    printed = capsys.readouterr().out
    assert "lmo gaps: count=19" in printed
    assert "noiseless_loss=" in printed

    assert run(argv) == EXIT_OK
    assert _trajectory(out)["lmo_gap"].isna().all()
    assert "lmo gaps:" not in capsys.readouterr().out


def test_measure_gap_needs_the_pffc_solver(tmp_path) -> None:
    argv = ["solve", "--config", str(_small_r4nr(tmp_path)), "--solver", "pgd", "--T", "5", "--measure-gap"]
    assert run(argv) == EXIT_CONFIG


def test_malformed_problem_parameters_are_a_config_error(tmp_path, capsys) -> None:
    config = tmp_path / "bad.yaml"
    config.write_text(yaml.safe_dump({"problem": {"kind": "r4nr", "r4nr": {"n": [1]}}}), encoding="utf-8")
    assert run(["solve", "--config", str(config), "--T", "5"]) == EXIT_CONFIG
    assert "configuration error" in capsys.readouterr().err
