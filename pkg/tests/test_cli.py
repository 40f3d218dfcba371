import subprocess
import sys
from pathlib import Path

import pytest

from distblossom import cli
from distblossom.graph import Matching

DATA = Path(__file__).resolve().parent.parent / "demos" / "data"
K4 = str(DATA / "k4_heavy_diagonals.graph")
SIX = str(DATA / "six_point_manhattan.graph")
ODD = str(DATA / "odd_count.graph")


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def total(stdout):
    return stdout.strip().splitlines()[-1]


def test_solve_k4_checked_by_oracle(capsys):
    code, out, err = run(capsys, "solve", "--input", K4, "--solver", "distributed", "--seed", "7", "--check", "oracle")
    assert code == 0 and total(out) == "total 2"
    assert "check oracle: ok" in err


def test_solve_six_points_checked_by_serial(capsys):
    code, out, err = run(capsys, "solve", "--input", SIX, "--seed", "1", "--check", "serial")
    assert code == 0 and total(out) == "total 4"


@pytest.mark.parametrize("solver", ["distributed", "serial", "oracle"])
def test_every_solver_prints_sorted_pairs(capsys, solver):
    check = "oracle" if solver == "oracle" else "all"
    code, out, _ = run(capsys, "solve", "--input", SIX, "--solver", solver, "--check", check)
    lines = out.strip().splitlines()
    pairs = [tuple(map(int, x.split()[:2])) for x in lines[:-1]]
    assert code == 0 and len(pairs) == 3
    assert pairs == sorted(pairs) and all(a < b for a, b in pairs)
    assert lines[-1] == "total 4"


def test_odd_vertex_count_is_an_input_error(capsys):
    code, out, err = run(capsys, "solve", "--input", ODD)
    assert code == 2 and out == "" and "odd" in err


def test_missing_file_is_an_input_error(capsys):
    code, _, err = run(capsys, "solve", "--input", "/nonexistent/x.graph")
    assert code == 2 and "cannot read" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["solve", "--input", K4, "--latency", "gauss:3"],
        ["solve", "--input", K4, "--max-ticks", "0"],
        ["sweep", "--input", K4, "--seeds", "5..2"],
        ["sweep", "--input", K4, "--seeds", "x"],
        ["solve"],
        ["frobnicate"],
    ],
)
def test_bad_arguments_exit_2(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_oracle_refuses_large_instances(capsys, tmp_path):
    from distblossom.graph import random_instance, save_instance
    import random

    big = tmp_path / "big.graph"
    save_instance(random_instance(14, random.Random(0)), big)
    code, _, err = run(capsys, "solve", "--input", str(big), "--solver", "oracle")
    assert code == 2 and "refuses" in err
    code, out, err = run(capsys, "solve", "--input", str(big), "--check", "all")
    assert code == 0 and "skipping oracle" in err


def test_tick_budget_exit_3(capsys):
    code, _, err = run(capsys, "solve", "--input", SIX, "--max-ticks", "5")
    assert code == 3 and "tick" in err
    code, out, _ = run(capsys, "sweep", "--input", SIX, "--seeds", "0..1", "--max-ticks", "5")
    assert code == 3 and "budget exhausted" in out


def test_failed_check_exit_4(capsys, monkeypatch):
    def wrong(graph, snapshots=None):
        return Matching.from_pairs([(0, 5), (1, 4), (2, 3)]), None

    monkeypatch.setattr(cli, "serial_mwpm", wrong)
    code, _, err = run(capsys, "solve", "--input", SIX, "--check", "serial")
    assert code == 4 and "FAILED" in err


def test_diverging_sweep_exit_4(capsys, monkeypatch):
    real = cli.solve_distributed

    def flaky(graph, config):
        r = real(graph, config)
        if config.seed == 2:
            r.weight = r.weight + 1
        return r

    monkeypatch.setattr(cli, "solve_distributed", flaky)
    code, _, err = run(capsys, "sweep", "--input", K4, "--seeds", "0..3")
    assert code == 4 and "seed 2" in err


def test_sweep_six_points_finds_a_multireweight(capsys):
    code, out, _ = run(capsys, "sweep", "--input", SIX, "--seeds", "0..99", "--check", "oracle")
    assert code == 0
    assert "weights: 4 x100" in out
    seeds_line = next(x for x in out.splitlines() if x.startswith("seeds with a multireweight"))
    assert int(seeds_line.split(":")[1]) >= 1


def test_sweep_k4_is_stable(capsys):
    code, out, _ = run(capsys, "sweep", "--input", K4, "--seeds", "0..99")
    assert code == 0 and "weights: 2 x100" in out


def test_sweep_in_parallel_matches_serial_sweep(capsys):
    a = run(capsys, "sweep", "--input", K4, "--seeds", "0..5")
    b = run(capsys, "sweep", "--input", K4, "--seeds", "0..5", "--jobs", "2")
    assert a == b


def test_trace_directory_from_environment(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("BLOSSOM_TRACE_DIR", str(tmp_path))
    assert run(capsys, "solve", "--input", K4, "--seed", "3")[0] == 0
    written = list(tmp_path.glob("*.jsonl"))
    assert [p.name for p in written] == ["k4_heavy_diagonals-distributed-seed3.jsonl"]
    explicit = tmp_path / "explicit.jsonl"
    assert run(capsys, "solve", "--input", K4, "--trace", str(explicit))[0] == 0
    assert explicit.read_text().startswith("{")


def test_console_entry_point_is_deterministic(tmp_path):
    def once(tag):
        trace = tmp_path / f"{tag}.jsonl"
        p = subprocess.run(
            [sys.executable, "-m", "distblossom", "solve", "--input", SIX, "--seed", "11", "--trace", str(trace)],
            capture_output=True, text=True, check=True,
        )
        return p.stdout, trace.read_bytes()

    assert once("a") == once("b")
