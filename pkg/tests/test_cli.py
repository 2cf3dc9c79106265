import json
import subprocess
import sys
from pathlib import Path

import pytest

from clubex.cli import EXIT_INPUT, EXIT_OK, EXIT_TIMEOUT, EXIT_USAGE, main
from clubex.data import path
from clubex.gen import CSV_HEADER

GOLDEN = Path(__file__).parent / "golden"
M_STAR = str(path("m_star.json"))
M_STAR_POOL = str(path("m_star_pool.json"))
TWO_FRAMES = str(path("two_frames.json"))
SP_EXAMPLE = str(path("sp_example.json"))


def strip_version(text):
    data = json.loads(text)
    data.pop("version", None)
    return data


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize(
    "argv, golden",
    [
        (["solve-capped", "--instance", M_STAR, "--frames", TWO_FRAMES], "m_star_capped.json"),
        (["solve-standard", "--pool", M_STAR_POOL, "--cycle-cap", "3", "--chain-cap", "4"], "m_star_standard.json"),
        (["reduce-sp", "--sp", SP_EXAMPLE], "sp_example_reduced.json"),
        (["solve-uncapped", "--instance", str(GOLDEN / "sp_example_reduced.json")], "sp_example_uncapped.json"),
        (["horizon", "--instance", M_STAR, "--horizon", "1", "--cap", "2"], "m_star_horizon.json"),
    ],
)
def test_golden_outputs(argv, golden, tmp_path, capsys):
    out = tmp_path / "out.json"
    code, _, _ = run(argv + ["--output", str(out)], capsys)
    assert code == EXIT_OK
    expected = (GOLDEN / golden).read_text()
    assert strip_version(out.read_text()) == strip_version(expected)
    # everything but the version field is byte-identical
    drop = lambda t: "\n".join(l for l in t.splitlines() if '"version"' not in l)
    assert drop(out.read_text()) == drop(expected)


def test_solve_capped_m_star(tmp_path, capsys):
    out = tmp_path / "out.json"
    code, stdout, _ = run(["solve-capped", "--instance", M_STAR, "--frames", TWO_FRAMES, "--output", str(out)], capsys)
    assert code == EXIT_OK
    assert json.loads(out.read_text())["objective"] == 3
    assert stdout.startswith("objective=3 status=optimal")


def test_num_frames_flag(capsys):
    code, stdout, _ = run(["solve-capped", "--instance", M_STAR, "--num-frames", "2", "--cap", "2"], capsys)
    assert code == EXIT_OK and json.loads(stdout.split("objective=")[0])["objective"] == 3


def test_verify_sp_line(capsys):
    code, stdout, _ = run(["verify-sp", "--sp", SP_EXAMPLE], capsys)
    assert code == EXIT_OK
    assert stdout.strip() == "objective=22 M=8 k=2 OK"


@pytest.mark.parametrize(
    "argv",
    [
        ["solve-capped", "--instance", "missing.json", "--num-frames", "2"],
        ["solve-uncapped", "--pool", "missing.json"],
        ["verify-sp", "--sp", "missing.json"],
    ],
)
def test_missing_file_exit_3(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == EXIT_INPUT and "missing.json" in err


def test_malformed_inputs_exit_3(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["solve-uncapped", "--instance", str(bad)], capsys)[0] == EXIT_INPUT
    bad.write_text(json.dumps({"clubs": [{"id": 0, "donors": [1], "patients": [], "alpha": "-1", "gamma": "0"}], "edges": []}))
    assert run(["solve-uncapped", "--instance", str(bad)], capsys)[0] == EXIT_INPUT
    assert run(["solve-capped", "--instance", M_STAR], capsys)[0] == EXIT_INPUT
    assert run(["solve-standard", "--instance", str(GOLDEN / "sp_example_reduced.json")], capsys)[0] == EXIT_INPUT
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"no_such_field": 1}))
    assert run(["gen", "--config", str(cfg), "--size", "10"], capsys)[0] == EXIT_INPUT


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["solve-capped", "--instance", M_STAR, "--bogus"],
        ["no-such-command"],
        ["solve-capped", "--instance", M_STAR, "--num-frames", "2", "--time-limit", "-1"],
        ["solve-capped", "--instance", M_STAR, "--num-frames", "0"],
        ["solve-standard", "--pool", M_STAR_POOL, "--cycle-cap", "1"],
        ["solve-uncapped", "--instance", M_STAR, "--pool", M_STAR_POOL],
        ["validate", "--instance", M_STAR, "--schedule", "s.json", "--mode", "sideways"],
    ],
)
def test_usage_errors_exit_2(argv, capsys):
    assert run(argv, capsys)[0] == EXIT_USAGE


def test_timeout_exit_4(tmp_path, capsys, monkeypatch):
    import clubex.cli as cli
    from clubex.frames import Schedule

    monkeypatch.setattr(cli, "solve_capped", lambda *a, **k: Schedule({(0, 1): 1}, 1, False))
    out = tmp_path / "out.json"
    code, stdout, _ = run(["solve-capped", "--instance", M_STAR, "--num-frames", "2", "--output", str(out)], capsys)
    assert code == EXIT_TIMEOUT and "timed_out" in stdout
    assert json.loads(out.read_text())["optimal"] is False


@pytest.mark.parametrize(
    "argv",
    [
        ["solve-capped", "--instance", M_STAR, "--frames", TWO_FRAMES],
        ["solve-uncapped", "--instance", M_STAR],
        ["solve-standard", "--pool", M_STAR_POOL],
        ["horizon", "--instance", M_STAR, "--horizon", "1", "--cap", "2"],
        ["solve-uncapped", "--instance", str(GOLDEN / "sp_example_reduced.json")],
    ],
)
@pytest.mark.parametrize("mode", ["per-frame", "all-linearizations"])
def test_solver_output_round_trips(argv, mode, tmp_path, capsys):
    out = tmp_path / "s.json"
    assert run(argv + ["--output", str(out)], capsys)[0] == EXIT_OK
    source = argv[1:3]
    if source[0] == "--pool":
        source = ["--pool", source[1]]
    code, stdout, _ = run(["validate", *source, "--schedule", str(out), "--mode", mode], capsys)
    assert code == EXIT_OK and stdout.strip() == "valid"


def test_validate_explicit_frames_and_rejection(tmp_path, capsys):
    sched = tmp_path / "s.json"
    sched.write_text(json.dumps({"assignments": [
        {"donor": 0, "patient": 1, "frame": 2},
        {"donor": 1, "patient": 2, "frame": 1},
    ], "objective": 2}))
    code, stdout, _ = run(["validate", "--instance", M_STAR, "--frames", TWO_FRAMES, "--schedule", str(sched)], capsys)
    assert code == 1 and "invalid" in stdout


def test_gen_command(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"master_size": 200}))
    out = tmp_path / "inst.json"
    code, stdout, _ = run(["gen", "--config", str(cfg), "--seed", "3", "--size", "40", "--output", str(out)], capsys)
    assert code == EXIT_OK and stdout.startswith("clubs=40")
    first = out.read_text()
    run(["gen", "--config", str(cfg), "--seed", "3", "--size", "40", "--output", str(out)], capsys)
    assert out.read_text() == first
    code, _, _ = run(["gen", "--config", str(cfg), "--size", "400"], capsys)
    assert code == EXIT_INPUT


def test_experiment_command(tmp_path, capsys):
    cfg = tmp_path / "exp.json"
    cfg.write_text(json.dumps({"master_size": 200, "pool_sizes": [12], "seeds_per_size": 2}))
    out = tmp_path / "rows.csv"
    code, _, err = run(["experiment", "--config", str(cfg), "--output", str(out)], capsys)
    assert code == EXIT_OK and "rows=2" in err
    lines = out.read_text().splitlines()
    assert lines[0] == ",".join(CSV_HEADER) and len(lines) == 3


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "clubex.cli", "verify-sp", "--sp", SP_EXAMPLE], capture_output=True, text=True
    )
    assert proc.returncode == 0 and proc.stdout.strip() == "objective=22 M=8 k=2 OK"
    proc = subprocess.run([sys.executable, "-m", "clubex.cli", "--bogus"], capture_output=True, text=True)
    assert proc.returncode == 2 and proc.stderr
