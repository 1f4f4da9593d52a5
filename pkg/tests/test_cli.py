import csv
import json
import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from exoflex import chain
from exoflex.cli import METRICS_COLUMNS, SWEEP_COLUMNS, TRACE_COLUMNS, main

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"


def write(tmp_path, doc, name="scenario.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
    return str(p)


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_trace_schema():
    assert TRACE_COLUMNS[:4] == ["tick", "t", "q1", "q2"]
    assert len(TRACE_COLUMNS) == len(set(TRACE_COLUMNS)) == 2 + 5 * 9 + 18 + 4 + 12 + 9 + 3
    assert METRICS_COLUMNS == ["channel", "MAV", "MAD", "max", "mode", "scenario"]


def test_run_happy_path(tmp_path, capsys):
    out = tmp_path / "results"
    code = main(["run", "--scenario", str(FIXTURES / "square.json"), "--mode", "bas-fcm", "--seed", "7", "--out", str(out)])
    assert code == 0
    trace = read_rows(out / "trace.csv")
    assert trace[0] == TRACE_COLUMNS
    assert len(trace) == 1 + 48
    metrics = read_rows(out / "metrics.csv")
    assert metrics[0] == METRICS_COLUMNS
    assert {r[4] for r in metrics[1:]} == {"bas-fcm"}
    assert [r[0] for r in metrics[1:8]] == ["UA.Fy", "UA.Fz", "FA.Fy", "FA.Fz", "HA.Tx", "HA.Fy", "HA.Fz"]
    assert "square" in capsys.readouterr().out


def test_run_all_modes_share_seed(tmp_path):
    out = tmp_path / "all"
    assert main(["run", "--scenario", str(FIXTURES / "golden.json"), "--mode", "all", "--out", str(out)]) == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == ["metrics.csv", "trace-bas-fcm.csv", "trace-bas.csv", "trace-fcm.csv", "trace-ff.csv"]
    metrics = read_rows(out / "metrics.csv")
    assert [r[4] for r in metrics[1::13]] == ["bas", "bas-fcm", "fcm", "ff"]
    # the bas-fcm trace of the fan-out equals the single-mode golden trace
    assert (out / "trace-bas-fcm.csv").read_bytes() == (GOLDEN / "trace.csv").read_bytes()


def test_parallel_jobs_match_serial(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["run", "--scenario", str(FIXTURES / "golden.json"), "--mode", "ff,bas"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b), "--jobs", "2"]) == 0
    for name in ("metrics.csv", "trace-ff.csv", "trace-bas.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_golden_files_bit_exact(tmp_path):
    out = tmp_path / "golden"
    assert main(["run", "--scenario", str(FIXTURES / "golden.json"), "--out", str(out)]) == 0
    for name in ("trace.csv", "metrics.csv"):
        assert (out / name).read_bytes() == (GOLDEN / name).read_bytes(), name


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("EXOFLEX_OUT", str(tmp_path / "env"))
    assert main(["run", "--scenario", str(FIXTURES / "golden.json"), "--mode", "ff"]) == 0
    assert (tmp_path / "env" / "trace.csv").exists()


@pytest.mark.parametrize(
    "doc, path",
    [
        ({"schema": 2}, "schema"),
        ({"schema": 1, "colour": "red"}, "colour"),
        ({"schema": 1, "intent": {"type": "joint", "joints": ["EL2"], "speed": -1}}, "intent.speed"),
        ({"schema": 1, "intent": {"type": "joint", "joints": ["EL2"], "speed": "fast"}}, "intent.speed"),
        ({"schema": 1, "intent": {"type": "joint", "joints": ["XX"], "speed": 1}}, "intent"),
        ({"schema": 1, "interfaces": {"UA": {"stiffness": [1, 2]}}}, "interfaces.UA.stiffness"),
        ({"schema": 1, "mode": "vmc"}, "mode"),
        ({"schema": 1, "controller": {"fcm": {"lambda_e": 0}}}, "controller.fcm.lambda_e"),
        ({"schema": 1, "duration": 0.3}, "duration"),
        ({"schema": 1, "friction": {"f_c": [1, 2, 3]}}, "friction.f_c"),
    ],
)
def test_invalid_scenarios_exit_2_with_path(tmp_path, capsys, doc, path):
    assert main(["run", "--scenario", write(tmp_path, doc), "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert f"{path}:" in err, err
    assert not (tmp_path / "o").exists()


def test_unreadable_files_exit_2(tmp_path, capsys):
    assert main(["run", "--scenario", str(tmp_path / "missing.json")]) == 2
    assert main(["run", "--scenario", write(tmp_path, "{not json")]) == 2
    assert "error" in capsys.readouterr().err


def test_bad_usage_exits_2():
    assert main(["run"]) == 2
    assert main(["frobnicate"]) == 2


def test_abort_exits_3(tmp_path, capsys):
    assert main(["run", "--scenario", str(FIXTURES / "abort.json"), "--out", str(tmp_path)]) == 3
    err = capsys.readouterr().err
    assert "aborted at tick" in err


def test_console_script_exit_codes(tmp_path):
    exe = shutil.which("exoflex")
    cmd = [exe] if exe else [sys.executable, "-m", "exoflex.cli"]
    ok = subprocess.run(cmd + ["check", "--list"], capture_output=True, text=True)
    assert ok.returncode == 0
    bad = subprocess.run(cmd + ["run", "--scenario", write(tmp_path, {"schema": 3})], capture_output=True, text=True)
    assert bad.returncode == 2 and "schema" in bad.stderr
    assert "Traceback" not in bad.stderr


def test_check_list(capsys):
    assert main(["check", "--list"]) == 0
    out = capsys.readouterr().out.split("\n")
    assert [line.split()[0] for line in out if line] == ["jacobian", "gains", "energy", "determinism"]


def test_check_passes_on_clean_build(capsys):
    assert main(["check", "--suite", "jacobian", "--suite", "gains"]) == 0
    assert "2/2 suites passed" in capsys.readouterr().out


def test_injected_jacobian_bug_is_named(monkeypatch, capsys):
    good = chain.jacobian

    def broken(model, q, first, point):
        J = good(model, q, first, point).copy()
        J[:, -1] *= 1.01
        return J

    monkeypatch.setattr(chain, "jacobian", broken)
    assert main(["check", "--suite", "jacobian", "--suite", "gains"]) == 1
    out = capsys.readouterr().out
    assert "FAIL jacobian" in out and "PASS gains" in out


def test_check_unknown_suite():
    assert main(["check", "--suite", "nope"]) == 2


def test_sweep_single_row(tmp_path):
    out = tmp_path / "sweep"
    assert main(["sweep", "--movements", "el-flex", "--speeds", "1.0", "--modes", "ff", "--out", str(out)]) == 0
    rows = read_rows(out / "sweep.csv")
    assert rows[0] == SWEEP_COLUMNS
    assert len(rows) == 2
    assert rows[1][:3] == ["el-flex", "1", "ff"]
    assert float(rows[1][4]) > 0


def test_sweep_compound_sums_channels(tmp_path):
    out = tmp_path / "sweep"
    assert main(["sweep", "--movements", "lift", "--speeds", "0.5", "--modes", "ff,bas", "--out", str(out)]) == 0
    rows = read_rows(out / "sweep.csv")[1:]
    assert len(rows) == 2
    assert all(r[3].count("+") == 1 and r[5] == "2" for r in rows)
    assert {r[3] for r in rows} <= {"FA.Tz+UA.Tz", "UA.Tz+FA.Tz"}


@pytest.mark.parametrize(
    "args", [["--movements", "juggle"], ["--speeds", "0,1"], ["--speeds", "one"], ["--modes", "vmc"]]
)
def test_sweep_rejects_bad_grid(tmp_path, args):
    assert main(["sweep", "--out", str(tmp_path)] + args) == 2


def test_fmt_round_trips(rng):
    from exoflex.cli import fmt

    x = rng.standard_normal(100) * 1e3
    assert np.array_equal([float(fmt(v)) for v in x], x)
