import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from dronesentry import simkit, telemetry
from dronesentry.cli import main

# frozen for the seeded 5-log corpus built by the fixture
GOLDEN_RULE_COUNT = 29


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    train = root / "train"
    for seed in range(1, 6):
        assert main(["simulate", "--mission", "random", "--seed", str(seed),
                     "--out", str(train), "--name", f"t{seed}"]) == 0
    assert main(["simulate", "--mission", "base", "--seed", "50",
                 "--out", str(root / "runs"), "--name", "clean"]) == 0
    assert main(["simulate", "--mission", "base", "--seed", "51",
                 "--out", str(root / "runs"), "--name", "rollstuck",
                 "--fault",
                 "sensor_stuck:feature=roll,value=3.14159265,start=0,end=999999999",
                 ]) == 0
    assert main(["simulate", "--mission", "base", "--seed", "52",
                 "--out", str(root / "runs"), "--name", "crash",
                 "--fault", "engine_cutoff:at=45000"]) == 0
    assert main(["mine", "--logs", str(train),
                 "--out", str(root / "rules.json")]) == 0
    assert main(["fit", "--logs", str(train), "--seed", "7",
                 "--out", str(root / "bundle.json")]) == 0
    return root


def test_simulate_outputs(workspace):
    log = telemetry.load_log(workspace / "runs" / "clean.csv")
    assert len(log.records) > 100
    assert log.meta is not None
    labels = simkit.parse_labels(
        (workspace / "runs" / "clean.labels.csv").read_text())
    assert len(labels) == len(log.records)
    assert not any(labels)


def test_simulate_fault_grammar(workspace):
    log = telemetry.load_log(workspace / "runs" / "rollstuck.csv")
    assert all(r.roll == 3.14159265 for r in log.records)
    labels = simkit.parse_labels(
        (workspace / "runs" / "rollstuck.labels.csv").read_text())
    assert all(labels)


def test_mine_golden_rule_count(workspace):
    doc = json.loads((workspace / "rules.json").read_text())
    assert len(doc["rules"]) == GOLDEN_RULE_COUNT
    assert doc["latency_rule"] == {"max_latency_ms": 2000}
    assert doc["holding_threshold"] == 0.99


def test_mine_single_log_still_works(workspace, tmp_path):
    assert main(["mine", "--logs", str(workspace / "train" / "t1.csv"),
                 "--out", str(tmp_path / "single.json")]) == 0
    doc = json.loads((tmp_path / "single.json").read_text())
    assert len(doc["rules"]) > 0


def test_mine_empty_directory_fails(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert main(["mine", "--logs", str(empty),
                 "--out", str(tmp_path / "r.json")]) == 2


def test_fit_is_byte_identical_across_reruns(workspace, tmp_path):
    again = tmp_path / "bundle2.json"
    assert main(["fit", "--logs", str(workspace / "train"), "--seed", "7",
                 "--out", str(again)]) == 0
    assert again.read_bytes() == (workspace / "bundle.json").read_bytes()


def test_fit_bad_nu_exits_2(workspace, tmp_path):
    assert main(["fit", "--logs", str(workspace / "train"),
                 "--set", "detect.ocsvm_nu=1.5",
                 "--out", str(tmp_path / "b.json")]) == 2


def test_detect_clean_exit_zero(workspace, capsys):
    code = main(["detect", "--log", str(workspace / "runs" / "clean.csv"),
                 "--rules", str(workspace / "rules.json"),
                 "--bundle", str(workspace / "bundle.json"),
                 "--labels", str(workspace / "runs" / "clean.labels.csv")])
    out = capsys.readouterr().out
    assert code == 0
    assert "false positives" in out


def test_detect_stuck_roll_exit_one(workspace, tmp_path, capsys):
    verdicts = tmp_path / "verdicts.csv"
    code = main(["detect", "--log", str(workspace / "runs" / "rollstuck.csv"),
                 "--rules", str(workspace / "rules.json"),
                 "--bundle", str(workspace / "bundle.json"),
                 "--labels", str(workspace / "runs" / "rollstuck.labels.csv"),
                 "--out", str(verdicts)])
    out = capsys.readouterr().out
    assert code == 1
    assert "recall: 100.00%" in out
    lines = verdicts.read_text().splitlines()
    assert lines[0] == "timestamp_ms,final,n_rule_violations,majority,votes"
    assert all(",ANOMALY," in ln for ln in lines[1:])


def test_detect_missing_bundle_exit_two(workspace):
    assert main(["detect", "--log", str(workspace / "runs" / "clean.csv"),
                 "--rules", str(workspace / "rules.json"),
                 "--bundle", str(workspace / "nope.json")]) == 2


def _stream(workspace, log_name, extra_rows=()):
    log_path = workspace / "runs" / f"{log_name}.csv"
    meta = telemetry.load_log(log_path).meta
    mission = workspace / f"{log_name}_meta.json"
    mission.write_text(meta.to_json())
    rows = [
        ln for ln in log_path.read_text().splitlines()
        if ln and not ln.startswith("#")
    ]
    # drop the trailing command rows that follow the '# commands' marker
    rows = [ln for ln in rows if ln.count(",") == 13]
    rows = list(rows) + list(extra_rows)
    proc = subprocess.run(
        [sys.executable, "-m", "dronesentry.cli", "stream",
         "--rules", str(workspace / "rules.json"),
         "--bundle", str(workspace / "bundle.json"),
         "--mission", str(mission)],
        input="\n".join(rows) + "\n",
        capture_output=True, text=True, timeout=600,
    )
    return proc


def test_stream_crash_emits_alerts(workspace):
    proc = _stream(workspace, "crash")
    assert proc.returncode == 1
    assert "ALERT" in proc.stdout
    assert "final=ANOMALY" in proc.stdout


def test_stream_clean_no_alerts_and_resilient(workspace):
    proc = _stream(workspace, "clean", extra_rows=["garbage,row", ""])
    assert proc.returncode == 0
    assert "ALERT" not in proc.stdout
    assert "skipping line" in proc.stderr
    assert proc.stdout.count("ts=") >= 300


def test_eval_and_bench_reports(workspace, tmp_path, capsys):
    out = tmp_path / "bench"
    code = main(["bench", "--rules", str(workspace / "rules.json"),
                 "--bundle", str(workspace / "bundle.json"),
                 "--points", "25", "--out", str(out)])
    capsys.readouterr()
    assert code == 0
    assert (out / "timings.csv").exists()
    assert (out / "timings.json").exists()
    assert (out / "timing_boxplot.png").stat().st_size > 1000
    doc = json.loads((out / "timings.json").read_text())
    assert "pipeline_with_optics" in doc


def test_usage_error_exit_two():
    with pytest.raises(SystemExit) as excinfo:
        main(["detect"])  # missing required arguments
    assert excinfo.value.code == 2
