"""The command-line harness: reports, traces, benches, exit codes."""

import csv
import json

from cliquesched.cli import main


def write_config(tmp_path, **overrides):
    cfg = {
        "n": 16,
        "seed": 5,
        "scheduler": "shuffle",
        "jobs": [{"kind": "histogram", "count": 2}, {"kind": "leader", "count": 1}],
    }
    cfg.update(overrides)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


def test_run_reports_metrics_and_bounds(tmp_path, capsys):
    cfg = write_config(tmp_path)
    out = tmp_path / "report.json"
    assert main(["run", "--config", str(cfg), "--output", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["metrics"]["scheduler"] == "shuffle"
    assert report["metrics"]["rounds"] > 0
    assert report["bounds"] and all(b["passed"] for b in report["bounds"])
    assert len(report["outputs_digest"]) == 64


def test_run_digest_agrees_across_schedulers(tmp_path):
    digests = {}
    for scheduler in ("naive", "deterministic", "shuffle", "delay", "delay-doubling"):
        cfg = write_config(tmp_path, scheduler=scheduler)
        out = tmp_path / ("report-%s.json" % scheduler)
        assert main(["run", "--config", str(cfg), "--output", str(out)]) == 0
        digests[scheduler] = json.loads(out.read_text())["outputs_digest"]
    assert len(set(digests.values())) == 1


def test_run_emits_outputs_and_trace(tmp_path):
    cfg = write_config(tmp_path, scheduler="naive")
    out = tmp_path / "report.json"
    trace = tmp_path / "trace.csv"
    rc = main(["run", "--config", str(cfg), "--output", str(out),
               "--trace", str(trace), "--emit-outputs"])
    assert rc == 0
    report = json.loads(out.read_text())
    assert report["outputs"], "outputs requested but missing"
    with open(trace) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["round", "src_machine", "dst_machine",
                       "job", "src_slot", "dst_slot", "payload"]
    assert len(rows) > 1


def test_bad_config_exits_two(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 8, "seed": 1, "scheduler": "nope", "jobs": []}))
    assert main(["run", "--config", str(cfg)]) == 2
    cfg.write_text("{not json")
    assert main(["run", "--config", str(cfg)]) == 2
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == 2


def test_model_violation_exits_two(tmp_path):
    cfg = write_config(tmp_path, scheduler="deterministic",
                       jobs=[{"kind": "mis", "count": 1}])
    assert main(["run", "--config", str(cfg)]) == 2


def test_routing_overflow_exits_three(tmp_path):
    cfg = write_config(tmp_path, n=8, scheduler="delay",
                       jobs=[{"kind": "leader", "count": 64}],
                       capacity_bound=1)
    assert main(["run", "--config", str(cfg)]) == 3


def test_enforce_bounds_exits_four(tmp_path):
    # Zeroing the scheduler constant makes any real run exceed its bound.
    cfg = write_config(tmp_path, constants={"C_shuf": 0, "C_add": 0})
    assert main(["run", "--config", str(cfg), "--enforce-bounds"]) == 4


def test_bench_histogram_csv(tmp_path):
    out = tmp_path / "bench.csv"
    rc = main(["bench", "--family", "histogram", "--n", "64",
               "--t", "1,8,64", "--seed", "1", "--output", str(out)])
    assert rc == 0
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert [r["t"] for r in rows] == ["1", "8", "64"]
    last = rows[-1]
    amortized = int(last["amortized_num"]) / int(last["amortized_den"])
    assert amortized < 1.0


def test_bench_rejects_bad_counts():
    assert main(["bench", "--family", "histogram", "--t", "0,4"]) == 2
