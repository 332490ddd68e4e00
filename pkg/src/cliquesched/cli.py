"""Command-line harness: run a job set under a scheduler, or benchmark
amortized per-job cost at growing job counts.

``run`` reads a JSON config, executes, and writes a JSON report with the
metrics, the scheduler's round-bound check, and the outputs digest.  Exit
codes: 0 success, 2 config or model violation, 3 routing overflow, 4 a bound
failed under --enforce-bounds.

``bench`` sweeps job counts for one family and writes a CSV of amortized
cost per job (and the ratio to the family's round bound).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys

from .cluster import Cluster
from .constants import DEFAULT_CONSTANTS, log2_ceil, merged_constants
from .jobs import JOB_KINDS, build_jobs, run_histogram_batch
from .metrics import SCHEDULER_BOUNDS, check_bound, outputs_digest
from .model import (
    Blob,
    ConfigError,
    IoViolation,
    MemoryEfficientProtocol,
    ProtocolError,
    RoutingOverflow,
    SchedulingError,
)
from .runtime import run_naive
from .sched import (
    schedule_delay,
    schedule_delay_doubling,
    schedule_deterministic,
    schedule_shuffle,
)

EXIT_CONFIG = 2
EXIT_OVERFLOW = 3
EXIT_BOUND = 4

SCHEDULERS = ("naive", "deterministic", "shuffle", "delay", "delay-doubling")


def load_config(path):
    with open(path) as fh:
        cfg = json.load(fh)
    for key in ("n", "seed", "scheduler", "jobs"):
        if key not in cfg:
            raise ConfigError("config is missing %r" % key)
    if cfg["scheduler"] not in SCHEDULERS:
        raise ConfigError("unknown scheduler %r (choose from %s)"
                          % (cfg["scheduler"], ", ".join(SCHEDULERS)))
    for spec in cfg["jobs"]:
        if spec.get("kind") not in JOB_KINDS:
            raise ConfigError("unknown job kind %r (choose from %s)"
                              % (spec.get("kind"), ", ".join(sorted(JOB_KINDS))))
    return cfg


def execute(cfg, *, trace=None):
    """Build the job set and run it under the configured scheduler."""
    constants = merged_constants(cfg.get("constants", {}))
    n, seed = cfg["n"], cfg["seed"]
    jobs = build_jobs(cfg["jobs"], n, seed)
    name = cfg["scheduler"]
    if name == "naive":
        return jobs, constants, run_naive(
            jobs, seed, constants,
            fidelity=cfg.get("fidelity", "charged"), trace=trace)
    if name == "deterministic":
        return jobs, constants, schedule_deterministic(jobs, seed, constants, trace=trace)
    if name == "shuffle":
        return jobs, constants, schedule_shuffle(jobs, seed, constants, trace=trace)
    if name == "delay-doubling":
        return jobs, constants, schedule_delay_doubling(jobs, seed, constants, trace=trace)
    cap = cfg.get("capacity_bound")
    if cap is None:
        profile = run_naive(jobs, seed, constants, instrument=False).metrics
        cap = max(1, math.ceil(profile.capacity))
    return jobs, constants, schedule_delay(jobs, seed, constants, cap, trace=trace)


def bound_report(jobs, metrics, constants):
    """The scheduler's round-bound check for this run, if one applies."""
    bound = SCHEDULER_BOUNDS.get(metrics.scheduler)
    if bound is None:
        return []
    extras = {}
    if bound == "det-small-jobs":
        extras["memory_bound"] = max(
            job.protocol.memory_bound(metrics.n) for job in jobs
            if isinstance(job.protocol, MemoryEfficientProtocol))
    return [check_bound(metrics, bound, constants, extras).to_json_dict()]


def payload_field(payload):
    """Stable short form of a payload for the trace CSV."""
    if isinstance(payload, Blob):
        blob = json.dumps(payload.data, separators=(",", ":"), default=str)
        return "blob%d:%s" % (payload.words, hashlib.sha256(blob.encode()).hexdigest()[:12])
    return str(payload)


def write_trace(path, records):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["round", "src_machine", "dst_machine",
                         "job", "src_slot", "dst_slot", "payload"])
        for rnd, src_m, dst_m, job, src_slot, dst_slot, payload in records:
            writer.writerow([rnd, src_m, dst_m, job, src_slot, dst_slot,
                             payload_field(payload)])


def cmd_run(args):
    cfg = load_config(args.config)
    trace = [] if args.trace else None
    jobs, constants, result = execute(cfg, trace=trace)
    bounds = bound_report(jobs, result.metrics, constants)
    report = {
        "config": {k: cfg[k] for k in ("n", "seed", "scheduler", "jobs")},
        "metrics": result.metrics.to_json_dict(),
        "bounds": bounds,
        "outputs_digest": result.digest,
        "annotations": result.annotations,
    }
    if args.emit_outputs:
        report["outputs"] = [
            {"job": j, "slot": s, "words": list(words)}
            for (j, s), words in sorted(result.outputs.items())
        ]
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    if args.trace:
        write_trace(args.trace, trace)
    if args.enforce_bounds and any(not b["passed"] for b in bounds):
        print("bound check failed", file=sys.stderr)
        return EXIT_BOUND
    return 0


def bench_histogram(n, t_values, seed, constants):
    """Amortized cost of t histogram jobs run as one batch.

    Groups of ``n // B`` instances share the clique, so a batch of t jobs
    takes ``2 * ceil(t / g)`` rounds: amortized cost per job drops below one
    round once t exceeds 2g.  The ratio column compares against the
    standalone cost of 2 rounds per job.
    """
    rows = []
    for t in t_values:
        jobs = build_jobs([{"kind": "histogram", "count": t}], n, seed)
        cluster = Cluster(n, constants, seed=seed)
        results = run_histogram_batch(cluster, [job.inputs for job in jobs])
        if len(results) != t:
            raise ProtocolError("batch returned %d results for %d jobs" % (len(results), t))
        rounds = cluster.ledger.charged_rounds
        rows.append((t, rounds, rounds, t, rounds / (2.0 * t)))
    return rows


def bench_mis(n, t_values, seed, constants, p):
    """Amortized cost of t graph-independent-set jobs under the shuffle
    scheduler, with the ratio to the amortized round bound."""
    rows = []
    for t in t_values:
        jobs = build_jobs([{"kind": "mis", "count": t, "p": p}], n, seed)
        result = schedule_shuffle(jobs, seed, constants)
        delta = max(2, max(job.meta["max_degree"] for job in jobs))
        chk = check_bound(result.metrics, "mis-amortized", constants,
                          {"max_degree": delta})
        rounds = result.metrics.rounds
        rows.append((t, rounds, rounds, t, float(chk.ratio)))
    return rows


def cmd_bench(args):
    constants = merged_constants({})
    t_values = [int(v) for v in args.t.split(",") if v]
    if not t_values or any(v < 1 for v in t_values):
        raise ConfigError("--t needs a comma-separated list of positive counts")
    if args.family == "histogram":
        rows = bench_histogram(args.n, t_values, args.seed, constants)
    else:
        rows = bench_mis(args.n, t_values, args.seed, constants, args.p)
    out = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        writer = csv.writer(out)
        writer.writerow(["t", "rounds", "amortized_num", "amortized_den", "bound_ratio"])
        for row in rows:
            writer.writerow(["%s" % row[0], "%s" % row[1], "%s" % row[2],
                             "%s" % row[3], "%.6f" % row[4]])
    finally:
        if args.output:
            out.close()
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cliquesched",
        description="simulate scheduled job sets on an all-to-all clique")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a config and report metrics")
    p_run.add_argument("--config", required=True, help="JSON config path")
    p_run.add_argument("--output", help="write the JSON report here instead of stdout")
    p_run.add_argument("--trace", help="write a per-message CSV trace here")
    p_run.add_argument("--emit-outputs", action="store_true",
                       help="include every node output in the report")
    p_run.add_argument("--enforce-bounds", action="store_true",
                       help="exit 4 if the scheduler round bound fails")

    p_bench = sub.add_parser("bench", help="sweep job counts, report amortized cost")
    p_bench.add_argument("--family", choices=("histogram", "mis"), required=True)
    p_bench.add_argument("--n", type=int, default=64)
    p_bench.add_argument("--t", default="1,2,4,8,16,32",
                         help="comma-separated job counts")
    p_bench.add_argument("--seed", type=int, default=1)
    p_bench.add_argument("--p", type=float, default=0.2,
                         help="edge probability for the mis family")
    p_bench.add_argument("--output", help="CSV path (default stdout)")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        return cmd_bench(args)
    except RoutingOverflow as exc:
        print("routing overflow: %s" % exc, file=sys.stderr)
        return EXIT_OVERFLOW
    except (ConfigError, ProtocolError, SchedulingError, IoViolation,
            OSError, json.JSONDecodeError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
