"""Instrumented example jobs and random-instance builders.

Instance randomness is drawn from streams keyed by ``(seed, instance
domain, job index)`` so a job's inputs depend only on the run seed and its
position, never on which scheduler later executes it.
"""

from __future__ import annotations

from ..model import DOMAIN_INSTANCE, Job, RngStream
from .histogram import HistogramProtocol, bin_count, histogram_oracle, run_histogram_batch
from .leader import BroadcastProtocol, LeaderAggregationProtocol, aggregate_digest
from .mis import MisProtocol, check_mis, pack_adjacency, unpack_adjacency
from .pointer_jumping import PointerJumpingProtocol, pj_oracle

__all__ = [
    "HistogramProtocol", "LeaderAggregationProtocol", "BroadcastProtocol",
    "PointerJumpingProtocol", "MisProtocol",
    "bin_count", "histogram_oracle", "run_histogram_batch",
    "aggregate_digest", "pj_oracle", "check_mis",
    "pack_adjacency", "unpack_adjacency",
    "make_histogram_jobs", "make_leader_jobs", "make_broadcast_jobs",
    "make_pj_jobs", "make_mis_jobs", "build_jobs", "JOB_KINDS",
]


def instance_stream(seed, job_index):
    return RngStream((seed, DOMAIN_INSTANCE, job_index, 0, 0))


def make_histogram_jobs(n, count, seed, start=0):
    jobs = []
    bins = bin_count(n)
    for j in range(start, start + count):
        rng = instance_stream(seed, j)
        inputs = []
        for _ in range(n):
            size = 1 + rng.integers(3)
            inputs.append(tuple(rng.integers(bins) for _ in range(size)))
        jobs.append(Job(HistogramProtocol(), tuple(inputs), {"kind": "histogram"}))
    return jobs


def make_leader_jobs(n, count, seed, start=0):
    jobs = []
    for j in range(start, start + count):
        rng = instance_stream(seed, j)
        inputs = tuple((rng.integers(1 << 16),) for _ in range(n))
        jobs.append(Job(LeaderAggregationProtocol(), inputs, {"kind": "leader"}))
    return jobs


def make_broadcast_jobs(n, count, seed, start=0, rounds=1, hot_slot=0):
    jobs = []
    for j in range(start, start + count):
        rng = instance_stream(seed, j)
        inputs = [(0,)] * n
        inputs[hot_slot] = (rng.integers(1 << 16),)
        jobs.append(Job(BroadcastProtocol(rounds=rounds, hot_slot=hot_slot),
                        tuple(inputs), {"kind": "broadcast"}))
    return jobs


def make_pj_jobs(n, count, seed, start=0, perm_size=None):
    perm_size = n if perm_size is None else perm_size
    jobs = []
    for j in range(start, start + count):
        rng = instance_stream(seed, j)
        rows = [rng.permutation(perm_size) for _ in range(n)]
        query_slot = rng.integers(n)
        point = rng.integers(perm_size)
        inputs = [tuple(row) for row in rows]
        inputs[query_slot] = inputs[query_slot] + (point,)
        meta = {"kind": "pj", "rows": tuple(tuple(r) for r in rows),
                "query_slot": query_slot, "point": point, "perm_size": perm_size}
        jobs.append(Job(PointerJumpingProtocol(perm_size), tuple(inputs), meta))
    return jobs


def make_mis_jobs(n, count, seed, start=0, p=0.2):
    threshold = int(p * (1 << 30))
    jobs = []
    for j in range(start, start + count):
        rng = instance_stream(seed, j)
        nbrs = [[] for _ in range(n)]
        edges = []
        for a in range(n):
            for b in range(a + 1, n):
                if rng.integers(1 << 30) < threshold:
                    nbrs[a].append(b)
                    nbrs[b].append(a)
                    edges.append((a, b))
        delta = max(len(row) for row in nbrs)
        inputs = tuple((delta,) + pack_adjacency(row, n) for row in nbrs)
        meta = {"kind": "mis", "edges": tuple(edges), "p": p, "max_degree": delta}
        jobs.append(Job(MisProtocol(), inputs, meta))
    return jobs


JOB_KINDS = {
    "histogram": make_histogram_jobs,
    "leader": make_leader_jobs,
    "broadcast": make_broadcast_jobs,
    "pj": make_pj_jobs,
    "mis": make_mis_jobs,
}


def build_jobs(specs, n, seed):
    """Expand CLI job specs ({"kind", "count", ...params}) into Job objects."""
    jobs = []
    for spec in specs:
        spec = dict(spec)
        kind = spec.pop("kind")
        count = spec.pop("count", 1)
        if kind not in JOB_KINDS:
            raise ValueError("unknown job kind %r" % kind)
        jobs.extend(JOB_KINDS[kind](n, count, seed, start=len(jobs), **spec))
    return jobs
