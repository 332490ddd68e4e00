"""Deterministic rebalancing scheduler: splits, placement, transcripts."""

import random

import pytest

from cliquesched import check_bound
from cliquesched.constants import merged_constants
from cliquesched.jobs import build_jobs
from cliquesched.model import SchedulingError
from cliquesched.runtime import run_naive
from cliquesched.sched import schedule_deterministic
from cliquesched.sched.deterministic import bucket_machine, split_buckets

C = merged_constants()


def test_split_buckets_invariants_random():
    rng = random.Random(77)
    for _ in range(500):
        count = rng.randrange(1, 60)
        items = [(rng.randrange(0, 20), rng.randrange(0, 20)) for _ in range(count)]
        k = rng.randrange(1, 12)
        buckets = split_buckets(items, k)
        assert 1 <= len(buckets) <= k
        # Consecutive and covering.
        assert buckets[0][0] == 0 and buckets[-1][1] == count
        for (a_lo, a_hi), (b_lo, b_hi) in zip(buckets, buckets[1:]):
            assert a_hi == b_lo
        total_s = sum(s for s, _ in items)
        total_t = sum(t for _, t in items)
        max_s = max(s for s, _ in items)
        max_t = max(t for _, t in items)
        for lo, hi in buckets:
            got_s = sum(s for s, _ in items[lo:hi])
            got_t = sum(t for _, t in items[lo:hi])
            assert got_s * k <= 2 * total_s + 2 * max_s * k
            assert got_t * k <= 2 * total_t + 2 * max_t * k


def test_split_buckets_edges():
    assert split_buckets([], 3) == []
    assert split_buckets([(5, 0)], 1) == [(0, 1)]
    # Exactly the 2S/k threshold does not close a bucket (the cut is strict)...
    assert split_buckets([(100, 0), (0, 100)], 2) == [(0, 2)]
    # ...but anything past it does.
    assert split_buckets([(100, 0)] * 4, 4) == [(0, 3), (3, 4)]


def test_bucket_machine_formula():
    # Five buckets per machine: counts (3, 2) put all five on machine 0.
    assert [bucket_machine(g, 4, C) for g in range(5)] == [0, 0, 0, 0, 0]
    # With five buckets per machine, machine i gets global buckets 5i..5i+4.
    n = 8
    for i in range(n):
        for b in range(5):
            assert bucket_machine(5 * i + b, n, C) == i
    # Clamped to the last machine if the numbering overruns.
    assert bucket_machine(1000, 4, C) == 3


def test_deterministic_matches_naive_outputs():
    for n in (8, 16):
        for seed in (1, 2, 3):
            jobs = build_jobs(
                [{"kind": "histogram", "count": 2},
                 {"kind": "pj", "count": 1},
                 {"kind": "leader", "count": 1}], n, seed)
            base = run_naive(jobs, seed, C)
            res = schedule_deterministic(jobs, seed, C)
            assert res.digest == base.digest
            assert res.annotations["violations"] == 0


def test_deterministic_round_bound():
    jobs = build_jobs(
        [{"kind": "histogram", "count": 2},
         {"kind": "pj", "count": 2},
         {"kind": "leader", "count": 2}], 32, 5)
    res = schedule_deterministic(jobs, 5, C)
    chk = check_bound(res.metrics, "det-small-jobs", C,
                      {"memory_bound": res.metrics.annotations["memory_bound"]})
    assert chk.passed


def test_deterministic_hot_machine():
    # Every job broadcasts from slot 0: the naive placement would put all
    # send load on machine 0, the rebalancer spreads it.
    n = 16
    jobs = build_jobs([{"kind": "broadcast", "count": 4, "hot_slot": 0,
                        "rounds": 3}], n, 8)
    base = run_naive(jobs, 8, C)
    res = schedule_deterministic(jobs, 8, C)
    assert res.digest == base.digest
    chk = check_bound(res.metrics, "det-small-jobs", C,
                      {"memory_bound": res.metrics.annotations["memory_bound"]})
    assert chk.passed


def test_deterministic_rejects_plain_state_jobs():
    jobs = build_jobs([{"kind": "mis", "count": 1}], 8, 1)
    with pytest.raises(SchedulingError):
        schedule_deterministic(jobs, 1, C)
