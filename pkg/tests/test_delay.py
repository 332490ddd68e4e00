"""Random-delay scheduler: budgets, doubling search, waste accounting."""

import math

import pytest

from cliquesched import check_bound, run_naive
from cliquesched.constants import log2_ceil, merged_constants
from cliquesched.jobs import build_jobs
from cliquesched.model import RoutingOverflow, SchedulingError
from cliquesched.sched import schedule_delay, schedule_delay_doubling
from cliquesched.sched.delay import phase_budget

C = merged_constants()

MIX = [
    {"kind": "histogram", "count": 2},
    {"kind": "pj", "count": 1},
    {"kind": "leader", "count": 1},
]


def capacity_of(jobs, seed):
    return max(1, math.ceil(run_naive(jobs, seed, C, instrument=False).metrics.capacity))


def test_delay_matches_naive_outputs():
    for n in (8, 16):
        for seed in (1, 2):
            jobs = build_jobs(MIX, n, seed)
            base = run_naive(jobs, seed, C)
            cap = capacity_of(jobs, seed)
            res = schedule_delay(jobs, seed, C, cap)
            assert res.digest == base.digest
            assert res.annotations["violations"] == 0


def test_delay_known_capacity_bound():
    jobs = build_jobs(MIX, 16, 3)
    res = schedule_delay(jobs, 3, C, capacity_of(jobs, 3))
    chk = check_bound(res.metrics, "delay-known", C)
    assert chk.passed


def test_delay_budget_regimes():
    # Degenerate window: everything at delay zero under the safe budget.
    assert phase_budget(16, 3, 1, C) == C["c_del"] * 16 * 3
    # Wide window: the budget scales with capacity / window.
    assert phase_budget(16, 100, 25, C) == -(-C["c_del"] * 100 * 16 // 25)


def test_delay_rejects_bad_capacity():
    jobs = build_jobs(MIX, 8, 1)
    with pytest.raises(SchedulingError):
        schedule_delay(jobs, 1, C, 0)


def test_delay_overflow_carries_charged_rounds():
    # Enough aggregation jobs pile more onto machine 0 than the degenerate
    # low-capacity budget allows, so the guess must fail.
    jobs = build_jobs([{"kind": "leader", "count": 64}], 8, 2)
    with pytest.raises(RoutingOverflow) as info:
        schedule_delay(jobs, 2, C, 1)
    assert info.value.charged_rounds >= 1
    assert info.value.load > info.value.bound


def test_doubling_matches_and_tracks_attempts():
    for seed in (1, 2, 3):
        jobs = build_jobs(MIX, 16, seed)
        base = run_naive(jobs, seed, C)
        res = schedule_delay_doubling(jobs, seed, C)
        assert res.digest == base.digest
        cap = capacity_of(jobs, seed)
        assert res.annotations["attempts"] <= log2_ceil(max(1, cap)) + 1
        chk = check_bound(res.metrics, "delay-doubling", C)
        assert chk.passed


def test_doubling_adds_wasted_rounds():
    jobs = build_jobs([{"kind": "leader", "count": 16}], 16, 4)
    res = schedule_delay_doubling(jobs, 4, C)
    assert res.metrics.rounds >= res.annotations["wasted_rounds"]
    assert res.metrics.scheduler == "delay-doubling"
    assert res.annotations["final_guess"] >= 1
