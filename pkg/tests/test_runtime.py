"""The standalone driver: charging, instrumentation, reproducibility."""

import random

from cliquesched import run_naive
from cliquesched.constants import merged_constants
from cliquesched.jobs import build_jobs, make_histogram_jobs, make_pj_jobs
from cliquesched.runtime import measure_profile

C = merged_constants()


def test_naive_run_is_reproducible():
    jobs = build_jobs(
        [{"kind": "histogram", "count": 1}, {"kind": "pj", "count": 1}], 8, 3)
    a = run_naive(jobs, 3, C)
    b = run_naive(jobs, 3, C)
    assert a.digest == b.digest
    assert a.metrics.rounds == b.metrics.rounds
    assert a.metrics.m_r == b.metrics.m_r


def test_instrumentation_does_not_change_results():
    jobs = build_jobs(
        [{"kind": "mis", "count": 1, "p": 0.2}, {"kind": "leader", "count": 1}], 16, 9)
    fast = run_naive(jobs, 9, C, instrument=False)
    slow = run_naive(jobs, 9, C, instrument=True)
    assert fast.digest == slow.digest
    assert fast.metrics.rounds == slow.metrics.rounds


def test_plain_job_charges_its_real_rounds():
    jobs = make_histogram_jobs(9, 3, 4)
    res = run_naive(jobs, 4, C)
    assert res.metrics.rounds == 2 * 3
    assert res.annotations["violations"] == 0


def test_routed_job_charging_follows_load():
    rng = random.Random(12)
    for _ in range(5):
        n = rng.choice([4, 8, 16])
        jobs = make_pj_jobs(n, 1, rng.randrange(1 << 16))
        res = run_naive(jobs, 1, C)
        # Each protocol round charges max(1, ceil(load / n)) rounds.
        floor = res.metrics.dilation
        assert res.metrics.rounds >= floor
        total_load = res.metrics.messages_total
        assert res.metrics.rounds <= floor + -(-total_load // n) + 1


def test_profile_matches_run():
    jobs = build_jobs(
        [{"kind": "histogram", "count": 2}, {"kind": "leader", "count": 1}], 8, 6)
    profile = measure_profile(jobs, 6, C)
    res = run_naive(jobs, 6, C)
    assert profile.m_r == res.metrics.m_r
    assert profile.capacity == res.metrics.capacity
    assert profile.dilation == res.metrics.dilation


def test_two_phase_fidelity_digest_matches():
    jobs = build_jobs([{"kind": "leader", "count": 1}], 8, 2)
    charged = run_naive(jobs, 2, C)
    physical = run_naive(jobs, 2, C, fidelity="two-phase")
    assert charged.digest == physical.digest
    assert physical.annotations["real_rounds"] >= charged.annotations["real_rounds"]
