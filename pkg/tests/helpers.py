"""Shared builders for the test suite."""

import math

from cliquesched import run_naive
from cliquesched.constants import merged_constants
from cliquesched.jobs import build_jobs
from cliquesched.sched import (
    schedule_delay,
    schedule_delay_doubling,
    schedule_deterministic,
    schedule_shuffle,
)

CONSTANTS = merged_constants()

MEM_MIX = [
    {"kind": "histogram", "count": 2},
    {"kind": "pj", "count": 1},
    {"kind": "leader", "count": 1},
]

FULL_MIX = [
    {"kind": "histogram", "count": 1},
    {"kind": "pj", "count": 1},
    {"kind": "mis", "count": 1, "p": 0.05},
    {"kind": "leader", "count": 1},
]


def mix_jobs(specs, n, seed):
    return build_jobs(specs, n, seed)


def measured_capacity_bound(base):
    return max(1, math.ceil(base.metrics.capacity))


def run_everywhere(jobs, seed, *, include_det=True):
    """Run a job set under every applicable scheduler; return {name: result}."""
    results = {"naive": run_naive(jobs, seed, CONSTANTS)}
    if include_det:
        results["deterministic"] = schedule_deterministic(jobs, seed, CONSTANTS)
    results["shuffle"] = schedule_shuffle(jobs, seed, CONSTANTS)
    cap = measured_capacity_bound(results["naive"])
    results["delay"] = schedule_delay(jobs, seed, CONSTANTS, cap)
    results["delay-doubling"] = schedule_delay_doubling(jobs, seed, CONSTANTS)
    return results
