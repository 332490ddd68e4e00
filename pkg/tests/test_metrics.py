"""Profiles, bounds arithmetic, and the outputs digest."""

from fractions import Fraction

import pytest

from cliquesched.constants import merged_constants
from cliquesched.metrics import (
    JobProfile,
    Metrics,
    bound_rhs,
    check_bound,
    combine_profiles,
    metrics_from_profile,
    outputs_digest,
)

C = merged_constants()


def sample_metrics(rounds, *, n=16, t=4, dilation=10, bandwidth=Fraction(2),
                   capacity=Fraction(3), scheduler="shuffle"):
    return Metrics(
        n=n, t=t, scheduler=scheduler, rounds=rounds, dilation=dilation,
        bandwidth=bandwidth, capacity=capacity, m_r=[1] * dilation,
        messages_total=n * n * 2, annotations={},
    )


def test_combine_profiles_aligns_rounds():
    a = JobProfile(ell=2, standalone_rounds=2, m_r=[4, 6], sent=[1] * 4,
                   recv=[1] * 4, messages=10)
    b = JobProfile(ell=3, standalone_rounds=3, m_r=[2, 2, 2], sent=[2] * 4,
                   recv=[2] * 4, messages=6)
    combined = combine_profiles(4, [a, b])
    assert combined.m_r == [6, 8, 2]
    assert combined.dilation == 3
    assert combined.bandwidth == Fraction(16, 16)
    assert combined.capacity == Fraction(3, 4)


def test_shuffle_bound_formula():
    m = sample_metrics(0)
    # rhs = t + bandwidth + dilation * ln_ceil(n); ln_ceil(16) = 3.
    assert bound_rhs(m, "shuffle", C) == 4 + 2 + 10 * 3


def test_check_bound_passes_then_fails():
    rhs = bound_rhs(sample_metrics(0), "shuffle", C)
    limit = C["C_shuf"] * rhs + C["C_add"]
    good = check_bound(sample_metrics(int(limit)), "shuffle", C)
    assert good.passed
    bad = check_bound(sample_metrics(int(limit) + 1), "shuffle", C)
    assert not bad.passed
    assert bad.ratio == Fraction(int(limit) + 1, rhs)


def test_det_bound_needs_memory_extra():
    m = sample_metrics(50, scheduler="deterministic")
    rhs = bound_rhs(m, "det-small-jobs", C, {"memory_bound": 8})
    assert rhs == m.bandwidth + -(-8 * m.t // m.n) * m.dilation
    with pytest.raises(KeyError):
        bound_rhs(m, "det-small-jobs", C)


def test_message_bounds_use_message_totals():
    m = sample_metrics(10 ** 9, n=16)  # huge round count must not matter
    chk = check_bound(m, "mis-messages", C)
    assert chk.measured == m.messages_total
    assert chk.passed


def test_unknown_bound_rejected():
    with pytest.raises(ValueError):
        bound_rhs(sample_metrics(1), "no-such-bound", C)


def test_outputs_digest_is_order_free_and_value_sensitive():
    a = {(0, 0): (1, 2), (1, 3): (4,)}
    b = {(1, 3): (4,), (0, 0): (1, 2)}
    assert outputs_digest(a) == outputs_digest(b)
    c = {(0, 0): (1, 2), (1, 3): (5,)}
    assert outputs_digest(a) != outputs_digest(c)


def test_metrics_json_round_trip_fields():
    m = sample_metrics(7)
    d = m.to_json_dict()
    assert d["rounds"] == 7
    assert Fraction(d["bandwidth_num"], d["bandwidth_den"]) == m.bandwidth
    assert Fraction(d["capacity_num"], d["capacity_den"]) == m.capacity


def test_metrics_from_profile_carries_quantities():
    p = JobProfile(ell=2, standalone_rounds=4, m_r=[3, 1], sent=[1, 1, 1, 1],
                   recv=[2, 0, 1, 1], messages=4)
    combined = combine_profiles(4, [p])
    m = metrics_from_profile(combined, "naive", 4)
    assert m.rounds == 4
    assert m.dilation == 2
    assert m.m_r == [3, 1]
