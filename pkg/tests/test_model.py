"""Core model types: payload accounting, rng streams, round budgets."""

import random

import pytest

from cliquesched import Blob, Cluster, Job, Output, payload_words
from cliquesched.constants import merged_constants
from cliquesched.jobs import HistogramProtocol
from cliquesched.model import (
    ConfigError,
    ModelViolation,
    ProtocolError,
    RngStream,
    protocol_rng,
)

C = merged_constants()


def test_word_payloads_count_one():
    assert payload_words(0) == 1
    assert payload_words(12345) == 1


def test_blob_counts_declared_width():
    assert payload_words(Blob(7, ("tag", 1, 2))) == 7
    with pytest.raises(ProtocolError):
        Blob(0, ("empty",))
    with pytest.raises(ProtocolError):
        payload_words("not a payload")


def test_output_rejects_non_words():
    with pytest.raises(ProtocolError):
        Output(("x",))
    assert Output((1, 2)).words == (1, 2)


def test_rng_stream_is_keyed_and_reproducible():
    a = RngStream((7, 0, 2, 3, 4))
    b = RngStream((7, 0, 2, 3, 4))
    assert [a.integers(1000) for _ in range(8)] == [b.integers(1000) for _ in range(8)]

    # Any key component change gives an unrelated stream.
    base = tuple(RngStream((7, 0, 2, 3, 4)).integers(1 << 30) for _ in range(4))
    for pos in range(5):
        key = [7, 0, 2, 3, 4]
        key[pos] += 1
        other = RngStream(tuple(key))
        assert tuple(other.integers(1 << 30) for _ in range(4)) != base


def test_rng_permutation_and_bits():
    rng = random.Random(11)
    for _ in range(50):
        k = rng.randrange(1, 40)
        stream = RngStream((rng.randrange(1 << 20), 9, 0, 0, 0))
        perm = stream.permutation(k)
        assert sorted(perm) == list(range(k))
        nbits = rng.randrange(0, 130)
        value = stream.bits(nbits)
        assert 0 <= value < (1 << max(1, nbits))
        if nbits == 0:
            assert value == 0


def test_protocol_rng_matches_explicit_key():
    assert protocol_rng(3, 1, 2, 5).key == (3, 0, 1, 2, 5)


def test_commit_round_budget_enforced():
    cluster = Cluster(4, C)
    inboxes = cluster.commit_round([(0, 1, 10), (1, 1, 20), (2, 2, 30)])
    assert inboxes[1] == [(0, 10), (1, 20)]
    assert cluster.ledger.charged_rounds == 1
    with pytest.raises(ModelViolation):
        cluster.commit_round([(0, 1, 10), (0, 1, 11)])
    with pytest.raises(ModelViolation):
        cluster.commit_round([(0, 9, 10)])
    with pytest.raises(ModelViolation):
        cluster.commit_round([(0, 1, Blob(1, ("no blobs in plain rounds",)))])
    assert cluster.ledger.violation_count == 3


def test_self_messages_count():
    cluster = Cluster(2, C)
    inboxes = cluster.commit_round([(0, 0, 5), (1, 0, 6)])
    assert inboxes[0] == [(0, 5), (1, 6)]
    with pytest.raises(ModelViolation):
        cluster.commit_round([(0, 0, 5), (0, 0, 6)])


def test_job_validate_io():
    proto = HistogramProtocol()
    n = 9
    good = Job(proto, tuple((0,) for _ in range(n)), {})
    good.validate_io()
    fat = tuple(range(proto.max_input_words(n) + 1))
    bad = Job(proto, (fat,) + tuple((0,) for _ in range(n - 1)), {})
    with pytest.raises(ConfigError):
        bad.validate_io()
