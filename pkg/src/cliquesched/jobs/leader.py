"""Stress jobs with a deliberately hot machine.

``LeaderAggregationProtocol`` is the hot-receiver stress: for ``n`` rounds
every node sends its one input word to slot 0, so slot 0 receives ``n`` words
per round and ``n**2`` over the run (capacity exactly ``n``).  The leader
outputs an order-independent digest of the words; everyone else outputs 0.

``BroadcastProtocol`` is the transposed hot-sender stress: one designated
slot sends its input word to all ``n`` slots each round.  A set of these jobs
all hot on the same machine is the adversarial imbalance workload for the
rebalancing scheduler.
"""

from __future__ import annotations

from ..model import MemoryEfficientProtocol, Output, ProtocolError

_DIGEST_MOD = (1 << 61) - 1


def aggregate_digest(words) -> int:
    """Order-independent digest of a word multiset (sort, then fold)."""
    h = 1
    for w in sorted(words):
        h = (h * 31 + w + 1) % _DIGEST_MOD
    return h


class LeaderState:
    __slots__ = ("slot", "n", "word", "digest")

    def __init__(self, slot, n, word, digest=0):
        self.slot = slot
        self.n = n
        self.word = word
        self.digest = digest


class LeaderAggregationProtocol(MemoryEfficientProtocol):
    """n plain rounds of all-to-leader traffic; memory bound 4 words."""

    model = "plain"
    name = "leader"

    def max_input_words(self, n):
        return 1

    def max_output_words(self, n):
        return 1

    def memory_bound(self, n):
        return 4

    def init(self, slot, n, input_words, rng):
        if len(input_words) != 1:
            raise ProtocolError("leader aggregation takes one word per node")
        return LeaderState(slot, n, input_words[0])

    def send_step(self, state, rnd):
        if rnd < state.n:
            return [(0, state.word)]
        return []

    def receive_and_compute(self, state, rnd, inbox, rng):
        digest = state.digest
        if state.slot == 0 and rnd == 0:
            digest = aggregate_digest([w for _, w in inbox])
        if rnd == state.n - 1:
            return Output((digest if state.slot == 0 else 0,))
        return LeaderState(state.slot, state.n, state.word, digest)

    def send_count(self, state, rnd):
        return 1 if rnd < state.n else 0

    def recv_count(self, state, rnd):
        return state.n if state.slot == 0 and rnd < state.n else 0

    def encode_state(self, state):
        return (state.slot, state.word, state.digest)

    def decode_state(self, words, n):
        slot, word, digest = words
        return LeaderState(slot, n, word, digest)


class BroadcastState:
    __slots__ = ("slot", "n", "rounds", "hot", "word", "heard")

    def __init__(self, slot, n, rounds, hot, word, heard=0):
        self.slot = slot
        self.n = n
        self.rounds = rounds
        self.hot = hot
        self.word = word
        self.heard = heard


class BroadcastProtocol(MemoryEfficientProtocol):
    """One slot sends its word to everyone each round; others listen."""

    model = "plain"
    name = "broadcast"

    def __init__(self, rounds=1, hot_slot=0):
        if rounds < 1:
            raise ProtocolError("broadcast needs at least one round")
        self.rounds = rounds
        self.hot_slot = hot_slot

    def max_input_words(self, n):
        return 1

    def max_output_words(self, n):
        return 1

    def memory_bound(self, n):
        return 6

    def init(self, slot, n, input_words, rng):
        word = input_words[0] if input_words else 0
        return BroadcastState(slot, n, self.rounds, self.hot_slot, word)

    def send_step(self, state, rnd):
        if state.slot == state.hot and rnd < state.rounds:
            return [(dst, state.word) for dst in range(state.n)]
        return []

    def receive_and_compute(self, state, rnd, inbox, rng):
        if len(inbox) != 1:
            raise ProtocolError("expected exactly the hot slot's word")
        heard = inbox[0][1]
        if rnd == state.rounds - 1:
            return Output((heard,))
        return BroadcastState(state.slot, state.n, state.rounds, state.hot, state.word, heard)

    def send_count(self, state, rnd):
        return state.n if state.slot == state.hot and rnd < state.rounds else 0

    def recv_count(self, state, rnd):
        return 1 if rnd < state.rounds else 0

    def encode_state(self, state):
        return (state.slot, state.rounds, state.hot, state.word, state.heard)

    def decode_state(self, words, n):
        slot, rounds, hot, word, heard = words
        return BroadcastState(slot, n, rounds, hot, word, heard)
