"""Square-root-bin histogram: the classic two-round aggregate/broadcast job.

Every node holds a list of items, each tagged with a bin in ``[B]`` where
``B = ceil(sqrt(n))``.  Round 0: every node sends its count for bin ``b`` to
slot ``b`` (zero counts included, so arrivals are position-free).  Round 1:
each of the ``B`` aggregator slots broadcasts its bin total.  Every node
outputs all ``B`` totals.
"""

from __future__ import annotations

from ..constants import sqrt_ceil
from ..model import MemoryEfficientProtocol, Output, ProtocolError


def bin_count(n: int) -> int:
    return min(n, sqrt_ceil(n))


class HistogramState:
    __slots__ = ("slot", "n", "bins", "counts", "totals")

    def __init__(self, slot, n, counts, totals=None):
        self.slot = slot
        self.n = n
        self.bins = bin_count(n)
        self.counts = counts          # this node's per-bin item counts
        self.totals = totals          # filled in at aggregator slots


class HistogramProtocol(MemoryEfficientProtocol):
    """Two plain rounds; memory bound 2B + 2 words."""

    model = "plain"
    name = "histogram"

    def max_input_words(self, n):
        return 2 * n

    def max_output_words(self, n):
        return bin_count(n)

    def memory_bound(self, n):
        return 2 * bin_count(n) + 2

    def init(self, slot, n, input_words, rng):
        bins = bin_count(n)
        counts = [0] * bins
        for item in input_words:
            if not 0 <= item < bins:
                raise ProtocolError("item bin %d out of range" % item)
            counts[item] += 1
        return HistogramState(slot, n, counts)

    def send_step(self, state, rnd):
        if rnd == 0:
            return [(b, state.counts[b]) for b in range(state.bins)]
        if rnd == 1 and state.slot < state.bins:
            return [(dst, state.totals) for dst in range(state.n)]
        return []

    def receive_and_compute(self, state, rnd, inbox, rng):
        if rnd == 0:
            totals = sum(w for _, w in inbox) if state.slot < state.bins else None
            return HistogramState(state.slot, state.n, state.counts, totals)
        if rnd == 1:
            if len(inbox) != state.bins:
                raise ProtocolError("expected one total per bin")
            return Output(tuple(w for _, w in inbox))
        raise ProtocolError("histogram has no round %d" % rnd)

    # -- memory efficiency -------------------------------------------------

    def send_count(self, state, rnd):
        if rnd == 0:
            return state.bins
        if rnd == 1 and state.slot < state.bins:
            return state.n
        return 0

    def recv_count(self, state, rnd):
        if rnd == 0:
            return state.n if state.slot < state.bins else 0
        if rnd == 1:
            return state.bins
        return 0

    def encode_state(self, state):
        total = state.totals if state.totals is not None else -1
        return (state.slot, total + 1) + tuple(state.counts)

    def decode_state(self, words, n):
        slot, total_plus = words[0], words[1]
        counts = list(words[2:])
        totals = total_plus - 1 if total_plus > 0 else None
        return HistogramState(slot, n, counts, totals)


def histogram_oracle(inputs, n):
    """Centralized bin totals for one instance's input buffers."""
    bins = bin_count(n)
    totals = [0] * bins
    for buf in inputs:
        for item in buf:
            totals[item] += 1
    return tuple(totals)


def run_histogram_batch(cluster, instances):
    """Run many histogram instances together in two plain rounds per group.

    Instance ``q`` of a group uses slots ``q*B + b`` as its aggregators, so
    ``g = n // B`` instances share the clique at once without colliding on
    any ordered machine pair.  Returns a list of per-instance total tuples
    and charges exactly ``2 * ceil(t/g)`` rounds.
    """
    n = cluster.n
    bins = bin_count(n)
    group = max(1, n // bins)
    results = []
    for start in range(0, len(instances), group):
        batch_inputs = instances[start:start + group]
        counts = []
        for inputs in batch_inputs:
            per_node = []
            for buf in inputs:
                c = [0] * bins
                for item in buf:
                    c[item] += 1
                per_node.append(c)
            counts.append(per_node)
        # Round A: node i sends its count for (instance q, bin b) to q*B + b.
        batch = []
        for q in range(len(batch_inputs)):
            for i in range(n):
                for b in range(bins):
                    batch.append((i, q * bins + b, counts[q][i][b]))
        arrived = cluster.commit_round(batch)
        totals = {}
        for q in range(len(batch_inputs)):
            for b in range(bins):
                agg = q * bins + b
                totals[agg] = sum(w for _, w in arrived.get(agg, []))
        # Round B: every aggregator broadcasts its total.
        spread = cluster.broadcast_round(totals)
        heard = dict(spread[0])
        for q in range(len(batch_inputs)):
            results.append(tuple(heard[q * bins + b] for b in range(bins)))
    return results
