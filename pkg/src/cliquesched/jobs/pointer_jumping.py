"""Permutation composition by doubling ("pointer jumping").

Node ``i`` holds a permutation ``pi_i`` of ``[P]``; one designated query node
also holds an entry ``p``.  The answer is the fold of all permutations in
slot order applied to ``p``: ``pi_{n-1}(...pi_1(pi_0(p))...)``.

The run has ``L = ceil(log2 n)`` doubling rounds.  After round ``r``, every
slot ``i`` divisible by ``2**(r+1)`` holds the composition of the block of
``2**(r+1)`` permutations starting at ``i``; the node with exactly ``r``
trailing zeros ships its block table (``P`` words) down to ``i - 2**r``.
Slot 0 ends with the full composition; a two-round query/reply with the
query node finishes the job.  Tables move as single ``P``-word payloads, so
the job runs in the routed discipline.
"""

from __future__ import annotations

from ..constants import log2_ceil
from ..model import Blob, MemoryEfficientProtocol, Output, ProtocolError


def pj_oracle(rows, p):
    """Sequential fold of the permutations over the query entry."""
    x = p
    for row in rows:
        x = row[x]
    return x


class PjState:
    __slots__ = ("slot", "n", "perm_size", "table", "query", "query_src", "answer")

    def __init__(self, slot, n, perm_size, table, query=None, query_src=None, answer=None):
        self.slot = slot
        self.n = n
        self.perm_size = perm_size
        self.table = table        # composed block table, tuple of P entries
        self.query = query        # entry p at the query node
        self.query_src = query_src  # at slot 0: who asked
        self.answer = answer


class PointerJumpingProtocol(MemoryEfficientProtocol):
    """ceil(log2 n) + 2 routed rounds; memory bound P + 8 words."""

    model = "routed"
    name = "pj"

    def __init__(self, perm_size):
        if perm_size < 1:
            raise ProtocolError("permutation size must be positive")
        self.perm_size = perm_size

    def rounds(self, n):
        return log2_ceil(n) + 2

    def max_input_words(self, n):
        return self.perm_size + 1

    def max_output_words(self, n):
        return 1

    def memory_bound(self, n):
        return self.perm_size + 8

    def init(self, slot, n, input_words, rng):
        p = self.perm_size
        if len(input_words) not in (p, p + 1):
            raise ProtocolError("node input must hold the row and optionally the query")
        row = tuple(input_words[:p])
        if sorted(row) != list(range(p)):
            raise ProtocolError("row of slot %d is not a permutation" % slot)
        query = input_words[p] if len(input_words) == p + 1 else None
        return PjState(slot, n, p, row, query)

    def send_step(self, state, rnd):
        big = log2_ceil(state.n)
        if rnd < big:
            if state.slot % (2 << rnd) == (1 << rnd):
                payload = Blob(state.perm_size, ("pj", state.table))
                return [(state.slot - (1 << rnd), payload)]
            return []
        if rnd == big:
            return [(0, state.query)] if state.query is not None else []
        if rnd == big + 1 and state.slot == 0:
            return [(state.query_src, state.answer)]
        return []

    def receive_and_compute(self, state, rnd, inbox, rng):
        big = log2_ceil(state.n)
        if rnd < big:
            if inbox:
                theirs = inbox[0][1].data[1]
                table = tuple(theirs[v] for v in state.table)
                return PjState(state.slot, state.n, state.perm_size, table, state.query)
            return state
        if rnd == big:
            if state.slot == 0:
                src, p = inbox[0]
                return PjState(
                    state.slot, state.n, state.perm_size, state.table,
                    state.query, query_src=src, answer=state.table[p],
                )
            return state
        if rnd == big + 1:
            if state.query is not None:
                return Output((inbox[0][1],))
            return Output((0,))
        raise ProtocolError("pointer jumping has no round %d" % rnd)

    # -- memory efficiency -------------------------------------------------

    def send_count(self, state, rnd):
        big = log2_ceil(state.n)
        if rnd < big:
            return state.perm_size if state.slot % (2 << rnd) == (1 << rnd) else 0
        if rnd == big:
            return 1 if state.query is not None else 0
        if rnd == big + 1:
            return 1 if state.slot == 0 else 0
        return 0

    def recv_count(self, state, rnd):
        big = log2_ceil(state.n)
        if rnd < big:
            merging = state.slot % (2 << rnd) == 0 and state.slot + (1 << rnd) < state.n
            return state.perm_size if merging else 0
        if rnd == big:
            return 1 if state.slot == 0 else 0
        if rnd == big + 1:
            return 1 if state.query is not None else 0
        return 0

    def encode_state(self, state):
        opt = lambda v: 0 if v is None else v + 1  # noqa: E731
        return (
            state.slot,
            state.perm_size,
            opt(state.query),
            opt(state.query_src),
            opt(state.answer),
        ) + state.table

    def decode_state(self, words, n):
        slot, perm_size, query, query_src, answer = words[:5]
        table = tuple(words[5:])
        back = lambda v: None if v == 0 else v - 1  # noqa: E731
        return PjState(slot, n, perm_size, table, back(query), back(query_src), back(answer))
