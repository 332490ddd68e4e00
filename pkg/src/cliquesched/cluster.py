"""Machine-level communication substrate: budgets, charging, delivery.

All communication in a run flows through one :class:`Cluster`.  Real rounds
are committed one at a time and validated against the one-word-per-ordered-
pair budget.  Bulk transfers go through :meth:`Cluster.route`, the bounded
routing primitive: if every machine sends at most ``X`` words and every
machine is due to receive at most ``X`` words, the whole batch is delivered
for a charge of ``c_route * ceil(X/n)`` rounds (the charge also covers the
one-round aggregate that verifies the two conditions).  If either condition
fails, nothing is delivered and one round is charged for the failed check.

``fidelity="two-phase"`` replaces the charged primitive with an in-rounds
two-phase randomized routing (spray to random intermediates, then forward),
committed round by round.  It only supports single-word payloads and exists
for spot-checking the charged model; the measured suites use the charged
primitive.
"""

from __future__ import annotations

from .model import (
    Blob,
    InvariantViolation,
    ModelViolation,
    RngStream,
    SimulationError,
    payload_words,
)


class RoundLedger:
    """Counts charged rounds and enforces per-round budgets."""

    def __init__(self, n: int):
        self.n = n
        self.charged_rounds = 0
        self.real_rounds = 0
        self.routed_calls = 0
        self.words_moved = 0
        self.violation_count = 0

    def charge(self, rounds: int):
        if rounds < 0:
            raise InvariantViolation("negative round charge")
        self.charged_rounds += rounds

    def commit_round(self, batch):
        """Validate and charge one real round.

        ``batch`` is a list of ``(src_machine, dst_machine, word)`` triples.
        Every ordered pair may carry at most one word; a violation is
        recorded and raised.
        """
        n = self.n
        seen = set()
        for src, dst, word in batch:
            if not (0 <= src < n and 0 <= dst < n):
                self.violation_count += 1
                raise ModelViolation("machine index out of range: %d -> %d" % (src, dst))
            if not isinstance(word, int):
                self.violation_count += 1
                raise ModelViolation("real rounds carry single words, got %r" % (word,))
            pair = (src, dst)
            if pair in seen:
                self.violation_count += 1
                raise ModelViolation(
                    "pair %d -> %d carried more than one word in a round" % pair
                )
            seen.add(pair)
        self.charge(1)
        self.real_rounds += 1
        self.words_moved += len(batch)


class Cluster:
    """n machines plus the ledger, fidelity mode and optional trace."""

    def __init__(self, n, constants, *, fidelity="charged", trace=None, seed=0):
        if n < 1:
            raise SimulationError("need at least one machine")
        if fidelity not in ("charged", "two-phase"):
            raise SimulationError("unknown fidelity %r" % fidelity)
        self.n = n
        self.constants = constants
        self.fidelity = fidelity
        self.ledger = RoundLedger(n)
        self.trace = trace  # None or a list collecting protocol-message records
        self._route_rng = RngStream((seed, 3, 0, 0, 0))  # DOMAIN_ROUTING

    # -- real rounds ----------------------------------------------------

    def commit_round(self, batch):
        """Commit one real round; return inboxes as {dst: [(src, word), ...]}."""
        self.ledger.commit_round(batch)
        inboxes = {}
        for src, dst, word in sorted(batch, key=lambda m: (m[1], m[0])):
            inboxes.setdefault(dst, []).append((src, word))
        return inboxes

    def broadcast_round(self, values):
        """Every machine with a value sends it to all n machines, one round.

        ``values`` maps machine -> word.  Returns {dst: sorted [(src, word)]}.
        """
        batch = []
        for src in sorted(values):
            w = values[src]
            batch.extend((src, dst, w) for dst in range(self.n))
        return self.commit_round(batch)

    def gather_round(self, values, root=0):
        """Every machine with a value sends it to ``root``, one round."""
        batch = [(src, root, values[src]) for src in sorted(values)]
        inboxes = self.commit_round(batch)
        return inboxes.get(root, [])

    # -- bounded routing --------------------------------------------------

    def route(self, batches, bound):
        """Deliver per-machine send lists under a global per-machine bound.

        ``batches`` is a list of n lists of ``(dst_machine, payload)``.
        Returns ``(ok, inboxes)``; on failure nothing is delivered, one round
        is charged, and ``inboxes`` carries diagnostic load information.
        """
        n = self.n
        if bound < 1:
            raise InvariantViolation("routing bound must be at least one word")
        sent = [0] * n
        recv = [0] * n
        for src, msgs in enumerate(batches):
            for dst, payload in msgs:
                w = payload_words(payload)
                sent[src] += w
                recv[dst] += w
        overload = max(max(sent), max(recv)) if n else 0
        self.ledger.routed_calls += 1
        if overload > bound:
            self.ledger.charge(1)
            return False, {"max_sent": max(sent), "max_recv": max(recv), "bound": bound}
        if self.fidelity == "two-phase":
            self._route_in_rounds(batches)
        else:
            rounds = self.constants["c_route"] * -(-bound // n)
            self.ledger.charge(rounds)
            self.ledger.words_moved += sum(sent)
        inboxes = {dst: [] for dst in range(n)}
        for src in range(n):
            for dst, payload in batches[src]:
                inboxes[dst].append((src, payload))
        return True, inboxes

    def _route_in_rounds(self, batches):
        """Two-phase randomized delivery committed as real rounds.

        Phase one sprays each word to a uniformly random intermediate (one
        word per pair per round, so a machine retires up to n words per
        round); phase two forwards words to their destinations, at most one
        per pair per round.  Payload content is ignored by the budget checks
        beyond requiring single words.
        """
        n = self.n
        for src in range(n):
            for _, payload in batches[src]:
                if isinstance(payload, Blob):
                    raise SimulationError(
                        "two-phase fidelity only supports single-word payloads"
                    )
        # Phase 1: spray.  queue[src] holds (intermediate, dst, word).
        pending = [
            [(self._route_rng.integers(n), dst, w) for dst, w in batches[src]]
            for src in range(n)
        ]
        staged = [[] for _ in range(n)]  # at intermediates: (dst, word)
        while any(pending):
            batch = []
            for src in range(n):
                used = set()
                rest = []
                for mid, dst, w in pending[src]:
                    if mid in used:
                        rest.append((mid, dst, w))
                    else:
                        used.add(mid)
                        batch.append((src, mid, self._pack(dst, w)))
                pending[src] = rest
            for mid, arrivals in self.commit_round(batch).items():
                for _, packed in arrivals:
                    staged[mid].append(self._unpack(packed))
        # Phase 2: forward.
        while any(staged):
            batch = []
            for mid in range(n):
                used = set()
                rest = []
                for dst, w in staged[mid]:
                    if dst in used:
                        rest.append((dst, w))
                    else:
                        used.add(dst)
                        batch.append((mid, dst, w))
                staged[mid] = rest
            self.commit_round(batch)

    @staticmethod
    def _pack(dst, word):
        # Forwarding header folded into the word for the in-rounds mode.
        return (word << 20) | dst

    @staticmethod
    def _unpack(packed):
        return packed & ((1 << 20) - 1), packed >> 20

    # -- tracing ----------------------------------------------------------

    def trace_messages(self, records):
        """Append protocol-message trace records if tracing is enabled.

        Each record is (src_machine, dst_machine, job, src_slot, dst_slot,
        payload); the charged-round counter at delivery time is prepended.
        """
        if self.trace is None:
            return
        rnd = self.ledger.charged_rounds
        for rec in records:
            self.trace.append((rnd,) + rec)
