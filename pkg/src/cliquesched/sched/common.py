"""Plumbing shared by the schedulers.

Message wrappers: protocol messages travel as ``Blob(words, ("pm", job,
src_slot, dst_slot, payload))``.  The addressing fields (job id and slot
ids) ride free; only the protocol payload's own width is charged, exactly as
in a standalone run.
"""

from __future__ import annotations

from ..model import Blob, InvariantViolation, Output, ProtocolError, payload_words, protocol_rng


def wrap_message(job, src_slot, dst_slot, payload):
    return Blob(payload_words(payload), ("pm", job, src_slot, dst_slot, payload))


def aggregate_total(cluster, value):
    """Two rounds: gather per-machine values at machine 0, broadcast the sum.

    ``value`` is this simulation's full per-machine vector (the simulator
    plays all machines); returns the global total every machine now knows.
    """
    gathered = cluster.gather_round({i: value[i] for i in range(cluster.n)})
    total = sum(w for _, w in gathered)
    spread = cluster.broadcast_round({0: total})
    return spread[0][0][1]


def all_done_round(cluster, done_bits):
    """One round: every machine broadcasts whether all its residents finished."""
    arrivals = cluster.broadcast_round({i: 1 if done_bits[i] else 0 for i in range(cluster.n)})
    return all(w == 1 for _, w in arrivals[0])


def route_measured(cluster, batches, *, phase=""):
    """Route ``batches`` under the measured actual load: two aggregation
    rounds (per-destination counts, then a max broadcast) fix the exact
    bound, so the route itself can never overflow."""
    n = cluster.n
    counts = [[0] * n for _ in range(n)]
    sent = [0] * n
    for src in range(n):
        for dst, payload in batches[src]:
            w = payload_words(payload)
            counts[src][dst] += w
            sent[src] += w
    count_batch = [
        (src, dst, counts[src][dst])
        for src in range(n) for dst in range(n) if counts[src][dst]
    ]
    arrivals = cluster.commit_round(count_batch)
    recv = [sum(w for _, w in arrivals.get(dst, [])) for dst in range(n)]
    local_max = {i: max(sent[i], recv[i]) for i in range(n)}
    spread = cluster.broadcast_round(local_max)
    bound = max(w for _, w in spread[0])
    if bound == 0:
        return {dst: [] for dst in range(n)}
    ok, inboxes = cluster.route(batches, bound)
    if not ok:
        raise InvariantViolation("measured-bound route overflowed (%s): %r" % (phase, inboxes))
    return inboxes


def deliver_wrapped(inboxes, n):
    """Unpack routed protocol messages into per-(job, dst_slot) inboxes.

    Route inboxes arrive ordered by source machine with per-sender emission
    order preserved; the per-node view is re-sorted by source slot (stable,
    so emission order survives), matching the standalone canonical order.
    """
    per_node = {}
    for dst in range(n):
        for _, blob in inboxes.get(dst, []):
            tag, job, src_slot, dst_slot, payload = blob.data
            if tag != "pm":
                raise InvariantViolation("unexpected payload in protocol route")
            per_node.setdefault((job, dst_slot), []).append((src_slot, payload))
    for key in per_node:
        per_node[key].sort(key=lambda m: m[0])
    return per_node


class NodeRun:
    """Execution state of one job under a scheduler: per-slot protocol
    states, the job-local round, and the finished flag."""

    __slots__ = ("job", "index", "states", "rnd", "outputs", "done")

    def __init__(self, job, index):
        self.job = job
        self.index = index
        self.states = None
        self.rnd = 0
        self.outputs = {}
        self.done = False

    def init_states(self, seed):
        job, n = self.job, self.job.n
        self.states = [
            job.protocol.init(slot, n, job.inputs[slot], protocol_rng(seed, self.index, slot, 0))
            for slot in range(n)
        ]

    def send_step(self, slot):
        return self.job.protocol.send_step(self.states[slot], self.rnd)

    def receive(self, slot, inbox, seed):
        rng = protocol_rng(seed, self.index, slot, self.rnd + 1)
        result = self.job.protocol.receive_and_compute(self.states[slot], self.rnd, inbox, rng)
        if isinstance(result, Output):
            if len(result.words) > self.job.protocol.max_output_words(self.job.n):
                raise ProtocolError("slot %d of job %d output too many words"
                                    % (slot, self.index))
            self.outputs[(self.index, slot)] = tuple(result.words)
            self.states[slot] = None
            return True
        self.states[slot] = result
        return False

    def finish_round(self, finished_slots):
        """Advance the job round; enforce uniform completion."""
        n = self.job.n
        if finished_slots not in (0, n):
            raise ProtocolError("job %d finished on %d of %d slots"
                                % (self.index, finished_slots, n))
        if finished_slots == n:
            self.done = True
        self.rnd += 1


def validate_job_set(jobs):
    if not jobs:
        raise ProtocolError("empty job set")
    n = jobs[0].n
    for job in jobs:
        if job.n != n:
            raise ProtocolError("jobs disagree on n")
        job.validate_io()
    return n
