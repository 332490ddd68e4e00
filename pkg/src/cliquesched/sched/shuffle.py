"""Random-shuffling scheduler.

Every job gets an independent uniform placement: a leader machine draws a
permutation per job and commits it in two plain rounds (deal the owner ids,
then broadcast them), inputs move to the owners, and then all jobs run in
lockstep phases.  Each phase routes the round's traffic under a fixed load
bound of ``c_shuf_m * ceil(m_r / n) + c_shuf_log * n * ceil(ln n)`` words:
the first term is the fair share of the measured phase traffic, the second
absorbs the concentration slack of the random placement.  A phase whose
traffic exceeds the bound aborts the run with :class:`RoutingOverflow` —
the point of the placement is that this never happens.
"""

from __future__ import annotations

from fractions import Fraction

from ..constants import ln_ceil
from ..metrics import Metrics, outputs_digest
from ..model import (
    Blob,
    DOMAIN_SHUFFLE,
    IoViolation,
    ProtocolError,
    RngStream,
    RoutingOverflow,
    payload_words,
)
from ..runtime import RunResult
from .common import (
    NodeRun,
    aggregate_total,
    all_done_round,
    deliver_wrapped,
    validate_job_set,
    wrap_message,
)


def phase_load_bound(m_r, n, constants):
    return (constants["c_shuf_m"] * -(-m_r // n)
            + constants["c_shuf_log"] * n * ln_ceil(n))


def draw_placements(cluster, jobs, seed):
    """Leader draws one permutation per job; two commit rounds each.

    Returns owners[j][slot] = machine that simulates the slot.
    """
    n = cluster.n
    owners = []
    for j in range(len(jobs)):
        perm = RngStream((seed, DOMAIN_SHUFFLE, j, 0, 0)).permutation(n)
        cluster.commit_round([(0, i, perm[i]) for i in range(n)])
        cluster.broadcast_round({i: perm[i] for i in range(n)})
        owners.append(list(perm))
    return owners


def _move_input(cluster, job, j, owners):
    """Carry job ``j``'s input buffers from the home slots to the owners."""
    n = job.n
    if job.protocol.max_input_words(n) <= 1:
        batch = [(slot, owners[j][slot], job.inputs[slot][0])
                 for slot in range(n) if job.inputs[slot]]
        cluster.commit_round(batch)
        return
    batches = [[] for _ in range(n)]
    for slot in range(n):
        words = job.inputs[slot]
        batches[slot].append(
            (owners[j][slot], Blob(max(1, len(words)), ("in", j, slot, words))))
    ok, info = cluster.route(batches, job.protocol.max_input_words(n))
    if not ok:
        raise IoViolation("input of job %d exceeds its declared bound: %r" % (j, info))


def _move_outputs(cluster, run, owners):
    """Carry finished outputs from the owners back to the home slots."""
    job, j, n = run.job, run.index, run.job.n
    out_bound = job.protocol.max_output_words(n)
    if out_bound <= 1:
        batch = []
        for slot in range(n):
            words = run.outputs[(j, slot)]
            if words:
                batch.append((owners[j][slot], slot, words[0]))
        cluster.commit_round(batch)
        return
    batches = [[] for _ in range(n)]
    for slot in range(n):
        words = run.outputs[(j, slot)]
        batches[owners[j][slot]].append(
            (slot, Blob(max(1, len(words)), ("out", j, slot, words))))
    ok, info = cluster.route(batches, out_bound)
    if not ok:
        raise IoViolation("output of job %d exceeds its declared bound: %r" % (j, info))


def schedule_shuffle(jobs, seed, constants, *, trace=None) -> RunResult:
    from ..cluster import Cluster

    n = validate_job_set(jobs)
    io_cap = constants["c_io"] * n
    for j, job in enumerate(jobs):
        if (job.protocol.max_input_words(n) > io_cap
                or job.protocol.max_output_words(n) > io_cap):
            raise IoViolation("job %d declares I/O beyond %d words per slot" % (j, io_cap))
    cluster = Cluster(n, constants, seed=seed, trace=trace)
    owners = draw_placements(cluster, jobs, seed)
    runs = []
    for j, job in enumerate(jobs):
        _move_input(cluster, job, j, owners)
        run = NodeRun(job, j)
        run.init_states(seed)
        runs.append(run)

    m_r_aligned = []
    slot_sent = [0] * n
    slot_recv = [0] * n
    load_exceeded = 0
    phase = 0
    while True:
        live = [run for run in runs if not run.done]
        if not live:
            break
        if phase > constants["max_protocol_rounds"]:
            raise ProtocolError("shuffled schedule exceeded the round cap")
        sends = {}
        machine_words = [0] * n
        for run in live:
            for slot in range(n):
                msgs = run.send_step(slot)
                sends[(run.index, slot)] = msgs
                words = sum(payload_words(p) for _, p in msgs)
                machine_words[owners[run.index][slot]] += words
                slot_sent[slot] += words
        m_r = aggregate_total(cluster, machine_words)
        m_r_aligned.append(m_r)
        per_node = {}
        if m_r > 0:
            bound = phase_load_bound(m_r, n, constants)
            batches = [[] for _ in range(n)]
            trace_records = []
            for run in live:
                j = run.index
                for slot in range(n):
                    for dst_slot, payload in sends[(j, slot)]:
                        batches[owners[j][slot]].append(
                            (owners[j][dst_slot], wrap_message(j, slot, dst_slot, payload)))
                        trace_records.append((owners[j][slot], owners[j][dst_slot],
                                              j, slot, dst_slot, payload))
                        slot_recv[dst_slot] += payload_words(payload)
            recv_words = [0] * n
            for src in range(n):
                for dst, blob in batches[src]:
                    recv_words[dst] += blob.words
            worst = max(max(machine_words), max(recv_words))
            if Fraction(worst) > 3 * Fraction(m_r, n) + 10 * n * ln_ceil(n):
                load_exceeded += 1
            ok, inboxes = cluster.route(batches, bound)
            if not ok:
                load = max(inboxes["max_sent"], inboxes["max_recv"])
                raise RoutingOverflow(
                    "shuffled phase %d load %d exceeds the bound %d" % (phase, load, bound),
                    phase=phase, load=load, bound=bound)
            cluster.trace_messages(trace_records)
            per_node = deliver_wrapped(inboxes, n)
        for run in live:
            finished = 0
            for slot in range(n):
                inbox = per_node.get((run.index, slot), [])
                if run.receive(slot, inbox, seed):
                    finished += 1
            run.finish_round(finished)
        all_done_round(cluster, [all(r.done for r in runs)] * n)
        phase += 1

    outputs = {}
    for run in runs:
        _move_outputs(cluster, run, owners)
        outputs.update(run.outputs)

    messages = sum(m_r_aligned)
    metrics = Metrics(
        n=n, t=len(jobs), scheduler="shuffle",
        rounds=cluster.ledger.charged_rounds,
        dilation=max(run.rnd for run in runs),
        bandwidth=Fraction(messages, n * n),
        capacity=Fraction(max(max(slot_sent), max(slot_recv)) if messages else 0, n),
        m_r=m_r_aligned,
        messages_total=messages,
        annotations={"load_exceeded_phases": load_exceeded, "phases": phase,
                     "violations": cluster.ledger.violation_count},
    )
    return RunResult(
        metrics=metrics,
        outputs=outputs,
        digest=outputs_digest(outputs),
        annotations=dict(metrics.annotations),
    )
