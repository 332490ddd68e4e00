"""Deterministic rebalancing scheduler for memory-efficient jobs.

All jobs advance one protocol round per epoch.  The work of an epoch is the
set of (job, slot) nodes with nonzero traffic this round, laid out on the
fixed column grid ``col = slot * t + job``.  The epoch:

1. aggregates the total send volume ``m_r`` (two rounds);
2. cuts the column grid into chunks of combined send+receive volume about
   ``2 n**2`` using repeated n-ary searches over the machines' private
   per-column volumes (two rounds per level per boundary);
3. for each chunk, splits every machine's resident chunk nodes into
   ``k_i = max(1, ceil(max(S_i, T_i) / n))`` buckets balanced in both send
   and receive volume, announces the counts (one round), and deals bucket
   ``g`` (global numbering) to machine ``g // c_bal``: at most ``c_bal``
   buckets, hence O(n) traffic volume, per machine;
4. ships each bucket's node states to its machine as encoded words, lets
   the copies emit their round's messages there, and routes the messages to
   the receivers' home machines — both transfers under measured bounds, so
   they can never overflow;
5. delivers the buffered inboxes at home (computation, free) and spends one
   round on the all-done bit.

The authoritative state never leaves home: shipping a copy out for the send
step is cheaper than migrating authority back and forth and yields the same
messages because send steps are pure.
"""

from __future__ import annotations

from fractions import Fraction

from ..collectives import nary_search
from ..metrics import Metrics, outputs_digest
from ..model import (
    Blob,
    InvariantViolation,
    MemoryEfficientProtocol,
    SchedulingError,
    payload_words,
)
from ..runtime import RunResult
from .common import (
    NodeRun,
    aggregate_total,
    all_done_round,
    deliver_wrapped,
    route_measured,
    validate_job_set,
    wrap_message,
)


def split_buckets(items, k):
    """Split an ordered list of (s, t) weight pairs into at most ``k``
    consecutive buckets, each with ``sum(s) <= 2*(S/k) + max(s)`` and the
    same in ``t``.

    Greedy: keep adding items, close the bucket once its s-sum exceeds
    ``2S/k`` or its t-sum exceeds ``2T/k`` (strictly).  Buckets are returned
    as (start, end) index ranges.
    """
    if k < 1:
        raise InvariantViolation("bucket count must be positive")
    if not items:
        return []
    total_s = sum(s for s, _ in items)
    total_t = sum(t for _, t in items)
    buckets = []
    start = 0
    run_s = run_t = 0
    for idx, (s, t) in enumerate(items):
        run_s += s
        run_t += t
        if run_s * k > 2 * total_s or run_t * k > 2 * total_t:
            buckets.append((start, idx + 1))
            start = idx + 1
            run_s = run_t = 0
    if start < len(items):
        buckets.append((start, len(items)))
    if len(buckets) > k:
        raise InvariantViolation("greedy split produced %d of %d buckets"
                                 % (len(buckets), k))
    max_s = max(s for s, _ in items)
    max_t = max(t for _, t in items)
    for lo, hi in buckets:
        bucket_s = sum(s for s, _ in items[lo:hi])
        bucket_t = sum(t for _, t in items[lo:hi])
        if bucket_s * k > 2 * total_s + 2 * max_s * k:
            raise InvariantViolation("bucket s-volume above the balance bound")
        if bucket_t * k > 2 * total_t + 2 * max_t * k:
            raise InvariantViolation("bucket t-volume above the balance bound")
    return buckets


def bucket_machine(g, n, constants):
    """Global bucket ``g`` executes on this machine."""
    return min(g // constants["c_bal"], n - 1)


def _chunk_boundaries(cluster, volumes, total, t):
    """Cut the column grid into chunks of about ``2 n**2`` volume each.

    ``volumes[col]`` is the (send + receive) volume of the node at that
    column.  Uses the in-rounds n-ary search per boundary, every machine
    contributing only its own columns.  Returns a list of (lo, hi) column
    ranges covering the grid.
    """
    n = cluster.n
    step = 2 * n * n
    if total <= step:
        return [(0, n * t)]
    rows = []
    for i in range(n):
        row = [0] * (n * t)
        for col in range(i * t, (i + 1) * t):
            row[col] = volumes[col]
        rows.append(row)
    bounds = []
    target = step
    while target < total:
        col = nary_search(cluster, rows, target)
        if col is None:
            raise InvariantViolation("volume search missed a crossing")
        bounds.append(col + 1)
        target += step
    ranges = []
    lo = 0
    for b in bounds:
        if b > lo:
            ranges.append((lo, b))
            lo = b
    if lo < n * t:
        ranges.append((lo, n * t))
    return ranges


def schedule_deterministic(jobs, seed, constants, *, trace=None) -> RunResult:
    from ..cluster import Cluster

    n = validate_job_set(jobs)
    t = len(jobs)
    for j, job in enumerate(jobs):
        if not isinstance(job.protocol, MemoryEfficientProtocol):
            raise SchedulingError(
                "job %d is not memory-efficient; the deterministic scheduler "
                "needs declared counts and state encodings" % j)
    mem_bounds = [job.protocol.memory_bound(n) for job in jobs]
    cluster = Cluster(n, constants, seed=seed, trace=trace)
    runs = []
    for j, job in enumerate(jobs):
        run = NodeRun(job, j)
        run.init_states(seed)
        runs.append(run)

    m_r_aligned = []
    slot_sent = [0] * n
    slot_recv = [0] * n
    epoch = 0
    while True:
        live = [run for run in runs if not run.done]
        if not live:
            break
        if epoch > constants["max_protocol_rounds"]:
            raise SchedulingError("deterministic schedule exceeded the round cap")
        # Per-node declared volumes for this round, on the column grid.
        s_vol = [0] * (n * t)
        t_vol = [0] * (n * t)
        for run in live:
            j, proto = run.index, run.job.protocol
            for slot in range(n):
                col = slot * t + j
                s_vol[col] = proto.send_count(run.states[slot], run.rnd)
                t_vol[col] = proto.recv_count(run.states[slot], run.rnd)
                if s_vol[col] > n or t_vol[col] > n:
                    raise SchedulingError(
                        "job %d slot %d declares %d/%d words in one round; "
                        "the deterministic scheduler handles at most n"
                        % (j, slot, s_vol[col], t_vol[col]))
        machine_words = [sum(s_vol[i * t:(i + 1) * t]) for i in range(n)]
        m_r = aggregate_total(cluster, machine_words)
        m_r_aligned.append(m_r)
        per_node = {}
        if m_r > 0:
            volumes = [s + tv for s, tv in zip(s_vol, t_vol)]
            chunks = _chunk_boundaries(cluster, volumes, sum(volumes), t)
            for lo, hi in chunks:
                per_node = _run_chunk(cluster, runs, lo, hi, volumes, s_vol, t_vol,
                                      t, mem_bounds, per_node, constants)
        for run in live:
            j = run.index
            finished = 0
            for slot in range(n):
                inbox = per_node.get((j, slot), [])
                inbox.sort(key=lambda m: m[0])
                got = sum(payload_words(p) for _, p in inbox)
                if got != t_vol[slot * t + j]:
                    raise InvariantViolation(
                        "job %d slot %d declared %d receive words but got %d"
                        % (j, slot, t_vol[slot * t + j], got))
                slot_sent[slot] += s_vol[slot * t + j]
                slot_recv[slot] += got
                if run.receive(slot, inbox, seed):
                    finished += 1
            run.finish_round(finished)
        all_done_round(cluster, [all(r.done for r in runs)] * n)
        epoch += 1

    outputs = {}
    for run in runs:
        outputs.update(run.outputs)
    messages = sum(m_r_aligned)
    metrics = Metrics(
        n=n, t=t, scheduler="deterministic",
        rounds=cluster.ledger.charged_rounds,
        dilation=max(run.rnd for run in runs),
        bandwidth=Fraction(messages, n * n),
        capacity=Fraction(max(max(slot_sent), max(slot_recv)) if messages else 0, n),
        m_r=m_r_aligned,
        messages_total=messages,
        annotations={"epochs": epoch, "memory_bound": max(mem_bounds),
                     "violations": cluster.ledger.violation_count},
    )
    return RunResult(
        metrics=metrics,
        outputs=outputs,
        digest=outputs_digest(outputs),
        annotations=dict(metrics.annotations),
    )


def _run_chunk(cluster, runs, lo, hi, volumes, s_vol, t_vol, t, mem_bounds,
               per_node, constants):
    """Rebalance and execute the send work of one chunk of columns."""
    n = cluster.n
    # Per-machine members and bucket counts.
    members = [[] for _ in range(n)]
    for col in range(lo, hi):
        if volumes[col]:
            members[col // t].append(col)
    k = [1] * n
    for i in range(n):
        s_i = sum(s_vol[c] for c in members[i])
        t_i = sum(t_vol[c] for c in members[i])
        k[i] = max(1, -(-max(s_i, t_i) // n))
    if sum(k) > 5 * n + 5:
        raise InvariantViolation("bucket total %d breaks the 5n budget" % sum(k))
    cluster.broadcast_round({i: k[i] for i in range(n)})
    base = [0] * n
    for i in range(1, n):
        base[i] = base[i - 1] + k[i - 1]
    # Ship state copies of every bucket to its machine.
    ship = [[] for _ in range(n)]
    exec_nodes = [[] for _ in range(n)]  # (job, slot, state words) at machine
    for i in range(n):
        if not members[i]:
            continue
        weights = [(s_vol[c], t_vol[c]) for c in members[i]]
        for b, (blo, bhi) in enumerate(split_buckets(weights, k[i])):
            target = bucket_machine(base[i] + b, n, constants)
            for c in members[i][blo:bhi]:
                j, slot = c % t, c // t
                run = runs[j]
                enc = tuple(run.job.protocol.encode_state(run.states[slot]))
                if len(enc) > mem_bounds[j]:
                    raise InvariantViolation(
                        "job %d state needs %d words, above its bound %d"
                        % (j, len(enc), mem_bounds[j]))
                ship[i].append((target, Blob(len(enc) + 1, ("st", j, slot, enc))))
                exec_nodes[target].append((j, slot, enc))
    route_measured(cluster, ship, phase="state copies")
    # The copies emit this round's messages from their machines.
    emit = [[] for _ in range(n)]
    trace_records = []
    for machine in range(n):
        for j, slot, enc in exec_nodes[machine]:
            run = runs[j]
            copy = run.job.protocol.decode_state(enc, n)
            msgs = run.job.protocol.send_step(copy, run.rnd)
            words = sum(payload_words(p) for _, p in msgs)
            if words != s_vol[slot * t + j]:
                raise InvariantViolation(
                    "job %d slot %d declared %d send words but emits %d"
                    % (j, slot, s_vol[slot * t + j], words))
            for dst_slot, payload in msgs:
                emit[machine].append((dst_slot, wrap_message(j, slot, dst_slot, payload)))
                trace_records.append((machine, dst_slot, j, slot, dst_slot, payload))
    inboxes = route_measured(cluster, emit, phase="round messages")
    cluster.trace_messages(trace_records)
    for key, entries in deliver_wrapped(inboxes, n).items():
        per_node.setdefault(key, []).extend(entries)
    return per_node
