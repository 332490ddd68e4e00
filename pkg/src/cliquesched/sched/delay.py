"""Random-delay scheduler.

Jobs stay at their home slots; contention is spread over time instead of
space.  A leader draws one starting delay per job, uniform on ``[0, D)``
with ``D = capacity_bound // ceil(ln n)``, and commits the draws with one
multiple-broadcast.  Job ``j`` runs its local round ``p - D_j`` in phase
``p``; every phase with any started unfinished job routes its traffic under
the fixed per-machine budget ``X = ceil(c_del * capacity_bound * n / D)``.
Because the delays are global knowledge and every machine hosts one slot of
every job, finishing times are common knowledge for free, and phases in
which no job is eligible are skipped outright.

When ``D <= 1`` the delays degenerate to zero and the budget falls back to
``c_del * n * ceil(ln n)``, which is safe outright: the whole run moves at
most ``capacity_bound * n <= 2 * n * ceil(ln n)`` words through any machine
in that regime.

``schedule_delay_doubling`` wraps the scheduler for unknown capacity:
guesses double until a run completes without a routing overflow.  Delay
draws are keyed by the attempt number, protocol draws are not, so every
attempt replays identical job randomness and the final outputs match any
other scheduler's bit for bit.
"""

from __future__ import annotations

from fractions import Fraction

from ..collectives import multiple_broadcast
from ..constants import ln_ceil
from ..metrics import Metrics, outputs_digest
from ..model import (
    DOMAIN_DELAY,
    ProtocolError,
    RngStream,
    RoutingOverflow,
    SchedulingError,
    payload_words,
)
from ..runtime import RunResult
from .common import NodeRun, deliver_wrapped, validate_job_set, wrap_message

MAX_DOUBLING_ATTEMPTS = 60


def draw_delays(cluster, t, seed, capacity_bound, attempt=0):
    """Leader draws the per-job delays and commits them to every machine."""
    window = capacity_bound // ln_ceil(cluster.n)
    if window <= 1:
        delays = [0] * t
        multiple_broadcast(cluster, [delays] + [[] for _ in range(cluster.n - 1)])
        return delays, 1
    rng = RngStream((seed, DOMAIN_DELAY, 0, 0, attempt))
    delays = [rng.integers(window) for _ in range(t)]
    got = multiple_broadcast(cluster, [delays] + [[] for _ in range(cluster.n - 1)])
    if got != delays:
        raise ProtocolError("delay broadcast disagreed with the draw")
    return delays, window


def phase_budget(n, capacity_bound, window, constants):
    if window <= 1:
        return constants["c_del"] * n * ln_ceil(n)
    return -(-constants["c_del"] * capacity_bound * n // window)


def schedule_delay(jobs, seed, constants, capacity_bound, *, attempt=0,
                   trace=None) -> RunResult:
    from ..cluster import Cluster

    if capacity_bound < 1:
        raise SchedulingError("capacity bound must be at least one")
    n = validate_job_set(jobs)
    t = len(jobs)
    cluster = Cluster(n, constants, seed=seed, trace=trace)
    delays, window = draw_delays(cluster, t, seed, capacity_bound, attempt)
    budget = phase_budget(n, capacity_bound, window, constants)
    runs = []
    for j, job in enumerate(jobs):
        run = NodeRun(job, j)
        run.init_states(seed)
        runs.append(run)

    m_r_aligned = []
    slot_sent = [0] * n
    slot_recv = [0] * n
    phase = 0
    active_phases = 0
    while True:
        pending = [run for run in runs if not run.done]
        if not pending:
            break
        live = [run for run in pending if delays[run.index] <= phase]
        if not live:
            # Nothing is eligible yet; the next start time is global
            # knowledge, so the gap costs nothing.
            phase = min(delays[run.index] for run in pending)
            continue
        if phase > constants["max_protocol_rounds"]:
            raise ProtocolError("delayed schedule exceeded the round cap")
        active_phases += 1
        batches = [[] for _ in range(n)]
        trace_records = []
        for run in live:
            j = run.index
            for slot in range(n):
                msgs = run.send_step(slot)
                words = sum(payload_words(p) for _, p in msgs)
                slot_sent[slot] += words
                while len(m_r_aligned) <= run.rnd:
                    m_r_aligned.append(0)
                m_r_aligned[run.rnd] += words
                for dst_slot, payload in msgs:
                    batches[slot].append(
                        (dst_slot, wrap_message(j, slot, dst_slot, payload)))
                    trace_records.append((slot, dst_slot, j, slot, dst_slot, payload))
                    slot_recv[dst_slot] += payload_words(payload)
        ok, inboxes = cluster.route(batches, budget)
        if not ok:
            load = max(inboxes["max_sent"], inboxes["max_recv"])
            overflow = RoutingOverflow(
                "delayed phase %d load %d exceeds the budget %d" % (phase, load, budget),
                phase=phase, load=load, bound=budget)
            overflow.charged_rounds = cluster.ledger.charged_rounds
            raise overflow
        cluster.trace_messages(trace_records)
        per_node = deliver_wrapped(inboxes, n)
        for run in live:
            finished = 0
            for slot in range(n):
                inbox = per_node.get((run.index, slot), [])
                if run.receive(slot, inbox, seed):
                    finished += 1
            run.finish_round(finished)
        phase += 1

    outputs = {}
    for run in runs:
        outputs.update(run.outputs)
    messages = sum(m_r_aligned)
    metrics = Metrics(
        n=n, t=t, scheduler="delay",
        rounds=cluster.ledger.charged_rounds,
        dilation=max(run.rnd for run in runs),
        bandwidth=Fraction(messages, n * n),
        capacity=Fraction(max(max(slot_sent), max(slot_recv)) if messages else 0, n),
        m_r=m_r_aligned,
        messages_total=messages,
        annotations={
            "capacity_bound": capacity_bound,
            "delay_window": window,
            "phase_budget": budget,
            "active_phases": active_phases,
            "attempt": attempt,
            "violations": cluster.ledger.violation_count,
        },
    )
    return RunResult(
        metrics=metrics,
        outputs=outputs,
        digest=outputs_digest(outputs),
        annotations=dict(metrics.annotations),
    )


def schedule_delay_doubling(jobs, seed, constants, *, trace=None) -> RunResult:
    """Run the delay scheduler with doubling capacity guesses.

    The rounds of failed attempts are added to the final metrics, so the
    reported cost is the cost actually paid.
    """
    guess = 1
    wasted = 0
    attempts = 0
    while True:
        attempts += 1
        if attempts > MAX_DOUBLING_ATTEMPTS:
            raise SchedulingError("capacity doubling failed to converge")
        try:
            result = schedule_delay(jobs, seed, constants, guess,
                                    attempt=attempts - 1, trace=trace)
        except RoutingOverflow as overflow:
            # The aborted attempt paid for everything it charged up to and
            # including the failed overflow check.
            wasted += overflow.charged_rounds
            guess *= 2
            continue
        result.metrics.scheduler = "delay-doubling"
        result.metrics.rounds += wasted
        result.metrics.annotations.update(attempts=attempts, wasted_rounds=wasted,
                                          final_guess=guess)
        result.annotations.update(attempts=attempts, wasted_rounds=wasted,
                                  final_guess=guess)
        return result
