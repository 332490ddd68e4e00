"""Standalone job execution: instrumentation, profiling, naive baseline.

``drive_job`` runs one job with every machine simulating its own slot and
enforces the protocol contracts as it goes: send_step purity (sampled
double-calls), declared send/receive counts and state encodings for
memory-efficient protocols, uniform completion, and output-width bounds.

``run_naive`` executes a job set sequentially on one cluster; plain jobs
commit their rounds against the per-pair budget, routed jobs are charged by
their actual per-round load (a routed round moving at most ``X`` words per
machine costs ``max(1, ceil(X/n))`` rounds, since the routed discipline lets
a machine move ``n`` words per round).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .cluster import Cluster
from .constants import merged_constants
from .metrics import (
    JobProfile,
    SetProfile,
    combine_profiles,
    metrics_from_profile,
    outputs_digest,
)
from .model import (
    MemoryEfficientProtocol,
    Output,
    ProtocolError,
    payload_words,
    protocol_rng,
)


@dataclass
class RunResult:
    """Outcome of one scheduled (or naive) run of a job set."""

    metrics: object
    outputs: dict            # (job, slot) -> output word tuple
    digest: str
    annotations: dict = field(default_factory=dict)


def canonical_inboxes(sends, n):
    """Per-slot inboxes from per-slot send lists, sorted by (src, emission)."""
    inboxes = [[] for _ in range(n)]
    for src in range(n):
        for dst, payload in sends[src]:
            if not 0 <= dst < n:
                raise ProtocolError("destination slot %d out of range" % dst)
            inboxes[dst].append((src, payload))
    return inboxes


def init_states(job, job_index, seed):
    n = job.n
    return [
        job.protocol.init(slot, n, job.inputs[slot], protocol_rng(seed, job_index, slot, 0))
        for slot in range(n)
    ]


def _sampled(rnd):
    return rnd < 4 or rnd % 8 == 0


def drive_job(cluster, job, job_index, seed, *, instrument=True, placement=None):
    """Run one job to completion on ``cluster``; return (JobProfile, outputs).

    ``placement`` maps slot -> machine for trace records (identity when the
    job runs standalone).
    """
    proto = job.protocol
    n = job.n
    job.validate_io()
    if placement is None:
        placement = list(range(n))
    mem_eff = isinstance(proto, MemoryEfficientProtocol)
    mem_bound = proto.memory_bound(n) if mem_eff else None
    out_bound = proto.max_output_words(n)
    states = init_states(job, job_index, seed)
    outputs = {}
    m_r = []
    sent = [0] * n
    recv = [0] * n
    charged_before = cluster.ledger.charged_rounds
    rnd = 0
    while True:
        if rnd > cluster.constants["max_protocol_rounds"]:
            raise ProtocolError("job %d exceeded the protocol round cap" % job_index)
        sends = [proto.send_step(states[slot], rnd) for slot in range(n)]
        if instrument and _sampled(rnd):
            again = [proto.send_step(states[slot], rnd) for slot in range(n)]
            if again != sends:
                raise ProtocolError("send_step of job %d is not pure in round %d"
                                    % (job_index, rnd))
        round_sent = [sum(payload_words(p) for _, p in sends[slot]) for slot in range(n)]
        if mem_eff and instrument:
            for slot in range(n):
                declared = proto.send_count(states[slot], rnd)
                if declared != round_sent[slot]:
                    raise ProtocolError(
                        "slot %d declared %d send words but sent %d in round %d"
                        % (slot, declared, round_sent[slot], rnd))
        inboxes = canonical_inboxes(sends, n)
        round_recv = [sum(payload_words(p) for _, p in inboxes[slot]) for slot in range(n)]
        # Charge the round.
        if proto.model == "plain":
            batch = []
            for src in range(n):
                for dst, payload in sends[src]:
                    batch.append((placement[src], placement[dst], payload))
            cluster.commit_round(batch)
        else:
            load = max(max(round_sent), max(round_recv))
            cluster.ledger.charge(max(1, -(-load // n)))
            cluster.ledger.words_moved += sum(round_sent)
        cluster.trace_messages([
            (placement[src], placement[dst], job_index, src, dst, payload)
            for src in range(n) for dst, payload in sends[src]
        ])
        m_r.append(sum(round_sent))
        for slot in range(n):
            sent[slot] += round_sent[slot]
            recv[slot] += round_recv[slot]
        # Receive and compute.
        done = 0
        for slot in range(n):
            if mem_eff and instrument:
                declared = proto.recv_count(states[slot], rnd)
                if declared != round_recv[slot]:
                    raise ProtocolError(
                        "slot %d declared %d receive words but got %d in round %d"
                        % (slot, declared, round_recv[slot], rnd))
            rng = protocol_rng(seed, job_index, slot, rnd + 1)
            result = proto.receive_and_compute(states[slot], rnd, inboxes[slot], rng)
            if isinstance(result, Output):
                if len(result.words) > out_bound:
                    raise ProtocolError("slot %d output %d words, above the bound %d"
                                        % (slot, len(result.words), out_bound))
                outputs[(job_index, slot)] = tuple(result.words)
                done += 1
            else:
                states[slot] = result
                if mem_eff and instrument and _sampled(rnd):
                    words = proto.encode_state(result)
                    if len(words) > mem_bound:
                        raise ProtocolError(
                            "slot %d state needs %d words, above the bound %d"
                            % (slot, len(words), mem_bound))
                    decoded = proto.decode_state(words, n)
                    if proto.encode_state(decoded) != tuple(words):
                        raise ProtocolError("state encoding of job %d does not round-trip"
                                            % job_index)
                    states[slot] = decoded
        if done:
            if done != n:
                raise ProtocolError("job %d finished on %d of %d slots in round %d"
                                    % (job_index, done, n, rnd))
            break
        rnd += 1
    profile = JobProfile(
        ell=rnd + 1,
        standalone_rounds=cluster.ledger.charged_rounds - charged_before,
        m_r=m_r,
        sent=sent,
        recv=recv,
        messages=sum(m_r),
    )
    return profile, outputs


def measure_profile(jobs, seed, constants=None) -> SetProfile:
    """Standalone traffic profile of a job set (throwaway clusters)."""
    constants = constants or merged_constants()
    profiles = []
    for j, job in enumerate(jobs):
        cluster = Cluster(job.n, constants)
        profile, _ = drive_job(cluster, job, j, seed, instrument=False)
        profiles.append(profile)
    n = jobs[0].n if jobs else 1
    return combine_profiles(n, profiles)


def run_naive(jobs, seed, constants=None, *, fidelity="charged", trace=None,
              instrument=True) -> RunResult:
    """Run the job set one job at a time, each on its own dedicated rounds."""
    constants = constants or merged_constants()
    if not jobs:
        raise ProtocolError("empty job set")
    n = jobs[0].n
    cluster = Cluster(n, constants, fidelity=fidelity, trace=trace, seed=seed)
    profiles = []
    outputs = {}
    for j, job in enumerate(jobs):
        if job.n != n:
            raise ProtocolError("jobs disagree on n")
        profile, outs = drive_job(cluster, job, j, seed, instrument=instrument)
        profiles.append(profile)
        outputs.update(outs)
    set_profile = combine_profiles(n, profiles)
    metrics = metrics_from_profile(set_profile, "naive", cluster.ledger.charged_rounds)
    return RunResult(
        metrics=metrics,
        outputs=outputs,
        digest=outputs_digest(outputs),
        annotations={"real_rounds": cluster.ledger.real_rounds,
                     "violations": cluster.ledger.violation_count},
    )
