"""Core types for the round-synchronous all-to-all message-passing model.

The system has ``n`` machines.  In every round each ordered pair of machines
may exchange at most one word (a machine may also send a word to itself, and
self-traffic counts against the same budgets).  Values that are polynomial in
``n`` count as a single word.  Protocols are written against logical nodes;
schedulers decide which machine simulates which node.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

# A word is a plain int.  Multi-word payloads travel as Blob objects that
# declare how many words they occupy; the accounting layer only ever looks at
# the declared width, never at the Python size of the object.


class SimulationError(Exception):
    """Base class for every error raised by the simulator."""


class ModelViolation(SimulationError):
    """A committed round broke a communication budget."""


class ProtocolError(SimulationError):
    """A job protocol broke one of its contracts (purity, counts, output)."""


class EncodingOverflow(ProtocolError):
    """A state encoding exceeded the protocol's declared memory bound."""


class InvariantViolation(SimulationError):
    """An internal scheduler invariant failed; indicates a bug, not bad input."""


class RoutingOverflow(SimulationError):
    """A bounded-routing call was given more load than its declared bound."""

    def __init__(self, message, *, phase=None, load=None, bound=None):
        super().__init__(message)
        self.phase = phase
        self.load = load
        self.bound = bound


class SchedulingError(SimulationError):
    """A scheduler was handed a job set it cannot legally run."""


class IoViolation(SimulationError):
    """A job's input or output buffer exceeds the declared I/O budget."""


class ConfigError(SimulationError):
    """A run configuration failed validation."""


class NodeRef(NamedTuple):
    """Identifies logical node ``slot`` of job ``job``."""

    slot: int
    job: int


@dataclass(frozen=True)
class Blob:
    """An opaque multi-word payload.

    ``words`` is the logical width charged against every budget; ``data`` is
    whatever structured content the protocol wants to move and must be
    hashable so traces and digests stay deterministic.
    """

    words: int
    data: tuple

    def __post_init__(self):
        if self.words < 1:
            raise ProtocolError("blob width must be at least one word")


def payload_words(payload) -> int:
    """Logical width of a message payload in words."""
    if isinstance(payload, int):
        return 1
    if isinstance(payload, Blob):
        return payload.words
    raise ProtocolError("payload must be an int word or a Blob: %r" % (payload,))


@dataclass(frozen=True)
class Output:
    """Terminal result of one node; returned once from receive_and_compute."""

    words: tuple

    def __post_init__(self):
        if not all(isinstance(w, int) for w in self.words):
            raise ProtocolError("output words must be ints")


class RngStream:
    """Deterministic random stream keyed by (seed, domain, job, slot, round).

    The key fully determines every draw, so a node re-run under any scheduler
    (or re-run after a rollback) sees identical randomness.  Construction of
    the underlying generator is deferred until the first draw because most
    node-rounds never draw at all.
    """

    __slots__ = ("key", "_gen")

    def __init__(self, key):
        self.key = tuple(int(k) for k in key)
        self._gen = None

    def _generator(self):
        if self._gen is None:
            self._gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.key)))
        return self._gen

    def integers(self, low, high=None) -> int:
        """Uniform int in [0, low) or [low, high)."""
        return int(self._generator().integers(low, high))

    def permutation(self, k) -> tuple:
        return tuple(int(v) for v in self._generator().permutation(k))

    def bits(self, k) -> int:
        """k uniform random bits as a non-negative int."""
        if k <= 0:
            return 0
        raw = self._generator().bytes((k + 7) // 8)
        return int.from_bytes(raw, "big") & ((1 << k) - 1)


# Stream domains.  Protocol code always draws from PROTOCOL streams; the
# schedulers use their own domains so scheduling randomness can never alter
# what a protocol draws.
DOMAIN_PROTOCOL = 0
DOMAIN_SHUFFLE = 1
DOMAIN_DELAY = 2
DOMAIN_ROUTING = 3
DOMAIN_INSTANCE = 9


def protocol_rng(seed, job, slot, rnd) -> RngStream:
    return RngStream((seed, DOMAIN_PROTOCOL, job, slot, rnd))


class JobProtocol:
    """An n-node protocol driven by the simulator.

    Lifecycle of one node: ``init`` consumes the input buffer and produces the
    state as of the end of round 0's computation step.  For each round ``r``
    the simulator calls ``send_step(state, r)`` to collect outgoing messages,
    delivers everything, and then calls ``receive_and_compute(state, r,
    inbox, rng)`` which yields the state after round ``r + 1``'s computation
    step, or an :class:`Output` when the node is done.  ``send_step`` must be
    pure and a node must emit an Output exactly once.

    ``model`` declares the communication discipline of a standalone run:
    ``"plain"`` rounds must respect the one-word-per-ordered-pair budget;
    ``"routed"`` rounds are delivered by the bounded-routing primitive and
    charged by their actual load.
    """

    model = "plain"

    def max_input_words(self, n: int) -> int:
        raise NotImplementedError

    def max_output_words(self, n: int) -> int:
        raise NotImplementedError

    def init(self, slot: int, n: int, input_words: tuple, rng: RngStream):
        raise NotImplementedError

    def send_step(self, state, rnd: int) -> list:
        """Return [(dst_slot, payload), ...] for this node in round ``rnd``."""
        raise NotImplementedError

    def receive_and_compute(self, state, rnd: int, inbox: list, rng: RngStream):
        """Consume round ``rnd``'s inbox; return the next state or an Output.

        ``inbox`` is sorted by source slot (ties keep emission order), so the
        view a node gets never depends on how messages were physically routed.
        """
        raise NotImplementedError


class MemoryEfficientProtocol(JobProtocol):
    """A protocol whose nodes fit in a declared number of words.

    These protocols additionally promise that each node can tell, from its
    own state and the round index alone, exactly how many words it is about
    to send and receive.  That is what lets a scheduler plan a round's
    communication before executing it, and lets node states migrate between
    machines as flat word vectors.
    """

    def memory_bound(self, n: int) -> int:
        raise NotImplementedError

    def send_count(self, state, rnd: int) -> int:
        raise NotImplementedError

    def recv_count(self, state, rnd: int) -> int:
        raise NotImplementedError

    def encode_state(self, state) -> tuple:
        raise NotImplementedError

    def decode_state(self, words: tuple, n: int):
        raise NotImplementedError


@dataclass
class Job:
    """A job instance: the protocol plus one input buffer per slot."""

    protocol: JobProtocol
    inputs: tuple  # tuple of n word-tuples
    meta: dict

    @property
    def n(self) -> int:
        return len(self.inputs)

    def validate_io(self):
        """Check the input buffers against the protocol's declared bound."""
        n = self.n
        bound = self.protocol.max_input_words(n)
        for slot, buf in enumerate(self.inputs):
            if len(buf) > bound:
                raise ConfigError(
                    "input of slot %d holds %d words, above the declared bound %d"
                    % (slot, len(buf), bound)
                )
