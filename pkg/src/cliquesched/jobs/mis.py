"""Maximal independent set in the routed-clique discipline.

The protocol has four parts, driven by a phase tag in each node's state so
that the round schedule is always globally agreed:

1. Ranking: slot 0 draws a uniform permutation of 1..n and sends slot ``i``
   its rank (round 0); everyone broadcasts their rank (round 1).

2. Degree-reduction loop, iterations ``k = 0, 1, ...`` with a growing rank
   threshold ``R_k = n / max(Delta,2)**(0.75**k)``.  Round A: every active
   node reports its active degree to slot 0, and every eligible edge (both
   endpoints active, both ranks at most ``R_k``) is reported by its
   lower-ranked endpoint.  Slot 0 then runs greedy-by-rank over everything
   it knows.  Round B: slot 0 sends every node a verdict word (continue /
   move on / finished, plus a membership bit).  On continue, round C has the
   new members announce themselves to their graph neighbors (who thereby
   become inactive) and round D has the newly inactive announce that.

3. Small-degree phase, entered once the maximum active degree drops below
   ``Delta' = min(Delta, ceil(log2 n))``: every active node draws a block
   of random bits, then ``K`` neighborhood-doubling rounds ship each node's
   known edges and bit blocks to everything within distance ``2**k`` of it.
   Each node then locally simulates ``SIM_R`` rounds of a marking process
   (mark with probability ``2**-e``, join when marked with no marked
   neighbor, adapt ``e`` to the effective degree) and keeps only its own
   join/no-join outcome, which is sound because the collected ball has
   radius at least ``2 * SIM_R``, the dependency radius of the simulation.

4. Wrap-up: joiners announce to their neighbors (ground truth, one round);
   survivors announce they are still undecided; survivors report their
   remaining mutual edges and presence to slot 0; slot 0 answers with a
   greedy verdict for each survivor, and every node outputs its membership
   bit.
"""

from __future__ import annotations

from ..constants import log2_ceil, ln_ceil
from ..model import Blob, JobProtocol, Output, ProtocolError

ALPHA = 0.75


def unpack_adjacency(words, n):
    """Bitmap row packed `word_bits(n)` bits per word -> sorted neighbor list."""
    w = word_bits(n)
    nbrs = []
    for v in range(n):
        if (words[v // w] >> (v % w)) & 1:
            nbrs.append(v)
    return nbrs


def word_bits(n):
    return max(1, log2_ceil(n))


def pack_adjacency(nbrs, n):
    w = word_bits(n)
    words = [0] * -(-n // w)
    for v in nbrs:
        words[v // w] |= 1 << (v % w)
    return tuple(words)


def small_degree_threshold(n, delta):
    """Active degree below which the reduction loop hands over to the
    locally-simulated phase."""
    return min(delta, max(1, log2_ceil(n)))


def small_phase_shape(n, delta):
    """(sim rounds, chunk bits, doubling iterations, bit words) for the
    small-degree phase; all four are fixed by n and the max degree.

    One simulated round has dependency radius two (marks cross an edge, then
    joins and deaths cross an edge), so a node's own outcome after
    ``sim_rounds`` rounds is determined by its ``2*sim_rounds`` ball; the
    doubling count is chosen so the collected radius ``2**doublings - 1``
    covers that.
    """
    delta_small = max(2, small_degree_threshold(n, delta))
    sim_rounds = max(1, log2_ceil(delta_small))
    chunk_bits = log2_ceil(delta_small) + 2
    doublings = max(1, log2_ceil(2 * sim_rounds + 1))
    bit_words = -(-(sim_rounds * chunk_bits) // word_bits(n))
    return sim_rounds, chunk_bits, doublings, bit_words


def simulate_marking(nodes, adj, bits, sim_rounds, chunk_bits):
    """Deterministic local run of the desire-level marking process.

    ``bits[v]`` is v's random block; round r consumes chunk r (low to high).
    Returns the set of nodes that joined.  Every quantity is an integer:
    probabilities 2**-e are held as ``2**(chunk_bits - e)`` so the effective
    degree test `d >= 2` is exact.  Each round reads only the start-of-round
    snapshot of its neighbors, so the outcome at a node after ``sim_rounds``
    rounds depends only on its distance-``2*sim_rounds`` ball.
    """
    mask = (1 << chunk_bits) - 1
    scale = 1 << chunk_bits
    exp = {v: 1 for v in nodes}
    alive = {v: True for v in nodes}
    joined = set()
    for r in range(sim_rounds):
        marked = set()
        for v in nodes:
            if not alive[v]:
                continue
            chunk = (bits[v] >> (r * chunk_bits)) & mask
            if chunk < (1 << (chunk_bits - exp[v])):
                marked.add(v)
        joined_now = [v for v in sorted(marked)
                      if not any(u in marked for u in adj[v])]
        for v in joined_now:
            joined.add(v)
            alive[v] = False
            for u in adj[v]:
                alive[u] = False
        new_exp = {}
        for v in nodes:
            if not alive[v]:
                continue
            d = sum(scale >> exp[u] for u in adj[v] if alive[u])
            if d >= 2 * scale:
                new_exp[v] = min(chunk_bits, exp[v] + 1)
            else:
                new_exp[v] = max(1, exp[v] - 1)
        exp.update(new_exp)
    return joined


def check_mis(n, edges, members):
    """Raise AssertionError unless ``members`` is a maximal independent set."""
    members = set(members)
    adj = {v: set() for v in range(n)}
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    for v in members:
        bad = adj[v] & members
        if bad:
            raise AssertionError("members %d and %d are adjacent" % (v, min(bad)))
    for v in range(n):
        if v not in members and not (adj[v] & members):
            raise AssertionError("node %d could join the set" % v)


class MisState:
    __slots__ = (
        "slot", "n", "delta", "nbrs", "phase", "k", "rank", "ranks", "status",
        "nbr_active", "new_member", "just_died", "leader",
        "h_nbrs", "bits", "items", "item_keys", "ptrs", "known", "survivors",
    )

    def __init__(self, slot, n, delta, nbrs):
        self.slot = slot
        self.n = n
        self.delta = delta
        self.nbrs = nbrs
        self.phase = "rank0"
        self.k = 0
        self.rank = None
        self.ranks = None              # rank of every slot
        self.status = "active"         # active | member | dead
        self.nbr_active = {v: True for v in nbrs}
        self.new_member = False        # joined in the current loop iteration
        self.just_died = False         # died in the current loop iteration
        self.leader = None             # slot 0's bookkeeping
        # Small-degree phase fields.
        self.h_nbrs = None             # neighbors active at phase entry
        self.bits = 0
        self.items = None              # append-only knowledge items
        self.item_keys = None
        self.ptrs = None               # per-target count of items already sent
        self.known = None              # leader: survivor edges/presence
        self.survivors = None


class LeaderBook:
    """Slot 0's cross-iteration bookkeeping for the reduction loop."""

    __slots__ = ("adj", "members", "blocked", "verdicts")

    def __init__(self):
        self.adj = {}        # reported edges, both directions
        self.members = set()
        self.blocked = set()  # reported neighbors of members
        self.verdicts = None  # per-slot word for the next round-B send

    def note_edge(self, a, b):
        self.adj.setdefault(a, set()).add(b)
        self.adj.setdefault(b, set()).add(a)

    def greedy(self, candidates, ranks):
        """Add candidates in rank order, skipping anything blocked."""
        fresh = []
        for v in sorted(candidates, key=lambda v: ranks[v]):
            if v in self.members or v in self.blocked:
                continue
            self.members.add(v)
            fresh.append(v)
            self.blocked |= self.adj.get(v, set())
        return fresh


class MisProtocol(JobProtocol):
    """Randomized MIS; routed model; not memory-efficient."""

    model = "routed"
    name = "mis"

    def max_input_words(self, n):
        return -(-n // word_bits(n)) + 1

    def max_output_words(self, n):
        return 1

    def init(self, slot, n, input_words, rng):
        delta = input_words[0]
        nbrs = unpack_adjacency(input_words[1:], n)
        state = MisState(slot, n, delta, nbrs)
        if slot == 0:
            state.leader = LeaderBook()
            state.ranks = tuple(rng.permutation(n))  # ranks minus one, by slot
        return state

    # ------------------------------------------------------------------
    # helpers

    def _threshold(self, state):
        base = max(2, state.delta)
        return state.n / base ** (ALPHA ** state.k)

    def _ball_radius(self, state, edges):
        """Nodes within distance 2**k of self in the known subgraph."""
        adj = {}
        for a, b in edges:
            adj.setdefault(a, set()).add(b)
            adj.setdefault(b, set()).add(a)
        limit = 1 << state.k
        seen = {state.slot: 0}
        frontier = [state.slot]
        for dist in range(1, limit + 1):
            nxt = []
            for v in frontier:
                for u in adj.get(v, ()):
                    if u not in seen:
                        seen[u] = dist
                        nxt.append(u)
            frontier = nxt
        seen.pop(state.slot)
        return sorted(seen)

    def _known_edges(self, state):
        return [it[1:] for it in state.items if it[0] == "he"]

    def _ball_plan(self, state):
        """Pure plan of this doubling round: [(target, first_new_item_idx)]."""
        targets = self._ball_radius(state, self._known_edges(state))
        plan = []
        for v in targets:
            start = state.ptrs.get(v, 0)
            if start < len(state.items):
                plan.append((v, start))
        return plan

    def _enter_small_phase(self, state, rng):
        sim_rounds, chunk_bits, _, _ = small_phase_shape(state.n, state.delta)
        state.k = 0
        state.h_nbrs = sorted(v for v in state.nbrs if state.nbr_active[v])
        state.items = []
        state.item_keys = set()
        state.ptrs = {}
        if state.status == "active":
            state.bits = rng.bits(sim_rounds * chunk_bits)
            self._learn(state, ("hb", state.slot, state.bits))
            for v in state.h_nbrs:
                a, b = min(state.slot, v), max(state.slot, v)
                self._learn(state, ("he", a, b))
        state.phase = "ball"

    def _learn(self, state, item):
        key = item[:3]
        if key not in state.item_keys:
            state.item_keys.add(key)
            state.items.append(item)

    def _item_words(self, state, item):
        if item[0] == "he":
            return 2
        _, _, _, bit_words = small_phase_shape(state.n, state.delta)
        return bit_words + 1  # owner id plus the packed bit block

    # ------------------------------------------------------------------
    # round structure

    def send_step(self, state, rnd):
        phase = state.phase
        slot = state.slot
        if phase == "rank0":
            if slot == 0:
                return [(i, state.ranks[i] + 1) for i in range(state.n)]
            return []
        if phase == "rank1":
            return [(i, state.rank) for i in range(state.n)]
        if phase == "loopA":
            if state.status != "active":
                return []
            limit = self._threshold(state)
            out = [(0, sum(1 for v in state.nbrs if state.nbr_active[v]))]
            if state.rank <= limit:
                for v in state.nbrs:
                    if state.nbr_active[v] and state.rank < state.ranks[v] <= limit:
                        out.append((0, Blob(2, ("e", slot, v))))
            return out
        if phase == "loopB":
            if slot == 0:
                book = state.leader
                return [(i, book.verdicts[i]) for i in range(state.n)]
            return []
        if phase == "loopC":
            if state.new_member:
                return [(v, 1) for v in state.nbrs]
            return []
        if phase == "loopD":
            if state.just_died:
                return [(v, 2) for v in state.nbrs]
            return []
        if phase == "ball":
            if state.status != "active":
                return []
            out = []
            for target, start in self._ball_plan(state):
                items = tuple(state.items[start:])
                words = sum(self._item_words(state, it) for it in items)
                out.append((target, Blob(max(1, words), ("hk", items))))
            return out
        if phase == "wu_j":
            if state.status == "member" and state.new_member:
                return [(v, 1) for v in state.h_nbrs]
            return []
        if phase == "wu_a":
            if state.status == "active":
                return [(v, 3) for v in state.h_nbrs]
            return []
        if phase == "wu_e":
            if state.status != "active":
                return []
            out = [(0, 4)]
            for v in state.survivors:
                if state.ranks[v] > state.rank:
                    out.append((0, Blob(2, ("e", slot, v))))
            return out
        if phase == "wu_v":
            if slot == 0:
                book = state.known
                return [(v, 1 if v in book["members"] else 0) for v in book["presence"]]
            return []
        raise ProtocolError("no send phase %r" % phase)

    def receive_and_compute(self, state, rnd, inbox, rng):
        phase = state.phase
        if phase == "rank0":
            state.rank = inbox[0][1]
            state.phase = "rank1"
            return state
        if phase == "rank1":
            ranks = [0] * state.n
            for src, w in inbox:
                ranks[src] = w
            state.ranks = tuple(ranks)
            state.phase = "loopA"
            return state
        if phase == "loopA":
            if state.slot == 0:
                self._leader_decide(state, inbox)
            state.phase = "loopB"
            return state
        if phase == "loopB":
            verdict = inbox[0][1]
            mode, member = verdict & 3, verdict >> 2
            state.new_member = bool(member) and state.status == "active"
            if state.new_member:
                state.status = "member"
            if mode == 2:
                return Output((1 if state.status == "member" else 0,))
            if mode == 1:
                self._enter_small_phase(state, rng)
                return state
            state.phase = "loopC"
            return state
        if phase == "loopC":
            state.just_died = False
            for src, w in inbox:
                state.nbr_active[src] = False
                if state.status == "active":
                    state.status = "dead"
                    state.just_died = True
            state.phase = "loopD"
            return state
        if phase == "loopD":
            for src, w in inbox:
                state.nbr_active[src] = False
            state.new_member = False
            state.just_died = False
            state.k += 1
            if state.k > state.n + 20 * ln_ceil(state.n) + 10:
                raise ProtocolError("reduction loop failed to terminate")
            state.phase = "loopA"
            return state
        if phase == "ball":
            for target, start in self._ball_plan(state):
                state.ptrs[target] = len(state.items)
            for src, blob in inbox:
                for item in blob.data[1]:
                    self._learn(state, item)
            sim_rounds, chunk_bits, doublings, _ = small_phase_shape(state.n, state.delta)
            state.k += 1
            if state.k < doublings:
                return state
            if state.status == "active":
                edges = self._known_edges(state)
                nodes = sorted({state.slot}
                               | {a for a, b in edges} | {b for a, b in edges})
                adj = {v: set() for v in nodes}
                for a, b in edges:
                    adj[a].add(b)
                    adj[b].add(a)
                bits = {v: 0 for v in nodes}
                for it in state.items:
                    if it[0] == "hb":
                        bits[it[1]] = it[2]
                joined = simulate_marking(nodes, adj, bits, sim_rounds, chunk_bits)
                if state.slot in joined:
                    state.status = "member"
                    state.new_member = True
            state.phase = "wu_j"
            return state
        if phase == "wu_j":
            if inbox and state.status == "active":
                state.status = "dead"
            state.phase = "wu_a"
            return state
        if phase == "wu_a":
            state.survivors = sorted(src for src, _ in inbox)
            state.phase = "wu_e"
            return state
        if phase == "wu_e":
            if state.slot == 0:
                presence = sorted(src for src, w in inbox if isinstance(w, int))
                adj = {v: set() for v in presence}
                for src, w in inbox:
                    if isinstance(w, Blob):
                        a, b = w.data[1], w.data[2]
                        adj[a].add(b)
                        adj[b].add(a)
                members = set()
                for v in sorted(presence, key=lambda v: state.ranks[v]):
                    if not adj[v] & members:
                        members.add(v)
                state.known = {"presence": presence, "members": members}
            state.phase = "wu_v"
            return state
        if phase == "wu_v":
            if inbox and inbox[0][1] == 1:
                state.status = "member"
            elif inbox:
                state.status = "dead"
            return Output((1 if state.status == "member" else 0,))
        raise ProtocolError("no receive phase %r" % phase)

    # ------------------------------------------------------------------

    def _leader_decide(self, state, inbox):
        book = state.leader
        degrees = {}
        for src, w in inbox:
            if isinstance(w, Blob):
                book.note_edge(w.data[1], w.data[2])
            else:
                degrees[src] = w
        ranks = state.ranks
        if not degrees:
            mode, fresh = 2, []
        elif max(degrees.values()) == 0:
            mode = 2
            fresh = [v for v in sorted(degrees) if v not in book.members]
            book.members.update(fresh)
        else:
            if max(degrees.values()) < small_degree_threshold(state.n, state.delta):
                mode, fresh = 1, []
            else:
                limit = self._threshold(state)
                eligible = [v for v in degrees if ranks[v] <= limit]
                fresh = book.greedy(eligible, ranks)
                mode = 0
        fresh = set(fresh)
        book.verdicts = [mode + 4 * (1 if v in fresh else 0) for v in range(state.n)]
