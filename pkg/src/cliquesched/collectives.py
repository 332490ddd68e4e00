"""In-rounds collective operations built on committed rounds.

These run as real simulated rounds (every message validated against the
per-pair budget), so their charges are measured, not assumed.
"""

from __future__ import annotations

from .model import InvariantViolation


def multiple_broadcast(cluster, lists):
    """Make every machine's word list known to every machine.

    ``lists[i]`` is machine i's (possibly empty) list of words.  Round one
    broadcasts the per-machine counts; afterwards every machine knows the
    global numbering, and message number ``k*n + i`` is dealt to machine
    ``i`` in round ``2k+2`` and broadcast by it in round ``2k+3``.  Total
    charge: ``1 + 2*ceil(total/n)`` rounds.  Returns the concatenation in
    machine order.
    """
    n = cluster.n
    counts = {i: len(lists[i]) for i in range(n)}
    cluster.broadcast_round(counts)
    offsets = [0] * (n + 1)
    for i in range(n):
        offsets[i + 1] = offsets[i] + counts[i]
    total = offsets[n]
    flat = []
    for i in range(n):
        flat.extend(lists[i])

    def holder(idx):
        lo, hi = 0, n
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if offsets[mid] <= idx:
                lo = mid
            else:
                hi = mid
        return lo

    result = [None] * total
    phases = -(-total // n)
    for k in range(phases):
        deal = []
        for i_dst in range(n):
            idx = k * n + i_dst
            if idx >= total:
                break
            deal.append((holder(idx), i_dst, flat[idx]))
        dealt = cluster.commit_round(deal)
        values = {dst: arr[0][1] for dst, arr in dealt.items()}
        spread = cluster.broadcast_round(values)
        for _, arrivals in spread.items():
            for src, word in arrivals:
                result[k * n + src] = word
            break  # every machine sees the same words; read one inbox
    if any(v is None for v in result):
        raise InvariantViolation("multiple broadcast lost a word")
    return result


def nary_search(cluster, rows, x, levels=None):
    """Find the first column where the running total reaches ``x``.

    ``rows[i][j]`` is machine i's private count for column j; the running
    total of column j is ``sum_i sum_{j' <= j} rows[i][j']``.  The search
    space is padded with zero columns up to ``n**levels``.  Each level costs
    two rounds: every machine sends its own prefix sum at the n equidistant
    cut points (one word to each machine), then every machine broadcasts the
    combined prefix it collected.  Returns the column index, or None when the
    grand total never reaches ``x``.
    """
    n = cluster.n
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise InvariantViolation("ragged count rows")
    if x <= 0:
        raise InvariantViolation("search threshold must be positive")
    if levels is None:
        levels = 1
        while n ** levels < width:
            levels += 1
    if n ** levels < width:
        raise InvariantViolation("search space wider than n**levels")

    # prefix[i][j] = sum of rows[i][:j], with the padded tail staying flat.
    prefixes = []
    for i in range(n):
        acc = [0]
        for v in rows[i]:
            acc.append(acc[-1] + v)
        prefixes.append(acc)

    def own_prefix(i, col):
        return prefixes[i][min(col, width)]

    lo = 0
    span = n ** levels
    q_star = 0
    combined = [0] * n
    for _ in range(levels):
        span //= n
        cuts = [lo + (q + 1) * span for q in range(n)]
        # Round A: machine i tells machine q its own prefix at cut q.
        batch = [(i, q, own_prefix(i, cuts[q])) for i in range(n) for q in range(n)]
        gathered = cluster.commit_round(batch)
        sums = {q: sum(w for _, w in gathered.get(q, [])) for q in range(n)}
        # Round B: machine q broadcasts the combined prefix at its cut.
        spread = cluster.broadcast_round(sums)
        combined = [None] * n
        for src, word in spread[0]:
            combined[src] = word
        # Largest q with combined prefix below x; cut 0 of the level (= lo)
        # is below x by the search invariant, so q = 0 is the fallback.
        q_star = 0
        for q in range(1, n):
            if combined[q - 1] < x:
                q_star = q
        lo += q_star * span
    # After the last level the span is one column; lo is the crossing column
    # iff the combined prefix just past it (the last level's cut q_star)
    # reached x.
    if combined[q_star] < x or lo >= width:
        return None
    return lo
