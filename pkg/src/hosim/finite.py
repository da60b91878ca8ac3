"""Finite reachable fragments and the exact greatest-fixpoint weak similarity on them.

This is the brute-force reference the on-the-fly checker is compared against:
it enumerates a closed finite system and refines the full relation until the
weak-simulation conditions hold, reading the conditions with weak premises.
"""

from __future__ import annotations

from collections import deque

from .opmodel import Fun, Red
from .relations import FiniteRelation


def reachable_fragment(spec, roots, args, limit: int = 200, max_term_size: int = 64):
    """States reachable from ``roots`` by reductions and by applying functions to ``args``.

    Returns None when more than ``limit`` states are found, or when some state
    grows beyond ``max_term_size`` (terms that keep growing never close up).
    """
    model = spec.model
    seen = {}
    queue = deque()
    for t in list(roots) + list(args):
        if t not in seen:
            seen[t] = None
            queue.append(t)
    while queue:
        t = queue.popleft()
        b = model.step(t)
        nxt = [b.next] if isinstance(b, Red) else [b.apply(e) for e in args]
        for u in nxt:
            if u not in seen:
                if len(seen) >= limit or u.size > max_term_size:
                    return None
                seen[u] = None
                queue.append(u)
    return list(seen)


def weak_similarity_gfp(spec, states, args) -> FiniteRelation:
    """Greatest relation on ``states`` satisfying both weak-simulation conditions.

    ``states`` must be closed under reduction and application to ``args``.
    """
    model = spec.model
    index = {t: i for i, t in enumerate(states)}
    behaviour = {t: model.step(t) for t in states}
    for t, b in behaviour.items():
        succ = [b.next] if isinstance(b, Red) else [b.apply(e) for e in args]
        for u in succ:
            if u not in index:
                raise ValueError(f"state set is not closed: {u} missing")

    # p => p' endpoints (reflexive-transitive), and p's normal form if any
    reach, normal = {}, {}
    for t in states:
        chain, cur, visited = [t], t, {t}
        while isinstance(behaviour[cur], Red):
            cur = behaviour[cur].next
            if cur in visited:
                break
            visited.add(cur)
            chain.append(cur)
        reach[t] = chain
        normal[t] = cur if isinstance(behaviour[cur], Fun) else None

    rel = {(p, q) for p in states for q in states}
    changed = True
    while changed:
        changed = False
        for p, q in sorted(rel, key=lambda pq: (index[pq[0]], index[pq[1]])):
            if not _conditions_hold(p, q, rel, reach, normal, behaviour, args):
                rel.discard((p, q))
                changed = True
    return FiniteRelation(tuple(states), frozenset(rel))


def _conditions_hold(p, q, rel, reach, normal, behaviour, args) -> bool:
    for pb in reach[p]:
        if not any((pb, qb) in rel for qb in reach[q]):
            return False
    pn = normal[p]
    if pn is not None:
        qn = normal[q]
        if qn is None:
            return False
        fp, fq = behaviour[pn], behaviour[qn]
        for e in args:
            if (fp.apply(e), fq.apply(e)) not in rel:
                return False
    return True
