"""Howe closure of a relation over a finite, subterm-closed universe."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .relations import FiniteRelation, UniverseMismatch, compose, is_congruence, is_reflexive, is_transitive
from .terms import Term, subterms


def _signature(spec_or_sig):
    return getattr(spec_or_sig, "signature", spec_or_sig)


def _check_universe(r: FiniteRelation, prev: FiniteRelation):
    if set(r.universe) != set(prev.universe):
        raise UniverseMismatch("R and the previous stage must share a universe")
    members = r.members
    for t in r.universe:
        for s in subterms(t):
            if s not in members:
                raise UniverseMismatch(f"universe is not subterm-closed: {s} missing (from {t})")


def _stage(sig, r: FiniteRelation, prev: FiniteRelation):
    """One stage plus the number of tuples blocked only because f(q) left the universe."""
    members = r.members
    after: dict = {}
    for a, b in r.pairs:
        after.setdefault(a, []).append(b)
    related: dict = {}
    for a, b in prev.pairs:
        related.setdefault(a, []).append(b)
    new = set(prev.pairs)
    blocked = 0
    by_head: dict = {}
    for t in r.universe:
        by_head.setdefault(t.head, []).append(t)
    # round-robin over operators keeps intermediate snapshots deterministic
    for name, _ in sig.operators:
        for p in by_head.get(name, ()):
            choices = [related.get(a, ()) for a in p.args]
            for qs in itertools.product(*choices):
                fq = Term(name, qs)
                if fq not in members:
                    blocked += 1
                    continue
                for rr in after.get(fq, ()):
                    new.add((p, rr))
    return prev.with_pairs(new), blocked


def howe_stage(sig, r: FiniteRelation, prev: FiniteRelation) -> FiniteRelation:
    """prev plus every (f(p), r') with prev(p_i, q_i) componentwise and R(f(q), r')."""
    _check_universe(r, prev)
    return _stage(_signature(sig), r, prev)[0]


@dataclass(frozen=True)
class HoweReport:
    closure: FiniteRelation
    stages: int
    blocked: int  # tuples whose f(q) fell outside the universe in the last stage

    def summary(self, r: FiniteRelation, sig) -> dict:
        return {
            "pairs_in": len(r),
            "pairs_out": len(self.closure),
            "stages": self.stages,
            "blocked_by_universe": self.blocked,
            "contains_R": r.pairs <= self.closure.pairs,
            "reflexive": is_reflexive(self.closure),
            "congruence": bool(is_congruence(_signature(sig), self.closure)),
            "weakly_transitive": compose(self.closure, r).pairs <= self.closure.pairs,
            "R_reflexive": is_reflexive(r),
            "R_transitive": is_transitive(r),
        }


def howe_analysis(sig, r: FiniteRelation) -> HoweReport:
    sig = _signature(sig)
    _check_universe(r, r)
    cur, stages, blocked = r, 0, 0
    while True:
        nxt, blocked = _stage(sig, r, cur)
        if nxt.pairs == cur.pairs:
            return HoweReport(cur, stages, blocked)
        cur, stages = nxt, stages + 1


def howe_closure(sig, r: FiniteRelation) -> FiniteRelation:
    """Iterate stages from R until nothing changes."""
    return howe_analysis(sig, r).closure


def subterm_closure(terms) -> list:
    """``terms`` plus all their subterms, smallest first."""
    out = {}
    for t in terms:
        for s in subterms(t):
            out[s] = None
    return sorted(out, key=lambda t: (t.size, str(t)))
