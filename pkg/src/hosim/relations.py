"""Finite relations over term universes and their Egli-Milner style liftings."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .opmodel import Fun, Red
from .terms import Signature, TermParser, tokenize


class UniverseMismatch(Exception):
    pass


class OutOfUniverse(Exception):
    def __init__(self, term):
        super().__init__(f"term {term} lies outside the universe")
        self.term = term


@dataclass(frozen=True)
class FiniteRelation:
    universe: tuple
    pairs: frozenset

    def __post_init__(self):
        object.__setattr__(self, "universe", tuple(self.universe))
        object.__setattr__(self, "pairs", frozenset(self.pairs))
        members = set(self.universe)
        for a, b in self.pairs:
            if a not in members or b not in members:
                raise OutOfUniverse(a if a not in members else b)

    @classmethod
    def identity(cls, universe) -> "FiniteRelation":
        universe = tuple(universe)
        return cls(universe, frozenset((a, a) for a in universe))

    @classmethod
    def empty(cls, universe) -> "FiniteRelation":
        return cls(tuple(universe), frozenset())

    @property
    def members(self) -> frozenset:
        return frozenset(self.universe)

    def __contains__(self, pair) -> bool:
        return pair in self.pairs

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.sorted_pairs())

    def __le__(self, other: "FiniteRelation") -> bool:
        return self.pairs <= other.pairs

    def with_pairs(self, pairs) -> "FiniteRelation":
        return FiniteRelation(self.universe, frozenset(pairs))

    def union(self, other: "FiniteRelation") -> "FiniteRelation":
        _same_universe(self, other)
        return self.with_pairs(self.pairs | other.pairs)

    def successors(self, a) -> list:
        return [b for (x, b) in self.sorted_pairs() if x == a]

    def sorted_pairs(self) -> list:
        pos = {t: i for i, t in enumerate(self.universe)}
        return sorted(self.pairs, key=lambda ab: (pos[ab[0]], pos[ab[1]]))

    def restrict(self, universe) -> "FiniteRelation":
        keep = set(universe)
        return FiniteRelation(
            tuple(t for t in self.universe if t in keep),
            frozenset((a, b) for a, b in self.pairs if a in keep and b in keep),
        )

    def to_text(self) -> str:
        lines = [f"term {t}" for t in self.universe]
        lines += [f"pair {a} {b}" for a, b in self.sorted_pairs()]
        return "\n".join(lines) + "\n"


def _same_universe(r: FiniteRelation, s: FiniteRelation):
    if set(r.universe) != set(s.universe):
        raise UniverseMismatch("relations live on different universes")


def compose(r: FiniteRelation, s: FiniteRelation) -> FiniteRelation:
    """Pairs (a, c) with r(a, b) and s(b, c) for some b."""
    _same_universe(r, s)
    after: dict = {}
    for b, c in s.pairs:
        after.setdefault(b, []).append(c)
    out = {(a, c) for a, b in r.pairs for c in after.get(b, ())}
    return r.with_pairs(out)


def is_reflexive(r: FiniteRelation) -> bool:
    return all((a, a) in r.pairs for a in r.universe)


def is_transitive(r: FiniteRelation) -> bool:
    return compose(r, r).pairs <= r.pairs


@dataclass(frozen=True)
class CongruenceViolation:
    """Arguments related componentwise whose applications are not related."""

    operator: str
    left_args: tuple
    right_args: tuple

    def __bool__(self):
        return False

    def __str__(self):
        def app(args):
            return self.operator + (f"({','.join(map(str, args))})" if args else "")

        return f"{app(self.left_args)} not related to {app(self.right_args)}"


def is_congruence(sig: Signature, r: FiniteRelation):
    """True, or a falsy CongruenceViolation for the first offending application.

    Only applications whose results lie in the universe are checked.
    ``sig`` may also be a spec document carrying a signature.
    """
    sig = getattr(sig, "signature", sig)
    by_head: dict = {}
    for t in r.universe:
        by_head.setdefault(t.head, []).append(t)
    for name, _ in sig.operators:
        terms = by_head.get(name, [])
        for p in terms:
            for q in terms:
                if (p, q) in r.pairs:
                    continue
                if all((a, b) in r.pairs for a, b in zip(p.args, q.args)):
                    return CongruenceViolation(name, p.args, q.args)
    return True


def egli_milner_related(rel, us: Iterable, vs: Iterable) -> bool:
    """For every u in us some v in vs has rel(u, v)."""
    pairs = rel.pairs if isinstance(rel, FiniteRelation) else rel
    vs = list(vs)
    return all(any((u, v) in pairs for v in vs) for u in us)


def b0_lift_related(r: FiniteRelation, s: FiniteRelation, u, v, plug=None) -> bool:
    """Lifting of (r, s) to behaviours: Red/Red via s, Fun/Fun pointwise on r-related arguments.

    Raises OutOfUniverse when an instantiated body falls outside s's universe.
    """
    members = s.members
    if isinstance(u, Red) and isinstance(v, Red):
        for t in (u.next, v.next):
            if t not in members:
                raise OutOfUniverse(t)
        return (u.next, v.next) in s.pairs
    if isinstance(u, Fun) and isinstance(v, Fun):
        plug = plug or (lambda b, e: b.apply(e))
        for x, x2 in r.sorted_pairs():
            left, right = plug(u, x), plug(v, x2)
            for t in (left, right):
                if t not in members:
                    raise OutOfUniverse(t)
            if (left, right) not in s.pairs:
                return False
        return True
    return False


# --- text format ---------------------------------------------------------------

def parse_relation(text: str, sig: Signature | None = None, universe=()) -> FiniteRelation:
    """Read ``pair <term> <term>`` (and optional ``term <term>``) lines.

    The universe is ``universe`` plus every term mentioned, in first-seen order.
    """
    order = list(universe)
    seen = set(order)
    pairs = set()

    def note(t):
        if t not in seen:
            seen.add(t)
            order.append(t)

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        keyword, _, rest = line.partition(" ")
        parser = TermParser(tokenize(rest), sig)
        try:
            if keyword == "pair":
                a = parser.term()
                b = parser.term()
                note(a)
                note(b)
                pairs.add((a, b))
            elif keyword == "term":
                note(parser.term())
            else:
                raise ValueError(f"expected 'pair' or 'term', found {keyword!r}")
            if parser.peek() is not None:
                raise ValueError(f"trailing input {parser.peek()!r}")
        except Exception as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    return FiniteRelation(tuple(order), frozenset(pairs))
