"""Signatures, closed and open terms, substitution and enumeration."""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Iterator, Mapping


class TermError(Exception):
    pass


class UnknownOperator(TermError):
    def __init__(self, name):
        super().__init__(f"unknown operator {name!r}")
        self.name = name


class ArityMismatch(TermError):
    def __init__(self, name, expected, got):
        super().__init__(f"operator {name!r} expects {expected} argument(s), got {got}")
        self.name = name
        self.expected = expected
        self.got = got


class UnboundMetavariable(TermError):
    def __init__(self, name):
        super().__init__(f"unbound metavariable {name!r}")
        self.name = name


class TermSyntaxError(TermError):
    pass


class Var:
    """A metavariable leaf of an open term."""

    __slots__ = ("name", "_hash")

    def __init__(self, name: str):
        self.name = name
        self._hash = hash(("var", name))

    size = 0

    def __eq__(self, other):
        return isinstance(other, Var) and other.name == self.name

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Var({self.name!r})"

    def __str__(self):
        return self.name

    @property
    def is_closed(self):
        return False


class Term:
    """An operator applied to argument terms.

    Terms are immutable; the hash and size are computed once at construction,
    which keeps them cheap as dictionary keys in the simulation checker.
    """

    __slots__ = ("head", "args", "_hash", "size", "_closed")

    def __init__(self, head: str, args: Iterable["Term | Var"] = ()):
        self.head = head
        self.args = tuple(args)
        self._hash = hash((head, self.args))
        self.size = 1 + sum(a.size for a in self.args)
        self._closed = all(a.is_closed for a in self.args)

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Term) or self._hash != other._hash:
            return False
        # iterative so that very deep terms do not hit the recursion limit;
        # generated terms share subterms, so each pair is compared once
        stack = [(self, other)]
        done = set()
        while stack:
            a, b = stack.pop()
            if a is b or (id(a), id(b)) in done:
                continue
            done.add((id(a), id(b)))
            if type(a) is not type(b) or hash(a) != hash(b):
                return False
            if isinstance(a, Var):
                if a.name != b.name:
                    return False
                continue
            if a.head != b.head or len(a.args) != len(b.args):
                return False
            stack.extend(zip(a.args, b.args))
        return True

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Term({str(self)!r})"

    def __str__(self):
        if not self.args:
            return self.head
        # iterative for the same reason as __eq__
        parts, stack = [], [self]
        while stack:
            t = stack.pop()
            if isinstance(t, str):
                parts.append(t)
            elif isinstance(t, Var) or not t.args:
                parts.append(str(t) if isinstance(t, Var) else t.head)
            else:
                parts.append(t.head + "(")
                stack.append(")")
                for i, a in enumerate(reversed(t.args)):
                    stack.append(a)
                    if i < len(t.args) - 1:
                        stack.append(",")
        return "".join(parts)

    @property
    def is_closed(self):
        return self._closed


def const(name: str) -> Term:
    return Term(name, ())


def variables(t) -> frozenset:
    """Names of the metavariables occurring in ``t``."""
    out, stack = set(), [t]
    while stack:
        u = stack.pop()
        if isinstance(u, Var):
            out.add(u.name)
        elif not u.is_closed:
            stack.extend(u.args)
    return frozenset(out)


def subterms(t) -> Iterator[Term]:
    stack = [t]
    while stack:
        u = stack.pop()
        yield u
        if isinstance(u, Term):
            stack.extend(reversed(u.args))


@dataclass(frozen=True)
class Signature:
    operators: tuple  # of (name, arity)

    def __post_init__(self):
        object.__setattr__(self, "operators", tuple((str(n), int(a)) for n, a in self.operators))
        names = [n for n, _ in self.operators]
        if len(set(names)) != len(names):
            raise TermError(f"duplicate operator names in {names}")
        for n, a in self.operators:
            if a < 0:
                raise TermError(f"negative arity for {n!r}")

    @classmethod
    def of(cls, **arities) -> "Signature":
        return cls(tuple(arities.items()))

    @property
    def names(self) -> tuple:
        return tuple(n for n, _ in self.operators)

    def arity(self, name: str) -> int:
        for n, a in self.operators:
            if n == name:
                return a
        raise UnknownOperator(name)

    def __contains__(self, name) -> bool:
        return any(n == name for n, _ in self.operators)

    @property
    def constants(self) -> tuple:
        return tuple(n for n, a in self.operators if a == 0)

    def __str__(self):
        return "{" + " ".join(f"{n}/{a}" for n, a in self.operators) + "}"


def check_term(sig: Signature, t, allow_vars: bool = False) -> None:
    """Raise if ``t`` is not a well-formed term over ``sig``."""
    stack = [t]
    while stack:
        u = stack.pop()
        if isinstance(u, Var):
            if not allow_vars:
                raise UnboundMetavariable(u.name)
            continue
        n = sig.arity(u.head)
        if n != len(u.args):
            raise ArityMismatch(u.head, n, len(u.args))
        stack.extend(u.args)


def substitute(t, binding: Mapping[str, object], keep: Iterable[str] = ()):
    """Replace metavariables of ``t`` according to ``binding``.

    Variables named in ``keep`` may stay unbound (they survive in the result);
    any other unbound variable raises :class:`UnboundMetavariable`.
    """
    keep = frozenset(keep)
    # explicit post-order walk memoised on object identity: generated bodies
    # can be deep, and shared subterms would otherwise be rebuilt many times
    done: dict = {}
    stack = [(t, False)]
    while stack:
        s, expanded = stack.pop()
        if id(s) in done:
            continue
        if isinstance(s, Var):
            if s.name in binding:
                done[id(s)] = binding[s.name]
            elif s.name in keep:
                done[id(s)] = s
            else:
                raise UnboundMetavariable(s.name)
        elif s.is_closed:
            done[id(s)] = s
        elif expanded:
            done[id(s)] = Term(s.head, [done[id(a)] for a in s.args])
        else:
            stack.append((s, True))
            stack.extend((a, False) for a in s.args if id(a) not in done)
    return done[id(t)]


def term_key(t) -> tuple:
    # size first, then the printed form
    return (t.size, str(t))


@lru_cache(maxsize=64)
def _terms_by_size(sig: Signature, max_size: int) -> tuple:
    by_size: list[list[Term]] = [[] for _ in range(max_size + 1)]
    for s in range(1, max_size + 1):
        bucket = []
        for name, n in sig.operators:
            if n == 0:
                if s == 1:
                    bucket.append(Term(name))
                continue
            for split in _compositions(s - 1, n):
                pools = [by_size[k] for k in split]
                for combo in itertools.product(*pools):
                    bucket.append(Term(name, combo))
        bucket.sort(key=str)
        by_size[s] = bucket
    return tuple(tuple(b) for b in by_size)


def _compositions(total: int, parts: int) -> Iterator[tuple]:
    if parts == 1:
        if total >= 1:
            yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def enumerate_terms(sig: Signature, max_size: int) -> list:
    """All closed terms with at most ``max_size`` operator occurrences, size-lex ordered."""
    if max_size < 1:
        raise ValueError("max_size must be >= 1")
    by_size = _terms_by_size(sig, max_size)
    return [t for bucket in by_size for t in bucket]


def random_term(sig: Signature, max_size: int, rng, leaves: tuple = ()) -> Term | None:
    """A random term of size at most ``max_size``.

    ``leaves`` are extra nullary choices (e.g. metavariables) that cost nothing.
    Returns None when the signature has no constants and no leaves are given.
    """
    nullary = [Term(c) for c in sig.constants] + list(leaves)
    if not nullary:
        return None

    def gen(budget):
        options = [(n, a) for n, a in sig.operators if a > 0 and a <= budget - 1]
        if budget <= 1 or not options or rng.random() < 0.35:
            leaf = rng.choice(nullary)
            return leaf
        name, n = rng.choice(options)
        # every argument gets at least one unit of the remaining budget
        parts = [1] * n
        for _ in range(budget - 1 - n):
            parts[rng.randrange(n)] += 1
        return Term(name, [gen(p) for p in parts])

    return gen(rng.randint(1, max_size))


# --- concrete syntax ---------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:([A-Za-z_][A-Za-z0-9_']*)|(.))")


def tokenize(text: str) -> list:
    toks = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            break
        toks.append(m.group(1) or m.group(2))
        pos = m.end()
    return [t for t in toks if t and not t.isspace()]


class TermParser:
    """Recursive-descent reader for ``f(t1,...,tn)`` terms over a token list."""

    def __init__(self, tokens, sig: Signature | None = None,
                 is_var: Callable[[str], bool] = lambda name: False):
        self.toks = list(tokens)
        self.pos = 0
        self.sig = sig
        self.is_var = is_var

    def peek(self):
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def take(self, expected=None):
        tok = self.peek()
        if tok is None or (expected is not None and tok != expected):
            want = f"{expected!r}" if expected else "a token"
            raise TermSyntaxError(f"expected {want}, found {tok!r}")
        self.pos += 1
        return tok

    def term(self):
        name = self.take()
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_']*", name):
            raise TermSyntaxError(f"expected an identifier, found {name!r}")
        if self.is_var(name):
            return Var(name)
        args = []
        if self.peek() == "(":
            self.take("(")
            if self.peek() != ")":
                args.append(self.term())
                while self.peek() == ",":
                    self.take(",")
                    args.append(self.term())
            self.take(")")
        if self.sig is not None:
            n = self.sig.arity(name)
            if n != len(args):
                raise ArityMismatch(name, n, len(args))
        return Term(name, args)


def parse_term(text: str, sig: Signature | None = None) -> Term:
    """Parse a closed term such as ``app(app(S,K),K)``."""
    parser = TermParser(tokenize(text), sig)
    t = parser.term()
    if parser.peek() is not None:
        raise TermSyntaxError(f"trailing input after term: {parser.peek()!r}")
    return t
