"""Call-by-name lambda calculus with de Bruijn indices and applicative similarity.

Index 0 refers to the innermost binder. A term "at scope n" has all free
indices below n; closed terms live at scope 0.
"""

from __future__ import annotations

import itertools
import re
from functools import lru_cache

from .opmodel import Fun, Red, Stuck, run_with
from .simulation import Bounds, CoinductiveChecker, Mode, combine_all


class ScopeMismatch(Exception):
    pass


class LamSyntaxError(Exception):
    pass


class LVar:
    __slots__ = ("index", "_hash", "size")

    def __init__(self, index: int):
        self.index = index
        self._hash = hash(("v", index))
        self.size = 1

    def __eq__(self, other):
        return isinstance(other, LVar) and other.index == self.index

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"LVar({self.index})"

    def __str__(self):
        return show(self)


class LApp:
    __slots__ = ("fn", "arg", "_hash", "size")

    def __init__(self, fn, arg):
        self.fn = fn
        self.arg = arg
        self._hash = hash(("a", fn, arg))
        self.size = 1 + fn.size + arg.size

    def __eq__(self, other):
        if self is other:
            return True
        return isinstance(other, LApp) and self._hash == other._hash and self.fn == other.fn and self.arg == other.arg

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"LApp({self.fn!r}, {self.arg!r})"

    def __str__(self):
        return show(self)


class LLam:
    __slots__ = ("body", "_hash", "size")

    def __init__(self, body):
        self.body = body
        self._hash = hash(("l", body))
        self.size = 1 + body.size

    def __eq__(self, other):
        if self is other:
            return True
        return isinstance(other, LLam) and self._hash == other._hash and self.body == other.body

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"LLam({self.body!r})"

    def __str__(self):
        return show(self)


def scope(t) -> int:
    """Smallest n such that t lives at scope n."""
    if isinstance(t, LVar):
        return t.index + 1
    if isinstance(t, LApp):
        return max(scope(t.fn), scope(t.arg))
    return max(scope(t.body) - 1, 0)


def check_scope(t, n: int):
    if scope(t) > n:
        raise ScopeMismatch(f"{t} has free indices beyond scope {n}")


def shift(t, d: int, cutoff: int = 0):
    if isinstance(t, LVar):
        return LVar(t.index + d) if t.index >= cutoff else t
    if isinstance(t, LApp):
        return LApp(shift(t.fn, d, cutoff), shift(t.arg, d, cutoff))
    return LLam(shift(t.body, d, cutoff + 1))


def _subst(t, j: int, s):
    if isinstance(t, LVar):
        return s if t.index == j else t
    if isinstance(t, LApp):
        return LApp(_subst(t.fn, j, s), _subst(t.arg, j, s))
    return LLam(_subst(t.body, j + 1, shift(s, 1)))


def capture_free_subst(body, arg):
    """body[arg]: replace index 0 of ``body`` (scope n+1) by ``arg`` (scope n)."""
    return shift(_subst(body, 0, shift(arg, 1)), -1)


def close(t, us):
    """Parallel substitution t[u0..u_{n-1}] for index i := us[i]."""
    us = tuple(us)
    if scope(t) > len(us):
        raise ScopeMismatch(f"{t} needs {scope(t)} substitutes, got {len(us)}")

    def go(s, depth):
        if isinstance(s, LVar):
            if s.index < depth:
                return s
            return shift(us[s.index - depth], depth)
        if isinstance(s, LApp):
            return LApp(go(s.fn, depth), go(s.arg, depth))
        return LLam(go(s.body, depth + 1))

    return go(t, 0)


def cbn_step(t):
    """One call-by-name step: Red(t'), Fun(body) for an abstraction, or Stuck."""
    if isinstance(t, LLam):
        return Fun(t.body)
    if isinstance(t, LVar):
        return Stuck()
    # walk down the application spine instead of recursing on it
    spine = []
    head = t
    while isinstance(head, LApp):
        spine.append(head.arg)
        head = head.fn
    if isinstance(head, LVar):
        return Stuck()
    first = spine.pop()
    out = capture_free_subst(head.body, first)
    while spine:
        out = LApp(out, spine.pop())
    return Red(out)


def plug(behaviour: Fun, arg):
    return capture_free_subst(behaviour.body, arg)


def _proper_heads(t):
    # call-by-name reduces s u by reducing s in place, so a reduct of the
    # form s u1 .. uk with s earlier in the trace repeats the same steps
    while isinstance(t, LApp):
        t = t.fn
        yield t


def run(t, fuel: int):
    return run_with(cbn_step, t, fuel, heads=_proper_heads)


# --- syntax --------------------------------------------------------------------

_TOK = re.compile(r"\s*(?:(\\|λ)|([A-Za-z_][A-Za-z0-9_']*)|(\.)|(\()|(\)))")


def _tokens(text):
    pos, out = 0, []
    text = text.strip()
    while pos < len(text):
        m = _TOK.match(text, pos)
        if m is None or m.end() == pos:
            raise LamSyntaxError(f"cannot read {text[pos:]!r}")
        pos = m.end()
        lam, ident, dot, lp, rp = m.groups()
        out.append("\\" if lam else ident or dot or lp or rp)
    return out


def parse_lambda(text: str, free=None):
    """Parse ``\\x. e`` syntax into de Bruijn form.

    ``free`` lists the free variable names in index order (index 0 first);
    by default free names are numbered in order of first appearance.
    """
    return parse_lambda_scoped(text, free)[0]


def parse_lambda_scoped(text: str, free=None):
    """Like :func:`parse_lambda`, also returning the number of free variables."""
    names = list(free or [])
    return _parse(text, names, auto=free is None), len(names)


def parse_lambda_terms(texts):
    """Parse several terms over one shared list of free names (first appearance order)."""
    free: list = []
    terms = [_parse(text, free, auto=True) for text in texts]
    return terms, free


def _parse(text, free: list, auto: bool):
    toks = _tokens(text)
    pos = 0

    def peek():
        return toks[pos] if pos < len(toks) else None

    def expr(bound):
        nonlocal pos
        if peek() == "\\":
            pos += 1
            names = []
            while peek() not in (".", None):
                names.append(toks[pos])
                pos += 1
            if not names or peek() != ".":
                raise LamSyntaxError("expected binder names followed by '.'")
            pos += 1
            body = expr(bound + names)
            for _ in names:
                body = LLam(body)
            return body
        out = atom(bound)
        while peek() not in (None, ")"):
            out = LApp(out, atom(bound))
        return out

    def atom(bound):
        nonlocal pos
        tok = peek()
        if tok == "(":
            pos += 1
            inner = expr(bound)
            if peek() != ")":
                raise LamSyntaxError("missing ')'")
            pos += 1
            return inner
        if tok == "\\":
            return expr(bound)
        if tok is None or tok in (".", ")"):
            raise LamSyntaxError(f"unexpected {tok!r}")
        pos += 1
        if tok in bound:
            return LVar(len(bound) - 1 - max(i for i, b in enumerate(bound) if b == tok))
        if tok not in free:
            if not auto:
                raise LamSyntaxError(f"unbound variable {tok!r}")
            free.append(tok)
        return LVar(len(bound) + free.index(tok))

    t = expr([])
    if pos != len(toks):
        raise LamSyntaxError(f"trailing input {toks[pos]!r}")
    return t


def show(t, free=None) -> str:
    """Named rendering; binders are x0, x1, ... and free index i prints as v<i>."""
    def go(s, depth, ctx):
        if isinstance(s, LVar):
            if s.index < depth:
                return ctx[depth - 1 - s.index]
            i = s.index - depth
            return free[i] if free and i < len(free) else f"v{i}"
        if isinstance(s, LLam):
            name = f"x{depth}"
            return f"\\{name}. {go(s.body, depth + 1, ctx + [name])}"
        fn = go(s.fn, depth, ctx)
        if isinstance(s.fn, LLam):
            fn = f"({fn})"
        arg = go(s.arg, depth, ctx)
        if not isinstance(s.arg, LVar):
            arg = f"({arg})"
        return f"{fn} {arg}"

    return go(t, 0, [])


# --- enumeration and named terms -----------------------------------------------

@lru_cache(maxsize=None)
def _exact(n: int, size: int) -> tuple:
    if size < 1:
        return ()
    out = []
    if size == 1:
        out.extend(LVar(i) for i in range(n))
    out.extend(LLam(b) for b in _exact(n + 1, size - 1))
    for k in range(1, size - 1):
        for f, a in itertools.product(_exact(n, k), _exact(n, size - 1 - k)):
            out.append(LApp(f, a))
    return tuple(out)


def enumerate_lambda(max_size: int, n: int = 0) -> list:
    """All terms at scope ``n`` with at most ``max_size`` nodes, smallest first."""
    return [t for s in range(1, max_size + 1) for t in _exact(n, s)]


IDENTITY = LLam(LVar(0))
_DELTA = LLam(LApp(LVar(0), LVar(0)))
OMEGA = LApp(_DELTA, _DELTA)


def random_lambda(rng, max_size: int, n: int = 0):
    """A random term at scope n with at most max_size nodes."""
    def gen(budget, k):
        choices = []
        if k > 0:
            choices.append("var")
        if budget >= 2:
            choices.append("lam")
        if budget >= 3:
            choices.append("app")
        if not choices:
            return None
        kind = rng.choice(choices)
        if kind == "var":
            return LVar(rng.randrange(k))
        if kind == "lam":
            body = gen(budget - 1, k + 1)
            return LLam(body) if body is not None else None
        left = rng.randint(1, budget - 2)
        f, a = gen(left, k), gen(budget - 1 - left, k)
        if f is None or a is None:
            return None
        return LApp(f, a)

    while True:
        t = gen(rng.randint(1, max_size), n)
        if t is not None:
            return t


# --- applicative similarity ------------------------------------------------------

class LambdaSemantics:
    def step(self, t):
        return cbn_step(t)

    def run(self, t, fuel):
        return run(t, fuel)

    @staticmethod
    def plug(behaviour, arg):
        return plug(behaviour, arg)


def lambda_checker(bounds: Bounds, mode: Mode = Mode.APPLICATIVE):
    """A reusable checker over closed terms; arguments are all closed terms up to arg_size."""
    return CoinductiveChecker(LambdaSemantics(), enumerate_lambda(bounds.arg_size), bounds, mode)


def applicative_similar_closed(t1, t2, bounds: Bounds = Bounds(), mode: Mode = Mode.APPLICATIVE):
    """Bounded check of t1 ≲ t2 for closed terms."""
    check_scope(t1, 0)
    check_scope(t2, 0)
    return lambda_checker(bounds, Mode(mode)).verdict(t1, t2)


def open_applicative_similar(t1, t2, n: int, bounds: Bounds = Bounds(), mode: Mode = Mode.APPLICATIVE):
    """t1 ≲ t2 at scope n: every closing by enumerated closed terms must be related."""
    check_scope(t1, n)
    check_scope(t2, n)
    checker = lambda_checker(bounds, Mode(mode))
    if n == 0:
        return checker.verdict(t1, t2)
    verdicts = []
    for us in itertools.product(checker.args, repeat=n):
        v = checker.verdict(close(t1, us), close(t2, us))
        if v.status == "refuted":
            return v
        verdicts.append(v)
    return combine_all(verdicts)


def applicative_bisimilar(t1, t2, n: int = 0, bounds: Bounds = Bounds()):
    return combine_all([
        open_applicative_similar(t1, t2, n, bounds),
        open_applicative_similar(t2, t1, n, bounds),
    ])
