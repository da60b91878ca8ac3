"""Operational model of an HO specification: dispatch, runs, weak successors."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

from .specfmt import HOLE, Kind, SpecDocument
from .terms import Term, Var, substitute


@dataclass(frozen=True)
class Red:
    next: object

    def __str__(self):
        return f"-> {self.next}"


@dataclass(frozen=True)
class Fun:
    """A function behaviour, kept as a body with the single hole ``x``."""

    body: object

    def apply(self, arg):
        return substitute(self.body, {HOLE: arg})

    def __str__(self):
        return f"={HOLE}=> {self.body}"


@dataclass(frozen=True)
class Stuck:
    def __str__(self):
        return "stuck"


# --- evaluation outcomes -------------------------------------------------------

@dataclass(frozen=True)
class Converges:
    normal: object
    final_behavior: object
    steps: int
    trace: tuple

    def __str__(self):
        return f"converges to {self.normal} in {self.steps} step(s)"


@dataclass(frozen=True)
class Diverges:
    cycle_entry: object
    cycle_length: int
    trace: tuple
    recurs_as: object = None  # set when cycle_entry comes back as the head of a longer application

    @property
    def steps(self):
        return len(self.trace) - 1

    @property
    def cycle(self) -> tuple:
        """The repeating stretch of the trace, ending where cycle_entry reappears."""
        start = self.trace.index(self.cycle_entry)
        end = self.cycle_entry if self.recurs_as is None else self.recurs_as
        return tuple(self.trace[start:]) + (end,)

    def __str__(self):
        if self.recurs_as is not None:
            return f"diverges: {self.cycle_entry} recurs in head position after {self.cycle_length} step(s)"
        return f"diverges: {self.cycle_entry} recurs after {self.cycle_length} step(s)"


# Runs stop once a reduct has more nodes than this; some rules double a
# term's size at every step, and fuel alone would let that run away.
MAX_TERM_SIZE = 10_000


@dataclass(frozen=True)
class FuelExhausted:
    """A run stopped by its budget: out of fuel, or a reduct grew too large."""

    last: object
    steps: int
    trace: tuple
    too_large: bool = False

    @property
    def cause(self) -> str:
        if self.too_large:
            return f"term size limit ({MAX_TERM_SIZE} nodes) reached"
        return "fuel exhausted"

    def __str__(self):
        if self.too_large:
            return f"{self.cause} after {self.steps} step(s)"
        return f"fuel exhausted after {self.steps} step(s) at {self.last}"


@dataclass(frozen=True)
class StuckAt:
    """A run that reached a term with neither reduction nor function behaviour."""

    normal: object
    steps: int
    trace: tuple

    def __str__(self):
        return f"stuck at {self.normal} after {self.steps} step(s)"


def run_with(step_fn: Callable, p, fuel: int, heads: Callable | None = None):
    """Iterate ``step_fn`` from ``p`` for at most ``fuel`` reductions.

    Shared by the HO engine and the lambda instance; revisiting a term is
    reported as divergence. ``heads`` optionally lists the proper heads of a
    term whose reduction is the reduction of that head: when a step produces
    an earlier term applied to extra arguments, the same steps repeat forever.
    """
    if fuel < 1:
        raise ValueError("fuel must be >= 1")
    trace = [p]
    seen = {p: 0}
    cur = p
    while True:
        b = step_fn(cur)
        if isinstance(b, Fun):
            return Converges(cur, b, len(trace) - 1, tuple(trace))
        if isinstance(b, Stuck):
            return StuckAt(cur, len(trace) - 1, tuple(trace))
        if len(trace) - 1 >= fuel:
            return FuelExhausted(cur, len(trace) - 1, tuple(trace))
        if b.next.size > MAX_TERM_SIZE:
            return FuelExhausted(cur, len(trace) - 1, tuple(trace), too_large=True)
        cur = b.next
        if cur in seen:
            return Diverges(cur, len(trace) - seen[cur], tuple(trace))
        if heads is not None:
            for h in heads(cur):
                if h in seen:
                    return Diverges(h, len(trace) - seen[h], tuple(trace), recurs_as=cur)
        seen[cur] = len(trace)
        trace.append(cur)


class WeakSuccessors(NamedTuple):
    terms: list
    complete: bool


class OperationalModel:
    """Structurally recursive rule dispatch with a transparent memo table."""

    def __init__(self, spec: SpecDocument):
        self.spec = spec
        self._memo: dict = {}

    def step(self, p: Term):
        memo = self._memo
        hit = memo.get(p)
        if hit is not None:
            return hit
        # post-order walk with an explicit stack: generated terms can be deep
        stack = [(p, False)]
        while stack:
            t, ready = stack.pop()
            if t in memo:
                continue
            if ready:
                memo[t] = self._dispatch(t, [memo[a] for a in t.args])
            else:
                stack.append((t, True))
                stack.extend((a, False) for a in t.args if a not in memo)
        return memo[p]

    def _dispatch(self, p: Term, behaviours):
        w = frozenset(i for i, b in enumerate(behaviours, 1) if isinstance(b, Red))
        rule = self.spec.rule_for(p.head, w)
        binding = {}
        for name in rule.target_vars:
            if name == HOLE:
                continue
            binding[name] = self._value(name, p.args, behaviours)
        if rule.kind is Kind.RED:
            return Red(substitute(rule.target, binding))
        return Fun(substitute(rule.target, binding, keep=(HOLE,)))

    @staticmethod
    def _value(name, args, behaviours):
        if name[0] == "x":
            return args[int(name[1:]) - 1]
        pos, _, label = name[1:].partition("_")
        b = behaviours[int(pos) - 1]
        if not label:
            return b.next
        if label == HOLE:
            return b.body  # keep the conclusion's hole open
        return b.apply(args[int(label[1:]) - 1])

    def dispatch(self, p: Term, behaviours):
        """One application of the rules given explicit sub-behaviours."""
        return self._dispatch(p, list(behaviours))

    def run(self, p: Term, fuel: int):
        return run_with(self.step, p, fuel)


def step(spec: SpecDocument, p: Term):
    """Behaviour of the closed term ``p``: Red(next) or Fun(body)."""
    return spec.model.step(p)


def run(spec: SpecDocument, p: Term, fuel: int):
    return spec.model.run(p, fuel)


def weak_successors(spec: SpecDocument, p: Term, fuel: int) -> WeakSuccessors:
    """Every q with p => q, fewest steps first; ``complete`` is False on fuel exhaustion."""
    out = run(spec, p, fuel)
    return WeakSuccessors(list(out.trace), not isinstance(out, FuelExhausted))


def plug(behaviour: Fun, arg):
    return behaviour.apply(arg)


def is_hole_only(body) -> bool:
    """True when ``body`` mentions no metavariable other than the hole."""
    if isinstance(body, Var):
        return body.name == HOLE
    return all(is_hole_only(a) for a in body.args)
