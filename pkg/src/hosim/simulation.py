"""Weak and strong simulation checking.

Two entry points: :func:`check_weak_simulation` verifies that a given finite
relation is a weak simulation, and :func:`weak_similar` searches for one on
the fly, coinductively, within explicit bounds. The search engine is generic
over a small semantics interface so the lambda instance can reuse it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .opmodel import Converges, Diverges, FuelExhausted, Fun, Red, StuckAt
from .relations import FiniteRelation
from .specfmt import SpecDocument
from .terms import enumerate_terms


class Mode(enum.Enum):
    WEAK = "weak"
    STRONG = "strong"
    # left side evaluated to a value first, as in applicative similarity
    APPLICATIVE = "applicative"


@dataclass(frozen=True)
class Bounds:
    depth: int = 4
    fuel: int = 100
    arg_size: int = 2

    def __post_init__(self):
        for name in ("depth", "fuel", "arg_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    def as_dict(self):
        return {"depth": self.depth, "fuel": self.fuel, "arg_size": self.arg_size}


@dataclass(frozen=True)
class WitnessNode:
    """One failed obligation of a refutation, with the sub-refutations it rests on."""

    left: object
    right: object
    clause: str  # "red" or "fun"
    reason: str
    left_to: object = None  # p' for a reduction, the normal form for a function
    right_to: object = None  # normal form of the right side, when it has one
    candidates: tuple = ()  # weak successors of the right side (red clause)
    argument: object = None  # argument that separates the function bodies
    cycle: tuple = ()  # divergence of the right side: t0 -> ... -> t0
    children: tuple = ()

    def path(self) -> list:
        """The witness as a single path, following the first sub-refutation."""
        node, out = self, []
        while node is not None:
            out.append(node)
            node = node.children[0] if node.children else None
        return out

    def lines(self, show=str, indent: int = 0) -> list:
        pad = "  " * indent
        out = [pad + self.describe(show)]
        for child in self.children:
            out.extend(child.lines(show, indent + 1))
        return out

    def describe(self, show=str) -> str:
        head = f"{show(self.left)} ≲ {show(self.right)}: "
        if self.clause == "red":
            cands = ", ".join(show(c) for c in self.candidates)
            return head + f"{show(self.left)} → {show(self.left_to)}; {show(self.right)} ⇒ {{{cands}}}; {self.reason}"
        parts = []
        if self.left_to is not None and self.left_to != self.left:
            parts.append(f"{show(self.left)} ⇓ {show(self.left_to)}")
        else:
            parts.append(f"{show(self.left)} ↛")
        if self.cycle:
            parts.append(f"{show(self.right)} diverges: " + " → ".join(show(t) for t in self.cycle))
        elif self.right_to is not None:
            parts.append(f"{show(self.right)} ⇓ {show(self.right_to)}")
        if self.argument is not None:
            parts.append(f"argument {show(self.argument)}")
        parts.append(self.reason)
        return head + "; ".join(parts)

    def to_json(self, show=str) -> dict:
        d = {
            "left": show(self.left),
            "right": show(self.right),
            "clause": self.clause,
            "reason": self.reason,
        }
        if self.left_to is not None:
            d["left_to"] = show(self.left_to)
        if self.right_to is not None:
            d["right_to"] = show(self.right_to)
        if self.candidates:
            d["candidates"] = [show(c) for c in self.candidates]
        if self.argument is not None:
            d["argument"] = show(self.argument)
        if self.cycle:
            d["cycle"] = [show(t) for t in self.cycle]
        if self.children:
            d["children"] = [c.to_json(show) for c in self.children]
        return d


@dataclass(frozen=True)
class HoldsUpToBounds:
    bounds: Bounds | None
    args: tuple
    depth_cut: bool = False  # True when some branch stopped at the depth bound

    status = "holds"
    exit_code = 0

    def __str__(self):
        extra = "" if self.bounds is None else f" (depth {self.bounds.depth}, fuel {self.bounds.fuel}, {len(self.args)} args)"
        return "Holds" + extra


@dataclass(frozen=True)
class Refuted:
    witness: WitnessNode
    mode: Mode = Mode.WEAK

    status = "refuted"
    exit_code = 1

    def __str__(self):
        return "Refuted"


@dataclass(frozen=True)
class Unknown:
    reason: str
    term: object = None

    status = "unknown"
    exit_code = 2

    def __str__(self):
        return f"Unknown ({self.reason})"


def combine_all(verdicts):
    """Conjunction: Refuted dominates, then Unknown, then Holds."""
    verdicts = list(verdicts)
    for v in verdicts:
        if isinstance(v, Refuted):
            return v
    for v in verdicts:
        if isinstance(v, Unknown):
            return v
    return verdicts[0] if verdicts else None


# --- semantics adapters --------------------------------------------------------

class HOSemantics:
    def __init__(self, spec: SpecDocument):
        self.spec = spec
        self.model = spec.model

    def step(self, t):
        return self.model.step(t)

    def run(self, t, fuel):
        return self.model.run(t, fuel)

    @staticmethod
    def plug(behaviour, arg):
        return behaviour.apply(arg)


# --- the coinductive engine ---------------------------------------------------

@dataclass
class _Node:
    """Obligation for one pair: OR over ``alts`` of AND over the pairs in each alternative."""

    kind: str  # "red", "fun", "vacuous", "fail"
    alts: list = field(default_factory=list)
    open_alt: bool = False  # an unexplored alternative (fuel ran out); Unknown leaf
    unknown: str = ""
    unknown_term: object = None
    fail: WitnessNode | None = None  # immediate refutation, no sub-obligations
    info: dict = field(default_factory=dict)


class CoinductiveChecker:
    """Bounded coinductive search over pairs.

    All pair obligations reachable from the query within ``depth`` unfoldings
    are collected, then the greatest set of pairs consistent with them is
    computed: whatever survives refinement is assumed related. This is run
    twice, once counting fuel-exhausted obligations as satisfied and once as
    failed, which separates Holds / Unknown / Refuted. Refutations are exact
    and cached for the checker's lifetime; so are Holds results whose
    exploration never hit the depth bound.
    """

    def __init__(self, semantics, args, bounds: Bounds, mode: Mode = Mode.WEAK):
        self.sem = semantics
        self.args = tuple(args)
        self.bounds = bounds
        self.mode = mode
        self._refuted: dict = {}
        self._proved: set = set()
        self._nodes: dict = {}
        self._runs: dict = {}

    def _run(self, t):
        out = self._runs.get(t)
        if out is None:
            out = self._runs[t] = self.sem.run(t, self.bounds.fuel)
        return out

    # obligations ------------------------------------------------------------

    def _node(self, p, q) -> _Node:
        key = (p, q)
        node = self._nodes.get(key)
        if node is None:
            node = self._nodes[key] = self._unfold(p, q)
        return node

    def _unfold(self, p, q) -> _Node:
        if self.mode is Mode.APPLICATIVE:
            out = self._run(p)
            if isinstance(out, Converges):
                return self._fun_clause(p, out.normal, out.final_behavior, q)
            if isinstance(out, FuelExhausted):
                return _Node("fun", unknown=f"{out.cause} evaluating {p}", unknown_term=p)
            return _Node("vacuous", alts=[[]])  # divergent or stuck: nothing to match
        b = self.sem.step(p)
        if isinstance(b, Red):
            return self._red_clause(p, b.next, q)
        if isinstance(b, Fun):
            return self._fun_clause(p, p, b, q)
        return _Node("vacuous", alts=[[]])

    def _candidates(self, q):
        if self.mode is Mode.STRONG:
            bq = self.sem.step(q)
            return ([bq.next] if isinstance(bq, Red) else []), True
        out = self._run(q)
        return list(out.trace), not isinstance(out, FuelExhausted)

    def _red_clause(self, p, p_next, q) -> _Node:
        cands, complete = self._candidates(q)
        node = _Node("red", alts=[[(p_next, qc)] for qc in cands])
        node.info = {"left_to": p_next, "candidates": tuple(cands)}
        if not complete:
            node.open_alt = True
            node.unknown, node.unknown_term = f"{self._run(q).cause} expanding {q}", q
        return node

    def _fun_clause(self, p, p_norm, fp, q) -> _Node:
        if self.mode is Mode.STRONG:
            bq = self.sem.step(q)
            if not isinstance(bq, Fun):
                return _Node("fail", fail=WitnessNode(p, q, "fun", "the right side is not a function", left_to=p_norm))
            q_norm, fq = q, bq
        else:
            out = self._run(q)
            if isinstance(out, FuelExhausted):
                return _Node("fun", unknown=f"{out.cause} evaluating {q}", unknown_term=q)
            if isinstance(out, Diverges):
                cycle = out.cycle
                return _Node("fail", fail=WitnessNode(p, q, "fun", "the right side never converges",
                                                      left_to=p_norm, cycle=cycle))
            if isinstance(out, StuckAt):
                return _Node("fail", fail=WitnessNode(p, q, "fun", "the right side gets stuck",
                                                      left_to=p_norm, right_to=out.normal))
            q_norm, fq = out.normal, out.final_behavior
        pairs = [(self.sem.plug(fp, e), self.sem.plug(fq, e)) for e in self.args]
        node = _Node("fun", alts=[pairs])
        node.info = {"left_to": p_norm, "right_to": q_norm}
        return node

    # search -----------------------------------------------------------------

    def _explore(self, root, depth):
        """Pairs reachable from ``root`` with their remaining depth (breadth first)."""
        level = {root: depth}
        frontier = [root]
        cut = False
        d = depth
        while frontier and d > 0:
            nxt = []
            for key in frontier:
                if key in self._refuted or key in self._proved:
                    continue
                node = self._node(*key)
                for alt in node.alts:
                    for child in alt:
                        if child not in level:
                            level[child] = d - 1
                            nxt.append(child)
            frontier = nxt
            d -= 1
        for key in frontier:
            if key not in self._refuted and key not in self._proved:
                cut = True
        return level, cut

    def _refine(self, level, optimistic):
        """Greatest surviving set; returns (alive, removal order)."""
        alive = set()
        for key, d in level.items():
            if key in self._refuted:
                continue
            alive.add(key)
        order = []
        # a pair at remaining depth 0 is assumed, as are proven pairs
        fixed = {k for k in alive if level[k] == 0 or k in self._proved}

        def ok(key):
            node = self._nodes[key]
            if node.kind == "fail":
                return False
            if node.unknown and not node.open_alt:
                return optimistic
            if node.open_alt and optimistic:
                return True
            return any(all(c in alive for c in alt) for alt in node.alts)

        parents: dict = {}
        for key in alive - fixed:
            for alt in self._nodes[key].alts:
                for c in alt:
                    parents.setdefault(c, set()).add(key)
        work = sorted(alive - fixed, key=lambda k: -level[k])
        queued = set(work)
        while work:
            key = work.pop()
            queued.discard(key)
            if key not in alive or key in fixed or ok(key):
                continue
            alive.discard(key)
            order.append(key)
            for par in parents.get(key, ()):
                if par in alive and par not in queued and par not in fixed:
                    work.append(par)
                    queued.add(par)
        return alive, order

    def _witness(self, key):
        """Build the refutation for a pair removed during optimistic refinement."""
        hit = self._refuted.get(key)
        if hit is not None:
            return hit
        p, q = key
        node = self._nodes[key]
        if node.kind == "fail":
            w = node.fail
        elif node.kind == "red":
            children = tuple(self._witness(alt[0]) for alt in node.alts)
            cands = node.info["candidates"]
            reason = "no successor of the right side is related" if cands else "the right side does not reduce"
            w = WitnessNode(p, q, "red", reason, left_to=node.info["left_to"], candidates=cands, children=children)
        else:
            for e, child in zip(self.args, node.alts[0]):
                if child in self._refuted:
                    break
            w = WitnessNode(p, q, "fun", "bodies differ on this argument", left_to=node.info["left_to"],
                            right_to=node.info["right_to"], argument=e, children=(self._witness(child),))
        self._refuted[key] = w
        return w

    def search(self, p, q, depth=None):
        depth = self.bounds.depth if depth is None else depth
        root = (p, q)
        if root in self._refuted:
            return Refuted(self._refuted[root], self.mode)
        if root in self._proved:
            return HoldsUpToBounds(self.bounds, self.args, False)
        level, cut = self._explore(root, depth)
        alive_opt, order = self._refine(level, optimistic=True)
        # removal order is well founded: each pair's witness uses earlier removals only
        for key in order:
            self._witness(key)
        if root not in alive_opt:
            return Refuted(self._refuted[root], self.mode)
        alive_pes, _ = self._refine(level, optimistic=False)
        if root in alive_pes:
            if not cut:
                self._proved |= alive_pes
            return HoldsUpToBounds(self.bounds, self.args, cut)
        # the root hangs on some fuel-exhausted obligation; report one it can reach
        reason, term = "fuel exhausted", None
        for key in level:
            node = self._nodes.get(key)
            if node is not None and node.unknown and key in alive_opt:
                reason, term = node.unknown, node.unknown_term
                break
        return Unknown(reason, term)

    def verdict(self, p, q):
        return self.search(p, q)


def weak_similar(spec: SpecDocument, p, q, bounds: Bounds = Bounds(), mode: Mode | str = Mode.WEAK):
    """Bounded on-the-fly check of p ≲ q (or strong similarity with mode='strong')."""
    mode = Mode(mode)
    args = enumerate_terms(spec.signature, bounds.arg_size)
    return CoinductiveChecker(HOSemantics(spec), args, bounds, mode).verdict(p, q)


def replay_witness(semantics, node: WitnessNode, fuel: int, mode: Mode = Mode.WEAK) -> bool:
    """Re-derive every step of a refutation from the semantics alone."""
    sem = semantics
    if node.clause == "red":
        if mode is Mode.APPLICATIVE:
            return False
        b = sem.step(node.left)
        if not (isinstance(b, Red) and b.next == node.left_to):
            return False
        if mode is Mode.STRONG:
            bq = sem.step(node.right)
            cands = [bq.next] if isinstance(bq, Red) else []
        else:
            out = sem.run(node.right, fuel)
            if isinstance(out, FuelExhausted):
                return False
            cands = list(out.trace)
        if list(node.candidates) != cands or len(node.children) != len(cands):
            return False
        return all(
            (c.left, c.right) == (node.left_to, qc) and replay_witness(sem, c, fuel, mode)
            for c, qc in zip(node.children, cands)
        )
    # function clause: the left side must denote a function
    if mode is Mode.APPLICATIVE:
        out = sem.run(node.left, fuel)
        if not isinstance(out, Converges) or out.normal != node.left_to:
            return False
        fp = out.final_behavior
    else:
        fp = sem.step(node.left)
        if not isinstance(fp, Fun):
            return False
    if mode is Mode.STRONG:
        fq = sem.step(node.right)
        if not isinstance(fq, Fun):
            return node.argument is None and not node.children
    else:
        out = sem.run(node.right, fuel)
        if node.cycle:
            if not isinstance(out, Diverges) or node.cycle[0] != out.cycle_entry:
                return False
            # each displayed step is a genuine reduction
            return all(sem.step(a) == Red(b) for a, b in zip(node.cycle, node.cycle[1:]))
        if isinstance(out, StuckAt):
            return node.argument is None
        if not isinstance(out, Converges):
            return False
        fq = out.final_behavior
    if node.argument is None or len(node.children) != 1:
        return False
    child = node.children[0]
    if (child.left, child.right) != (sem.plug(fp, node.argument), sem.plug(fq, node.argument)):
        return False
    return replay_witness(sem, child, fuel, mode)


# --- candidate relations -------------------------------------------------------

def check_weak_simulation(spec: SpecDocument, rel: FiniteRelation, fuel: int = 100):
    """Check the two strong-premise weak-simulation clauses for every pair of ``rel``.

    Function arguments range over the relation's universe; obligations that
    leave the universe make the verdict Unknown rather than False.
    """
    model = spec.model
    members = rel.members
    universe = rel.universe
    unknown = None
    for p, q in rel.sorted_pairs():
        b = model.step(p)
        if isinstance(b, Red):
            if b.next not in members:
                unknown = unknown or Unknown(f"successor {b.next} of {p} is outside the universe", b.next)
                continue
            out = model.run(q, fuel)
            cands = list(out.trace)
            if any((b.next, c) in rel.pairs for c in cands):
                continue
            if isinstance(out, FuelExhausted):
                unknown = unknown or Unknown(f"{out.cause} expanding {q}", q)
                continue
            outside = [c for c in cands if c not in members]
            if outside:
                unknown = unknown or Unknown(f"weak successor {outside[0]} of {q} is outside the universe", outside[0])
                continue
            node = WitnessNode(p, q, "red", "no weak successor of the right side is related",
                               left_to=b.next, candidates=tuple(cands))
            return Refuted(node)
        out = model.run(q, fuel)
        if isinstance(out, FuelExhausted):
            unknown = unknown or Unknown(f"{out.cause} evaluating {q}", q)
            continue
        if isinstance(out, Diverges):
            cycle = out.cycle
            return Refuted(WitnessNode(p, q, "fun", "the right side never converges", left_to=p, cycle=cycle))
        for e in universe:
            left, right = b.apply(e), out.final_behavior.apply(e)
            missing = [t for t in (left, right) if t not in members]
            if missing:
                unknown = unknown or Unknown(f"instance {missing[0]} is outside the universe", missing[0])
                break
            if (left, right) not in rel.pairs:
                node = WitnessNode(p, q, "fun", f"({left}, {right}) is not in the relation",
                                   left_to=p, right_to=out.normal, argument=e)
                return Refuted(node)
    if unknown is not None:
        return unknown
    return HoldsUpToBounds(None, tuple(universe))


def bisimilar(spec: SpecDocument, p, q, bounds: Bounds = Bounds(), mode=Mode.WEAK):
    """Both directions of similarity, combined conjunctively."""
    return combine_all([weak_similar(spec, p, q, bounds, mode), weak_similar(spec, q, p, bounds, mode)])
