import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hosim.howe import howe_analysis, howe_closure, howe_stage, subterm_closure
from hosim.relations import FiniteRelation, UniverseMismatch, compose, is_congruence, is_reflexive
from hosim.simulation import Bounds, CoinductiveChecker, HOSemantics, check_weak_simulation
from hosim.ski import ex34_spec
from hosim.specfmt import check_cool, parse_spec
from hosim.terms import Signature, Term, enumerate_terms, parse_term

EX = ex34_spec()
C, D = Term("c"), Term("d")
UC, UD = Term("u", (C,)), Term("u", (D,))
U4 = (C, D, UC, UD)
DELTA = FiniteRelation.identity(U4)


def test_empty_relation_stays_empty():
    empty = FiniteRelation.empty(U4)
    assert howe_stage(EX, empty, empty).pairs == frozenset()
    assert howe_closure(EX, empty).pairs == frozenset()


def test_identity_is_its_own_closure():
    assert howe_closure(EX, DELTA).pairs == DELTA.pairs


def test_one_stage_adds_the_lifted_pair():
    r = DELTA.with_pairs(DELTA.pairs | {(C, D)})
    one = howe_stage(EX, r, r)
    assert (UC, UD) in one.pairs
    assert howe_closure(EX, r).pairs == r.pairs | {(UC, UD)}


def test_universe_must_be_subterm_closed():
    bad = FiniteRelation((UC,), frozenset())
    with pytest.raises(UniverseMismatch):
        howe_closure(EX, bad)
    with pytest.raises(UniverseMismatch):
        howe_stage(EX, DELTA, FiniteRelation.identity((C, D)))


def test_blocked_tuples_are_counted():
    # u(d) is missing, so the lift of (c, d) under u is blocked by the universe
    universe = (C, D, UC)
    r = FiniteRelation(universe, frozenset({(C, C), (D, D), (UC, UC), (C, D)}))
    report = howe_analysis(EX, r)
    assert report.blocked >= 1
    assert report.summary(r, EX)["blocked_by_universe"] == report.blocked


# --- laws on random relations ---------------------------------------------------

SIG5 = Signature((("a", 0), ("b", 0), ("g", 1), ("h", 2)))
# all ten terms up to size 3 plus two nested ones: twelve, closed under subterms
U12 = subterm_closure(enumerate_terms(SIG5, 3) + [parse_term("g(h(a,b))", SIG5), parse_term("h(g(a),b)", SIG5)])


def _transitive_closure(pairs, universe):
    rel = set(pairs)
    while True:
        extra = {(a, c) for a, b in rel for b2, c in rel if b == b2} - rel
        if not extra:
            return rel
        rel |= extra


relations_12 = st.sets(st.tuples(st.sampled_from(U12), st.sampled_from(U12)), max_size=30)


def test_universe_size():
    assert len(U12) == 12


@settings(max_examples=100, deadline=None)
@given(relations_12)
def test_contains_r(pairs):
    r = FiniteRelation(tuple(U12), frozenset(pairs))
    assert r.pairs <= howe_closure(SIG5, r).pairs


@settings(max_examples=100, deadline=None)
@given(relations_12)
def test_reflexive_r_gives_reflexive_congruence(pairs):
    r = FiniteRelation(tuple(U12), frozenset(pairs) | {(t, t) for t in U12})
    closure = howe_closure(SIG5, r)
    assert is_reflexive(closure)
    assert is_congruence(SIG5, closure) is True


@settings(max_examples=100, deadline=None)
@given(relations_12)
def test_transitive_r_gives_weak_transitivity(pairs):
    r = FiniteRelation(tuple(U12), frozenset(_transitive_closure(pairs, U12)))
    closure = howe_closure(SIG5, r)
    assert compose(closure, r).pairs <= closure.pairs


def _least_closed_superset(r, sig):
    """Kleene iteration: add congruence and (S;R) pairs until nothing changes."""
    s = set(r.pairs)
    by_head = {}
    for t in r.universe:
        by_head.setdefault(t.head, []).append(t)
    while True:
        new = set(s)
        for terms in by_head.values():
            for p, q in itertools.product(terms, repeat=2):
                if all((a, b) in s for a, b in zip(p.args, q.args)):
                    new.add((p, q))
        new |= {(a, c) for a, b in s for b2, c in r.pairs if b == b2}
        if new == s:
            return s
        s = new


def _is_weakly_transitive_congruence(s, r, sig, universe):
    rel = FiniteRelation(universe, frozenset(s))
    return is_congruence(sig, rel) is True and compose(rel, r).pairs <= rel.pairs


@settings(max_examples=100, deadline=None)
@given(relations_12)
def test_preorder_closure_is_least_weakly_transitive_congruence(pairs):
    pre = _transitive_closure(set(pairs) | {(t, t) for t in U12}, U12)
    r = FiniteRelation(tuple(U12), frozenset(pre))
    closure = howe_closure(SIG5, r)
    assert _is_weakly_transitive_congruence(closure.pairs, r, SIG5, tuple(U12))
    assert closure.pairs == _least_closed_superset(r, SIG5)


def test_exhaustive_lattice_oracle_on_four_terms():
    # enumerate every superset of every preorder on {c, d, u(c), u(d)} and keep the closed ones
    free_pairs = [(a, b) for a in U4 for b in U4 if a != b]
    preorders = set()
    for bits in itertools.product((0, 1), repeat=len(free_pairs)):
        pairs = {p for p, bit in zip(free_pairs, bits) if bit} | DELTA.pairs
        preorders.add(frozenset(_transitive_closure(pairs, U4)))
    checked = 0
    for pre in sorted(preorders, key=len):
        r = FiniteRelation(U4, pre)
        closed = []
        rest = [p for p in free_pairs if p not in pre]
        for bits in itertools.product((0, 1), repeat=len(rest)):
            s = set(pre) | {p for p, bit in zip(rest, bits) if bit}
            if _is_weakly_transitive_congruence(s, r, EX.signature, U4):
                closed.append(frozenset(s))
        least = frozenset.intersection(*closed)
        assert least in closed
        assert howe_closure(EX, r).pairs == least
        checked += 1
    assert checked == len(preorders) > 10


def test_closure_of_similarity_is_a_simulation_for_a_cool_spec():
    spec = parse_spec(
        "sig { a/0 b/0 g/1 }\n"
        "rule a: |- a =x=> x\n"
        "rule b: |- b -> a\n"
        "rule g(x1): x1 -> y1 |- g(x1) -> g(y1)\n"
        "rule g(x1): x1 =x=> y1_x |- g(x1) =x=> y1_x\n"
    )
    assert check_cool(spec).cool
    universe = tuple(enumerate_terms(spec.signature, 3))
    checker = CoinductiveChecker(HOSemantics(spec), universe, Bounds(20, 50, 1))
    sim = {(p, q) for p in universe for q in universe if checker.verdict(p, q).status == "holds"}
    r = FiniteRelation(universe, frozenset(sim))
    assert check_weak_simulation(spec, r, 50).status == "holds"
    closure = howe_closure(spec, r)
    assert check_weak_simulation(spec, closure, 50).status == "holds"
    # similarity is already a congruence here, so closing adds nothing
    assert closure.pairs == r.pairs
    assert (Term("b"), Term("a")) in sim and (Term("g", (Term("b"),)), Term("g", (Term("a"),))) in sim


def test_ex34_closure_is_not_a_simulation():
    # the non-congruence example: closing similarity adds (u(c), u(d)), which is not simulated
    checker = CoinductiveChecker(HOSemantics(EX), U4, Bounds(20, 50, 1))
    sim = {(p, q) for p in U4 for q in U4 if checker.verdict(p, q).status == "holds"}
    r = FiniteRelation(U4, frozenset(sim))
    closure = howe_closure(EX, r)
    assert (UC, UD) in closure.pairs and (UC, UD) not in sim
    assert check_weak_simulation(EX, closure, 50).status == "refuted"
