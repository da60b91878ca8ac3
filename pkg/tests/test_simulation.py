import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hosim.finite import reachable_fragment, weak_similarity_gfp
from hosim.generators import random_spec
from hosim.relations import FiniteRelation
from hosim.simulation import (
    Bounds,
    CoinductiveChecker,
    HoldsUpToBounds,
    HOSemantics,
    Mode,
    Refuted,
    Unknown,
    bisimilar,
    check_weak_simulation,
    combine_all,
    replay_witness,
    weak_similar,
)
from hosim.ski import I, ex34_spec, ski_spec, skk
from hosim.specfmt import parse_spec
from hosim.terms import Term, enumerate_terms, parse_term, random_term

EX = ex34_spec()


def t34(text):
    return parse_term(text, EX.signature)


@pytest.mark.parametrize("depth", [2, 3, 5, 8])
def test_c_below_d_holds(depth):
    v = weak_similar(EX, t34("c"), t34("d"), Bounds(depth=depth, fuel=20, arg_size=2))
    assert isinstance(v, HoldsUpToBounds)
    assert v.bounds.depth == depth and len(v.args) == 4


def test_d_below_c_holds_too():
    assert weak_similar(EX, t34("d"), t34("c"), Bounds(3, 20, 2)).status == "holds"


def test_uc_below_ud_is_refuted_with_a_cycle():
    v = weak_similar(EX, t34("u(c)"), t34("u(d)"), Bounds(3, 20, 2))
    assert isinstance(v, Refuted)
    top = v.witness
    assert (top.left, top.right, top.clause) == (t34("u(c)"), t34("u(d)"), "red")
    assert top.candidates == (t34("u(d)"),)
    child = top.children[0]
    assert child.clause == "fun" and child.cycle == (t34("u(d)"), t34("u(d)"))
    text = "\n".join(top.lines())
    assert "u(d) → u(d)" in text
    assert replay_witness(HOSemantics(EX), top, 20)


def test_witness_json_has_term_strings():
    v = weak_similar(EX, t34("u(c)"), t34("u(d)"), Bounds(3, 20, 2))
    data = v.witness.to_json()
    assert data["left"] == "u(c)" and data["children"][0]["cycle"] == ["u(d)", "u(d)"]


def test_strong_mode_separates_skk_from_identity():
    spec = ski_spec()
    b = Bounds(3, 50, 2)
    assert weak_similar(spec, skk(), I, b, Mode.STRONG).status == "refuted"
    assert bisimilar(spec, skk(), I, b).status == "holds"


def test_fuel_exhaustion_gives_unknown():
    spec = parse_spec(
        "sig { a/0 c/0 f/1 }\nrule a: |- a -> f(a)\nrule c: |- c =x=> c\n"
        "rule f(x1): x1 -> y1 |- f(x1) -> f(y1)\nrule f(x1): x1 =x1=> y1_x1 |- f(x1) -> f(x1)"
    )
    v = weak_similar(spec, Term("c"), Term("a"), Bounds(3, 10, 1))
    assert isinstance(v, Unknown) and "fuel" in v.reason


def test_bounds_validation():
    with pytest.raises(ValueError):
        Bounds(depth=0)
    with pytest.raises(ValueError):
        Bounds(fuel=0)


def test_combine_all_priority():
    h = HoldsUpToBounds(Bounds(), ())
    u = Unknown("x")
    r = weak_similar(EX, t34("u(c)"), t34("u(d)"), Bounds(3, 20, 2))
    assert combine_all([h, u, r]) is r
    assert combine_all([h, u]) is u
    assert combine_all([h]) is h


def test_check_weak_simulation():
    u4 = (t34("c"), t34("d"), t34("u(c)"), t34("u(d)"))
    base = FiniteRelation.identity(u4)
    good = base.with_pairs(base.pairs | {(t34("c"), t34("d")), (t34("d"), t34("c"))})
    assert check_weak_simulation(EX, good, 20).status == "holds"
    bad = good.with_pairs(good.pairs | {(t34("u(c)"), t34("u(d)"))})
    v = check_weak_simulation(EX, bad, 20)
    assert v.status == "refuted" and v.witness.left == t34("u(c)")
    # obligations leaving the universe are unknown, not false
    small = FiniteRelation((t34("d"),), frozenset({(t34("d"), t34("d"))}))
    assert check_weak_simulation(EX, small, 20).status == "unknown"


# --- properties -------------------------------------------------------------

def _spec_and_terms(seed, n=4):
    rng = random.Random(seed)
    spec = random_spec(rng)
    return spec, [random_term(spec.signature, 4, rng) for _ in range(n)]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000))
def test_reflexivity(seed):
    spec, terms = _spec_and_terms(seed)
    for t in terms:
        assert weak_similar(spec, t, t, Bounds(3, 30, 1)).status != "refuted"


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000))
def test_strong_similarity_implies_weak(seed):
    spec, terms = _spec_and_terms(seed)
    b = Bounds(3, 30, 1)
    for p in terms:
        for q in terms:
            if weak_similar(spec, p, q, b, Mode.STRONG).status == "holds":
                assert weak_similar(spec, p, q, b, Mode.WEAK).status != "refuted"


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 100_000))
def test_refutations_are_stable_under_larger_bounds(seed):
    spec, terms = _spec_and_terms(seed)
    for p in terms:
        for q in terms:
            v = weak_similar(spec, p, q, Bounds(2, 30, 1))
            if v.status == "refuted":
                assert replay_witness(HOSemantics(spec), v.witness, 30)
                for bigger in (Bounds(3, 30, 1), Bounds(4, 60, 2)):
                    assert weak_similar(spec, p, q, bigger).status == "refuted"


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000))
def test_on_the_fly_checker_matches_the_fixpoint_oracle(seed):
    rng = random.Random(seed)
    spec = random_spec(rng)
    args = enumerate_terms(spec.signature, 2)[:4]
    roots = [random_term(spec.signature, 3, rng) for _ in range(3)]
    states = reachable_fragment(spec, roots, args, limit=60)
    if states is None:
        return
    oracle = weak_similarity_gfp(spec, states, args)
    checker = CoinductiveChecker(HOSemantics(spec), args, Bounds(len(states) ** 2 + 1, 200, 1))
    for p in states:
        for q in states:
            v = checker.verdict(p, q)
            assert v.status != "unknown"
            assert (v.status == "holds") == ((p, q) in oracle.pairs), (p, q)
            if v.status == "refuted":
                assert replay_witness(HOSemantics(spec), v.witness, 200)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 100_000))
def test_the_fixpoint_is_a_weak_simulation(seed):
    rng = random.Random(seed)
    spec = random_spec(rng)
    # grow a fragment closed under reduction and under application to its own states
    states = list(enumerate_terms(spec.signature, 1))
    while True:
        grown = reachable_fragment(spec, states, states, limit=30)
        if grown is None:
            return
        if set(grown) == set(states):
            break
        states = grown
    gfp = weak_similarity_gfp(spec, states, states)
    assert all((t, t) in gfp.pairs for t in states)
    assert check_weak_simulation(spec, gfp, 200).status == "holds"
