"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import itertools
import random

import pytest

from hosim import lam
from hosim.finite import reachable_fragment, weak_similarity_gfp
from hosim.generators import random_cool_spec, random_spec
from hosim.howe import howe_closure, subterm_closure
from hosim.opmodel import Converges, Diverges, run
from hosim.properties import congruence_suite, lambda_congruence_suite
from hosim.relations import FiniteRelation, compose, is_congruence, is_reflexive
from hosim.simulation import Bounds, CoinductiveChecker, HOSemantics, Refuted, weak_similar
from hosim.ski import I, K, S, app, ex34_spec, ski_spec, skk
from hosim.soundness import SamplerConfig, check_spec_sound
from hosim.specfmt import Active, Passive, check_cool
from hosim.terms import Signature, Term, enumerate_terms, parse_term, random_term


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
        assert ok, detail
    return emit


def test_1_noncongruence_example(report):
    spec = ex34_spec()
    t = lambda s: parse_term(s, spec.signature)
    holds = all(weak_similar(spec, t("c"), t("d"), Bounds(d, 20, 2)).status == "holds" for d in (2, 3, 4, 6))
    v = weak_similar(spec, t("u(c)"), t("u(d)"), Bounds(3, 20, 2))
    cycle = isinstance(v, Refuted) and "u(d) → u(d)" in "\n".join(v.witness.lines())
    sound = check_spec_sound(spec, SamplerConfig(samples=50, seed=0), fuel=50)
    status = sound.declared_status()
    rule, viol = sound.first_violation(4)
    witness = (viol.sample == (t("d"),) and viol.premises == ((1, "⇓", t("c")),)
               and viol.expected == t("c") and t("c") not in viol.observed)
    ok = holds and cycle and status == {1: "sound", 2: "sound", 3: "sound", 4: "violated"} and witness
    report(1, ok, f"c ≲ d holds={holds}, u(c) ≲ u(d) refuted with cycle={cycle}, rule status={status}, "
                  f"witness p = d ok={witness}")


def test_2_cool_format(report):
    ski = check_cool(ski_spec())
    shapes = ski.operators["app"] == Active(1) and all(
        shape == Passive() for op, shape in ski.operators.items() if op != "app")
    ex = check_cool(ex34_spec())
    named = [v.rule for v in ex.violations.values()]
    ok = ski.cool and shapes and not ex.cool and named == [3]
    report(2, ok, f"SKI cool={ski.cool} shapes ok={shapes}; example cool={ex.cool} violations at rules {named}")


def test_3_ski_behaviour(report):
    spec = ski_spec()
    runs = {}
    for arg in (I, K, S, Term("K'", (I,))):
        out = run(spec, app(skk(), arg), 50)
        runs[str(arg)] = isinstance(out, Converges) and out.normal == arg
    b = Bounds(3, 50, 3)
    fwd = weak_similar(spec, skk(), I, b).status
    back = weak_similar(spec, I, skk(), b).status
    ok = all(runs.values()) and fwd == back == "holds"
    report(3, ok, f"S K K t ⇓ t for {runs}; SKK ≲ I {fwd}, I ≲ SKK {back}")


def _ski_holds_pairs(spec, bounds, rng, want):
    checker = CoinductiveChecker(HOSemantics(spec), enumerate_terms(spec.signature, bounds.arg_size), bounds)
    pool = [random_term(spec.signature, 4, rng) for _ in range(60)]
    cands = []
    for p in pool:
        cands += [(p, app(I, p)), (app(I, p), p), (app(K, p, S), p), (p, app(K, p, I))]
    cands += [(rng.choice(pool), rng.choice(pool)) for _ in range(400)]
    pairs, seen = [], set()
    for p, q in cands:
        if p != q and (p, q) not in seen:
            seen.add((p, q))
            if checker.verdict(p, q).status == "holds":
                pairs.append((p, q))
    return pairs[:want]


def test_4a_ski_congruence(report):
    spec = ski_spec()
    b = Bounds(3, 50, 2)
    rng = random.Random(7)
    pairs = _ski_holds_pairs(spec, b, rng, 200)
    fillers = [random_term(spec.signature, 3, rng) for _ in range(5)]
    # app: 2 positions x 5 fillers, S''': 2 x 5, S' and K': 1 each
    contexts = sum(1 if n == 1 else n * len(fillers) for _, n in spec.signature.operators if n)
    failures = congruence_suite(spec, pairs, fillers, b)
    ok = len(pairs) == 200 and contexts >= 20 and not failures
    report("4a", ok, f"{len(pairs)} pairs x {contexts} contexts, {len(failures)} failure(s)")


def test_4b_lambda_congruence(report):
    b = Bounds(3, 50, 3)
    rng = random.Random(3)
    checker = lam.lambda_checker(b)
    pool = [lam.random_lambda(rng, 6) for _ in range(80)]
    cands = []
    for t in pool:
        cands += [(lam.LApp(lam.IDENTITY, t), t), (t, lam.LApp(lam.IDENTITY, t))]
    cands += [(rng.choice(pool), rng.choice(pool)) for _ in range(300)]
    pairs = [(p, q) for p, q in cands if p != q and checker.verdict(p, q).status == "holds"][:100]
    fillers = [lam.random_lambda(rng, 5) for _ in range(10)]
    results = lambda_congruence_suite(pairs, fillers, b)
    refuted = [f for f in results if f.verdict.status == "refuted"]
    unknown = [f for f in results if f.verdict.status == "unknown"]
    ok = len(pairs) == 100 and not results
    report("4b", ok, f"{len(pairs)} pairs x {1 + 2 * len(fillers)} contexts, {len(refuted)} refuted, "
                     f"{len(unknown)} unknown")


def test_4c_negative_control(report):
    spec = ex34_spec()
    c, d = Term("c"), Term("d")
    b = Bounds(3, 50, 2)
    assert weak_similar(spec, c, d, b).status == "holds"
    failures = congruence_suite(spec, [(c, d)], [c, d], b)
    caught = [f for f in failures if f.context == "u([.])" and f.verdict.status == "refuted"]
    ok = bool(caught)
    report("4c", ok, f"suite on the non-cool example reports {len(failures)} failure(s); u(·) caught={ok}")


def _tc(pairs):
    rel = set(pairs)
    while True:
        extra = {(a, c) for a, b in rel for b2, c in rel if b == b2} - rel
        if not extra:
            return rel
        rel |= extra


def _least_closed(r):
    s = set(r.pairs)
    by_head = {}
    for t in r.universe:
        by_head.setdefault(t.head, []).append(t)
    while True:
        new = set(s)
        for terms in by_head.values():
            for p, q in itertools.product(terms, repeat=2):
                if all((x, y) in s for x, y in zip(p.args, q.args)):
                    new.add((p, q))
        new |= {(x, z) for x, y in s for y2, z in r.pairs if y == y2}
        if new == s:
            return s
        s = new


def test_5_howe_laws(report):
    sig = Signature((("a", 0), ("b", 0), ("g", 1), ("h", 2)))
    nested = [parse_term("g(h(a,b))", sig), parse_term("h(g(a),b)", sig)]
    universe = tuple(subterm_closure(enumerate_terms(sig, 3) + nested))
    rng = random.Random(0)
    counts = dict.fromkeys(("contains", "refl_cong", "weak_trans", "least"), 0)
    trials = 200
    for _ in range(trials):
        pairs = {(rng.choice(universe), rng.choice(universe)) for _ in range(rng.randint(0, 30))}
        r = FiniteRelation(universe, frozenset(pairs))
        counts["contains"] += r.pairs <= howe_closure(sig, r).pairs
        refl = FiniteRelation(universe, frozenset(pairs | {(t, t) for t in universe}))
        cl = howe_closure(sig, refl)
        counts["refl_cong"] += is_reflexive(cl) and is_congruence(sig, cl) is True
        trans = FiniteRelation(universe, frozenset(_tc(pairs)))
        counts["weak_trans"] += compose(howe_closure(sig, trans), trans).pairs <= howe_closure(sig, trans).pairs
        pre = FiniteRelation(universe, frozenset(_tc(refl.pairs)))
        counts["least"] += howe_closure(sig, pre).pairs == _least_closed(pre)
    ok = len(universe) <= 12 and all(v == trials for v in counts.values())
    report(5, ok, f"{len(universe)}-term universe, {trials} random relations, laws held: {counts}")


def test_6_oracle_equivalence(report):
    used = mismatches = unknown = skipped = compared = 0
    seed = 0
    while used < 60:
        rng = random.Random(seed)
        seed += 1
        spec = random_spec(rng)
        args = enumerate_terms(spec.signature, 2)[:4]
        roots = [random_term(spec.signature, 3, rng) for _ in range(4)]
        states = reachable_fragment(spec, roots, args, limit=200)
        if states is None:
            skipped += 1
            continue
        used += 1
        oracle = weak_similarity_gfp(spec, states, args)
        depth = len(states) ** 2 + 1
        checker = CoinductiveChecker(HOSemantics(spec), args, Bounds(depth, 500, 1))
        for p in states:
            for q in states:
                v = checker.verdict(p, q)
                compared += 1
                if v.status == "unknown":
                    unknown += 1
                elif (v.status == "holds") != ((p, q) in oracle.pairs):
                    mismatches += 1
    ok = used >= 50 and mismatches == 0 and unknown == 0
    report(6, ok, f"{used} specs, {compared} pairs compared, {mismatches} mismatch(es), {unknown} unknown; "
                  f"{skipped} spec(s) skipped because their fragment was not finite within limits")


def test_7_lambda_sanity(report):
    b = Bounds(3, 50, 2)
    out = lam.run(lam.OMEGA, 10)
    omega_cycles = isinstance(out, Diverges) and out.cycle_length == 1
    rng = random.Random(11)
    samples = [lam.random_lambda(rng, 7) for _ in range(20)]
    beta = {}
    for t in samples:
        redex = lam.LApp(lam.IDENTITY, t)
        beta[lam.show(t)] = (lam.applicative_similar_closed(redex, t, b).status,
                             lam.applicative_similar_closed(t, redex, b).status)
    beta_ok = all(v == ("holds", "holds") for v in beta.values())
    below = all(lam.applicative_similar_closed(lam.OMEGA, t, b).status == "holds" for t in samples + [lam.IDENTITY])
    refuted = lam.applicative_similar_closed(lam.IDENTITY, lam.OMEGA, b).status == "refuted"
    ok = omega_cycles and beta_ok and below and refuted
    bad = {k: v for k, v in beta.items() if v != ("holds", "holds")}
    report(7, ok, f"Ω cycles={omega_cycles}; (λx.x) t ≍ t for 20 t ok={beta_ok} {bad or ''}; "
                  f"Ω ≲ t={below}; λx.x ≲ Ω refuted={refuted}")


def test_8_cool_specs_are_sound(report):
    violations = cool = 0
    samples = 0
    for seed in range(100):
        spec = random_cool_spec(random.Random(seed))
        cool += check_cool(spec).cool
        res = check_spec_sound(spec, SamplerConfig(samples=50, seed=seed), fuel=60)
        violations += len(res.violations)
        samples += sum(len(r.results) for r in res.reports)
    ok = cool == 100 and violations == 0
    report(8, ok, f"{cool}/100 generated specs cool, {samples} rule instances checked, {violations} violation(s)")
