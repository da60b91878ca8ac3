"""Empirical soundness-for-weak-transitions checks of HO rules.

A rule is sound for weak transitions when replacing its premises by weak
transitions (``=>`` for reduction premises, convergence for function premises)
and its conclusion by ``=>`` / convergence still yields valid statements in
the operational model. This module tests that on finite samples.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

from .opmodel import Converges, Diverges, FuelExhausted
from .specfmt import HOLE, HoRule, Kind, SpecDocument
from .terms import Term, enumerate_terms, random_term, substitute


@dataclass(frozen=True)
class RuleViolation:
    sample: tuple
    premises: tuple  # ((position, "=>" or "⇓", term), ...)
    expected: object
    observed: tuple  # weak successors of f(p), or its normal form
    argument: object = None
    detail: str = ""

    def describe(self, operator: str) -> str:
        lhs = Term(operator, self.sample)
        given = ", ".join(f"{self.sample[k - 1]} {rel} {t}" for k, rel, t in self.premises)
        head = f"p = {', '.join(map(str, self.sample))}" if self.sample else "no arguments"
        if self.argument is None:
            seen = ", ".join(map(str, self.observed))
            return f"{head}: {given}; expected {lhs} ⇒ {self.expected}, but {lhs} ⇒ only {{{seen}}}"
        return f"{head}: {given}; {self.detail}"


@dataclass(frozen=True)
class SampleResult:
    sample: tuple
    status: str  # "sound" | "violated" | "unknown"
    violation: RuleViolation | None = None
    reason: str = ""


@dataclass
class SoundnessReport:
    rule: HoRule
    args: tuple
    results: list = field(default_factory=list)

    @property
    def violations(self) -> list:
        return [r for r in self.results if r.status == "violated"]

    @property
    def unknown(self) -> list:
        return [r for r in self.results if r.status == "unknown"]

    @property
    def status(self) -> str:
        if self.violations:
            return "violated"
        return "unknown" if self.unknown else "sound"


def _premise_value(name, sample, reduced, normals):
    if name[0] == "x":
        return sample[int(name[1:]) - 1]
    pos, _, label = name[1:].partition("_")
    pos = int(pos)
    if not label:
        return reduced[pos]
    fun = normals[pos][1]
    return fun.apply(sample[int(label[1:]) - 1])


def _check_sample(spec, rule: HoRule, sample, fuel, args) -> SampleResult:
    model = spec.model
    choices = {}
    complete = True
    for j in sorted(rule.w):
        out = model.run(sample[j - 1], fuel)
        choices[j] = list(out.trace)
        complete = complete and not isinstance(out, FuelExhausted)
    normals = {}
    for k in sorted(rule.complement):
        out = model.run(sample[k - 1], fuel)
        if isinstance(out, Diverges):
            return SampleResult(sample, "sound", reason=f"premise x{k} ⇓ unsatisfiable: {sample[k - 1]} diverges")
        if isinstance(out, FuelExhausted):
            return SampleResult(sample, "unknown", reason=f"{out.cause} evaluating {sample[k - 1]}")
        normals[k] = (out.normal, out.final_behavior)

    lhs = Term(rule.operator, sample)
    lhs_out = model.run(lhs, fuel)
    needed = [v for v in sorted(rule.target_vars) if v != HOLE and not v.endswith("_" + HOLE)]
    unknown = None if complete else "fuel exhausted enumerating reduction premises"
    order = sorted(rule.w)
    for combo in itertools.product(*(choices[j] for j in order)):
        reduced = dict(zip(order, combo))
        binding = {v: _premise_value(v, sample, reduced, normals) for v in needed}
        premises = tuple((j, "⇒", reduced[j]) for j in order) + tuple(
            (k, "⇓", normals[k][0]) for k in sorted(normals)
        )
        if rule.kind is Kind.RED:
            expected = substitute(rule.target, binding)
            if expected in lhs_out.trace:
                continue
            if isinstance(lhs_out, FuelExhausted):
                unknown = unknown or f"{lhs_out.cause} expanding {lhs}"
                continue
            v = RuleViolation(sample, premises, expected, tuple(lhs_out.trace))
            return SampleResult(sample, "violated", v)
        # function conclusion: f(p) must converge to a function agreeing on every argument
        if isinstance(lhs_out, FuelExhausted):
            unknown = unknown or f"{lhs_out.cause} evaluating {lhs}"
            continue
        if not isinstance(lhs_out, Converges):
            v = RuleViolation(sample, premises, None, tuple(lhs_out.trace), argument=args[0] if args else None,
                              detail=f"expected {lhs} to converge, but it diverges")
            return SampleResult(sample, "violated", v)
        fun = lhs_out.final_behavior
        for e in args:
            b = dict(binding)
            b[HOLE] = e
            for k in normals:
                b[f"y{k}_{HOLE}"] = normals[k][1].apply(e)
            expected = substitute(rule.target, b)
            got = fun.apply(e)
            if got != expected:
                v = RuleViolation(sample, premises, expected, (lhs_out.normal,), argument=e,
                                  detail=f"{lhs} ⇓ {lhs_out.normal}, applied to {e} gives {got}, expected {expected}")
                return SampleResult(sample, "violated", v)
    if unknown:
        return SampleResult(sample, "unknown", reason=unknown)
    return SampleResult(sample, "sound")


def check_rule_sound(spec: SpecDocument, rule: HoRule, samples, fuel: int = 100,
                     args=None, arg_size: int = 2) -> SoundnessReport:
    """Test the weak version of ``rule`` on each argument tuple in ``samples``.

    Every choice of reduction-premise endpoint is tried; function conclusions
    are compared on ``args`` (default: all terms up to ``arg_size``).
    """
    if args is None:
        args = enumerate_terms(spec.signature, arg_size)
    report = SoundnessReport(rule, tuple(args))
    for sample in samples:
        sample = tuple(sample)
        if len(sample) != rule.arity:
            raise ValueError(f"sample {sample} does not match arity {rule.arity} of {rule.operator}")
        report.results.append(_check_sample(spec, rule, sample, fuel, report.args))
    return report


@dataclass(frozen=True)
class SamplerConfig:
    enum_size: int = 2
    max_enumerated: int = 200
    samples: int = 20
    random_size: int = 4
    arg_size: int = 2
    seed: int = 0


@dataclass
class SpecSoundnessReport:
    spec: SpecDocument
    config: SamplerConfig
    reports: list = field(default_factory=list)

    @property
    def violations(self) -> list:
        return [(r.rule, s) for r in self.reports for s in r.violations]

    @property
    def sound(self) -> bool:
        return not self.violations

    def declared_status(self) -> dict:
        """Status per declared rule (1-based index), merging its expansions."""
        out = {}
        for r in self.reports:
            prev = out.get(r.rule.origin, "sound")
            rank = {"sound": 0, "unknown": 1, "violated": 2}
            out[r.rule.origin] = max(prev, r.status, key=rank.__getitem__)
        return dict(sorted(out.items()))

    def first_violation(self, origin: int):
        for r in self.reports:
            if r.rule.origin == origin and r.violations:
                return r.rule, r.violations[0].violation
        return None


def rule_samples(spec: SpecDocument, rule: HoRule, config: SamplerConfig) -> list:
    sig = spec.signature
    pool = enumerate_terms(sig, config.enum_size) if sig.constants else []
    out = list(itertools.islice(itertools.product(pool, repeat=rule.arity), config.max_enumerated))
    if rule.arity and sig.constants:
        rng = random.Random(f"{config.seed}:{rule.operator}:{sorted(rule.w)}")
        for _ in range(config.samples):
            out.append(tuple(random_term(sig, config.random_size, rng) for _ in range(rule.arity)))
    seen, uniq = set(), []
    for s in out:
        if s not in seen:
            seen.add(s)
            uniq.append(s)
    return uniq


def check_spec_sound(spec: SpecDocument, config: SamplerConfig = SamplerConfig(), fuel: int = 100) -> SpecSoundnessReport:
    """Run :func:`check_rule_sound` over every expanded rule with enumerated and random samples."""
    args = enumerate_terms(spec.signature, config.arg_size) if spec.signature.constants else []
    report = SpecSoundnessReport(spec, config)
    for rule in spec.rules:
        samples = rule_samples(spec, rule, config)
        report.reports.append(check_rule_sound(spec, rule, samples, fuel, args=args))
    return report
