"""Congruence property suites over sampled related pairs.

A suite takes pairs whose bounded similarity Holds and re-checks them under
one-operator contexts at the same bounds. Failures are returned, not raised,
so the suites double as detectors of non-congruence.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import lam
from .simulation import Bounds, CoinductiveChecker, HOSemantics, Mode
from .terms import Term, enumerate_terms


@dataclass(frozen=True)
class ContextFailure:
    left: object
    right: object
    context: str
    verdict: object

    def __str__(self):
        return f"{self.context}: {self.left} ≲ {self.right} gives {self.verdict}"


def congruence_suite(spec, pairs, fillers, bounds: Bounds, mode: Mode = Mode.WEAK, operators=None):
    """Check f(.., p, ..) ≲ f(.., q, ..) for every pair and every one-hole context.

    ``fillers`` supply the other arguments of each context; ``operators``
    restricts the context heads (default: all). Returns the context checks
    that did not Hold (Refuted or Unknown).
    """
    sig = spec.signature
    args = enumerate_terms(sig, bounds.arg_size)
    checker = CoinductiveChecker(HOSemantics(spec), args, bounds, mode)
    failures = []
    for p, q in pairs:
        for name, n in sig.operators:
            if operators is not None and name not in operators:
                continue
            for i in range(n):
                for r in fillers:
                    left = Term(name, tuple(p if k == i else r for k in range(n)))
                    right = Term(name, tuple(q if k == i else r for k in range(n)))
                    v = checker.verdict(left, right)
                    if v.status != "holds":
                        ctx = Term(name, tuple(Term("[.]") if k == i else r for k in range(n)))
                        failures.append(ContextFailure(left, right, str(ctx), v))
                    if n == 1:
                        break  # the filler is irrelevant for unary contexts
    return failures


def lambda_congruence_suite(pairs, fillers, bounds: Bounds):
    """For closed t ≲ t': s t ≲ s t', t s ≲ t' s and λx.t ≲ λx.t' for each filler s."""
    checker = lam.lambda_checker(bounds)
    failures = []
    for t, u in pairs:
        checks = [("\\x. [.]", lam.LLam(lam.shift(t, 1)), lam.LLam(lam.shift(u, 1)))]
        for s in fillers:
            checks.append((f"{lam.show(s)} [.]", lam.LApp(s, t), lam.LApp(s, u)))
            checks.append((f"[.] {lam.show(s)}", lam.LApp(t, s), lam.LApp(u, s)))
        for ctx, left, right in checks:
            v = checker.verdict(left, right)
            if v.status != "holds":
                failures.append(ContextFailure(lam.show(left), lam.show(right), ctx, v))
    return failures
