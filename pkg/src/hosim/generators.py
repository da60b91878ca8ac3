"""Random HO specifications, used by the property suites and the falsification harness.

Generators emit DSL text and parse it, so every generated spec also exercises
the parser and the premise expansion.
"""

from __future__ import annotations

import itertools

from .specfmt import HOLE, SpecDocument, parse_spec
from .terms import Signature, Var, random_term

_CONSTANTS = ["a", "b", "c"]
_UNARY = ["f", "g"]
_BINARY = ["h", "k"]


def random_signature(rng, max_constants: int = 2, max_unary: int = 2, max_binary: int = 1) -> Signature:
    ops = [(n, 0) for n in _CONSTANTS[: rng.randint(1, max_constants)]]
    ops += [(n, 1) for n in _UNARY[: rng.randint(0, max_unary)]]
    ops += [(n, 2) for n in _BINARY[: rng.randint(0, max_binary)]]
    return Signature(tuple(ops))


def _head(name, n):
    if n == 0:
        return name
    return f"{name}({','.join(f'x{i}' for i in range(1, n + 1))})"


def _rule_line(name, n, red, fun, fun_kind, target):
    premises = [f"x{j} -> y{j}" for j in sorted(red)]
    for k in sorted(fun):
        premises += [f"x{k} ={z}=> y{k}_{z}" for z in sorted(fun[k])]
    arrow = f"={HOLE}=>" if fun_kind else "->"
    lhs = _head(name, n)
    given = ", ".join(premises) + " " if premises else ""
    return f"rule {lhs}: {given}|- {lhs} {arrow} {target}"


def _target(sig, rng, leaves, size):
    t = random_term(sig, size, rng, tuple(Var(v) for v in sorted(leaves)))
    return t


def random_spec_text(rng, sig: Signature | None = None, target_size: int = 3) -> str:
    """A complete spec: one fully specified rule for every operator and W."""
    sig = sig or random_signature(rng)
    lines = [f"sig {{ {' '.join(f'{n}/{a}' for n, a in sig.operators)} }}"]
    for name, n in sig.operators:
        positions = range(1, n + 1)
        for bits in itertools.product((False, True), repeat=n):
            red = {j for j, b in zip(positions, bits) if b}
            fun_kind = rng.random() < 0.5
            labels = [f"x{i}" for i in positions] + ([HOLE] if fun_kind else [])
            fun = {}
            for k in positions:
                if k in red:
                    continue
                # every position must be mentioned, so give it at least one label
                fun[k] = set(rng.sample(labels, rng.randint(1, min(2, len(labels)))))
            leaves = {f"x{i}" for i in positions} | {f"y{j}" for j in red}
            leaves |= {f"y{k}_{z}" for k, zs in fun.items() for z in zs}
            if fun_kind:
                leaves.add(HOLE)
            target = _target(sig, rng, leaves, target_size)
            lines.append(_rule_line(name, n, red, fun, fun_kind, target))
    return "\n".join(lines) + "\n"


def random_spec(rng, sig: Signature | None = None, target_size: int = 3) -> SpecDocument:
    return parse_spec(random_spec_text(rng, sig, target_size))


def random_cool_spec_text(rng, sig: Signature | None = None, target_size: int = 3) -> str:
    """A cool spec: each operator is passive or active with a random receiving position."""
    sig = sig or random_signature(rng)
    lines = [f"sig {{ {' '.join(f'{n}/{a}' for n, a in sig.operators)} }}"]
    for name, n in sig.operators:
        positions = list(range(1, n + 1))
        if n == 0 or rng.random() < 0.4:
            fun_kind = rng.random() < 0.5
            leaves = {f"x{i}" for i in positions} | ({HOLE} if fun_kind else set())
            lines.append(_rule_line(name, n, set(), {}, fun_kind, _target(sig, rng, leaves, target_size)))
            continue
        j = rng.choice(positions)
        others = [i for i in positions if i != j]
        args = ",".join(f"y{j}" if i == j else f"x{i}" for i in positions)
        lines.append(_rule_line(name, n, {j}, {}, False, f"{name}({args})"))
        # a lone receiving position has no label to use unless the conclusion is a function
        fun_kind = not others or rng.random() < 0.5
        labels = [f"x{i}" for i in others] + ([HOLE] if fun_kind else [])
        zs = set(rng.sample(labels, rng.randint(1, min(2, len(labels)))))
        leaves = {f"x{i}" for i in others} | {f"y{j}_{z}" for z in zs if z != HOLE}
        if fun_kind:
            leaves |= {HOLE}
            if HOLE in zs:
                leaves.add(f"y{j}_{HOLE}")
        lines.append(_rule_line(name, n, set(), {j: zs}, fun_kind, _target(sig, rng, leaves, target_size)))
    return "\n".join(lines) + "\n"


def random_cool_spec(rng, sig: Signature | None = None, target_size: int = 3) -> SpecDocument:
    return parse_spec(random_cool_spec_text(rng, sig, target_size))
