"""The HO rule format: spec DSL, premise completion, completeness and cool checks.

Grammar of a ``.hos`` document::

    sig { name/arity ... }
    rule f(x1,..,xn): <premises> |- <conclusion>

Premises are comma separated and take the forms ``xj -> yj`` or
``xk =z=> yk_z``; a conclusion is ``f(x1,..,xn) -> t`` or
``f(x1,..,xn) =x=> t``. ``#`` starts a comment.
"""

from __future__ import annotations

import enum
import itertools
import re
from dataclasses import dataclass, field

from .terms import (
    ArityMismatch,
    Signature,
    Term,
    TermError,
    TermParser,
    TermSyntaxError,
    UnknownOperator,
    Var,
    variables,
)

HOLE = "x"

_METAVAR = re.compile(r"x|x\d+|y\d+|y\d+_x\d*")


def is_metavariable(name: str) -> bool:
    return _METAVAR.fullmatch(name) is not None


class Kind(enum.Enum):
    RED = "red"
    FUN = "fun"


class SpecError(Exception):
    pass


class DslSyntaxError(SpecError):
    def __init__(self, line, message):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


class ScopeError(SpecError):
    def __init__(self, rule, variable, line=None):
        where = f" (line {line})" if line else ""
        super().__init__(f"rule {rule}{where}: metavariable {variable!r} is out of scope")
        self.rule = rule
        self.variable = variable
        self.line = line


class ConflictingRules(SpecError):
    def __init__(self, operator, w, first, second):
        super().__init__(
            f"rules {first} and {second} both define {operator} for W={sorted(w)} "
            "with different conclusions"
        )
        self.operator = operator
        self.w = w
        self.rules = (first, second)


class IncompleteSpec(SpecError):
    def __init__(self, missing):
        shown = ", ".join(f"{f} W={sorted(w)}" for f, w in missing[:6])
        super().__init__(f"no rule for {shown}" + (" ..." if len(missing) > 6 else ""))
        self.missing = missing


@dataclass(frozen=True)
class DeclaredRule:
    """A rule as written, possibly with incomplete premises."""

    index: int
    operator: str
    arity: int
    red: frozenset  # positions j with premise xj -> yj
    fun: tuple  # sorted ((k, frozenset of labels), ...) for premises xk =z=> yk_z
    kind: Kind
    target: object
    line: int = 0

    @property
    def red_positions(self) -> frozenset:
        return self.red

    @property
    def fun_positions(self) -> frozenset:
        return frozenset(k for k, _ in self.fun)

    @property
    def premise_free(self) -> bool:
        return not self.red and not self.fun

    def labels(self, k) -> frozenset:
        return dict(self.fun).get(k, frozenset())

    def to_text(self) -> str:
        xs = [f"x{i}" for i in range(1, self.arity + 1)]
        lhs = self.operator + (f"({','.join(xs)})" if xs else "")
        prem = [f"x{j} -> y{j}" for j in sorted(self.red)]
        for k, labels in self.fun:
            prem.extend(f"x{k} ={z}=> y{k}_{z}" for z in sorted(labels, key=_label_key))
        arrow = "->" if self.kind is Kind.RED else f"={HOLE}=>"
        return f"rule {lhs}: {', '.join(prem)} |- {lhs} {arrow} {self.target}"


def _label_key(z):
    return (1 << 30) if z == HOLE else int(z[1:])


@dataclass(frozen=True)
class HoRule:
    """A fully specified rule: operator, premise set W, kind and target."""

    operator: str
    arity: int
    w: frozenset
    kind: Kind
    target: object
    origin: int = 0  # index of the declared rule it was expanded from

    @property
    def red_positions(self) -> frozenset:
        return self.w

    @property
    def fun_positions(self) -> frozenset:
        return frozenset(range(1, self.arity + 1)) - self.w

    @property
    def complement(self) -> frozenset:
        return self.fun_positions

    @property
    def target_vars(self) -> frozenset:
        return variables(self.target)

    def __str__(self):
        prem = [f"x{j}->y{j}" for j in sorted(self.w)]
        prem += [f"x{k}=>" for k in sorted(self.complement)]
        arrow = "->" if self.kind is Kind.RED else f"={HOLE}=>"
        xs = ",".join(f"x{i}" for i in range(1, self.arity + 1))
        lhs = self.operator + (f"({xs})" if xs else "")
        return f"[{' '.join(prem)}] {lhs} {arrow} {self.target}"


def scope_of(arity: int, red, fun_positions, kind: Kind) -> frozenset:
    """Metavariables a target may mention for the given premise shape."""
    xs = [f"x{i}" for i in range(1, arity + 1)]
    allowed = set(xs)
    allowed.update(f"y{j}" for j in red)
    labels = list(xs) + ([HOLE] if kind is Kind.FUN else [])
    for k in fun_positions:
        allowed.update(f"y{k}_{z}" for z in labels)
    if kind is Kind.FUN:
        allowed.add(HOLE)
    return frozenset(allowed)


class SpecDocument:
    """A complete HO specification together with the rules as declared."""

    def __init__(self, signature: Signature, declared, rules=None):
        self.signature = signature
        self.declared = tuple(declared)
        self.rules = tuple(rules if rules is not None else expand_premises(self.declared, signature))
        self._table = {(r.operator, r.w): r for r in self.rules}
        check_complete(signature, self.rules)
        self._model = None

    def rule_for(self, operator: str, w: frozenset) -> HoRule:
        try:
            return self._table[(operator, frozenset(w))]
        except KeyError:
            raise IncompleteSpec([(operator, frozenset(w))]) from None

    def rules_of(self, operator: str) -> list:
        return [r for r in self.declared if r.operator == operator]

    @property
    def model(self):
        if self._model is None:
            from .opmodel import OperationalModel

            self._model = OperationalModel(self)
        return self._model

    def to_text(self) -> str:
        lines = [f"sig {self.signature}"]
        lines += [r.to_text() for r in self.declared]
        return "\n".join(lines) + "\n"

    def __repr__(self):
        return f"SpecDocument({self.signature}, {len(self.declared)} declared rules)"


# --- parsing ---------------------------------------------------------------

_SIG_ENTRY = re.compile(r"([A-Za-z_][A-Za-z0-9_']*)/(\d+)")
_LINE_TOKEN = re.compile(r"\s*(?:(\|-)|(->)|=([A-Za-z0-9_]+)=>|([A-Za-z_][A-Za-z0-9_']*)|(\S))")


def _lex(text, lineno):
    toks = []
    pos = 0
    while True:
        m = _LINE_TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            break
        pos = m.end()
        turnstile, arrow, label, ident, other = m.groups()
        if turnstile:
            toks.append(("|-", None))
        elif arrow:
            toks.append(("->", None))
        elif label is not None:
            toks.append(("=>", label))
        elif ident:
            toks.append(("id", ident))
        elif other:
            toks.append(("sym", other))
    if text[pos:].strip():
        raise DslSyntaxError(lineno, f"cannot read {text[pos:].strip()!r}")
    return toks


def _strip_comment(line):
    i = line.find("#")
    return line if i < 0 else line[:i]


def parse_spec(text: str) -> SpecDocument:
    """Parse a ``.hos`` document, expand premises and check completeness."""
    sig, declared = parse_declared(text)
    return SpecDocument(sig, declared)


def parse_declared(text: str):
    """Parse the signature and the declared (pre-expansion) rules."""
    lines = text.splitlines()
    sig = None
    declared = []
    i = 0
    while i < len(lines):
        lineno = i + 1
        line = _strip_comment(lines[i]).strip()
        i += 1
        if not line:
            continue
        if line.startswith("sig"):
            if sig is not None:
                raise DslSyntaxError(lineno, "duplicate sig block")
            body = line[3:].strip()
            while "}" not in body and i < len(lines):
                body += " " + _strip_comment(lines[i]).strip()
                i += 1
            if not body.startswith("{") or "}" not in body:
                raise DslSyntaxError(lineno, "expected 'sig { name/arity ... }'")
            inner, _, after = body[1:].partition("}")
            if after.strip():
                raise DslSyntaxError(lineno, f"unexpected text after signature: {after.strip()!r}")
            entries = inner.replace(",", " ").split()
            ops = []
            for e in entries:
                m = _SIG_ENTRY.fullmatch(e)
                if m is None:
                    raise DslSyntaxError(lineno, f"bad signature entry {e!r}")
                if is_metavariable(m.group(1)):
                    raise DslSyntaxError(lineno, f"operator name {m.group(1)!r} is reserved for metavariables")
                ops.append((m.group(1), int(m.group(2))))
            try:
                sig = Signature(tuple(ops))
            except TermError as exc:
                raise DslSyntaxError(lineno, str(exc)) from None
        elif line.startswith("rule"):
            if sig is None:
                raise DslSyntaxError(lineno, "rule before sig block")
            declared.append(_parse_rule(line[4:], sig, len(declared) + 1, lineno))
        else:
            raise DslSyntaxError(lineno, f"expected 'sig' or 'rule', found {line.split()[0]!r}")
    if sig is None:
        raise DslSyntaxError(len(lines) or 1, "missing sig block")
    return sig, declared


class _Cursor:
    def __init__(self, toks, lineno):
        self.toks = toks
        self.pos = 0
        self.lineno = lineno

    def peek(self):
        return self.toks[self.pos] if self.pos < len(self.toks) else (None, None)

    def take(self, kind, value=None):
        tok = self.peek()
        if tok[0] != kind or (value is not None and tok[1] != value):
            want = value or kind
            raise DslSyntaxError(self.lineno, f"expected {want!r}, found {tok[1] or tok[0]!r}")
        self.pos += 1
        return tok[1]


def _read_term(cur: _Cursor, sig: Signature):
    # hand the remaining plain tokens to the shared term parser
    start = cur.pos
    flat = []
    for kind, value in cur.toks[start:]:
        if kind in ("id", "sym") and value in ("(", ")", ",") or kind == "id":
            flat.append(value)
        else:
            break
    parser = TermParser(flat, sig, is_metavariable)
    try:
        t = parser.term()
    except UnknownOperator as exc:
        raise DslSyntaxError(cur.lineno, str(exc)) from None
    except TermSyntaxError as exc:
        raise DslSyntaxError(cur.lineno, str(exc)) from None
    cur.pos = start + parser.pos
    return t


def _parse_lhs(cur, sig, lineno):
    name = cur.take("id")
    if name not in sig:
        raise DslSyntaxError(lineno, f"unknown operator {name!r}")
    params = []
    if cur.peek() == ("sym", "("):
        cur.take("sym", "(")
        if cur.peek() != ("sym", ")"):
            params.append(cur.take("id"))
            while cur.peek() == ("sym", ","):
                cur.take("sym", ",")
                params.append(cur.take("id"))
        cur.take("sym", ")")
    n = sig.arity(name)
    if len(params) != n:
        raise ArityMismatch(name, n, len(params))
    if params != [f"x{i}" for i in range(1, n + 1)]:
        raise DslSyntaxError(lineno, f"rule head must be {name}(x1,..,x{n}), got {params}")
    return name, n


def _parse_rule(text, sig, index, lineno) -> DeclaredRule:
    cur = _Cursor(_lex(text, lineno), lineno)
    op, n = _parse_lhs(cur, sig, lineno)
    cur.take("sym", ":")
    red = set()
    fun: dict = {}
    if cur.peek()[0] != "|-":
        while True:
            src = cur.take("id")
            m = re.fullmatch(r"x(\d+)", src)
            if m is None:
                raise DslSyntaxError(lineno, f"premise must start with x<i>, got {src!r}")
            k = int(m.group(1))
            if not 1 <= k <= n:
                raise DslSyntaxError(lineno, f"premise position {k} outside 1..{n}")
            tok = cur.peek()
            if tok[0] == "->":
                cur.take("->")
                dst = cur.take("id")
                if dst != f"y{k}":
                    raise DslSyntaxError(lineno, f"premise x{k} -> must target y{k}, got {dst!r}")
                red.add(k)
            elif tok[0] == "=>":
                z = cur.take("=>")
                dst = cur.take("id")
                if dst != f"y{k}_{z}":
                    raise DslSyntaxError(lineno, f"premise x{k} ={z}=> must target y{k}_{z}, got {dst!r}")
                fun.setdefault(k, set()).add(z)
            else:
                raise DslSyntaxError(lineno, "expected '->' or '=z=>' in premise")
            if cur.peek() == ("sym", ","):
                cur.take("sym", ",")
                continue
            break
    cur.take("|-")
    op2, _ = _parse_lhs(cur, sig, lineno)
    if op2 != op:
        raise DslSyntaxError(lineno, f"conclusion is about {op2!r}, rule head is {op!r}")
    tok = cur.peek()
    if tok[0] == "->":
        cur.take("->")
        kind = Kind.RED
    elif tok[0] == "=>" and tok[1] == HOLE:
        cur.take("=>")
        kind = Kind.FUN
    else:
        raise DslSyntaxError(lineno, f"conclusion arrow must be '->' or '={HOLE}=>'")
    target = _read_term(cur, sig)
    if cur.peek()[0] is not None:
        raise DslSyntaxError(lineno, f"trailing input {cur.peek()[1] or cur.peek()[0]!r}")
    both = red & set(fun)
    if both:
        raise DslSyntaxError(lineno, f"position(s) {sorted(both)} have both kinds of premise")
    labels_ok = {f"x{i}" for i in range(1, n + 1)} | ({HOLE} if kind is Kind.FUN else set())
    for k, zs in fun.items():
        for z in zs:
            if z not in labels_ok:
                raise ScopeError(index, f"y{k}_{z}", lineno)
    allowed = scope_of(n, red, fun.keys(), kind)
    for v in sorted(variables(target)):
        if v not in allowed:
            raise ScopeError(index, v, lineno)
    return DeclaredRule(
        index=index,
        operator=op,
        arity=n,
        red=frozenset(red),
        fun=tuple(sorted((k, frozenset(zs)) for k, zs in fun.items())),
        kind=kind,
        target=target,
        line=lineno,
    )


# --- expansion and completeness ----------------------------------------------

def expand_premises(declared, signature: Signature | None = None) -> list:
    """Complete every rule by adding its missing premises in every feasible way.

    Each position a rule leaves unmentioned independently becomes a reduction
    premise or a function premise. Identical duplicates are merged; rules that
    collide on (operator, W) with different conclusions raise ConflictingRules.
    When ``signature`` is given, completeness is checked as well.
    """
    table: dict = {}
    for r in declared:
        mentioned = r.red_positions | r.fun_positions
        free = [k for k in range(1, r.arity + 1) if k not in mentioned]
        origin = getattr(r, "index", None) or getattr(r, "origin", 0)
        for bits in itertools.product((False, True), repeat=len(free)):
            w = frozenset(r.red_positions | {k for k, b in zip(free, bits) if b})
            rule = HoRule(r.operator, r.arity, w, r.kind, r.target, origin)
            key = (r.operator, w)
            old = table.get(key)
            if old is None:
                table[key] = rule
            elif (old.kind, old.target) != (rule.kind, rule.target):
                raise ConflictingRules(r.operator, w, old.origin, origin)
    order = {name: i for i, name in enumerate(signature.names)} if signature else {}
    rules = sorted(
        table.values(),
        key=lambda h: (order.get(h.operator, len(order)), h.operator, len(h.w), sorted(h.w)),
    )
    if signature is not None:
        check_complete(signature, rules)
    return rules


def check_complete(signature: Signature, rules) -> None:
    """Raise IncompleteSpec unless every (operator, W) has exactly one rule."""
    seen = {}
    for r in rules:
        key = (r.operator, frozenset(r.w))
        if key in seen and (seen[key].kind, seen[key].target) != (r.kind, r.target):
            raise ConflictingRules(r.operator, r.w, seen[key].origin, r.origin)
        seen[key] = r
    missing = []
    for name, n in signature.operators:
        for bits in itertools.product((False, True), repeat=n):
            w = frozenset(i + 1 for i, b in enumerate(bits) if b)
            if (name, w) not in seen:
                missing.append((name, w))
    if missing:
        raise IncompleteSpec(missing)


# --- the cool format -----------------------------------------------------------

@dataclass(frozen=True)
class Passive:
    def __str__(self):
        return "passive"


@dataclass(frozen=True)
class Active:
    position: int

    def __str__(self):
        return f"active (receiving position {self.position})"


@dataclass(frozen=True)
class Violation:
    rule: int
    reason: str

    def __str__(self):
        return f"violation at rule {self.rule}: {self.reason}"


@dataclass
class CoolReport:
    operators: dict = field(default_factory=dict)
    note: str = (
        "shapes are matched against the declared rules verbatim; "
        "implicit premise completion is not applied before matching"
    )

    @property
    def cool(self) -> bool:
        return not any(isinstance(c, Violation) for c in self.operators.values())

    @property
    def violations(self) -> dict:
        return {f: c for f, c in self.operators.items() if isinstance(c, Violation)}

    def __str__(self):
        lines = [f"{f}: {c}" for f, c in self.operators.items()]
        lines.append("cool" if self.cool else "not cool")
        return "\n".join(lines)


def _shape_failure(rule: DeclaredRule, j: int) -> str | None:
    """Why ``rule`` fits none of the receiving-position-``j`` shapes (None if it fits)."""
    n = rule.arity
    others = [i for i in range(1, n + 1) if i != j]
    if rule.red:
        if rule.red != {j} or rule.fun:
            return f"reduction premises must be exactly x{j} -> y{j}"
        if rule.kind is not Kind.RED:
            return f"a rule with premise x{j} -> y{j} must reduce"
        args = [Var(f"y{j}") if i == j else Var(f"x{i}") for i in range(1, n + 1)]
        expected = Term(rule.operator, args)
        if rule.target != expected:
            return f"target must be {expected}, got {rule.target}"
        return None
    if not rule.fun:
        return "premise-free rule for an operator with several rules"
    if rule.fun_positions != {j}:
        return f"function premises must all be on position {j}"
    allowed = {f"x{i}" for i in others} | {f"y{j}_x{i}" for i in others}
    if rule.kind is Kind.FUN:
        allowed |= {HOLE, f"y{j}_{HOLE}"}
    bad = sorted(variables(rule.target) - allowed)
    if bad:
        return f"target may not mention {', '.join(bad)}"
    return None


def classify_operator(name: str, arity: int, rules) -> object:
    if len(rules) == 1 and rules[0].premise_free:
        return Passive()
    if any(r.premise_free for r in rules):
        first = next(r for r in rules if r.premise_free)
        return Violation(first.index, "premise-free rule alongside other rules")
    best = None
    for j in range(1, arity + 1):
        failure = None
        for pos, r in enumerate(rules):
            reason = _shape_failure(r, j)
            if reason is not None:
                failure = (pos, r.index, f"receiving position {j}: {reason}")
                break
        if failure is None:
            return Active(j)
        if best is None or failure[0] > best[0]:
            best = failure
    if best is None:
        return Violation(rules[0].index if rules else 0, "no receiving position available")
    return Violation(best[1], best[2])


def check_cool(spec: SpecDocument) -> CoolReport:
    """Classify every operator as passive, active (with receiving position) or violating."""
    report = CoolReport()
    for name, n in spec.signature.operators:
        report.operators[name] = classify_operator(name, n, spec.rules_of(name))
    return report
