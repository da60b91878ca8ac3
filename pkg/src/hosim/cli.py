"""Command-line driver.

Exit codes: 0 holds/pass, 1 refuted/fail, 2 unknown, 3 usage or parse error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import lam
from .howe import howe_analysis, subterm_closure
from .opmodel import Converges, Diverges, FuelExhausted, StuckAt
from .relations import FiniteRelation, parse_relation
from .simulation import Bounds, Mode, check_weak_simulation, weak_similar
from .ski import app, ex34_spec, fixture_text, ski_spec, skk
from .soundness import SamplerConfig, check_spec_sound
from .specfmt import Active, IncompleteSpec, SpecError, check_cool, parse_declared, parse_spec
from .terms import Term, TermError, const, enumerate_terms, parse_term

EXIT = {"holds": 0, "refuted": 1, "unknown": 2}
NOT_WEAK_TO = " ̸⇒ "  # "does not weakly reduce to"


class UsageError(Exception):
    pass


# --- helpers -------------------------------------------------------------------

def _read(path):
    if not os.path.exists(path):
        # bundled fixtures are reachable by bare name, e.g. "ski.hos"
        if os.path.dirname(path):
            raise UsageError(f"no such file: {path}")
        name = path[:-4] if path.endswith(".hos") else path
        try:
            return fixture_text(name)
        except (FileNotFoundError, OSError):
            raise UsageError(f"no such file: {path}")
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _load_spec(path):
    return parse_spec(_read(path))


def _bounds(ns):
    try:
        return Bounds(depth=ns.depth, fuel=ns.fuel, arg_size=ns.args)
    except ValueError as exc:
        raise UsageError(str(exc))


def _emit(ns, data, lines):
    if getattr(ns, "json", False):
        print(json.dumps(data, indent=2, ensure_ascii=False))
    else:
        for line in lines:
            print(line)


def _outcome_json(out, show=str):
    d = {"outcome": type(out).__name__, "steps": out.steps, "trace": [show(t) for t in out.trace]}
    if isinstance(out, (Converges, StuckAt)):
        d["normal"] = show(out.normal)
    if isinstance(out, Diverges):
        d["cycle_entry"] = show(out.cycle_entry)
        d["cycle_length"] = out.cycle_length
        if out.recurs_as is not None:
            d["recurs_as"] = show(out.recurs_as)
    if isinstance(out, FuelExhausted):
        d["cause"] = out.cause
    return d


def _trace_lines(out, show=str):
    lines = []
    for i, t in enumerate(out.trace):
        lines.append(f"{i:>4}  {show(t)}")
    if isinstance(out, Converges):
        lines.append(f"converges to {show(out.normal)} after {out.steps} step(s)")
    elif isinstance(out, Diverges):
        where = " in head position" if out.recurs_as is not None else ""
        lines.append(f"diverges: {show(out.cycle_entry)} recurs{where} after {out.cycle_length} step(s)")
    elif isinstance(out, StuckAt):
        lines.append(f"stuck at {show(out.normal)} after {out.steps} step(s)")
    else:
        lines.append(f"{out.cause} after {out.steps} step(s)")
    return lines


def _verdict_json(v, show=str, **extra):
    d = {"verdict": v.status}
    d.update(extra)
    if v.status == "holds":
        if v.bounds is not None:
            d["bounds"] = v.bounds.as_dict()
            d["depth_cut"] = v.depth_cut
        d["args"] = [show(a) for a in v.args]
    elif v.status == "refuted":
        d["mode"] = v.mode.value
        d["witness"] = v.witness.to_json(show)
        d["path"] = [[show(n.left), show(n.right)] for n in v.witness.path()]
    else:
        d["reason"] = v.reason
        if v.term is not None:
            d["term"] = show(v.term)
    return d


def _verdict_lines(label, v, show=str):
    lines = [f"{label}: {v}"]
    if v.status == "refuted":
        lines += ["  " + line for line in v.witness.lines(show)]
    elif v.status == "holds" and v.depth_cut:
        lines.append("  (some branches stopped at the depth bound)")
    return lines


def _violation_short(rule, violation):
    lhs = Term(rule.operator, violation.sample)
    given = [f"{violation.sample[k - 1]} {rel} {t}" for k, rel, t in violation.premises]
    if violation.argument is None:
        return ", ".join(given + [f"{lhs}{NOT_WEAK_TO}{violation.expected}"])
    return ", ".join(given + [violation.detail])


# --- subcommands ---------------------------------------------------------------

def cmd_check(ns):
    text = _read(ns.spec)
    try:
        spec = parse_spec(text)
    except IncompleteSpec as exc:
        declared = parse_declared(text)[1]
        missing = [f"{op} W={sorted(w)}" for op, w in exc.missing]
        _emit(ns, {"complete": False, "missing": missing, "declared_rules": len(declared)},
              ["incomplete: no rule for " + "; ".join(missing)])
        return 1
    report = check_cool(spec)
    ops = {}
    for name, verdict in report.operators.items():
        entry = {"class": type(verdict).__name__.lower()}
        if isinstance(verdict, Active):
            entry["position"] = verdict.position
        elif hasattr(verdict, "rule"):
            entry["rule"] = verdict.rule
            entry["reason"] = verdict.reason
        ops[name] = entry
    data = {"complete": True, "rules": len(spec.rules), "cool": report.cool, "operators": ops}
    lines = [f"complete: {len(spec.declared)} declared rules, {len(spec.rules)} after premise expansion",
             f"cool: {'yes' if report.cool else 'no'}"]
    lines += [f"  {name}: {v}" for name, v in report.operators.items()]
    _emit(ns, data, lines)
    if ns.require_cool and not report.cool:
        return 1
    return 0


def cmd_trace(ns):
    spec = _load_spec(ns.spec)
    t = parse_term(ns.term, spec.signature)
    out = spec.model.run(t, ns.fuel)
    _emit(ns, {"term": str(t), "fuel": ns.fuel, **_outcome_json(out)}, _trace_lines(out))
    return 2 if isinstance(out, FuelExhausted) else 0


def cmd_sim(ns):
    spec = _load_spec(ns.spec)
    p = parse_term(ns.left, spec.signature)
    q = parse_term(ns.right, spec.signature)
    v = weak_similar(spec, p, q, _bounds(ns), Mode(ns.mode))
    data = _verdict_json(v, left=str(p), right=str(q), mode=ns.mode)
    _emit(ns, data, _verdict_lines(f"{p} ≲ {q}", v))
    return EXIT[v.status]


def cmd_simrel(ns):
    spec = _load_spec(ns.spec)
    rel = parse_relation(_read(ns.relation), spec.signature)
    v = check_weak_simulation(spec, rel, ns.fuel)
    label = f"relation with {len(rel)} pair(s) on {len(rel.universe)} term(s) is a weak simulation"
    _emit(ns, _verdict_json(v, pairs=len(rel)), _verdict_lines(label, v))
    return EXIT[v.status]


def cmd_howe(ns):
    spec = _load_spec(ns.spec)
    rel = parse_relation(_read(ns.relation), spec.signature)
    extra = enumerate_terms(spec.signature, ns.universe_size) if ns.universe_size else []
    universe = subterm_closure(list(rel.universe) + extra)
    r = FiniteRelation(tuple(universe), rel.pairs)
    report = howe_analysis(spec, r)
    summary = report.summary(r, spec)
    closure = [[str(a), str(b)] for a, b in report.closure.sorted_pairs()]
    lines = [f"universe: {len(universe)} term(s)"]
    lines += [f"{k}: {v}" for k, v in summary.items()]
    lines.append("closure:")
    lines += [f"  {a} {b}" for a, b in closure]
    _emit(ns, {"universe": [str(t) for t in universe], "summary": summary, "closure": closure}, lines)
    return 0


def _soundness_data(spec, report):
    rules = []
    lines = []
    for origin, status in report.declared_status().items():
        entry = {"rule": origin, "status": status}
        hit = report.first_violation(origin)
        if hit is not None:
            rule, v = hit
            entry["witness"] = _violation_short(rule, v)
            entry["detail"] = v.describe(rule.operator)
            entry["term"] = str(Term(rule.operator, v.sample))
            entry["premises"] = [{"term": str(v.sample[k - 1]), "relation": rel, "target": str(t)}
                                 for k, rel, t in v.premises]
            entry["expected"] = str(v.expected)
            if v.argument is not None:
                entry["argument"] = str(v.argument)
            lines.append(f"rule {origin} unsound: witness {entry['witness']}")
            lines.append(f"  {entry['detail']}")
        else:
            lines.append(f"rule {origin} {status}")
        rules.append(entry)
    return rules, lines


def cmd_soundness(ns):
    spec = _load_spec(ns.spec)
    if ns.samples < 0 or ns.fuel < 1 or ns.args < 1:
        raise UsageError("--samples must be >= 0, --fuel and --args >= 1")
    config = SamplerConfig(samples=ns.samples, arg_size=ns.args, seed=ns.seed)
    report = check_spec_sound(spec, config, ns.fuel)
    rules, lines = _soundness_data(spec, report)
    status = "violated" if report.violations else (
        "unknown" if any(r.unknown for r in report.reports) else "sound")
    data = {"status": status, "seed": ns.seed, "samples": ns.samples, "fuel": ns.fuel, "rules": rules}
    _emit(ns, data, lines + [f"overall: {status}"])
    return {"sound": 0, "violated": 1, "unknown": 2}[status]


def cmd_lambda(ns):
    show = lam.show
    if ns.lam_cmd == "trace":
        (t,), free = lam.parse_lambda_terms([ns.term])
        named = lambda s: show(s, free)  # noqa: E731
        out = lam.run(t, ns.fuel)
        data = {"term": named(t), "free": free, "fuel": ns.fuel, **_outcome_json(out, named)}
        _emit(ns, data, _trace_lines(out, named))
        return 2 if isinstance(out, FuelExhausted) else 0
    (t1, t2), free = lam.parse_lambda_terms([ns.left, ns.right])
    bounds = _bounds(ns)
    mode = Mode(ns.mode)
    v = lam.open_applicative_similar(t1, t2, len(free), bounds, mode)
    label = f"{show(t1, free)} ≲ {show(t2, free)}"
    data = _verdict_json(v, show, left=show(t1, free), right=show(t2, free), free=free, mode=mode.value)
    _emit(ns, data, _verdict_lines(label, v, show))
    return EXIT[v.status]


def _demo_ex34(ns):
    spec = ex34_spec()
    c, d = const("c"), const("d")
    bounds = Bounds(depth=3, fuel=20, arg_size=2)
    v1 = weak_similar(spec, c, d, bounds)
    v2 = weak_similar(spec, parse_term("u(c)", spec.signature), parse_term("u(d)", spec.signature), bounds)
    cool = check_cool(spec)
    report = check_spec_sound(spec, SamplerConfig(seed=ns.seed), 50)
    rules, sound_lines = _soundness_data(spec, report)
    lines = [f"c ≲ d: {v1.status.capitalize()}", f"u(c) ≲ u(d): {v2.status.capitalize()}"]
    if v2.status == "refuted":
        lines += ["  " + line for line in v2.witness.lines()]
    lines.append(f"cool: {'yes' if cool.cool else 'no'}")
    lines += [f"  {name}: {v}" for name, v in cool.operators.items()]
    lines += sound_lines
    data = {
        "similarity": [_verdict_json(v1, left="c", right="d"), _verdict_json(v2, left="u(c)", right="u(d)")],
        "cool": cool.cool,
        "soundness": rules,
    }
    _emit(ns, data, lines)
    worst = max(EXIT[v.status] for v in (v1, v2))
    return worst


def _demo_ski(ns):
    spec = ski_spec()
    sig = spec.signature
    cool = check_cool(spec)
    lines = [f"cool: {'yes' if cool.cool else 'no'}"]
    lines += [f"  {name}: {v}" for name, v in cool.operators.items()]
    runs = []
    for text in ("I", "K", "S", "K'(I)"):
        t = parse_term(text, sig)
        out = spec.model.run(app(skk(), t), 50)
        ok = isinstance(out, Converges) and out.normal == t
        runs.append({"term": text, "outcome": str(out), "ok": ok})
        lines.append(f"S K K {text}: {out}")
    bounds = Bounds(depth=3, fuel=50, arg_size=3)
    I = const("I")
    v1 = weak_similar(spec, skk(), I, bounds)
    v2 = weak_similar(spec, I, skk(), bounds)
    lines.append(f"app(app(S,K),K) ≲ I: {v1}")
    lines.append(f"I ≲ app(app(S,K),K): {v2}")
    report = check_spec_sound(spec, SamplerConfig(seed=ns.seed), 50)
    rules, sound_lines = _soundness_data(spec, report)
    lines += sound_lines
    data = {"cool": cool.cool, "runs": runs,
            "similarity": [_verdict_json(v1, left="app(app(S,K),K)", right="I"),
                           _verdict_json(v2, left="I", right="app(app(S,K),K)")],
            "soundness": rules}
    _emit(ns, data, lines)
    failed = not cool.cool or not all(r["ok"] for r in runs) or report.violations
    return 1 if failed else max(EXIT[v1.status], EXIT[v2.status])


def cmd_demo(ns):
    return {"ex34": _demo_ex34, "ski": _demo_ski}[ns.name](ns)


# --- parser --------------------------------------------------------------------

def _add_bounds(p, mode_choices, mode_default):
    p.add_argument("--mode", choices=mode_choices, default=mode_default)
    p.add_argument("--depth", type=int, default=4, help="unfolding depth bound")
    p.add_argument("--fuel", type=int, default=100, help="reduction steps per evaluation")
    p.add_argument("--args", type=int, default=2, help="size bound of the argument terms")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hosim", description="Higher-order rule specs: run, compare, check.")
    sub = parser.add_subparsers(dest="cmd", required=True)

    def command(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--json", action="store_true", help="machine-readable output")
        return p

    p = command("check", "completeness and cool-format report")
    p.add_argument("spec")
    p.add_argument("--require-cool", action="store_true", help="fail unless the spec is cool")
    p.set_defaults(func=cmd_check)

    p = command("trace", "reduction trace of a closed term")
    p.add_argument("spec")
    p.add_argument("term")
    p.add_argument("--fuel", type=int, default=100)
    p.set_defaults(func=cmd_trace)

    p = command("sim", "bounded weak (or strong) similarity of two terms")
    p.add_argument("spec")
    p.add_argument("left")
    p.add_argument("right")
    _add_bounds(p, ["weak", "strong"], "weak")
    p.set_defaults(func=cmd_sim)

    p = command("simrel", "check that a finite relation is a weak simulation")
    p.add_argument("spec")
    p.add_argument("relation")
    p.add_argument("--fuel", type=int, default=100)
    p.set_defaults(func=cmd_simrel)

    p = command("howe", "Howe closure of a finite relation")
    p.add_argument("spec")
    p.add_argument("relation")
    p.add_argument("--universe-size", type=int, default=0,
                   help="also include all terms up to this size in the universe")
    p.set_defaults(func=cmd_howe)

    p = command("soundness", "sampled soundness of every rule for weak transitions")
    p.add_argument("spec")
    p.add_argument("--samples", type=int, default=20, help="random samples per rule")
    p.add_argument("--fuel", type=int, default=100)
    p.add_argument("--args", type=int, default=2, help="size bound of function arguments")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_soundness)

    p = sub.add_parser("lambda", help="call-by-name lambda calculus")
    lsub = p.add_subparsers(dest="lam_cmd", required=True)
    q = lsub.add_parser("sim", help="bounded applicative similarity")
    q.add_argument("--json", action="store_true")
    q.add_argument("left")
    q.add_argument("right")
    _add_bounds(q, ["applicative", "weak", "strong"], "applicative")
    q.set_defaults(func=cmd_lambda)
    q = lsub.add_parser("trace", help="call-by-name reduction trace")
    q.add_argument("--json", action="store_true")
    q.add_argument("term")
    q.add_argument("--fuel", type=int, default=100)
    q.set_defaults(func=cmd_lambda)

    p = command("demo", "run a bundled example end to end")
    p.add_argument("name", choices=["ex34", "ski"])
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_demo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; keep 2 for Unknown
        return 0 if exc.code == 0 else 3
    try:
        return ns.func(ns)
    except (UsageError, SpecError, TermError, lam.LamSyntaxError, lam.ScopeMismatch, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
