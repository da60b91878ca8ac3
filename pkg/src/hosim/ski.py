"""Bundled specifications: the extended SKI calculus and the non-congruence example."""

from __future__ import annotations

from functools import lru_cache
from importlib import resources

from .specfmt import SpecDocument, parse_spec
from .terms import Term, parse_term

S, K, I = Term("S"), Term("K"), Term("I")


def fixture_text(name: str) -> str:
    return resources.files("hosim").joinpath("fixtures", f"{name}.hos").read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def ski_spec() -> SpecDocument:
    return parse_spec(fixture_text("ski"))


@lru_cache(maxsize=None)
def ex34_spec() -> SpecDocument:
    return parse_spec(fixture_text("ex34"))


def app(*terms) -> Term:
    """Left-nested application: app(a, b, c) is (a b) c."""
    out = terms[0]
    for t in terms[1:]:
        out = Term("app", (out, t))
    return out


def skk() -> Term:
    return app(S, K, K)


def ski_term(text: str) -> Term:
    return parse_term(text, ski_spec().signature)
