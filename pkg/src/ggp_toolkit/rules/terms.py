"""
GDL terms and rule-body items.

Symbols are stored lower-cased; variables are stored without the leading "?".
All types are frozen so sheets can be hashed, compared and shared freely.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping


@dataclass(frozen=True, slots=True)
class Constant:
    symbol: str

    def __str__(self) -> str:
        return self.symbol


@dataclass(frozen=True, slots=True)
class Variable:
    name: str

    def __str__(self) -> str:
        return f"?{self.name}"


@dataclass(frozen=True, slots=True)
class Compound:
    functor: str
    args: tuple[Term, ...]

    def __post_init__(self) -> None:
        if not self.args:
            raise ValueError(f"compound '{self.functor}' needs at least one argument")

    def __str__(self) -> str:
        return to_kif(self)


Term = Constant | Variable | Compound


@dataclass(frozen=True, slots=True)
class Literal:
    sentence: Term
    negated: bool = False
    is_distinct: bool = False

    def __post_init__(self) -> None:
        if self.is_distinct and not (
            isinstance(self.sentence, Compound) and len(self.sentence.args) == 2
        ):
            raise ValueError("distinct takes exactly two arguments")

    def __str__(self) -> str:
        return f"(not {to_kif(self.sentence)})" if self.negated else to_kif(self.sentence)


@dataclass(frozen=True, slots=True)
class Disjunction:
    """An `or` body item; only lives until normalization splits it."""

    options: tuple[BodyItem, ...]
    negated: bool = False

    def __str__(self) -> str:
        inner = "(or " + " ".join(str(o) for o in self.options) + ")"
        return f"(not {inner})" if self.negated else inner


BodyItem = Literal | Disjunction


@dataclass(frozen=True, slots=True)
class Rule:
    head: Term
    body: tuple[BodyItem, ...]

    def __str__(self) -> str:
        parts = [to_kif(self.head), *(str(b) for b in self.body)]
        return "(<= " + " ".join(parts) + ")"


def to_kif(term: Term) -> str:
    match term:
        case Constant(symbol):
            return symbol
        case Variable(name):
            return f"?{name}"
        case Compound(functor, args):
            return "(" + functor + " " + " ".join(to_kif(a) for a in args) + ")"
    raise TypeError(f"not a term: {term!r}")


def functor_of(term: Term) -> str:
    if isinstance(term, Compound):
        return term.functor
    if isinstance(term, Constant):
        return term.symbol
    raise TypeError(f"a variable has no functor: {term}")


def arity_of(term: Term) -> int:
    return len(term.args) if isinstance(term, Compound) else 0


def relation_key(term: Term) -> tuple[str, int]:
    return functor_of(term), arity_of(term)


def variables(term: Term) -> Iterator[Variable]:
    """Variables of a term in left-to-right order (repeats included)."""
    if isinstance(term, Variable):
        yield term
    elif isinstance(term, Compound):
        for arg in term.args:
            yield from variables(arg)


def item_variables(item: BodyItem) -> set[Variable]:
    if isinstance(item, Literal):
        return set(variables(item.sentence))
    out: set[Variable] = set()
    for option in item.options:
        out |= item_variables(option)
    return out


def is_ground(term: Term) -> bool:
    return next(variables(term), None) is None


def functors(term: Term) -> Iterator[str]:
    """Every functor and constant symbol occurring in the term."""
    match term:
        case Constant(symbol):
            yield symbol
        case Compound(functor, args):
            yield functor
            for arg in args:
                yield from functors(arg)


def substitute(term: Term, binding: Mapping[Variable, Term]) -> Term:
    match term:
        case Variable():
            return binding.get(term, term)
        case Compound(functor, args):
            return Compound(functor, tuple(substitute(a, binding) for a in args))
    return term
