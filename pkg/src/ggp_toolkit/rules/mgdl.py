"""
mGDL: GDL where variables bind to object constants only.

This module holds the conformance check, name mangling (flattening nested
sentences into one relation name plus a flat argument list) and the
normalization pass that prepares a sheet for the compiler.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field, replace
from ggp_toolkit._compat import StrEnum
from typing import Iterable, Iterator, Optional, Sequence

from loguru import logger

from ..errors import NormalizationError, RuleSheetError
from .board import BoardSpec
from .kif import RuleSheet, check_safety
from .terms import (
    BodyItem,
    Compound,
    Constant,
    Disjunction,
    Literal,
    Rule,
    Term,
    Variable,
    is_ground,
    substitute,
    to_kif,
    variables,
)

# heads whose rules are never inspected by the conformance check
CONFORMANCE_EXEMPT = frozenset({"terminal", "goal", "legal", "next", "init", "base"})

SAFE_SYMBOL = re.compile(r"^[a-z0-9_]+$")


# --- Conformance ---

class Verdict(StrEnum):
    CONFORMING = "conforming"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class Witness:
    rule: Rule
    literal: Term
    head: Term

    def __str__(self) -> str:
        return f"rule {self.rule} literal {to_kif(self.literal)} unifies with head {to_kif(self.head)}"


@dataclass(frozen=True)
class ConformanceResult:
    verdict: Verdict
    witnesses: tuple[Witness, ...] = ()


Subst = dict[Variable, Term]


def _walk(term: Term, subst: Subst) -> Term:
    while isinstance(term, Variable) and term in subst:
        term = subst[term]
    return term


def unify(a: Term, b: Term, subst: Optional[Subst] = None) -> Optional[Subst]:
    """Plain first-order unification (no occurs check: GDL terms are finite)."""
    subst = dict(subst or {})
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        x, y = _walk(x, subst), _walk(y, subst)
        if x == y:
            continue
        if isinstance(x, Variable):
            subst[x] = y
        elif isinstance(y, Variable):
            subst[y] = x
        elif isinstance(x, Compound) and isinstance(y, Compound):
            if x.functor != y.functor or len(x.args) != len(y.args):
                return None
            stack.extend(zip(x.args, y.args))
        else:
            return None
    return subst


def _rename(term: Term, suffix: str) -> Term:
    return substitute(term, {v: Variable(f"{v.name}{suffix}") for v in set(variables(term))})


def _checked_sentences(body: Iterable[BodyItem]) -> Iterator[Term]:
    for item in body:
        if isinstance(item, Disjunction):
            yield from _checked_sentences(item.options)
            continue
        sentence = item.sentence
        if item.is_distinct:
            continue
        if isinstance(sentence, Compound) and sentence.functor in ("true", "does"):
            continue
        yield sentence


def check_conformance(sheet: RuleSheet) -> ConformanceResult:
    """
    Looks for body literals that would need a variable bound to a compound term.

    :param sheet: The parsed rule sheet.
    :return: conforming, or inconclusive with one witness per (rule, literal, head).
    """
    witnesses: list[Witness] = []
    heads = [_rename(r.head, "'") for r in sheet.rules]

    for rule in sheet.rules:
        functor = rule.head.functor if isinstance(rule.head, Compound) else str(rule.head)
        if functor in CONFORMANCE_EXEMPT:
            continue
        for literal in _checked_sentences(rule.body):
            for original, head in zip(sheet.rules, heads):
                subst = unify(literal, head)
                if subst is None:
                    continue
                if any(isinstance(_walk(v, subst), Compound) for v in subst):
                    witnesses.append(Witness(rule, literal, original.head))

    verdict = Verdict.INCONCLUSIVE if witnesses else Verdict.CONFORMING
    return ConformanceResult(verdict, tuple(witnesses))


# --- Mangling ---

@dataclass(frozen=True, slots=True)
class MangledName:
    name: str
    flat_arity: int

    def __str__(self) -> str:
        return self.name


def sanitize(symbol: str) -> str:
    if SAFE_SYMBOL.match(symbol):
        return symbol
    return "".join(c if SAFE_SYMBOL.match(c) else f"_x{ord(c):02x}" for c in symbol)


def mangle(sentence: Term) -> tuple[MangledName, list[Term]]:
    if isinstance(sentence, Variable):
        raise NormalizationError(f"cannot mangle a bare variable {sentence}")
    if isinstance(sentence, Constant):
        return MangledName(sanitize(sentence.symbol), 0), []

    tokens = [sanitize(sentence.functor)]
    flat: list[Term] = []

    def walk(args: Sequence[Term]) -> None:
        for arg in args:
            if isinstance(arg, Compound):
                tokens.extend(("LPAR", sanitize(arg.functor)))
                walk(arg.args)
                tokens.append("RPAR")
            else:
                tokens.append("ARG")
                flat.append(arg)

    walk(sentence.args)
    return MangledName("_".join(tokens), len(flat)), flat


def skeleton(sentence: Term) -> Term:
    """The sentence with its leaves replaced by positional placeholders ?_0, ?_1, ..."""
    counter = itertools.count()

    def walk(term: Term) -> Term:
        if isinstance(term, Compound):
            return Compound(term.functor, tuple(walk(a) for a in term.args))
        return Variable(f"_{next(counter)}")

    if isinstance(sentence, Compound):
        return walk(sentence)
    return sentence


def unmangle(shape: Term, flat_args: Sequence[Term]) -> Term:
    return substitute(shape, {Variable(f"_{i}"): a for i, a in enumerate(flat_args)})


# --- Normalized form ---

class RelationKind(StrEnum):
    STATIC = "static"
    DYNAMIC = "dynamic"
    DOES = "does"
    RULE = "rule"


FlatArg = Constant | Variable


@dataclass(frozen=True, slots=True)
class FlatAtom:
    relation: str
    args: tuple[FlatArg, ...] = ()

    def __str__(self) -> str:
        return self.relation + "(" + ",".join(str(a) for a in self.args) + ")"


@dataclass(frozen=True, slots=True)
class FlatLiteral:
    atom: FlatAtom
    negated: bool = False
    is_distinct: bool = False


@dataclass(frozen=True, slots=True)
class FlatRule:
    head: FlatAtom
    body: tuple[FlatLiteral, ...]

    def __str__(self) -> str:
        parts = [("~" if l.negated else "") + str(l.atom) for l in self.body]
        return f"{self.head} <- " + ", ".join(parts)


@dataclass(frozen=True)
class NormalizedSheet:
    """A rule sheet after true-stripping, or-splitting and flattening."""

    name: str
    roles: tuple[str, ...]
    static_facts: tuple[FlatAtom, ...]
    init_facts: tuple[FlatAtom, ...]
    rules: tuple[FlatRule, ...]
    kinds: dict[str, RelationKind] = field(default_factory=dict)
    skeletons: dict[str, Term] = field(default_factory=dict)
    board: Optional[BoardSpec] = None
    inconclusive: bool = False

    def relations_named(self, functor: str) -> list[str]:
        """Mangled relations whose top-level functor is `functor`, in first-seen order."""
        out = []
        for name, shape in self.skeletons.items():
            top = shape.functor if isinstance(shape, Compound) else str(shape)
            if top == functor:
                out.append(name)
        return out

    def unmangle(self, relation: str, flat_args: Sequence[Term]) -> Term:
        return unmangle(self.skeletons[relation], flat_args)

    def flat_arity(self, relation: str) -> int:
        return sum(1 for _ in variables(self.skeletons[relation]))


class _Normalizer:
    def __init__(self, sheet: RuleSheet):
        self.sheet = sheet
        self.kinds: dict[str, RelationKind] = {}
        self.skeletons: dict[str, Term] = {}

    def _register(self, sentence: Term, kind: Optional[RelationKind]) -> FlatAtom:
        name, flat = mangle(sentence)
        self.skeletons.setdefault(name.name, skeleton(sentence))
        if kind is not None:
            previous = self.kinds.setdefault(name.name, kind)
            if previous is not kind:
                raise NormalizationError(
                    f"relation {name.name} is used both as {previous} and as {kind}"
                )
        for arg in flat:
            if isinstance(arg, Compound):
                raise NormalizationError(f"unexpected compound in flat arguments of {to_kif(sentence)}")
        return FlatAtom(name.name, tuple(flat))  # type: ignore[arg-type]

    def _ground_atom(self, sentence: Term, kind: RelationKind) -> FlatAtom:
        return self._register(sentence, kind)

    def _literal(self, lit: Literal) -> FlatLiteral:
        s = lit.sentence
        if lit.is_distinct:
            a, b = s.args  # type: ignore[union-attr]
            return FlatLiteral(FlatAtom("distinct", (self._distinct_arg(a), self._distinct_arg(b))), lit.negated, True)
        if isinstance(s, Compound) and s.functor == "true" and len(s.args) == 1:
            inner = s.args[0]
            if isinstance(inner, Variable):
                raise NormalizationError(f"(true {inner}) binds a variable to a sentence; not mGDL")
            return FlatLiteral(self._register(inner, RelationKind.DYNAMIC), lit.negated)
        if isinstance(s, Compound) and s.functor == "does":
            return FlatLiteral(self._register(s, RelationKind.DOES), lit.negated)
        return FlatLiteral(self._register(s, None), lit.negated)

    @staticmethod
    def _distinct_arg(term: Term) -> FlatArg:
        if isinstance(term, Compound):
            if not is_ground(term):
                raise NormalizationError(f"distinct over non-ground compound {to_kif(term)} is not supported")
            # a variable never binds a compound, so the printed form works as an opaque constant
            return Constant(to_kif(term))
        return term

    def _head(self, head: Term) -> FlatAtom:
        if isinstance(head, Compound) and head.functor == "next" and len(head.args) == 1:
            inner = head.args[0]
            if isinstance(inner, Variable):
                raise NormalizationError(f"(next {inner}) binds a variable to a sentence; not mGDL")
            self._register(inner, RelationKind.DYNAMIC)
        return self._register(head, RelationKind.RULE)

    def split(self, rule: Rule) -> list[Rule]:
        alternatives = [expand(item) for item in rule.body]
        out = []
        for combo in itertools.product(*alternatives):
            body = tuple(lit for part in combo for lit in part)
            split_rule = Rule(rule.head, body)
            try:
                check_safety(split_rule)
            except RuleSheetError as e:
                raise NormalizationError(f"or-splitting {rule} gives an unsafe rule: {e}") from e
            out.append(split_rule)
        return out

    def run(self) -> NormalizedSheet:
        sheet = self.sheet
        static = [self._ground_atom(Compound("role", (Constant(r),)), RelationKind.STATIC) for r in sheet.roles]
        static += [self._ground_atom(f, RelationKind.STATIC) for f in sheet.static_facts]
        init = [self._ground_atom(f, RelationKind.DYNAMIC) for f in sheet.init_facts]

        rules: list[FlatRule] = []
        for rule in sheet.rules:
            for split_rule in self.split(rule):
                head = self._head(split_rule.head)
                body = tuple(self._literal(lit) for lit in split_rule.body)  # type: ignore[arg-type]
                rules.append(FlatRule(head, body))

        logger.debug(f"Normalized {sheet.name}: {len(sheet.rules)} rules became {len(rules)}")
        return NormalizedSheet(
            name=sheet.name,
            roles=sheet.roles,
            static_facts=tuple(static),
            init_facts=tuple(init),
            rules=tuple(rules),
            kinds=self.kinds,
            skeletons=self.skeletons,
            board=sheet.board,
        )


def _negate(item: BodyItem) -> BodyItem:
    return replace(item, negated=not item.negated)


def expand(item: BodyItem) -> list[list[Literal]]:
    """Alternative conjunctions equivalent to one body item."""
    if isinstance(item, Literal):
        return [[item]]
    if not item.negated:
        return [alt for option in item.options for alt in expand(option)]
    # De Morgan: not (a or b) == (not a) and (not b)
    parts = [expand(_negate(option)) for option in item.options]
    return [[lit for alt in combo for lit in alt] for combo in itertools.product(*parts)]


def normalize(sheet: RuleSheet, inconclusive: bool = False) -> NormalizedSheet:
    """
    Strips `true`, splits `or` into sub-rules and flattens every sentence.

    :param sheet: Parsed sheet.
    :param inconclusive: Flag carried along when the conformance check was inconclusive.
    :return: The normalized sheet.
    """
    normalized = _Normalizer(sheet).run()
    return replace(normalized, inconclusive=inconclusive)
