"""KIF reader: s-expression text to a classified RuleSheet."""
from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Union

from loguru import logger

from ..errors import KifSyntaxError, RuleSheetError
from .board import EXTENSION_RELATIONS, BoardSpec, parse_board_extension
from .terms import (
    BodyItem,
    Compound,
    Constant,
    Disjunction,
    Literal,
    Rule,
    Term,
    Variable,
    functors,
    is_ground,
    item_variables,
    relation_key,
    to_kif,
    variables,
)

RESERVED = frozenset(
    {"role", "init", "true", "next", "legal", "goal", "terminal", "does", "distinct", "not", "or", "<="}
)

COMMENT = re.compile(r";[^\n]*")
TOKEN = re.compile(r"\(|\)|[^\s()]+")

SExpr = Union[str, list["SExpr"]]


@dataclass(frozen=True)
class RuleSheet:
    roles: tuple[str, ...] = ()
    static_facts: tuple[Term, ...] = ()
    init_facts: tuple[Term, ...] = ()
    rules: tuple[Rule, ...] = ()
    extension: tuple[Term, ...] = ()
    board: Optional[BoardSpec] = None
    name: str = field(default="game", compare=False)

    def functors(self) -> set[str]:
        """Every symbol used outside the board extension sentences."""
        out: set[str] = set()
        terms: list[Term] = [*self.static_facts, *self.init_facts]
        for rule in self.rules:
            terms.append(rule.head)
            terms.extend(_literal_sentences(rule.body))
        for term in terms:
            out.update(functors(term))
        return out

    def to_kif(self) -> str:
        lines = [f"(role {r})" for r in self.roles]
        lines += [to_kif(f) for f in self.static_facts]
        lines += [f"(init {to_kif(f)})" for f in self.init_facts]
        lines += [to_kif(s) for s in self.extension]
        lines += [str(r) for r in self.rules]
        return "\n".join(lines) + "\n"


def _literal_sentences(body: Iterable[BodyItem]) -> Iterable[Term]:
    for item in body:
        if isinstance(item, Literal):
            yield item.sentence
        else:
            yield from _literal_sentences(item.options)


# --- Reading s-expressions ---

def tokenize(text: str) -> list[str]:
    return TOKEN.findall(COMMENT.sub(" ", text))


def read_sexprs(text: str) -> list[SExpr]:
    stack: list[list[SExpr]] = [[]]
    for token in tokenize(text):
        if token == "(":
            stack.append([])
        elif token == ")":
            if len(stack) == 1:
                raise KifSyntaxError("unbalanced parentheses: unexpected ')'")
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(token)
    if len(stack) != 1:
        raise KifSyntaxError(f"unbalanced parentheses: {len(stack) - 1} unclosed '('")
    return stack[0]


def to_term(expr: SExpr) -> Term:
    if isinstance(expr, str):
        if expr.startswith("?"):
            if len(expr) == 1:
                raise KifSyntaxError("variable without a name")
            return Variable(expr[1:].lower())
        return Constant(expr.lower())
    if not expr:
        raise KifSyntaxError("empty expression ()")
    head, *args = expr
    if not isinstance(head, str) or head.startswith("?"):
        raise KifSyntaxError(f"expression must start with a constant functor: {expr!r}")
    if not args:
        # (foo) is read as the atom foo
        return Constant(head.lower())
    return Compound(head.lower(), tuple(to_term(a) for a in args))


def parse_term(text: str) -> Term:
    exprs = read_sexprs(text)
    if len(exprs) != 1:
        raise KifSyntaxError(f"expected one term, found {len(exprs)}: {text!r}")
    return to_term(exprs[0])


def _body_item(expr: SExpr) -> BodyItem:
    term = to_term(expr)
    if isinstance(term, Compound) and term.functor == "not":
        if len(term.args) != 1:
            raise RuleSheetError(f"not takes one argument: {to_kif(term)}")
        inner = _body_item(expr[1])  # type: ignore[index]
        return replace(inner, negated=not inner.negated)
    if isinstance(term, Compound) and term.functor == "or":
        return Disjunction(tuple(_body_item(e) for e in expr[1:]))  # type: ignore[index]
    if isinstance(term, Compound) and term.functor == "distinct":
        if len(term.args) != 2:
            raise RuleSheetError(f"distinct takes two arguments: {to_kif(term)}")
        return Literal(term, is_distinct=True)
    if isinstance(term, Variable):
        raise RuleSheetError(f"a variable cannot be a body literal: {to_kif(term)}")
    return Literal(term)


# --- Checks ---

def _positive_variables(body: Iterable[BodyItem]) -> set:
    out: set = set()
    for item in body:
        if isinstance(item, Literal):
            if not item.negated and not item.is_distinct:
                out.update(variables(item.sentence))
        elif not item.negated:
            # lenient union; the strict check runs after or-splitting
            out |= _positive_variables(item.options)
    return out


def check_safety(rule: Rule) -> None:
    """Head and negated/distinct variables must occur in a positive body literal."""
    positive = _positive_variables(rule.body)
    needed = set(variables(rule.head))
    for item in rule.body:
        if isinstance(item, Literal) and (item.negated or item.is_distinct):
            needed |= item_variables(item)
        elif isinstance(item, Disjunction) and item.negated:
            needed |= item_variables(item)
    unsafe = needed - positive
    if unsafe:
        names = ", ".join(sorted(str(v) for v in unsafe))
        raise RuleSheetError(f"unsafe rule {rule}: {names} not bound by a positive literal")


def _check_relation_classes(sheet: RuleSheet) -> None:
    static = {relation_key(f) for f in sheet.static_facts}
    heads = {relation_key(r.head) for r in sheet.rules}
    dynamic = {relation_key(f) for f in sheet.init_facts}
    for rule in sheet.rules:
        if isinstance(rule.head, Compound) and rule.head.functor == "next" and len(rule.head.args) == 1:
            if not isinstance(rule.head.args[0], Variable):
                dynamic.add(relation_key(rule.head.args[0]))
        for sentence in _literal_sentences(rule.body):
            if isinstance(sentence, Compound) and sentence.functor == "true" and len(sentence.args) == 1:
                if not isinstance(sentence.args[0], Variable):
                    dynamic.add(relation_key(sentence.args[0]))

    for a, b, label in (
        (static, heads, "a static fact and a rule head"),
        (static, dynamic, "a static fact and a dynamic fact"),
        (heads, dynamic, "a rule head and a dynamic fact"),
    ):
        clash = a & b
        if clash:
            functor, arity = sorted(clash)[0]
            raise RuleSheetError(f"relation {functor}/{arity} is used both as {label}")


# --- Public API ---

def parse_kif(text: str, name: str = "game") -> RuleSheet:
    """
    Parses KIF text and classifies every top-level expression.

    :param text: The rule sheet source.
    :param name: Game name carried along for reports.
    :return: The classified RuleSheet, board extension included when present.
    """
    roles: list[str] = []
    static: list[Term] = []
    init: list[Term] = []
    rules: list[Rule] = []
    extension: list[Term] = []

    for expr in read_sexprs(text):
        if isinstance(expr, list) and expr and expr[0] == "<=":
            if len(expr) < 2:
                raise RuleSheetError("rule without a head")
            rule = Rule(to_term(expr[1]), tuple(_body_item(e) for e in expr[2:]))
            if isinstance(rule.head, Variable):
                raise RuleSheetError(f"rule head cannot be a variable: {rule}")
            check_safety(rule)
            rules.append(rule)
            continue

        term = to_term(expr)
        if isinstance(term, Variable):
            raise RuleSheetError(f"stray variable at top level: {to_kif(term)}")
        if not is_ground(term):
            raise RuleSheetError(f"fact {to_kif(term)} is not ground")
        functor, arity = relation_key(term)
        if functor == "role" and arity == 1:
            roles.append(to_kif(term.args[0]))  # type: ignore[union-attr]
        elif functor == "init" and arity == 1:
            init.append(term.args[0])  # type: ignore[union-attr]
        elif functor in EXTENSION_RELATIONS:
            extension.append(term)
        else:
            static.append(term)

    sheet = RuleSheet(
        roles=tuple(roles),
        static_facts=tuple(static),
        init_facts=tuple(init),
        rules=tuple(rules),
        extension=tuple(extension),
        name=name,
    )
    _check_relation_classes(sheet)
    board = parse_board_extension(sheet)
    logger.debug(
        f"Parsed {name}: {len(roles)} roles, {len(static)} static facts, "
        f"{len(init)} init facts, {len(rules)} rules, board={'yes' if board else 'no'}"
    )
    return replace(sheet, board=board)


def load_rulesheet(path: str | Path) -> RuleSheet:
    path = Path(path)
    if not path.is_file():
        logger.error(f"Rule sheet {path} not found.")
        raise FileNotFoundError(f"rule sheet {path} not found")
    name = path.name.split(".")[0]
    try:
        return parse_kif(path.read_text(encoding="utf-8"), name=name)
    except (KifSyntaxError, RuleSheetError) as e:
        logger.error(f"Failed to parse {path}: {e}")
        raise type(e)(f"{path}: {e}") from e
