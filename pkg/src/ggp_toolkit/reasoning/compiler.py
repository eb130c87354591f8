"""
Rule sheet compiler.

Turns a normalized sheet into a CompiledGame: constants become dense integer
ids, every relation gets per-shape overloads (which arguments arrive bound,
which are produced) discovered by flooding reasoning trees from the reserved
root queries, and each overload of a rule relation is compiled into a
procedure description the engine executes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from ggp_toolkit._compat import StrEnum
from typing import Iterable, NamedTuple, Optional, Sequence

from loguru import logger

from ..errors import CompileError
from ..rules.board import BoardSpec
from ..rules.kif import RuleSheet
from ..rules.mgdl import (
    FlatAtom,
    FlatLiteral,
    FlatRule,
    NormalizedSheet,
    RelationKind,
    Verdict,
    check_conformance,
    mangle,
    normalize,
    unmangle,
)
from ..rules.terms import Compound, Constant, Term, Variable

MAX_DEPTH = 64
ROOT_FUNCTORS = ("legal", "next", "goal", "terminal")


class Backend(StrEnum):
    TABLE = "table"
    QUERY = "query"


class Label(StrEnum):
    VAR = "VAR"
    CONST = "CONST"


@dataclass(frozen=True, slots=True, order=True)
class OverloadSignature:
    relation: str
    labels: tuple[Label, ...] = ()

    def __str__(self) -> str:
        return f"{self.relation}(" + ",".join(self.labels) + ")"

    @property
    def bound_positions(self) -> tuple[int, ...]:
        return tuple(i for i, l in enumerate(self.labels) if l is Label.CONST)


class ConstantTable:
    """Bijection between object constants and dense ids, in first-occurrence order."""

    def __init__(self, symbols: Iterable[str] = ()):
        self._symbols: list[str] = []
        self._ids: dict[str, int] = {}
        for symbol in symbols:
            self.add(symbol)

    def add(self, symbol: str) -> int:
        cid = self._ids.get(symbol)
        if cid is None:
            cid = len(self._symbols)
            self._ids[symbol] = cid
            self._symbols.append(symbol)
        return cid

    def id_of(self, symbol: str) -> int:
        return self._ids[symbol]

    def get(self, symbol: str) -> Optional[int]:
        return self._ids.get(symbol)

    def symbol(self, cid: int) -> str:
        return self._symbols[cid]

    def __len__(self) -> int:
        return len(self._symbols)

    def __contains__(self, symbol: object) -> bool:
        return symbol in self._ids

    def __iter__(self):
        return iter(self._symbols)


# --- Reasoning trees ---

class NodeKind(StrEnum):
    QUERY = "query"
    RULE = "rule"
    OR = "or"
    FACTS = "facts"
    BUILTIN = "builtin"


@dataclass(eq=False)
class TreeNode:
    kind: NodeKind
    signature: Optional[OverloadSignature] = None
    rule_index: int = -1
    source: Optional[RelationKind] = None
    children: list["TreeNode"] = field(default_factory=list)

    def __repr__(self) -> str:
        what = self.signature if self.signature else f"rule {self.rule_index}"
        return f"<{self.kind} {what}>"


@dataclass(eq=False)
class ReasoningTree:
    query: OverloadSignature
    root: TreeNode


def literal_labels(atom: FlatAtom, bound: set[Variable]) -> tuple[Label, ...]:
    return tuple(
        Label.CONST if isinstance(a, Constant) or a in bound else Label.VAR for a in atom.args
    )


def body_signatures(rule: FlatRule, head_labels: Sequence[Label]) -> list[tuple[FlatLiteral, OverloadSignature]]:
    """Call shape of every body literal when the head is queried with `head_labels`."""
    bound = {
        a for a, l in zip(rule.head.args, head_labels) if isinstance(a, Variable) and l is Label.CONST
    }
    out = []
    for lit in rule.body:
        out.append((lit, OverloadSignature(lit.atom.relation, literal_labels(lit.atom, bound))))
        if not lit.negated and not lit.is_distinct:
            bound.update(a for a in lit.atom.args if isinstance(a, Variable))
    return out


class _TreeBuilder:
    def __init__(self, sheet: NormalizedSheet, max_depth: int):
        self.sheet = sheet
        self.max_depth = max_depth
        self.rules_by_relation: dict[str, list[int]] = {}
        for i, rule in enumerate(sheet.rules):
            self.rules_by_relation.setdefault(rule.head.relation, []).append(i)
        self.memo: dict[OverloadSignature, TreeNode] = {}

    def query(self, sig: OverloadSignature, depth: int = 0) -> TreeNode:
        node = self.memo.get(sig)
        if node is not None:
            return node
        if depth > self.max_depth:
            raise CompileError(f"reasoning tree deeper than {self.max_depth} at {sig}")
        kind = self.sheet.kinds.get(sig.relation)
        if kind is None:
            raise CompileError(f"relation {sig.relation} is used but never defined")

        node = TreeNode(NodeKind.QUERY, sig, source=kind)
        self.memo[sig] = node
        candidates: list[TreeNode] = []
        if kind is RelationKind.RULE:
            for i in self.rules_by_relation.get(sig.relation, []):
                candidates.append(self.rule(i, sig.labels, depth + 1))
        else:
            candidates.append(TreeNode(NodeKind.FACTS, sig, source=kind))

        if len(candidates) == 1:
            node.children.append(candidates[0])
        elif candidates:
            node.children.append(TreeNode(NodeKind.OR, sig, children=candidates))
        return node

    def rule(self, index: int, labels: Sequence[Label], depth: int) -> TreeNode:
        node = TreeNode(NodeKind.RULE, rule_index=index)
        for lit, sig in body_signatures(self.sheet.rules[index], labels):
            if lit.is_distinct:
                node.children.append(TreeNode(NodeKind.BUILTIN, sig))
            else:
                node.children.append(self.query(sig, depth + 1))
        return node


def root_signatures(sheet: NormalizedSheet) -> dict[str, list[OverloadSignature]]:
    """Fixed root shapes: legal(CONST,VAR..), next(VAR..), goal(CONST,VAR..), terminal()."""
    roots: dict[str, list[OverloadSignature]] = {f: [] for f in ROOT_FUNCTORS}
    for functor in ROOT_FUNCTORS:
        for relation in sheet.relations_named(functor):
            if sheet.kinds.get(relation) not in (RelationKind.RULE, RelationKind.STATIC):
                continue
            n = sheet.flat_arity(relation)
            if functor in ("legal", "goal"):
                if n == 0:
                    continue
                labels = (Label.CONST,) + (Label.VAR,) * (n - 1)
            else:
                labels = (Label.VAR,) * n
            roots[functor].append(OverloadSignature(relation, labels))
    return roots


def build_reasoning_trees(
    sheet: NormalizedSheet,
    extra_roots: Iterable[OverloadSignature] = (),
    max_depth: int = MAX_DEPTH,
) -> list[ReasoningTree]:
    """
    One tree per root query; sub-queries already expanded are shared.

    :param sheet: Normalized sheet.
    :param extra_roots: Additional root queries (tools and tests).
    :param max_depth: Expansion depth guard.
    :return: The reasoning trees, reserved roots first.
    """
    builder = _TreeBuilder(sheet, max_depth)
    roots = [sig for sigs in root_signatures(sheet).values() for sig in sigs]
    roots += [sig for sig in extra_roots if sig not in roots]
    return [ReasoningTree(sig, builder.query(sig)) for sig in roots]


def discover_overloads(trees: Iterable[ReasoningTree]) -> set[OverloadSignature]:
    found: set[OverloadSignature] = set()
    seen: set[int] = set()
    stack = [t.root for t in trees]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        if node.kind is NodeKind.QUERY and node.signature is not None:
            found.add(node.signature)
        stack.extend(node.children)
    return found


# --- Query plan ---

class ArgSpec(NamedTuple):
    is_const: bool
    value: int  # constant id or variable slot

    def __str__(self) -> str:
        return f"#{self.value}" if self.is_const else f"s{self.value}"


@dataclass(frozen=True, slots=True)
class LiteralCall:
    signature: OverloadSignature
    kind: Optional[RelationKind]  # None for distinct
    args: tuple[ArgSpec, ...]
    negated: bool = False
    is_distinct: bool = False

    def __str__(self) -> str:
        prefix = "not " if self.negated else ""
        target = "distinct" if self.is_distinct else str(self.signature)
        return f"{prefix}{target} [" + " ".join(str(a) for a in self.args) + f"] {self.kind or 'builtin'}"


@dataclass(frozen=True, slots=True)
class RuleProcedure:
    rule_index: int
    head: tuple[ArgSpec, ...]
    body: tuple[LiteralCall, ...]
    n_slots: int


@dataclass(frozen=True)
class QueryPlan:
    backend: Backend
    procedures: dict[OverloadSignature, tuple[RuleProcedure, ...]]
    fact_signatures: frozenset[OverloadSignature]
    roots: dict[str, tuple[OverloadSignature, ...]]
    column_capacity: int

    def covers(self, sig: OverloadSignature) -> bool:
        return sig in self.procedures or sig in self.fact_signatures

    def dump(self) -> str:
        """Deterministic text form of the plan."""
        lines = [f"backend {self.backend}", f"capacity {self.column_capacity}"]
        for functor in ROOT_FUNCTORS:
            for sig in self.roots.get(functor, ()):
                lines.append(f"root {functor} {sig}")
        for sig in sorted(self.procedures):
            lines.append(f"overload {sig}")
            for proc in self.procedures[sig]:
                head = " ".join(str(a) for a in proc.head)
                lines.append(f"  rule {proc.rule_index} slots={proc.n_slots} head=[{head}]")
                lines.extend(f"    call {call}" for call in proc.body)
        lines.extend(f"facts {sig}" for sig in sorted(self.fact_signatures))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class CompiledGame:
    """Everything an engine instance needs; immutable and picklable."""

    name: str
    roles: tuple[str, ...]
    constants: ConstantTable
    kinds: dict[str, RelationKind]
    skeletons: dict[str, Term]
    static_facts: dict[str, tuple[tuple[int, ...], ...]]
    init_facts: tuple[tuple[str, tuple[int, ...]], ...]
    plan: QueryPlan
    board: Optional[BoardSpec] = None
    inconclusive: bool = False

    @property
    def backend(self) -> Backend:
        return self.plan.backend

    def unmangle(self, relation: str, ids: Sequence[int]) -> Term:
        shape = self.skeletons.get(relation)
        values = [Constant(self.constants.symbol(i)) for i in ids]
        if shape is None:
            raise CompileError(f"unknown relation {relation}")
        return unmangle(shape, values)

    def next_target(self, relation: str) -> Optional[str]:
        """Dynamic relation produced by a next relation; None when next carries a bare atom."""
        shape = self.skeletons[relation]
        inner = shape.args[0] if isinstance(shape, Compound) else None
        if isinstance(inner, Compound):
            return mangle(inner)[0].name
        return None


def _build_constants(sheet: NormalizedSheet) -> ConstantTable:
    table = ConstantTable()
    for role in sheet.roles:
        table.add(role)
    atoms: list[FlatAtom] = [*sheet.static_facts, *sheet.init_facts]
    for rule in sheet.rules:
        atoms.append(rule.head)
        atoms.extend(lit.atom for lit in rule.body)
    for atom in atoms:
        for arg in atom.args:
            if isinstance(arg, Constant):
                table.add(arg.symbol)
    return table


def _procedure(index: int, rule: FlatRule, labels: Sequence[Label], sheet: NormalizedSheet, constants: ConstantTable) -> RuleProcedure:
    slots: dict[Variable, int] = {}

    def spec(arg: Constant | Variable) -> ArgSpec:
        if isinstance(arg, Constant):
            return ArgSpec(True, constants.id_of(arg.symbol))
        return ArgSpec(False, slots.setdefault(arg, len(slots)))

    head = tuple(spec(a) for a in rule.head.args)
    calls = []
    for lit, sig in body_signatures(rule, labels):
        args = tuple(spec(a) for a in lit.atom.args)
        kind = None if lit.is_distinct else sheet.kinds.get(lit.atom.relation)
        calls.append(LiteralCall(sig, kind, args, lit.negated, lit.is_distinct))
    return RuleProcedure(index, head, tuple(calls), len(slots))


def _column_capacity(procedures: dict[OverloadSignature, tuple[RuleProcedure, ...]], max_depth: int) -> int:
    memo: dict[OverloadSignature, int] = {}
    active: set[OverloadSignature] = set()
    recursive = False

    def cap(sig: OverloadSignature) -> int:
        nonlocal recursive
        if sig not in procedures:
            return len(sig.labels)
        if sig in memo:
            return memo[sig]
        if sig in active:
            recursive = True
            return 0
        active.add(sig)
        best = 0
        for proc in procedures[sig]:
            inner = max((cap(c.signature) for c in proc.body if not c.is_distinct), default=0)
            best = max(best, len(proc.head) + proc.n_slots + inner)
        active.discard(sig)
        memo[sig] = best
        return best

    widest = max((cap(sig) for sig in procedures), default=0)
    return max(1, widest * max_depth if recursive else widest)


def compile_game(
    sheet: NormalizedSheet,
    backend: Backend = Backend.QUERY,
    queries: Iterable[OverloadSignature] = (),
    max_depth: int = MAX_DEPTH,
) -> CompiledGame:
    """
    Compiles a normalized sheet into an executable query plan.

    :param sheet: Normalized sheet.
    :param backend: Evaluation model the engine will use.
    :param queries: Extra root queries to compile overloads for.
    :param max_depth: Expansion depth guard.
    :return: The CompiledGame.
    """
    queries = list(queries)
    trees = build_reasoning_trees(sheet, queries, max_depth)
    overloads = discover_overloads(trees)
    constants = _build_constants(sheet)

    rules_by_relation: dict[str, list[int]] = {}
    for i, rule in enumerate(sheet.rules):
        rules_by_relation.setdefault(rule.head.relation, []).append(i)

    procedures: dict[OverloadSignature, tuple[RuleProcedure, ...]] = {}
    facts: set[OverloadSignature] = set()
    for sig in sorted(overloads):
        if sheet.kinds.get(sig.relation) is RelationKind.RULE:
            procedures[sig] = tuple(
                _procedure(i, sheet.rules[i], sig.labels, sheet, constants)
                for i in rules_by_relation[sig.relation]
            )
        else:
            facts.add(sig)

    for sig, procs in procedures.items():
        for proc in procs:
            for call in proc.body:
                if not call.is_distinct and call.signature not in procedures and call.signature not in facts:
                    raise CompileError(f"dangling overload {call.signature} called from {sig}")

    roots = {f: tuple(sigs) for f, sigs in root_signatures(sheet).items()}
    if queries:
        roots["query"] = tuple(queries)
    plan = QueryPlan(
        backend=backend,
        procedures=procedures,
        fact_signatures=frozenset(facts),
        roots=roots,
        column_capacity=_column_capacity(procedures, max_depth),
    )

    static: dict[str, list[tuple[int, ...]]] = {}
    for atom in sheet.static_facts:
        ids = tuple(constants.id_of(a.symbol) for a in atom.args)  # type: ignore[union-attr]
        static.setdefault(atom.relation, []).append(ids)
    init = tuple(
        (atom.relation, tuple(constants.id_of(a.symbol) for a in atom.args))  # type: ignore[union-attr]
        for atom in sheet.init_facts
    )

    logger.info(
        f"Compiled {sheet.name} ({backend}): {len(constants)} constants, "
        f"{len(procedures)} rule overloads, {len(facts)} fact overloads"
    )
    return CompiledGame(
        name=sheet.name,
        roles=sheet.roles,
        constants=constants,
        kinds=dict(sheet.kinds),
        skeletons=dict(sheet.skeletons),
        static_facts={k: tuple(v) for k, v in static.items()},
        init_facts=init,
        plan=plan,
        board=sheet.board,
        inconclusive=sheet.inconclusive,
    )


def build_game(sheet: RuleSheet, backend: Backend = Backend.QUERY, queries: Iterable[OverloadSignature] = ()) -> CompiledGame:
    """Conformance check, normalization and compilation in one step."""
    result = check_conformance(sheet)
    inconclusive = result.verdict is Verdict.INCONCLUSIVE
    if inconclusive:
        logger.warning(f"{sheet.name}: mGDL conformance inconclusive ({len(result.witnesses)} witnesses), compiling anyway")
    return compile_game(normalize(sheet, inconclusive=inconclusive), backend, queries)
