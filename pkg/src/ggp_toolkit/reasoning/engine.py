"""
Query plan execution and the game-automaton interface.

Two evaluation models run the same plan:

- query-driven: nested loops; each body literal is re-queried for every
  binding produced by the literals before it.
- table-driven: one substitution table (VarStore) per rule activation; each
  literal is evaluated once against the whole table, new variables enter as
  columns through cross/natural joins and rule-local columns are dropped on
  exit.

An Engine owns its mutable stores; create one per concurrent task.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

from loguru import logger

from ..errors import EngineError, IllegalMoveError
from ..rules.mgdl import RelationKind, mangle
from ..rules.terms import Compound, Constant, Term, Variable, to_kif
from .compiler import Backend, CompiledGame, Label, OverloadSignature, RuleProcedure
from .factstore import FactStore, IdTuple, relation_seed, tuple_digest

JointMove = tuple[Term, ...]

# source tags for table-driven argument passing
COL, CONST, NEW = 0, 1, 2

CACHE_LIMIT = 50_000


@dataclass(frozen=True, eq=False, slots=True)
class GameState:
    """Dynamic facts plus an order-independent 64-bit hash."""

    facts: frozenset[tuple[str, IdTuple]]
    key: int

    def __hash__(self) -> int:
        return self.key

    def __eq__(self, other: object) -> bool:
        return isinstance(other, GameState) and self.key == other.key and self.facts == other.facts

    def __len__(self) -> int:
        return len(self.facts)


def state_hash(facts: Iterable[tuple[str, IdTuple]], seeds: Optional[dict[str, int]] = None) -> int:
    seeds = {} if seeds is None else seeds
    key = 0
    for relation, ids in facts:
        seed = seeds.get(relation)
        if seed is None:
            seed = seeds[relation] = relation_seed(relation)
        key ^= tuple_digest(seed, ids)
    return key


@dataclass
class VarStore:
    """Substitution table: one column per variable, rows of constant ids."""

    columns: list[str] = field(default_factory=list)
    rows: list[IdTuple] = field(default_factory=lambda: [()])

    @property
    def width(self) -> int:
        return len(self.columns)

    def as_set(self) -> set[IdTuple]:
        return set(self.rows)

    def __len__(self) -> int:
        return len(self.rows)


@dataclass(frozen=True)
class Query:
    """A relation query; int arguments are constant ids, str arguments variable names."""

    relation: str
    args: tuple[int | str, ...] = ()

    @property
    def signature(self) -> OverloadSignature:
        return OverloadSignature(
            self.relation, tuple(Label.VAR if isinstance(a, str) else Label.CONST for a in self.args)
        )

    @property
    def variables(self) -> list[str]:
        return list(dict.fromkeys(a for a in self.args if isinstance(a, str)))


class Engine:
    def __init__(self, game: CompiledGame):
        self.game = game
        self.plan = game.plan
        self.constants = game.constants
        self.kinds = game.kinds
        self.capacity = game.plan.column_capacity
        self._base_width = 0

        self._static = {
            rel: FactStore(rel, len(tuples[0]) if tuples else 0, tuples)
            for rel, tuples in game.static_facts.items()
        }
        init_counts: dict[str, int] = {}
        init_arities: dict[str, int] = {}
        for rel, ids in game.init_facts:
            init_counts[rel] = init_counts.get(rel, 0) + 1
            init_arities[rel] = len(ids)
        self._dynamic: dict[str, FactStore] = {
            rel: FactStore(rel, init_arities[rel], capacity=4 * n) for rel, n in init_counts.items()
        }
        self._does: dict[str, FactStore] = {}
        self._empty = FactStore("<empty>", 0)
        self._loaded: Optional[GameState] = None
        self._seeds: dict[str, int] = {}
        self._next_targets = {sig.relation: game.next_target(sig.relation) for sig in self.plan.roots["next"]}
        self._atom_names: dict[int, str] = {}
        self._does_cache: dict[tuple[int, Term], Optional[tuple[str, IdTuple]]] = {}
        self._legal_cache: dict[tuple[GameState, int], list[Term]] = {}
        self._terms_cache: dict[GameState, list[Term]] = {}
        self._role_ids = {role: self.constants.get(role) for role in game.roles}
        self._tuples = self._tuples_query if game.backend is Backend.QUERY else self._tuples_table

    @property
    def roles(self) -> tuple[str, ...]:
        return self.game.roles

    # --- fact stores ---

    def _store(self, relation: str) -> FactStore:
        kind = self.kinds.get(relation)
        if kind is RelationKind.STATIC:
            return self._static.get(relation, self._empty)
        if kind is RelationKind.DYNAMIC:
            return self._dynamic.get(relation, self._empty)
        if kind is RelationKind.DOES:
            return self._does.get(relation, self._empty)
        raise EngineError(f"{relation} has no fact store")

    def _load(self, state: GameState) -> None:
        if self._loaded is state:
            return
        grouped: dict[str, list[IdTuple]] = {}
        for relation, ids in state.facts:
            grouped.setdefault(relation, []).append(ids)
        for relation, store in self._dynamic.items():
            store.reset(sorted(grouped.pop(relation, ())))
        for relation, tuples in grouped.items():
            self._dynamic[relation] = FactStore(relation, len(tuples[0]), sorted(tuples), capacity=4 * len(tuples))
        self._loaded = state

    # --- query-driven model ---

    def _solve(self, sig: OverloadSignature, values: Sequence[Optional[int]]) -> Iterable[IdTuple]:
        if self.kinds.get(sig.relation) is not RelationKind.RULE:
            positions = sig.bound_positions
            return self._store(sig.relation).select(positions, tuple(values[p] for p in positions))  # type: ignore[misc]
        return self._solve_rules(sig, values)

    def _solve_rules(self, sig: OverloadSignature, values: Sequence[Optional[int]]) -> Iterator[IdTuple]:
        procedures = self.plan.procedures.get(sig)
        if procedures is None:
            raise EngineError(f"no compiled overload for {sig}")
        for proc in procedures:
            yield from self._run_rule(proc, values)

    def _run_rule(self, proc: RuleProcedure, values: Sequence[Optional[int]]) -> Iterator[IdTuple]:
        slots: list[Optional[int]] = [None] * proc.n_slots
        for spec, v in zip(proc.head, values):
            if v is None:
                continue
            if spec.is_const:
                if spec.value != v:
                    return
            elif slots[spec.value] is None:
                slots[spec.value] = v
            elif slots[spec.value] != v:
                return
        yield from self._run_body(proc, 0, slots)

    def _run_body(self, proc: RuleProcedure, index: int, slots: list[Optional[int]]) -> Iterator[IdTuple]:
        if index == len(proc.body):
            yield tuple(s.value if s.is_const else slots[s.value] for s in proc.head)  # type: ignore[misc]
            return
        call = proc.body[index]
        args = [a.value if a.is_const else slots[a.value] for a in call.args]

        if call.is_distinct:
            if args[0] != args[1]:
                yield from self._run_body(proc, index + 1, slots)
            return
        if call.negated:
            if not any(True for _ in self._solve(call.signature, args)):
                yield from self._run_body(proc, index + 1, slots)
            return

        free = [(pos, a.value) for pos, a in enumerate(call.args) if args[pos] is None]
        for t in self._solve(call.signature, args):
            bound: list[int] = []
            ok = True
            for pos, slot in free:
                current = slots[slot]
                if current is None:
                    slots[slot] = t[pos]
                    bound.append(slot)
                elif current != t[pos]:
                    ok = False
                    break
            if ok:
                yield from self._run_body(proc, index + 1, slots)
            for slot in bound:
                slots[slot] = None

    def _tuples_query(self, sig: OverloadSignature, values: Sequence[Optional[int]]) -> list[IdTuple]:
        return list(dict.fromkeys(self._solve(sig, values)))

    # --- table-driven model ---

    def _table_call(self, sig: OverloadSignature, srcs: Sequence[tuple[int, int]], vs: VarStore) -> VarStore:
        n_new = len({v for tag, v in srcs if tag == NEW})
        columns = vs.columns + [f"{sig.relation}.{j}" for j in range(n_new)]
        if len(columns) - self._base_width > self.capacity:
            raise EngineError(f"column capacity {self.capacity} exceeded at {sig}")
        if self.kinds.get(sig.relation) is not RelationKind.RULE:
            return VarStore(columns, self._table_facts(sig, srcs, vs.rows, n_new))
        procedures = self.plan.procedures.get(sig)
        if procedures is None:
            raise EngineError(f"no compiled overload for {sig}")
        out: dict[IdTuple, None] = {}
        for proc in procedures:
            for row in self._table_rule(proc, srcs, vs, n_new):
                out[row] = None
        return VarStore(columns, list(out))

    def _table_facts(self, sig: OverloadSignature, srcs: Sequence[tuple[int, int]], rows: list[IdTuple], n_new: int) -> list[IdTuple]:
        store = self._store(sig.relation)
        positions = sig.bound_positions
        bound = [srcs[p] for p in positions]
        new = [(pos, v) for pos, (tag, v) in enumerate(srcs) if tag == NEW]
        out = []
        for row in rows:
            key = tuple(row[v] if tag == COL else v for tag, v in bound)
            for t in store.select(positions, key):
                vals: list[Optional[int]] = [None] * n_new
                ok = True
                for pos, j in new:
                    if vals[j] is None:
                        vals[j] = t[pos]
                    elif vals[j] != t[pos]:
                        ok = False
                        break
                if ok:
                    out.append(row + tuple(vals))  # type: ignore[operator]
        return out

    def _table_rule(self, proc: RuleProcedure, srcs: Sequence[tuple[int, int]], vs: VarStore, n_new: int) -> list[IdTuple]:
        width = vs.width
        rows = vs.rows
        columns = list(vs.columns)
        slot_col: dict[int, int] = {}
        outputs: list[list[tuple[int, int]]] = [[] for _ in range(n_new)]

        # bind the head against the caller's arguments
        for spec, (tag, v) in zip(proc.head, srcs):
            if spec.is_const:
                if tag == COL:
                    rows = [r for r in rows if r[v] == spec.value]
                elif tag == CONST:
                    if v != spec.value:
                        return []
                else:
                    outputs[v].append((CONST, spec.value))
                continue
            slot = spec.value
            if tag == COL:
                if slot in slot_col:
                    c = slot_col[slot]
                    rows = [r for r in rows if r[v] == r[c]]
                else:
                    slot_col[slot] = v
            elif tag == CONST:
                if slot in slot_col:
                    c = slot_col[slot]
                    rows = [r for r in rows if r[c] == v]
                else:
                    rows = [r + (v,) for r in rows]
                    slot_col[slot] = len(columns)
                    columns.append(f"s{slot}")
            else:
                outputs[v].append((COL, slot))
        if not rows:
            return []

        for call in proc.body:
            if call.is_distinct:
                a, b = (
                    (CONST, x.value) if x.is_const else (COL, slot_col[x.value]) for x in call.args
                )
                rows = [r for r in rows if _value(r, a) != _value(r, b)]
            elif call.negated:
                # anti-join on the distinct projection of the bound columns
                order = list(dict.fromkeys(slot_col[a.value] for a in call.args if not a.is_const))
                position = {c: i for i, c in enumerate(order)}
                keys = list(dict.fromkeys(tuple(r[c] for c in order) for r in rows))
                inner_srcs = [
                    (CONST, a.value) if a.is_const else (COL, position[slot_col[a.value]]) for a in call.args
                ]
                found = self._table_call(call.signature, inner_srcs, VarStore([f"k{i}" for i in order], keys))
                blocked = set(found.rows)
                rows = [r for r in rows if tuple(r[c] for c in order) not in blocked]
            else:
                call_srcs = []
                fresh: dict[int, int] = {}
                for a in call.args:
                    if a.is_const:
                        call_srcs.append((CONST, a.value))
                    elif a.value in slot_col:
                        call_srcs.append((COL, slot_col[a.value]))
                    else:
                        call_srcs.append((NEW, fresh.setdefault(a.value, len(fresh))))
                result = self._table_call(call.signature, call_srcs, VarStore(columns, rows))
                rows = result.rows
                for slot, j in fresh.items():
                    slot_col[slot] = len(columns) + j
                columns = result.columns
            if not rows:
                return []

        out = []
        for r in rows:
            vals = []
            ok = True
            for sources in outputs:
                first = _resolve(r, sources[0], slot_col)
                if any(_resolve(r, s, slot_col) != first for s in sources[1:]):
                    ok = False
                    break
                vals.append(first)
            if ok:
                out.append(r[:width] + tuple(vals))
        return out

    def _tuples_table(self, sig: OverloadSignature, values: Sequence[Optional[int]]) -> list[IdTuple]:
        srcs = []
        for pos, v in enumerate(values):
            srcs.append((NEW, pos) if v is None else (CONST, v))
        # renumber NEW indices densely
        order = {v: j for j, v in enumerate(v for tag, v in srcs if tag == NEW)}
        srcs = [(tag, order[v]) if tag == NEW else (tag, v) for tag, v in srcs]
        result = self._table_call(sig, srcs, VarStore())
        return [
            tuple(row[v] if tag == NEW else v for tag, v in srcs)  # type: ignore[misc]
            for row in result.rows
        ]

    # --- public query API ---

    def make_query(self, sentence: Term) -> Query:
        name, flat = mangle(sentence)
        args: list[int | str] = []
        for leaf in flat:
            if isinstance(leaf, Variable):
                args.append(leaf.name)
            else:
                cid = self.constants.get(leaf.symbol)  # type: ignore[union-attr]
                args.append(-1 if cid is None else cid)
        return Query(name.name, tuple(args))

    def _check_query(self, query: Query) -> OverloadSignature:
        sig = query.signature
        if not self.plan.covers(sig):
            raise EngineError(f"query shape {sig} was not compiled")
        return sig

    def eval_query_driven(self, query: Query) -> VarStore:
        sig = self._check_query(query)
        values = [None if isinstance(a, str) else a for a in query.args]
        names = query.variables
        rows: dict[IdTuple, None] = {}
        for t in self._solve(sig, values):
            bound: dict[str, int] = {}
            if all(bound.setdefault(a, x) == x for a, x in zip(query.args, t) if isinstance(a, str)):
                rows[tuple(bound[n] for n in names)] = None
        return VarStore(names, list(rows))

    def eval_table_driven(self, query: Query, vs: Optional[VarStore] = None) -> VarStore:
        sig = self._check_query(query)
        vs = VarStore() if vs is None else vs
        names = query.variables
        index = {n: j for j, n in enumerate(names)}
        srcs = [(NEW, index[a]) if isinstance(a, str) else (CONST, a) for a in query.args]
        self._base_width = vs.width
        try:
            result = self._table_call(sig, srcs, vs)
        finally:
            self._base_width = 0
        return VarStore(vs.columns + names, result.rows)

    def query(self, query: Query) -> VarStore:
        if self.game.backend is Backend.QUERY:
            return self.eval_query_driven(query)
        return self.eval_table_driven(query)

    # --- game interface ---

    def _make_state(self, facts: frozenset[tuple[str, IdTuple]]) -> GameState:
        return GameState(facts, state_hash(facts, self._seeds))

    def initial_state(self) -> GameState:
        return self._make_state(frozenset(self.game.init_facts))

    def role_id(self, role: str) -> int:
        cid = self._role_ids.get(role)
        if cid is None:
            raise EngineError(f"role '{role}' is not declared in {self.game.name}")
        return cid

    def legal_moves(self, state: GameState, role: str) -> list[Term]:
        rid = self.role_id(role)
        cached = self._legal_cache.get((state, rid))
        if cached is not None:
            return cached
        self._load(state)
        found: dict[tuple[IdTuple, str], None] = {}
        for sig in self.plan.roots["legal"]:
            values = (rid,) + (None,) * (len(sig.labels) - 1)
            for t in self._tuples(sig, values):
                found[(t[1:], sig.relation)] = None
        moves = []
        for ids, relation in sorted(found):
            legal = self.game.unmangle(relation, (rid, *ids))
            moves.append(legal.args[1])  # type: ignore[union-attr]
        if len(self._legal_cache) > CACHE_LIMIT:
            self._legal_cache.clear()
        self._legal_cache[(state, rid)] = moves
        return moves

    def _does_fact(self, rid: int, move: Term) -> Optional[tuple[str, IdTuple]]:
        key = (rid, move)
        if key in self._does_cache:
            return self._does_cache[key]
        name, flat = mangle(Compound("does", (Constant(self.constants.symbol(rid)), move)))
        ids = [self.constants.get(leaf.symbol) for leaf in flat if isinstance(leaf, Constant)]
        fact = None
        if self.kinds.get(name.name) is RelationKind.DOES and None not in ids and len(ids) == len(flat):
            fact = (name.name, tuple(ids))  # type: ignore[arg-type]
        self._does_cache[key] = fact
        return fact

    def _atom_relation(self, cid: int) -> str:
        name = self._atom_names.get(cid)
        if name is None:
            name = self._atom_names[cid] = mangle(Constant(self.constants.symbol(cid)))[0].name
        return name

    def advance(self, state: GameState, joint_move: JointMove) -> GameState:
        """next_state without the legality check (moves come from legal_moves)."""
        self._load(state)
        self._does.clear()
        for role, move in zip(self.game.roles, joint_move):
            fact = self._does_fact(self.role_id(role), move)
            if fact is not None:
                relation, ids = fact
                store = self._does.get(relation)
                if store is None:
                    store = self._does[relation] = FactStore(relation, len(ids))
                store.add(ids)

        facts: set[tuple[str, IdTuple]] = set()
        for sig in self.plan.roots["next"]:
            target = self._next_targets[sig.relation]
            for t in self._tuples(sig, (None,) * len(sig.labels)):
                if target is None:
                    facts.add((self._atom_relation(t[0]), ()))
                else:
                    facts.add((target, t))
        self._does.clear()
        return self._make_state(frozenset(facts))

    def next_state(self, state: GameState, joint_move: JointMove) -> GameState:
        if len(joint_move) != len(self.game.roles):
            raise IllegalMoveError(f"joint move has {len(joint_move)} parts for {len(self.game.roles)} roles")
        for role, move in zip(self.game.roles, joint_move):
            if move not in self.legal_moves(state, role):
                logger.error(f"Illegal move {to_kif(move)} for {role}")
                raise IllegalMoveError(f"{to_kif(move)} is not legal for {role}")
        return self.advance(state, joint_move)

    def is_terminal(self, state: GameState) -> bool:
        self._load(state)
        return any(self._tuples(sig, ()) for sig in self.plan.roots["terminal"])

    def goal(self, state: GameState, role: str) -> int:
        rid = self.role_id(role)
        self._load(state)
        values = []
        for sig in self.plan.roots["goal"]:
            for t in self._tuples(sig, (rid,) + (None,) * (len(sig.labels) - 1)):
                symbol = self.constants.symbol(t[1])
                try:
                    values.append(float(symbol))
                except ValueError:
                    raise EngineError(f"goal value '{symbol}' for {role} is not a number") from None
        if not values:
            return 0
        return int(min(100.0, max(0.0, max(values))))

    def goals(self, state: GameState) -> tuple[int, ...]:
        return tuple(self.goal(state, role) for role in self.game.roles)

    def state_terms(self, state: GameState) -> list[Term]:
        """The state's facts as GDL terms, sorted by their KIF text."""
        cached = self._terms_cache.get(state)
        if cached is None:
            cached = sorted((self.game.unmangle(rel, ids) for rel, ids in state.facts), key=to_kif)
            if len(self._terms_cache) > CACHE_LIMIT:
                self._terms_cache.clear()
            self._terms_cache[state] = cached
        return cached


def _value(row: IdTuple, src: tuple[int, int]) -> int:
    tag, v = src
    return row[v] if tag == COL else v


def _resolve(row: IdTuple, src: tuple[int, int], slot_col: dict[int, int]) -> int:
    tag, v = src
    if tag == CONST:
        return v
    col = slot_col.get(v)
    if col is None:
        raise EngineError(f"head variable s{v} never bound")
    return row[col]
