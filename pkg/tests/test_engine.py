import numpy as np
import pytest

from conftest import compiled
from ggp_toolkit.errors import EngineError, IllegalMoveError
from ggp_toolkit.reasoning.bench import random_joint_move
from ggp_toolkit.reasoning.compiler import Backend, Label, OverloadSignature, build_game
from ggp_toolkit.reasoning.engine import Engine, GameState, Query, state_hash
from ggp_toolkit.rules.kif import parse_kif, parse_term
from ggp_toolkit.rules.terms import Constant, to_kif

FAMILY = """
(parent a b) (parent a c) (parent d e)
(<= (sibling ?x ?y) (parent ?p ?x) (parent ?p ?y) (distinct ?x ?y))
(<= (hassibling ?x) (sibling ?x ?y))
(<= (only ?x) (parent ?p ?x) (not (hassibling ?x)))
"""
SIBLING = OverloadSignature("sibling_ARG_ARG", (Label.VAR, Label.VAR))
ONLY = OverloadSignature("only_ARG", (Label.VAR,))

NOOP = Constant("noop")


def mark(m: int, n: int):
    return parse_term(f"(mark {m} {n})")


def family_engine(backend: Backend) -> Engine:
    return Engine(build_game(parse_kif(FAMILY), backend, queries=[SIBLING, ONLY]))


def symbols(engine: Engine, text: str) -> set[tuple[str, ...]]:
    result = engine.query(engine.make_query(parse_term(text)))
    return {tuple(engine.constants.symbol(i) for i in row) for row in result.rows}


# --- queries ---

def test_sibling_query(backend):
    engine = family_engine(backend)
    assert symbols(engine, "(sibling ?x ?y)") == {("b", "c"), ("c", "b")}


def test_repeated_variable(backend):
    assert symbols(family_engine(backend), "(sibling ?x ?x)") == set()


def test_negation_as_failure(backend):
    assert symbols(family_engine(backend), "(only ?x)") == {("e",)}


def test_both_models_on_one_engine():
    engine = family_engine(Backend.TABLE)
    query = engine.make_query(parse_term("(sibling ?x ?y)"))
    assert engine.eval_query_driven(query).as_set() == engine.eval_table_driven(query).as_set()


def test_query_variables_are_columns():
    query = Query("sibling_ARG_ARG", ("x", "y"))
    assert query.signature == SIBLING
    assert query.variables == ["x", "y"]
    result = family_engine(Backend.QUERY).query(query)
    assert result.columns == ["x", "y"] and result.width == 2


def test_uncompiled_shape_is_rejected():
    engine = family_engine(Backend.QUERY)
    with pytest.raises(EngineError, match="not compiled"):
        engine.query(engine.make_query(parse_term("(sibling b c)")))


# --- game interface ---

def test_tictactoe_initial_moves(tictactoe):
    engine = Engine(tictactoe)
    state = engine.initial_state()
    moves = engine.legal_moves(state, "xplayer")
    assert len(moves) == 9 and moves[0] == mark(1, 1)
    assert engine.legal_moves(state, "oplayer") == [NOOP]
    assert not engine.is_terminal(state)
    assert engine.goals(state) == (0, 0)


def test_one_step(tictactoe):
    engine = Engine(tictactoe)
    state = engine.next_state(engine.initial_state(), (mark(1, 1), NOOP))
    terms = [to_kif(t) for t in engine.state_terms(state)]
    assert "(cell 1 1 x)" in terms and "(control oplayer)" in terms
    assert "(cell 1 1 b)" not in terms
    assert len(state) == 10
    assert engine.legal_moves(state, "xplayer") == [NOOP]
    assert not engine.is_terminal(state)


def test_state_stores_answer_ground_lookups_from_the_memo(tictactoe):
    engine = Engine(tictactoe)
    state = engine.next_state(engine.initial_state(), (mark(1, 1), NOOP))
    engine._load(state)
    assert engine._dynamic
    for store in engine._dynamic.values():
        assert store.arity == len(store.tuples[0])
        everything = tuple(range(store.arity))
        for t in store.tuples:
            assert list(store.select(everything, t)) == [t]
        assert store._indexes == {}


def play(engine: Engine, marks: list[tuple[int, int]]) -> GameState:
    state = engine.initial_state()
    for turn, (m, n) in enumerate(marks):
        joint = (mark(m, n), NOOP) if turn % 2 == 0 else (NOOP, mark(m, n))
        state = engine.next_state(state, joint)
    return state


def test_row_win(backend):
    engine = Engine(compiled("tictactoe.kif", backend))
    state = play(engine, [(1, 1), (2, 1), (1, 2), (2, 2), (1, 3)])
    assert engine.is_terminal(state)
    assert engine.goals(state) == (100, 0)


def test_transpositions_share_a_state(tictactoe):
    engine = Engine(tictactoe)
    a = play(engine, [(1, 1), (2, 2), (3, 3)])
    b = play(engine, [(3, 3), (2, 2), (1, 1)])
    assert a == b and hash(a) == hash(b)
    assert state_hash(a.facts) == a.key


def test_illegal_moves(tictactoe):
    engine = Engine(tictactoe)
    state = engine.initial_state()
    with pytest.raises(IllegalMoveError):
        engine.next_state(state, (mark(1, 1), mark(2, 2)))
    with pytest.raises(IllegalMoveError):
        engine.next_state(state, (mark(1, 1),))


def test_unknown_role(tictactoe):
    engine = Engine(tictactoe)
    with pytest.raises(EngineError, match="zplayer"):
        engine.legal_moves(engine.initial_state(), "zplayer")


def test_nim_initial_moves(nim):
    engine = Engine(nim)
    moves = engine.legal_moves(engine.initial_state(), "first")
    assert len(moves) == 3 + 4 + 5
    assert parse_term("(reduce c 0)") in moves


def test_nim_last_take_wins(nim):
    engine = Engine(nim)
    state = engine.initial_state()
    for joint in [
        (parse_term("(reduce a 0)"), NOOP),
        (NOOP, parse_term("(reduce b 0)")),
        (parse_term("(reduce c 0)"), NOOP),
    ]:
        state = engine.next_state(state, joint)
    assert engine.is_terminal(state)
    assert engine.goals(state) == (100, 0)


def test_connectfour_drop(connectfour):
    engine = Engine(connectfour)
    state = engine.initial_state()
    moves = engine.legal_moves(state, "red")
    assert len(moves) == 7
    assert [to_kif(m) for m in moves][:2] == ["(drop 1 1 red)", "(drop 2 1 red)"]
    state = engine.next_state(state, (parse_term("(drop 4 1 red)"), NOOP))
    assert parse_term("(drop 4 2 black)") in engine.legal_moves(state, "black")


# --- both evaluation models agree ---

@pytest.mark.parametrize(
    "name, seeds",
    [("tictactoe.kif", range(5)), ("nim.kif", range(5)), ("connectfour.ext.kif", range(2))],
)
def test_backends_agree_on_playouts(name, seeds):
    query_engine = Engine(compiled(name, Backend.QUERY))
    table_engine = Engine(compiled(name, Backend.TABLE))
    for seed in seeds:
        rng = np.random.default_rng(seed)
        a, b = query_engine.initial_state(), table_engine.initial_state()
        for _ in range(60):
            assert a == b
            for role in query_engine.roles:
                assert query_engine.legal_moves(a, role) == table_engine.legal_moves(b, role)
            assert query_engine.is_terminal(a) == table_engine.is_terminal(b)
            if query_engine.is_terminal(a):
                assert query_engine.goals(a) == table_engine.goals(b)
                break
            joint = random_joint_move(query_engine, a, rng)
            a, b = query_engine.advance(a, joint), table_engine.advance(b, joint)
