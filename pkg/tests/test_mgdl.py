import pytest
from hypothesis import given
from hypothesis import strategies as st

from ggp_toolkit.errors import NormalizationError
from ggp_toolkit.rules.kif import load_rulesheet, parse_kif, parse_term
from ggp_toolkit.rules.mgdl import (
    SAFE_SYMBOL,
    Verdict,
    check_conformance,
    mangle,
    normalize,
    skeleton,
    unmangle,
)
from ggp_toolkit.rules.terms import Compound, Constant, Variable

WITNESS_SHEET = "(<= (foo (bar a))) (<= (baz ?x) (foo ?x))"


# --- conformance ---

def test_witness_sheet_is_inconclusive():
    result = check_conformance(parse_kif(WITNESS_SHEET))
    assert result.verdict is Verdict.INCONCLUSIVE
    [witness] = result.witnesses
    assert witness.rule.head == parse_term("(baz ?x)")
    assert witness.literal == parse_term("(foo ?x)")
    assert witness.head == parse_term("(foo (bar a))")


def test_flat_sheet_is_conforming():
    result = check_conformance(parse_kif("(<= (foo a)) (<= (baz ?x) (foo ?x))"))
    assert result.verdict is Verdict.CONFORMING
    assert result.witnesses == ()


@pytest.mark.parametrize("name", ["tictactoe.kif", "tictactoe.ext.kif", "connectfour.ext.kif", "nim.kif"])
def test_bundled_games_conform(games_dir, name):
    assert check_conformance(load_rulesheet(games_dir / name)).verdict is Verdict.CONFORMING


def test_adding_a_fact_keeps_conformance():
    sheet = parse_kif("(<= (foo a)) (<= (baz ?x) (foo ?x)) (qux (bar a))")
    assert check_conformance(sheet).verdict is Verdict.CONFORMING


def test_reserved_heads_are_not_checked():
    sheet = parse_kif("(role r) (<= (foo (bar a))) (<= (legal r ?x) (foo ?x))")
    assert check_conformance(sheet).verdict is Verdict.CONFORMING


# --- mangling ---

def test_mangle_nested():
    name, flat = mangle(parse_term("(legal ?player (move ?x ?y ?piece))"))
    assert name.name == "legal_ARG_LPAR_move_ARG_ARG_ARG_RPAR"
    assert name.flat_arity == 4
    assert flat == [Variable("player"), Variable("x"), Variable("y"), Variable("piece")]


def test_mangle_atom():
    name, flat = mangle(Constant("noop"))
    assert (name.name, flat) == ("noop", [])


def test_mangle_next():
    name, flat = mangle(parse_term("(next (cell ?x ?y b))"))
    assert name.name == "next_LPAR_cell_ARG_ARG_ARG_RPAR"
    assert flat == [Variable("x"), Variable("y"), Constant("b")]


def test_mangle_escapes_symbols():
    name, _ = mangle(parse_term("(++ 1 0 1)"))
    assert name.name.startswith("_x2b_x2b")
    assert SAFE_SYMBOL.match(name.name.replace("ARG", "arg"))


def test_unmangle_restores_the_sentence():
    term = parse_term("(legal xplayer (mark 1 3 x))")
    name, flat = mangle(term)
    assert unmangle(skeleton(term), flat) == term


leaves = st.sampled_from([Constant("a"), Constant("b"), Constant("1"), Variable("x")])
functor_names = st.sampled_from(["f", "g", "cell"])
terms = st.recursive(
    leaves,
    lambda children: st.builds(Compound, functor_names, st.lists(children, min_size=1, max_size=3).map(tuple)),
    max_leaves=8,
)
sentences = st.builds(Compound, functor_names, st.lists(terms, min_size=1, max_size=3).map(tuple))


@given(sentences, sentences)
def test_mangle_separates_shapes(a, b):
    same_shape = skeleton(a) == skeleton(b)
    assert (mangle(a)[0].name == mangle(b)[0].name) == same_shape


@given(sentences)
def test_flat_arity_counts_arg_tokens(sentence):
    name, flat = mangle(sentence)
    assert name.flat_arity == name.name.split("_").count("ARG") == len(flat)


# --- normalization ---

def test_true_is_stripped():
    sheet = parse_kif("(role xplayer) (init (control xplayer)) (<= (mine xplayer) (true (control xplayer)))")
    [rule] = normalize(sheet).rules
    [literal] = rule.body
    assert literal.atom.relation == "control_ARG"


def test_or_is_split():
    sheet = parse_kif("(p a) (q b) (<= (h ?x) (or (p ?x) (q ?x)))")
    rules = normalize(sheet).rules
    assert [str(r) for r in rules] == ["h_ARG(?x) <- p_ARG(?x)", "h_ARG(?x) <- q_ARG(?x)"]


def test_negated_or_uses_de_morgan():
    sheet = parse_kif("(p a) (q a) (r a) (<= (h ?x) (r ?x) (not (or (p ?x) (q ?x))))")
    [rule] = normalize(sheet).rules
    assert [(l.atom.relation, l.negated) for l in rule.body] == [("r_ARG", False), ("p_ARG", True), ("q_ARG", True)]


def test_legal_head_is_flattened():
    sheet = parse_kif(
        "(role xplayer) (init (cell 1 1 b)) (<= (legal xplayer (play ?i ?j x)) (true (cell ?i ?j b)))"
    )
    [rule] = normalize(sheet).rules
    assert rule.head.relation == "legal_ARG_LPAR_play_ARG_ARG_ARG_RPAR"
    assert rule.head.args[3] == Constant("x")


def test_unsafe_split_is_rejected():
    sheet = parse_kif("(p a) (q a) (<= (h ?x) (or (p ?x) (q a)))")
    with pytest.raises(NormalizationError):
        normalize(sheet)


def test_inconclusive_flag_is_carried():
    assert normalize(parse_kif(WITNESS_SHEET), inconclusive=True).inconclusive
