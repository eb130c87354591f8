import pytest

from ggp_toolkit.errors import KifSyntaxError, RuleSheetError
from ggp_toolkit.rules.kif import load_rulesheet, parse_kif, parse_term, read_sexprs
from ggp_toolkit.rules.terms import Compound, Constant, Disjunction, Literal, Variable, to_kif


# --- parse_kif ---

def test_role_declaration():
    sheet = parse_kif("(role xplayer)")
    assert sheet.roles == ("xplayer",)
    assert sheet.rules == () and sheet.static_facts == ()


def test_rule_keeps_literal_order():
    sheet = parse_kif(
        "(role xplayer) (<= (legal xPlayer (play ?i ?j x)) (true (control xPlayer)) (emptyCell ?i ?j))"
    )
    [rule] = sheet.rules
    assert rule.head == parse_term("(legal xplayer (play ?i ?j x))")
    assert [str(b) for b in rule.body] == ["(true (control xplayer))", "(emptycell ?i ?j)"]


def test_static_fact_with_symbol_functor():
    sheet = parse_kif("(++ 1 0 1)")
    [fact] = sheet.static_facts
    assert fact == Compound("++", (Constant("1"), Constant("0"), Constant("1")))


def test_classification(tictactoe_path):
    sheet = load_rulesheet(tictactoe_path)
    assert sheet.roles == ("xplayer", "oplayer")
    assert len(sheet.init_facts) == 10
    assert sheet.static_facts == ()
    assert sheet.board is None
    assert sheet.name == "tictactoe"


def test_comments_are_ignored():
    sheet = parse_kif("; a comment\n(role a) ; trailing (unbalanced\n")
    assert sheet.roles == ("a",)


def test_variables_are_stored_without_prefix():
    term = parse_term("(cell ?X 1 b)")
    assert term.args[0] == Variable("x")
    assert to_kif(term) == "(cell ?x 1 b)"


def test_or_body_becomes_disjunction():
    sheet = parse_kif("(p a) (q a) (<= (h ?x) (or (p ?x) (q ?x)))")
    [rule] = sheet.rules
    assert isinstance(rule.body[0], Disjunction)


def test_not_distinct_literal():
    sheet = parse_kif("(p a) (p b) (<= (h ?x ?y) (p ?x) (p ?y) (not (distinct ?x ?y)))")
    literal = sheet.rules[0].body[2]
    assert isinstance(literal, Literal) and literal.is_distinct and literal.negated


# --- errors ---

@pytest.mark.parametrize("text", ["(role a", "(role a))", "(<= (p ?x) (q ?x)"])
def test_unbalanced_parentheses(text):
    with pytest.raises(KifSyntaxError):
        parse_kif(text)


def test_unsafe_head_variable():
    with pytest.raises(RuleSheetError, match=r"\?y"):
        parse_kif("(q a) (<= (p ?x ?y) (q ?x))")


def test_unsafe_negated_variable():
    with pytest.raises(RuleSheetError, match="unsafe"):
        parse_kif("(q a) (r a) (<= (p ?x) (q ?x) (not (r ?z)))")


def test_fact_and_rule_head_clash():
    with pytest.raises(RuleSheetError, match="foo/1"):
        parse_kif("(foo a) (bar a) (<= (foo ?x) (bar ?x))")


def test_distinct_arity():
    with pytest.raises(RuleSheetError):
        parse_kif("(p a) (<= (h ?x) (p ?x) (distinct ?x))")


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_rulesheet(tmp_path / "absent.kif")


def test_errors_name_the_file(tmp_path):
    path = tmp_path / "broken.kif"
    path.write_text("(role a", encoding="utf-8")
    with pytest.raises(KifSyntaxError, match="broken.kif"):
        load_rulesheet(path)


# --- round trip ---

@pytest.mark.parametrize(
    "name", ["tictactoe.kif", "tictactoe.ext.kif", "connectfour.ext.kif", "nim.kif"]
)
def test_print_and_reparse(games_dir, name):
    sheet = load_rulesheet(games_dir / name)
    again = parse_kif(sheet.to_kif(), name=sheet.name)
    assert again == sheet


def test_read_sexprs_nesting():
    assert read_sexprs("(a (b c) d)") == [["a", ["b", "c"], "d"]]
