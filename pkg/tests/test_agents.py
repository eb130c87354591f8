import pytest

from ggp_toolkit.errors import GgpError
from ggp_toolkit.knowledge.knowledge_file import KnowledgeFile
from ggp_toolkit.player.agents import AGENT_KINDS, RandomAgent, UctAgent, make_agent
from ggp_toolkit.reasoning.engine import Engine
from ggp_toolkit.rules.kif import parse_term
from ggp_toolkit.settings import ClockConfig, SearchConfig


@pytest.mark.parametrize("kind", AGENT_KINDS)
def test_make_agent(kind):
    agent = make_agent(kind, SearchConfig(seed=2), knowledge=KnowledgeFile())
    assert agent.name == kind


def test_make_agent_errors():
    with pytest.raises(GgpError, match="needs a knowledge file"):
        make_agent("uct+knowledge")
    with pytest.raises(GgpError, match="unknown agent"):
        make_agent("minimax")


def test_start_checks_the_role(tictactoe):
    with pytest.raises(GgpError, match="no role"):
        RandomAgent().start(tictactoe, "white")


def test_random_agent_plays_legal_moves(nim):
    engine = Engine(nim)
    agent = RandomAgent(seed=5)
    agent.start(nim, "first")
    state = engine.initial_state()
    legal = engine.legal_moves(state, "first")
    assert all(agent.select_move(state, (), 1.0) in legal for _ in range(20))


def test_single_legal_move_skips_search(tictactoe):
    engine = Engine(tictactoe)
    agent = UctAgent(clocks=ClockConfig(playouts=50))
    agent.start(tictactoe, "oplayer")
    assert agent.select_move(engine.initial_state(), (), 1.0) == parse_term("noop")
    assert agent.last_result is None


def test_uct_agent_finds_the_winning_move(tictactoe):
    engine = Engine(tictactoe)
    state = engine.initial_state()
    for joint in [("(mark 1 1)", "noop"), ("noop", "(mark 2 1)"), ("(mark 1 2)", "noop"), ("noop", "(mark 2 2)")]:
        state = engine.next_state(state, tuple(map(parse_term, joint)))
    agent = UctAgent(SearchConfig(seed=1), ClockConfig(playouts=1000))
    agent.start(tictactoe, "xplayer")
    assert agent.select_move(state, (), 1.0) == parse_term("(mark 1 3)")
    assert agent.last_result is not None and agent.last_result.playouts == 1000
    agent.stop()
    assert len(agent.search.tt) == 0


def test_knowledge_is_ignored_without_a_board(tictactoe):
    agent = UctAgent(clocks=ClockConfig(playouts=5), knowledge=KnowledgeFile())
    agent.start(tictactoe, "xplayer")
    assert agent.search.knowledge is None


def test_startclock_grows_the_tree(tictactoe):
    agent = UctAgent(clocks=ClockConfig(startclock_ms=200))
    agent.start(tictactoe, "xplayer")
    assert len(agent.search.tt) > 0
    playout_mode = UctAgent(clocks=ClockConfig(playouts=5))
    playout_mode.start(tictactoe, "xplayer")
    assert len(playout_mode.search.tt) == 0


def test_select_move_hands_the_last_move_to_the_search(tictactoe):
    engine = Engine(tictactoe)
    last = (parse_term("(mark 2 2)"), parse_term("noop"))
    state = engine.next_state(engine.initial_state(), last)
    agent = UctAgent(SearchConfig(seed=2), ClockConfig(playouts=20))
    agent.start(tictactoe, "oplayer")
    agent.select_move(state, last, 1.0)
    assert agent.search.tt.get(state.key).last_move == last
