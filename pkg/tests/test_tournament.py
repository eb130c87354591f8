import pytest

from ggp_toolkit.evolution import tournament
from ggp_toolkit.evolution.chromosome import Individual
from ggp_toolkit.evolution.records import GameRecord, RecordState
from ggp_toolkit.evolution.tournament import (
    MatchOutcome,
    MatchTask,
    Tournament,
    elo_update,
    expected_score,
    flat_match_count,
    play_task,
    score_knowledge,
    task_agents,
)
from ggp_toolkit.knowledge.knowledge_file import KnowledgeFile
from ggp_toolkit.settings import ClockConfig, SearchConfig

CLOCKS = ClockConfig(playouts=10)


def fake_record(match_id: str) -> GameRecord:
    return GameRecord(match_id, (("xplayer", 100), ("oplayer", 0)), (RecordState(0, ()),))


class EvenIndicesWin:
    """Runner stand-in: even individuals win every match, odd ones lose."""

    def __init__(self):
        self.batches: list[list[MatchTask]] = []

    def __call__(self, tasks):
        self.batches.append(list(tasks))
        return [MatchOutcome(t.individual, 1.0 if t.individual % 2 == 0 else 0.0, fake_record(t.match_id)) for t in tasks]


def test_elo_examples():
    assert elo_update(1500, 1500, 1.0) == (1516.0, 1484.0)
    assert elo_update(1500, 1500, 0.5) == (1500.0, 1500.0)
    a, b = elo_update(1500, 1900, 0.0)
    assert 1500 - a == pytest.approx(2.909, abs=1e-3)
    assert a + b == pytest.approx(3400)
    assert expected_score(1500, 1500) == 0.5
    with pytest.raises(ValueError):
        elo_update(1500, 1500, 1.0, k=0)


def test_halving_tournament(tictactoe):
    runner = EvenIndicesWin()
    population = [Individual(KnowledgeFile()) for _ in range(8)]
    result = Tournament(tictactoe, SearchConfig(), CLOCKS, 10, runner).run(population, label="g0")
    assert result.matches == 140 and result.rounds == 3
    assert [len(batch) for batch in runner.batches] == [80, 40, 20]
    assert len(result.records) == 140
    assert result.fitness == [1.0, 0.0] * 4
    assert [ind.matches for ind in population] == [30, 10, 30, 10, 20, 10, 20, 10]
    assert population[0].elo > population[1].elo
    assert flat_match_count(8, 10) == 240


def test_tasks_alternate_roles_and_seeds(tictactoe):
    population = [Individual(KnowledgeFile()) for _ in range(2)]
    tasks = Tournament(tictactoe, SearchConfig(), CLOCKS, 3, EvenIndicesWin(), seed=7).tasks(population, [1], "t")
    assert [t.match_id for t in tasks] == ["t-ind1-m0", "t-ind1-m1", "t-ind1-m2"]
    assert [t.role_index for t in tasks] == [0, 1, 0]
    assert [t.seed for t in tasks] == [1007, 1008, 1009]


def test_single_individual_plays_one_round(tictactoe):
    individual, records = score_knowledge(tictactoe, KnowledgeFile(), 5, clocks=CLOCKS, runner=EvenIndicesWin())
    assert individual.fitness == 1.0 and individual.matches == 5
    assert len(records) == 5
    assert flat_match_count(1, 5) == 5


def test_rejects_empty_rounds(tictactoe):
    with pytest.raises(ValueError):
        Tournament(tictactoe, SearchConfig(), CLOCKS, 0, EvenIndicesWin())


def test_task_agents(tictactoe):
    knowledge = KnowledgeFile()
    task = MatchTask(tictactoe, "m", 3, SearchConfig(), ClockConfig(), knowledge, role_index=1)
    agents = task_agents(task)
    assert [a.knowledge is knowledge for a in agents] == [False, True]
    assert agents[0].clocks == ClockConfig().halved()
    assert agents[1].search_config.seed == 3
    bare = task_agents(MatchTask(tictactoe, "m", 3, SearchConfig(), ClockConfig()))
    assert all(a.knowledge is None and a.clocks == ClockConfig() for a in bare)


def test_failed_match_is_replayed_once(tictactoe, monkeypatch):
    calls = []

    def flaky(game, agents, clocks, match_id, seed):
        calls.append(match_id)
        if len(calls) == 1:
            raise RuntimeError("engine crashed")
        return fake_record(match_id)

    monkeypatch.setattr(tournament, "run_match", flaky)
    outcome = play_task(MatchTask(tictactoe, "m", 0, SearchConfig(), CLOCKS, KnowledgeFile(), individual=4))
    assert calls == ["m", "m"]
    assert outcome == MatchOutcome(4, 1.0, fake_record("m"))


def test_second_failure_counts_as_a_loss(tictactoe, monkeypatch):
    def broken(*args, **kwargs):
        raise RuntimeError("engine crashed")

    monkeypatch.setattr(tournament, "run_match", broken)
    outcome = play_task(MatchTask(tictactoe, "m", 0, SearchConfig(), CLOCKS, KnowledgeFile(), individual=2))
    assert outcome == MatchOutcome(2, 0.0, None, failed=True)
