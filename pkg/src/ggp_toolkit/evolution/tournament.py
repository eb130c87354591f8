"""
Scoring individuals against a handicapped bare-UCT baseline.

Individuals are scored in rounds: every survivor plays m matches against the
baseline, then only the better half by cumulative win rate goes on. The
eliminated keep the fitness they had. A match that fails is replayed once; a
second failure counts as a loss.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from loguru import logger

from ..knowledge.knowledge_file import KnowledgeFile
from ..player.agents import Agent, UctAgent
from ..player.match import run_match
from ..reasoning.compiler import CompiledGame
from ..settings import ClockConfig, SearchConfig
from .chromosome import INITIAL_ELO, Individual
from .records import GameRecord, Outcome

OUTCOME_SCORE = {Outcome.WIN: 1.0, Outcome.DRAW: 0.5, Outcome.LOSS: 0.0}


def expected_score(rating_a: float, rating_b: float) -> float:
    return 1.0 / (1.0 + 10.0 ** ((rating_b - rating_a) / 400.0))


def elo_update(rating_a: float, rating_b: float, result: float, k: float = 32.0) -> tuple[float, float]:
    """
    Logistic Elo update.

    :param result: Score of a: 1 win, 0.5 draw, 0 loss.
    :return: The new ratings of a and b.
    """
    if k <= 0:
        raise ValueError(f"Elo K must be positive, got {k}")
    delta = k * (result - expected_score(rating_a, rating_b))
    return rating_a + delta, rating_b - delta


# --- Matches ---

@dataclass(frozen=True)
class MatchTask:
    """One match; picklable so it can run in a worker process."""

    game: CompiledGame
    match_id: str
    seed: int
    search: SearchConfig
    clocks: ClockConfig
    # None: bare UCT on every role at full clocks
    knowledge: Optional[KnowledgeFile] = None
    individual: int = -1
    role_index: int = 0


@dataclass(frozen=True)
class MatchOutcome:
    individual: int
    score: float
    record: Optional[GameRecord]
    failed: bool = False


def task_agents(task: MatchTask) -> list[Agent]:
    search = task.search.model_copy(update={"seed": task.seed})
    if task.knowledge is None:
        return [UctAgent(search, task.clocks) for _ in task.game.roles]
    baseline = task.clocks.halved()
    return [
        UctAgent(search, task.clocks, task.knowledge) if i == task.role_index else UctAgent(search, baseline)
        for i in range(len(task.game.roles))
    ]


def play_task(task: MatchTask) -> MatchOutcome:
    """Plays a task, replaying it once on failure."""
    for attempt in (1, 2):
        try:
            record = run_match(task.game, task_agents(task), task.clocks, task.match_id, task.seed)
        except Exception as e:
            logger.warning(f"{task.match_id}: attempt {attempt} failed: {e!r}")
            continue
        role = task.game.roles[task.role_index]
        return MatchOutcome(task.individual, OUTCOME_SCORE[record.outcome(role)], record)
    logger.error(f"{task.match_id}: failed twice, recorded as a loss")
    return MatchOutcome(task.individual, 0.0, None, failed=True)


MatchRunner = Callable[[Sequence[MatchTask]], list[MatchOutcome]]


def make_runner(workers: int = 1) -> MatchRunner:
    """Runs tasks in order, in a process pool when workers > 1."""

    def run(tasks: Sequence[MatchTask]) -> list[MatchOutcome]:
        if workers <= 1 or len(tasks) <= 1:
            return [play_task(t) for t in tasks]
        with ProcessPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(play_task, tasks))

    return run


# --- Tournament ---

@dataclass
class TournamentResult:
    fitness: list[float]
    records: list[GameRecord]
    matches: int
    rounds: int


class Tournament:
    def __init__(
        self,
        game: CompiledGame,
        search: SearchConfig,
        clocks: ClockConfig,
        matches_per_round: int,
        runner: MatchRunner,
        elo_k: float = 32.0,
        seed: int = 0,
    ):
        if matches_per_round < 1:
            raise ValueError("matches per round must be >= 1")
        self.game = game
        self.search = search
        self.clocks = clocks
        self.m = matches_per_round
        self.runner = runner
        self.elo_k = elo_k
        self.seed = seed

    def tasks(self, population: Sequence[Individual], survivors: Sequence[int], label: str) -> list[MatchTask]:
        n_roles = len(self.game.roles)
        tasks = []
        for i in survivors:
            for j in range(self.m):
                match_no = population[i].matches + j
                tasks.append(
                    MatchTask(
                        game=self.game,
                        match_id=f"{label}-ind{i}-m{match_no}",
                        seed=self.seed + 1000 * i + match_no,
                        search=self.search,
                        clocks=self.clocks,
                        knowledge=population[i].knowledge,
                        individual=i,
                        role_index=match_no % n_roles,
                    )
                )
        return tasks

    def run(self, population: Sequence[Individual], label: str = "gen") -> TournamentResult:
        """
        Scores `population` in place from fresh counters; fitness is the cumulative win rate, draws counting half.

        :param population: Individuals to score; their counters accumulate.
        :param label: Prefix of the match ids.
        :return: Fitness per individual, the records and the match count.
        """
        for ind in population:
            ind.fitness, ind.matches, ind.wins = None, 0, 0.0
        survivors = list(range(len(population)))
        records: list[GameRecord] = []
        played = rounds = 0
        baseline_elo = INITIAL_ELO
        while survivors:
            rounds += 1
            outcomes = self.runner(self.tasks(population, survivors, f"{label}-r{rounds}"))
            played += len(outcomes)
            for outcome in outcomes:
                ind = population[outcome.individual]
                ind.matches += 1
                ind.wins += outcome.score
                ind.elo, baseline_elo = elo_update(ind.elo, baseline_elo, outcome.score, self.elo_k)
                if outcome.record is not None:
                    records.append(outcome.record)
            for i in survivors:
                ind = population[i]
                ind.fitness = ind.wins / ind.matches
            logger.info(f"    -> Round {rounds}: {len(survivors)} individuals, {len(outcomes)} matches")
            if len(survivors) == 1:
                break
            # stable: equal win rates keep the lower index
            ranked = sorted(survivors, key=lambda i: -population[i].fitness)  # type: ignore[operator]
            survivors = sorted(ranked[: len(survivors) // 2])
            if len(survivors) == 1:
                break

        return TournamentResult([ind.fitness or 0.0 for ind in population], records, played, rounds)


def flat_match_count(population: int, m: int) -> int:
    """Matches needed to give every individual as many games as the last survivor."""
    rounds = max(1, math.ceil(math.log2(population))) if population > 1 else 1
    return population * m * rounds


def score_knowledge(
    game: CompiledGame,
    knowledge: KnowledgeFile,
    matches: int,
    search: SearchConfig = SearchConfig(),
    clocks: ClockConfig = ClockConfig(),
    runner: Optional[MatchRunner] = None,
    seed: int = 0,
) -> tuple[Individual, list[GameRecord]]:
    """
    Win rate of one knowledge file over `matches` games against the handicapped baseline.

    :return: The scored individual and the match records.
    """
    individual = Individual(knowledge)
    tournament = Tournament(game, search, clocks, matches, runner or make_runner(), seed=seed)
    result = tournament.run([individual], label="score")
    logger.success(f"Scored {result.matches} matches: win rate {individual.fitness:.3f}")
    return individual, result.records
