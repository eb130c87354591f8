"""
Evolution of knowledge files with a simple genetic algorithm.

Generation 0 starts from random genes and the features mined from bare-UCT
self-play. Each generation is scored in a tournament; the next one keeps the
elites unchanged, injects fresh random individuals and fills the rest with
children of rank-selected parents. The generation's match records are then
mined and every new individual adopts mined features according to its
learning factor.

Run directory:
    records/seed/match-<id>.xml         bare-UCT self-play
    records/gen-<k>/match-<id>.xml
    knowledge/gen-<k>/ind-<i>.xml  and  ind-<i>.json (fitness, elo, matches)
    log.tsv                        generation, best and mean fitness
    best.xml
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from loguru import logger

from ..errors import EvolutionError
from ..knowledge.knowledge_file import KnowledgeFile, load_knowledge, save_knowledge
from ..mining.miner import mine_knowledge
from ..reasoning.compiler import CompiledGame
from ..settings import ClockConfig, EvolutionConfig, MiningConfig, SearchConfig
from .chromosome import Individual, adopt_features, copy_individual, fresh_population, mutate, uniform_crossover
from .records import GameRecord, load_records, save_record
from .tournament import MatchRunner, MatchTask, Tournament, flat_match_count, make_runner

BOARD_RELATIONS = ("boardboundaries", "boardfunctor", "boardpattern", "playfunctor", "playpattern")
LOG_COLUMNS = ["generation", "best_fitness", "mean_fitness", "matches"]


# --- Population operators ---

def init_population(n: int, roles: Sequence[str], rng: np.random.Generator) -> list[Individual]:
    """n unscored individuals with uniform random genes and empty feature lists."""
    if n < 2:
        raise EvolutionError(f"population needs at least 2 individuals, got {n}")
    return fresh_population(n, roles, rng)


def rank_probabilities(n: int, pressure: float = 1.7) -> np.ndarray:
    """
    Linear ranking: rank 0 is the worst, rank n-1 the best.

    p(r) = (2 - sp)/n + 2 r (sp - 1) / (n (n - 1))
    """
    if n == 1:
        return np.ones(1)
    ranks = np.arange(n)
    return (2.0 - pressure) / n + 2.0 * ranks * (pressure - 1.0) / (n * (n - 1))


def ranked_order(population: Sequence[Individual]) -> list[int]:
    """Indices from best to worst fitness; ties keep the lower index first."""
    return sorted(range(len(population)), key=lambda i: -(population[i].fitness or 0.0))


def select_parents(population: Sequence[Individual], k: int, pressure: float, rng: np.random.Generator) -> list[int]:
    worst_first = ranked_order(population)[::-1]
    picks = rng.choice(len(population), size=k, p=rank_probabilities(len(population), pressure))
    return [worst_first[int(r)] for r in picks]


def slot_counts(n: int, elitism: float, fresh_fraction: float) -> tuple[int, int, int]:
    """(elites, fresh, children) for a population of n."""
    elites = min(n, math.ceil(elitism * n))
    fresh = min(n - elites, math.floor(fresh_fraction * n))
    return elites, fresh, n - elites - fresh


# --- Results ---

@dataclass(frozen=True)
class GenerationSummary:
    generation: int
    best_fitness: float
    mean_fitness: float
    matches: int


@dataclass(frozen=True)
class EvolutionResult:
    best: KnowledgeFile
    best_fitness: float
    generations: int
    run_dir: Path


class Evolution:
    def __init__(
        self,
        game: CompiledGame,
        run_dir: Path,
        config: EvolutionConfig = EvolutionConfig(),
        search: SearchConfig = SearchConfig(),
        clocks: ClockConfig = ClockConfig(),
        mining: MiningConfig = MiningConfig(),
        seed: int = 0,
        runner: Optional[MatchRunner] = None,
    ):
        if game.board is None:
            message = f"{game.name} has no board extension; evolution needs {', '.join(BOARD_RELATIONS)}"
            logger.error(message)
            raise EvolutionError(message)
        self.game = game
        self.board = game.board
        self.run_dir = Path(run_dir)
        self.config = config
        self.search = search
        self.clocks = clocks
        self.mining = mining
        self.seed = seed
        self.runner = runner or make_runner(config.workers)

    # --- paths ---

    def records_dir(self, generation: int | str) -> Path:
        return self.run_dir / "records" / (generation if isinstance(generation, str) else f"gen-{generation}")

    def knowledge_dir(self, generation: int) -> Path:
        return self.run_dir / "knowledge" / f"gen-{generation}"

    @property
    def log_path(self) -> Path:
        return self.run_dir / "log.tsv"

    def rng(self, generation: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, generation])

    # --- persistence ---

    def save_records(self, generation: int | str, records: Sequence[GameRecord]) -> None:
        for record in records:
            save_record(record, self.records_dir(generation) / f"match-{record.match_id}.xml")

    def save_population(self, generation: int, population: Sequence[Individual]) -> None:
        folder = self.knowledge_dir(generation)
        for i, ind in enumerate(population):
            save_knowledge(ind.knowledge, folder / f"ind-{i}.xml")
            (folder / f"ind-{i}.json").write_text(json.dumps(ind.summary(), indent=2), encoding="utf-8")

    def load_population(self, generation: int) -> list[Individual]:
        folder = self.knowledge_dir(generation)
        population = []
        for i in range(self.config.population):
            summary = json.loads((folder / f"ind-{i}.json").read_text(encoding="utf-8"))
            population.append(Individual(load_knowledge(folder / f"ind-{i}.xml"), **summary))
        return population

    def append_log(self, summary: GenerationSummary) -> None:
        row = pd.DataFrame([vars(summary)], columns=LOG_COLUMNS)
        if self.log_path.exists():
            log = pd.read_csv(self.log_path, sep="\t")
            row = pd.concat([log[log["generation"] < summary.generation], row], ignore_index=True)
        row.to_csv(self.log_path, sep="\t", index=False)

    def last_complete_generation(self) -> Optional[int]:
        """Latest generation present in log.tsv whose population files are all on disk."""
        if not self.log_path.exists():
            return None
        log = pd.read_csv(self.log_path, sep="\t")
        for generation in sorted(log["generation"].astype(int), reverse=True):
            folder = self.knowledge_dir(generation)
            if all((folder / f"ind-{i}.json").exists() for i in range(self.config.population)):
                return generation
        return None

    # --- steps ---

    def mine(self, records: Sequence[GameRecord]) -> KnowledgeFile:
        return mine_knowledge(records, self.board, self.mining, roles=self.game.roles)

    def seed_records(self) -> list[GameRecord]:
        """Bare-UCT self-play records that seed the first mining step."""
        tasks = [
            MatchTask(self.game, f"seed-m{j}", self.seed + j, self.search, self.clocks)
            for j in range(self.config.seed_matches)
        ]
        logger.info(f"    -> Playing {len(tasks)} bare-UCT seeding matches")
        records = [o.record for o in self.runner(tasks) if o.record is not None]
        self.save_records("seed", records)
        return records

    def score(self, generation: int, population: list[Individual]) -> tuple[GenerationSummary, list[GameRecord]]:
        tournament = Tournament(
            self.game,
            self.search,
            self.clocks,
            self.config.matches_per_round,
            self.runner,
            self.config.elo_k,
            seed=self.seed + 1_000_000 * (generation + 1),
        )
        result = tournament.run(population, label=f"g{generation}")
        if not result.records:
            message = f"generation {generation} produced no game records ({result.matches} matches attempted)"
            logger.error(message)
            raise EvolutionError(message)
        self.save_records(generation, result.records)
        self.save_population(generation, population)
        fitness = np.asarray(result.fitness)
        summary = GenerationSummary(generation, float(fitness.max()), float(fitness.mean()), result.matches)
        self.append_log(summary)
        flat = flat_match_count(len(population), self.config.matches_per_round)
        logger.info(f"    -> Generation {generation}: best {summary.best_fitness:.3f}, mean {summary.mean_fitness:.3f}, {result.matches} matches ({flat} flat)")
        return summary, result.records

    def breed(self, population: Sequence[Individual], mined: KnowledgeFile, rng: np.random.Generator) -> list[Individual]:
        """Next generation: elites unchanged, fresh random individuals, then children that adopt mined features."""
        cfg = self.config
        n = len(population)
        n_elite, n_fresh, n_children = slot_counts(n, cfg.elitism, cfg.fresh_fraction)
        order = ranked_order(population)
        elites = [copy_individual(population[i]) for i in order[:n_elite]]

        newcomers = [ind.knowledge for ind in fresh_population(n_fresh, self.game.roles, rng)]
        parents = select_parents(population, n_children + n_children % 2, cfg.rank_pressure, rng)
        for a, b in zip(parents[::2], parents[1::2]):
            for child in uniform_crossover(population[a].knowledge, population[b].knowledge, cfg.crossover_rate, rng):
                if len(newcomers) < n_fresh + n_children:
                    newcomers.append(mutate(child, cfg.mutation_rate, rng))
        return elites + [Individual(adopt_features(k, mined, rng)) for k in newcomers]

    # --- main loop ---

    def run(self, resume: bool = False) -> EvolutionResult:
        """
        Runs the configured number of generations.

        :param resume: Continue after the last complete generation found in the run directory.
        :return: The best individual of the final generation.
        """
        cfg = self.config
        self.run_dir.mkdir(parents=True, exist_ok=True)
        start = self.last_complete_generation() if resume else None

        if start is None:
            logger.info(f"Evolving {self.game.name}: population {cfg.population}, {cfg.generations} generations")
            rng = self.rng(0)
            population = init_population(cfg.population, self.game.roles, rng)
            seeds = self.seed_records()
            if seeds:
                mined = self.mine(seeds)
                population = [Individual(adopt_features(ind.knowledge, mined, rng)) for ind in population]
            _, records = self.score(0, population)
            start = 0
        else:
            logger.info(f"Resuming {self.run_dir} after generation {start}")
            population = self.load_population(start)
            records = load_records([self.records_dir(start)])

        for generation in range(start + 1, cfg.generations + 1):
            rng = self.rng(generation)
            mined = self.mine(records)
            population = self.breed(population, mined, rng)
            _, records = self.score(generation, population)

        best = population[ranked_order(population)[0]]
        save_knowledge(best.knowledge, self.run_dir / "best.xml")
        logger.success(f"Evolution finished, best fitness {best.fitness or 0.0:.3f}")
        return EvolutionResult(best.knowledge, best.fitness or 0.0, cfg.generations, self.run_dir)


def evolve(
    game: CompiledGame,
    run_dir: Path,
    config: EvolutionConfig = EvolutionConfig(),
    search: SearchConfig = SearchConfig(),
    clocks: ClockConfig = ClockConfig(),
    mining: MiningConfig = MiningConfig(),
    seed: int = 0,
    resume: bool = False,
) -> EvolutionResult:
    return Evolution(game, run_dir, config, search, clocks, mining, seed).run(resume)
