"""Random-playout throughput benchmark."""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np
from loguru import logger

from .compiler import CompiledGame
from .engine import Engine, GameState

MAX_PLAYOUT_STEPS = 10_000


@dataclass(frozen=True)
class BenchResult:
    game: str
    backend: str
    games: int
    seconds: float
    games_per_second: float
    mean_length: float

    def line(self) -> str:
        return f"{self.game}\t{self.backend}\t{self.games_per_second:.2f}\t{self.mean_length:.2f}"


def random_joint_move(engine: Engine, state: GameState, rng: np.random.Generator):
    joint = []
    for role in engine.roles:
        moves = engine.legal_moves(state, role)
        if not moves:
            return None
        joint.append(moves[int(rng.integers(len(moves)))])
    return tuple(joint)


def random_playout(
    engine: Engine,
    rng: np.random.Generator,
    state: Optional[GameState] = None,
    max_steps: int = MAX_PLAYOUT_STEPS,
) -> tuple[GameState, int]:
    """
    Plays uniformly random joint moves until a terminal state.

    :param engine: Engine of the game.
    :param rng: Random generator; moves are drawn from the sorted legal lists.
    :param state: Start state, the initial state when omitted.
    :param max_steps: Step guard for games that never terminate.
    :return: Final state and the number of joint moves played.
    """
    state = engine.initial_state() if state is None else state
    steps = 0
    while not engine.is_terminal(state) and steps < max_steps:
        joint = random_joint_move(engine, state, rng)
        if joint is None:
            logger.warning(f"{engine.game.name}: a role has no legal move in a non-terminal state")
            break
        state = engine.advance(state, joint)
        steps += 1
    return state, steps


def bench_random_playouts(
    game: CompiledGame,
    seconds: Optional[float] = 1.0,
    seed: int = 0,
    n_games: Optional[int] = None,
) -> BenchResult:
    """
    Repeats random playouts for a wall-clock budget or a fixed game count.

    :param game: Compiled game; one fresh engine is created for the run.
    :param seconds: Wall-clock budget, ignored when n_games is given.
    :param seed: Seed of the move generator.
    :param n_games: Fixed number of playouts (reproducible mean length).
    :return: BenchResult with throughput and mean turn count.
    """
    if n_games is None and (seconds is None or seconds <= 0):
        raise ValueError("bench needs seconds > 0 or a game count")
    engine = Engine(game)
    rng = np.random.default_rng(seed)
    lengths: list[int] = []

    start = time.perf_counter()
    while True:
        elapsed = time.perf_counter() - start
        if n_games is not None:
            if len(lengths) >= n_games:
                break
        elif elapsed >= seconds:  # type: ignore[operator]
            break
        _, steps = random_playout(engine, rng)
        lengths.append(steps)
    elapsed = max(time.perf_counter() - start, 1e-9)

    result = BenchResult(
        game=game.name,
        backend=str(game.backend),
        games=len(lengths),
        seconds=elapsed,
        games_per_second=len(lengths) / elapsed,
        mean_length=float(np.mean(lengths)) if lengths else 0.0,
    )
    logger.info(f"    -> {result.games} playouts in {elapsed:.2f}s ({result.games_per_second:.1f} games/s)")
    return result
