"""Local match harness: a referee engine, one thread per agent and turn, and the game record."""
from __future__ import annotations

from concurrent.futures import Future, ThreadPoolExecutor, wait
from typing import Sequence

import numpy as np
from loguru import logger

from ..errors import GgpError
from ..evolution.records import GameRecord, RecordState
from ..reasoning.bench import MAX_PLAYOUT_STEPS
from ..reasoning.compiler import CompiledGame
from ..reasoning.engine import Engine, GameState
from ..rules.terms import Term, to_kif
from ..settings import ClockConfig
from .agents import Agent

# extra wall time granted on top of the playclock before a move counts as late
GRACE_SECONDS = 0.5


def _resolve_move(
    engine: Engine,
    state: GameState,
    role: str,
    future: Future,
    timed_out: bool,
    rng: np.random.Generator,
) -> Term:
    legal = engine.legal_moves(state, role)
    fallback = legal[int(rng.integers(len(legal)))]
    if timed_out:
        logger.warning(f"{role} exceeded the playclock, playing random move {to_kif(fallback)}")
        return fallback
    error = future.exception()
    if error is not None:
        logger.warning(f"{role} failed to move ({error!r}), playing random move {to_kif(fallback)}")
        return fallback
    move = future.result()
    if move not in legal:
        logger.warning(f"{role} chose illegal move {to_kif(move)}, playing random move {to_kif(fallback)}")
        return fallback
    return move


def run_match(
    game: CompiledGame,
    agents: Sequence[Agent],
    clocks: ClockConfig = ClockConfig(),
    match_id: str = "MATCH001",
    seed: int = 0,
) -> GameRecord:
    """
    Plays one match between `agents`, given in role order.

    Every turn all agents think at once. A move that arrives late, raises or is
    illegal is replaced by a random legal move; a late agent is still waited
    for before the next turn so it never runs on a stale state.

    :param game: Compiled game; the referee builds its own engine from it.
    :param agents: One agent per role.
    :param clocks: Playclock per move; in playout mode no timeout applies.
    :param match_id: Id written into the record.
    :param seed: Seed for fallback moves.
    :return: The record with every state, the joint moves and the final goals.
    """
    if len(agents) != len(game.roles):
        raise GgpError(f"{game.name} has {len(game.roles)} roles but {len(agents)} agents were given")
    engine = Engine(game)
    rng = np.random.default_rng(seed)
    roles = game.roles
    for agent, role in zip(agents, roles):
        agent.start(game, role)

    timeout = None if clocks.playouts is not None else clocks.playclock_seconds + GRACE_SECONDS
    states: list[RecordState] = []
    state = engine.initial_state()
    last: tuple[Term, ...] = ()
    with ThreadPoolExecutor(max_workers=len(agents), thread_name_prefix=match_id) as pool:
        while not engine.is_terminal(state):
            if len(states) >= MAX_PLAYOUT_STEPS:
                logger.warning(f"{match_id}: stopped after {len(states)} turns without reaching a terminal state")
                break
            futures = [
                pool.submit(agent.select_move, state, last, clocks.playclock_seconds) for agent in agents
            ]
            done, _ = wait(futures, timeout=timeout)
            joint = tuple(
                _resolve_move(engine, state, role, f, f not in done, rng) for role, f in zip(roles, futures)
            )
            wait(futures)
            states.append(RecordState(len(states), tuple(engine.state_terms(state)), tuple(zip(roles, joint))))
            state = engine.next_state(state, joint)
            last = joint

    states.append(RecordState(len(states), tuple(engine.state_terms(state))))
    for agent in agents:
        agent.stop()
    goals = engine.goals(state)
    logger.debug(f"{match_id}: {len(states) - 1} turns, goals {dict(zip(roles, goals))}")
    return GameRecord(match_id, tuple(zip(roles, goals)), tuple(states))
