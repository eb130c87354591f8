"""Players: a uniform random agent and the UCT agent, optionally knowledge-driven."""
from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Optional, Sequence

import numpy as np
from loguru import logger

from ..errors import GgpError
from ..knowledge.knowledge_file import KnowledgeFile
from ..knowledge.scoring import KnowledgeModel
from ..reasoning.compiler import CompiledGame
from ..reasoning.engine import Engine, GameState
from ..rules.terms import Term
from ..settings import ClockConfig, SearchConfig
from .transposition import make_table
from .uct import SearchResult, UctSearch, choose_move

# share of the playclock the search may use; the rest covers move transport
CLOCK_SHARE = 0.9
AGENT_KINDS = ("random", "uct", "uct+knowledge")


class Agent(ABC):
    name: str = "agent"

    def __init__(self) -> None:
        self.role: Optional[str] = None
        self.engine: Optional[Engine] = None

    def start(self, game: CompiledGame, role: str) -> None:
        """Builds the agent's own engine; called once per match before the first move."""
        if role not in game.roles:
            raise GgpError(f"{game.name} has no role {role}")
        self.role = role
        self.engine = Engine(game)

    def legal(self, state: GameState) -> list[Term]:
        assert self.engine is not None and self.role is not None, "agent used before start()"
        return self.engine.legal_moves(state, self.role)

    @abstractmethod
    def select_move(self, state: GameState, last_joint_move: Sequence[Term], seconds: float) -> Term:
        """Own move for `state`, decided within `seconds`."""

    def stop(self) -> None:
        pass


class RandomAgent(Agent):
    name = "random"

    def __init__(self, seed: int = 0):
        super().__init__()
        self.rng = np.random.default_rng(seed)

    def select_move(self, state: GameState, last_joint_move: Sequence[Term], seconds: float) -> Term:
        moves = self.legal(state)
        return moves[int(self.rng.integers(len(moves)))]


class UctAgent(Agent):
    """
    UCT player. The transposition table lives as long as the agent, so the
    tree built in earlier turns is reused; stale states leave through eviction.
    """

    name = "uct"

    def __init__(
        self,
        search: SearchConfig = SearchConfig(),
        clocks: ClockConfig = ClockConfig(),
        knowledge: Optional[KnowledgeFile] = None,
    ):
        super().__init__()
        self.search_config = search
        self.clocks = clocks
        self.knowledge = knowledge
        self.search: Optional[UctSearch] = None
        self.last_result: Optional[SearchResult] = None
        if knowledge is not None:
            self.name = "uct+knowledge"

    def start(self, game: CompiledGame, role: str) -> None:
        super().start(game, role)
        model = None
        if self.knowledge is not None:
            if game.board is None:
                logger.warning(f"{game.name} has no board extension, {role} plays without knowledge")
            else:
                model = KnowledgeModel(self.knowledge, game.board)
        config = self.search_config
        tt = make_table(config.tt_capacity, config.tt_eviction, config.seed)
        self.search = UctSearch(self.engine, config, model, tt)  # type: ignore[arg-type]
        if self.clocks.playouts is None:
            # the tree grown during the startclock is kept for the first move
            state = self.engine.initial_state()  # type: ignore[union-attr]
            if not self.engine.is_terminal(state):  # type: ignore[union-attr]
                self.search.run(state, seconds=self.clocks.startclock_seconds * CLOCK_SHARE)

    def select_move(self, state: GameState, last_joint_move: Sequence[Term], seconds: float) -> Term:
        moves = self.legal(state)
        if len(moves) == 1:
            return moves[0]
        assert self.search is not None
        last = tuple(last_joint_move)
        if self.clocks.playouts is not None:
            result = self.search.run(state, playouts=self.clocks.playouts, last_move=last)
        else:
            budget = min(seconds, self.clocks.playclock_seconds)
            result = self.search.run(state, seconds=budget * CLOCK_SHARE, last_move=last)
        self.last_result = result
        return choose_move(result, self.role)  # type: ignore[arg-type]

    def stop(self) -> None:
        if self.search is not None:
            self.search.tt.clear()


def make_agent(
    kind: str,
    search: SearchConfig = SearchConfig(),
    clocks: ClockConfig = ClockConfig(),
    knowledge: Optional[KnowledgeFile] = None,
) -> Agent:
    """
    Agent from its command-line name.

    :param kind: One of random, uct, uct+knowledge.
    :param knowledge: Required for uct+knowledge.
    """
    match kind:
        case "random":
            return RandomAgent(search.seed)
        case "uct":
            return UctAgent(search, clocks)
        case "uct+knowledge":
            if knowledge is None:
                raise GgpError("agent uct+knowledge needs a knowledge file")
            return UctAgent(search, clocks, knowledge)
    raise GgpError(f"unknown agent '{kind}', expected one of {', '.join(AGENT_KINDS)}")
