"""
UCT search with per-role payouts.

Every role selects its own edge at a node with UCB over its own payout
averages; the chosen edges form the joint move. Each playout adds at most
`expansion_per_playout` new nodes, then simulates to a terminal state and
adds goal/100 for every role along the path.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from loguru import logger

from ..errors import SearchError
from ..reasoning.engine import Engine, GameState, JointMove
from ..rules.terms import Term, to_kif
from ..settings import GOAL_SCALE, SearchConfig
from ..knowledge.scoring import KnowledgeModel, Phase
from .transposition import JointIndex, Node, TranspositionTable, make_table


# --- Pure selection helpers ---

def ucb_select(
    visits: np.ndarray,
    payouts: np.ndarray,
    n_parent: int,
    c: float,
    bias: Optional[np.ndarray] = None,
    eligible: Optional[Sequence[int]] = None,
) -> int:
    """
    argmax v_i + c*sqrt(ln n_p / n_i) + bias_i/(n_i + 1) over the eligible edges.

    Unvisited eligible edges win outright, lowest ordinal first; equal values
    also go to the lowest ordinal.
    """
    visits = np.asarray(visits)
    if visits.size == 0:
        raise SearchError("selection at a node without edges")
    idx = np.arange(visits.size) if eligible is None else np.sort(np.asarray(eligible, dtype=np.int64))
    n = visits[idx]
    unvisited = idx[n == 0]
    if unvisited.size:
        return int(unvisited[0])
    n = n.astype(float)
    values = np.asarray(payouts, dtype=float)[idx] / n + c * np.sqrt(math.log(max(n_parent, 1)) / n)
    if bias is not None:
        values = values + np.asarray(bias, dtype=float)[idx] / (n + 1.0)
    return int(idx[int(np.argmax(values))])


def progressive_widening(n_parent: int, coefficient: float, exponent: float, n_edges: int) -> int:
    """Number of knowledge-ranked edges eligible at a node: max(1, floor(c * n_p^a)), at most n_edges."""
    k = max(1, math.floor(coefficient * n_parent ** exponent))
    return min(k, n_edges)


def top_k(scores: np.ndarray, k: int) -> np.ndarray:
    order = np.lexsort((np.arange(scores.size), -scores))
    return np.sort(order[:k])


def decide(visits: np.ndarray, means: np.ndarray) -> int:
    """Most visits, then highest mean, then lowest ordinal."""
    visits = np.asarray(visits)
    if visits.size == 0:
        raise SearchError("no legal move to decide on")
    return int(np.lexsort((np.arange(visits.size), -np.asarray(means), -visits))[0])


# --- Results ---

@dataclass(frozen=True)
class RoleStats:
    role: str
    moves: list[Term]
    visits: np.ndarray
    means: np.ndarray

    def best(self) -> Term:
        return self.moves[decide(self.visits, self.means)]


@dataclass(frozen=True)
class SearchResult:
    stats: tuple[RoleStats, ...]
    playouts: int
    tt_size: int
    # set when no playout finished inside the budget
    warning: bool = False

    def for_role(self, role: str) -> RoleStats:
        for s in self.stats:
            if s.role == role:
                return s
        raise KeyError(role)


# --- Search ---

class UctSearch:
    def __init__(
        self,
        engine: Engine,
        config: SearchConfig = SearchConfig(),
        knowledge: Optional[KnowledgeModel] = None,
        tt: Optional[TranspositionTable] = None,
    ):
        self.engine = engine
        self.config = config
        self.roles = engine.roles
        self.c = config.c
        self.knowledge = knowledge
        self.tt = tt if tt is not None else make_table(config.tt_capacity, config.tt_eviction, config.seed)
        self.rng = np.random.default_rng(config.seed)

    # --- nodes ---

    def _new_node(self, state: GameState, last_move: JointMove) -> Node:
        engine = self.engine
        terminal = engine.is_terminal(state)
        moves: tuple[list[Term], ...] = tuple([] for _ in self.roles)
        if not terminal:
            moves = tuple(engine.legal_moves(state, role) for role in self.roles)
            if any(not m for m in moves):
                logger.warning(f"{engine.game.name}: non-terminal state without moves for some role")
                terminal = True
                moves = tuple([] for _ in self.roles)
        node = Node(state.key, state, moves)
        node.terminal = terminal
        node.last_move = last_move
        if terminal:
            node.goals = tuple(g / GOAL_SCALE for g in engine.goals(state))
        return node

    @staticmethod
    def _link(parent: Node, joint: JointIndex, child: Node) -> None:
        parent.children[joint] = child.key
        child.parents.add(parent.key)

    def _joint_moves(self, node: Node, joint: JointIndex) -> JointMove:
        return tuple(node.moves[i][j] for i, j in enumerate(joint))

    # --- selection ---

    def _scores(self, node: Node, i: int) -> np.ndarray:
        if node.scores is None:
            terms = self.engine.state_terms(node.state)  # type: ignore[arg-type]
            node.scores = [
                self.knowledge.scores(role, terms, node.last_move, node.moves[r], Phase.SELECTION)  # type: ignore[union-attr]
                for r, role in enumerate(self.roles)
            ]
        return node.scores[i]

    def select(self, node: Node, i: int) -> int:
        visits = node.visits[i]
        if visits.size == 1:
            return 0
        bias = eligible = None
        km = self.knowledge
        if km is not None and km.has_role(self.roles[i]):
            params = km.params
            if params.use_in_selection or params.progressive_widening:
                scores = self._scores(node, i)
                if params.use_in_selection:
                    bias = params.bias_weight * scores
                if params.progressive_widening:
                    k = progressive_widening(
                        node.n, params.widening_coefficient, params.widening_exponent, visits.size
                    )
                    eligible = top_k(scores, k)
        return ucb_select(visits, node.payouts[i], node.n, self.c, bias, eligible)

    # --- simulation ---

    def simulate(self, state: GameState, last_move: JointMove) -> tuple[float, ...]:
        engine = self.engine
        km = self.knowledge
        steps = 0
        while steps < self.config.max_simulation_steps and not engine.is_terminal(state):
            joint = []
            for role in self.roles:
                moves = engine.legal_moves(state, role)
                if not moves:
                    break
                if km is not None and km.has_role(role) and len(moves) > 1:
                    p = km.distribution(role, engine.state_terms(state), last_move, moves)
                    joint.append(moves[int(self.rng.choice(len(moves), p=p))])
                else:
                    joint.append(moves[int(self.rng.integers(len(moves)))])
            if len(joint) != len(self.roles):
                break
            last_move = tuple(joint)
            state = engine.advance(state, last_move)
            steps += 1
        return tuple(g / GOAL_SCALE for g in engine.goals(state))

    # --- one playout ---

    def playout(self, root: Node) -> int:
        """
        Selection, expansion, simulation and backpropagation from `root`.

        :return: Length of the stored path that received updates.
        """
        path: list[tuple[Node, JointIndex]] = []
        node = root
        created = 0
        while True:
            self.tt.touch(node)
            if node.terminal:
                payoff = node.goals
                break
            joint = tuple(self.select(node, i) for i in range(len(self.roles)))
            path.append((node, joint))
            child_key = node.children.get(joint)
            child = self.tt.get(child_key) if child_key is not None else None
            if child is None:
                moves = self._joint_moves(node, joint)
                state = self.engine.advance(node.state, moves)  # type: ignore[arg-type]
                child = self.tt.get(state.key)
                if child is None:
                    if created >= self.config.expansion_per_playout:
                        payoff = self.simulate(state, moves)
                        break
                    child, _ = self.tt.get_or_insert(state.key, lambda: self._new_node(state, moves))
                    created += 1
                self._link(node, joint, child)
            node = child

        for visited, joint in path:
            visited.n += 1
            for i, j in enumerate(joint):
                visited.visits[i][j] += 1
                visited.payouts[i][j] += payoff[i]
        return len(path)

    def root(self, state: GameState, last_move: JointMove = ()) -> Node:
        node, _ = self.tt.get_or_insert(state.key, lambda: self._new_node(state, last_move))
        if last_move and node.last_move != last_move:
            # the joint move actually played replaces the one of a transposed path
            node.last_move = last_move
            node.scores = None
        self.tt.pin(node.key)
        return node

    def run(
        self,
        state: GameState,
        playouts: Optional[int] = None,
        seconds: Optional[float] = None,
        last_move: JointMove = (),
    ) -> SearchResult:
        """
        Searches from `state` until the playout count or the wall-clock budget runs out.

        :param state: Non-terminal root state.
        :param playouts: Playout budget.
        :param seconds: Wall-clock budget, used when no playout budget is given.
        :param last_move: Joint move that led to `state`, the context of the root features.
        :return: Per-role edge statistics of the root.
        """
        if playouts is None and seconds is None:
            raise ValueError("search needs a playout or time budget")
        root = self.root(state, last_move)
        if root.terminal:
            raise SearchError("search started from a terminal state")
        deadline = None if playouts is not None else time.perf_counter() + seconds  # type: ignore[operator]
        done = 0
        while True:
            if playouts is not None and done >= playouts:
                break
            if deadline is not None and time.perf_counter() >= deadline:
                break
            self.playout(root)
            done += 1

        if done == 0:
            logger.warning("Budget ran out before the first playout, returning uniform statistics")
            stats = tuple(
                RoleStats(role, root.moves[i], np.zeros(len(root.moves[i]), dtype=np.int64), np.zeros(len(root.moves[i])))
                for i, role in enumerate(self.roles)
            )
            return SearchResult(stats, 0, len(self.tt), warning=True)

        stats = tuple(
            RoleStats(role, root.moves[i], root.visits[i].copy(), root.means(i))
            for i, role in enumerate(self.roles)
        )
        logger.debug(f"{done} playouts, root visits {root.n}, TT size {len(self.tt)}")
        return SearchResult(stats, done, len(self.tt))


def run_uct(
    engine: Engine,
    state: GameState,
    config: SearchConfig = SearchConfig(),
    playouts: Optional[int] = None,
    seconds: Optional[float] = None,
    knowledge: Optional[KnowledgeModel] = None,
    last_move: JointMove = (),
) -> SearchResult:
    return UctSearch(engine, config, knowledge).run(state, playouts, seconds, last_move)


def choose_move(result: SearchResult, role: str) -> Term:
    """Own-role component of the most visited root edge."""
    stats = result.for_role(role)
    move = stats.best()
    logger.debug(f"{role} plays {to_kif(move)} after {result.playouts} playouts (TT {result.tt_size})")
    return move
