"""Move scoring and the knowledge-driven move distribution."""
from __future__ import annotations

from ggp_toolkit._compat import StrEnum
from typing import Iterable, Sequence

import numpy as np

from ..rules.board import BoardSpec, extract_move_coords
from ..rules.terms import Term
from .features import Feature, FeatureClass, MoveContext, move_context, sort_features
from .knowledge_file import KnowledgeFile
from .parameters import KnowledgeParameters

SCORE_EPSILON = 1e-6


class Phase(StrEnum):
    SELECTION = "selection"
    SIMULATION = "simulation"


def _list_value(features: Iterable[Feature], params: KnowledgeParameters, ctx: MoveContext, phase: Phase) -> float:
    phase_itemsets = (
        params.use_itemsets_in_selection if phase is Phase.SELECTION else params.use_itemsets_in_simulation
    )
    total = 0.0
    for feature in features:
        if not params.class_enabled(feature.kind):
            continue
        gate = phase_itemsets and params.class_itemsets(feature.kind)
        if feature.kind is FeatureClass.ITEMSETS_ONLY and not gate:
            continue
        if feature.matches(ctx, use_itemsets=gate):
            value = params.class_weight(feature.kind) * feature.weight
            if params.first_feature_scoring:
                return value
            total += value
    return total


def score_move(
    knowledge: KnowledgeFile,
    role: str,
    ctx: MoveContext,
    phase: Phase = Phase.SIMULATION,
) -> float:
    """
    score = baseValue + winning part - losing part, floored at a small epsilon.

    :param knowledge: Knowledge with parameters and per-role feature lists.
    :param role: Role whose lists are used.
    :param ctx: Board context with the candidate move.
    :param phase: Selects which itemset toggle applies.
    :return: The move score.
    """
    params = knowledge.parameters
    lists = knowledge.role(role)
    winning = _list_value(sort_features(lists.winning), params, ctx, phase)
    losing = _list_value(sort_features(lists.losing), params, ctx, phase)
    score = params.base_value + params.winning_weight * winning - params.losing_weight * losing
    return max(SCORE_EPSILON, score)


def move_distribution(scores: Sequence[float]) -> np.ndarray:
    """P(m_k) = score(m_k) / sum of scores."""
    values = np.asarray(scores, dtype=float)
    if values.size == 0:
        raise ValueError("move distribution over an empty move list")
    values = np.maximum(values, SCORE_EPSILON)
    return values / values.sum()


class KnowledgeModel:
    """Scores legal moves of a role with one knowledge file; read-only after construction."""

    def __init__(self, knowledge: KnowledgeFile, board: BoardSpec):
        self.knowledge = knowledge
        self.params = knowledge.parameters
        self.board = board
        self._sorted = {
            role: (sort_features(lists.winning), sort_features(lists.losing))
            for role, lists in knowledge.players.items()
        }

    def has_role(self, role: str) -> bool:
        return role in self._sorted

    def scores(
        self,
        role: str,
        state_terms: Iterable[Term],
        last_joint_move: Sequence[Term],
        moves: Sequence[Term],
        phase: Phase = Phase.SIMULATION,
    ) -> np.ndarray:
        if role not in self._sorted:
            return np.full(len(moves), max(SCORE_EPSILON, self.params.base_value))
        winning, losing = self._sorted[role]
        base = move_context(self.board, state_terms, last_joint_move)
        out = np.empty(len(moves))
        for i, move in enumerate(moves):
            ctx = base.with_move(extract_move_coords(self.board, move))
            w = _list_value(winning, self.params, ctx, phase)
            l = _list_value(losing, self.params, ctx, phase)
            out[i] = max(SCORE_EPSILON, self.params.base_value + self.params.winning_weight * w - self.params.losing_weight * l)
        return out

    def distribution(
        self,
        role: str,
        state_terms: Iterable[Term],
        last_joint_move: Sequence[Term],
        moves: Sequence[Term],
    ) -> np.ndarray:
        """Simulation distribution, blended with uniform by the simulation weight."""
        p = move_distribution(self.scores(role, state_terms, last_joint_move, moves, Phase.SIMULATION))
        w = self.params.simulation_weight
        return w * p + (1.0 - w) / len(moves)
