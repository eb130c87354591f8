"""
Feature mining from game records.

Every move a role made with a board piece is one sample: the features the
move exhibits, the meta facts of the state it was made in, and whether the
role went on to win or lose the match. Drawn matches are left out. Features
whose phi coefficient against the outcome exceeds the threshold become the
winning (phi > 0) or losing (phi < 0) lists, weighted by |phi|, and each is
then backed with itemsets mined from the states where it occurred.
"""
from __future__ import annotations

from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
import pandas as pd
from loguru import logger

from ..evolution.records import GameRecord, Outcome
from ..knowledge.features import (
    Feature,
    ItemsetsOnly,
    MetaFact,
    move_context,
    metafact_sort_key,
    observe_features,
    sort_features,
)
from ..knowledge.knowledge_file import KnowledgeFile, RoleKnowledge
from ..knowledge.parameters import KnowledgeParameters
from ..rules.board import BoardSpec
from ..settings import MiningConfig
from .itemsets import count_threshold, mine_dual_itemsets, support
from .phi import ContingencyTable, phi, phi_vector


@dataclass(frozen=True)
class Sample:
    features: frozenset[Feature]
    basket: frozenset[MetaFact]
    won: bool


@dataclass
class FeaturePool:
    """Candidate features of one role with their occurrence counts in winning and losing states."""

    role: str
    winning: Counter = field(default_factory=Counter)
    losing: Counter = field(default_factory=Counter)
    samples: list[Sample] = field(default_factory=list)

    @property
    def n_win(self) -> int:
        return sum(1 for s in self.samples if s.won)

    @property
    def n_loss(self) -> int:
        return sum(1 for s in self.samples if not s.won)

    def add(self, sample: Sample) -> None:
        self.samples.append(sample)
        (self.winning if sample.won else self.losing).update(sample.features)

    def merge(self, other: "FeaturePool") -> "FeaturePool":
        if other.role != self.role:
            raise ValueError(f"cannot merge pools of {self.role} and {other.role}")
        self.winning.update(other.winning)
        self.losing.update(other.losing)
        self.samples.extend(other.samples)
        return self

    def table(self) -> pd.DataFrame:
        """One row per candidate: presence counts in winning and losing states and phi."""
        features = sorted(set(self.winning) | set(self.losing), key=lambda f: f.key)
        df = pd.DataFrame(
            {
                "feature": features,
                "win": [self.winning.get(f, 0) for f in features],
                "loss": [self.losing.get(f, 0) for f in features],
            }
        )
        df["phi"] = phi_vector(df["win"].to_numpy(), df["loss"].to_numpy(), self.n_win, self.n_loss)
        return df


# --- Candidate extraction ---

def scan_record(record: GameRecord, role: str, board: BoardSpec, knearest_k: Sequence[int] = (2, 3)) -> FeaturePool:
    pool = FeaturePool(role)
    if role not in record.roles:
        return pool
    outcome = record.outcome(role)
    if outcome is Outcome.DRAW:
        return pool
    for index, state in enumerate(record.states):
        move = state.move_of(role)
        if move is None:
            continue
        ctx = move_context(board, state.facts, record.previous_joint_move(index), move)
        if ctx.move is None:
            continue
        pool.add(Sample(frozenset(observe_features(ctx, knearest_k)), ctx.basket, outcome is Outcome.WIN))
    return pool


def _scan_chunk(args: tuple[list[GameRecord], str, BoardSpec, tuple[int, ...]]) -> FeaturePool:
    records, role, board, knearest_k = args
    pool = FeaturePool(role)
    for record in records:
        pool.merge(scan_record(record, role, board, knearest_k))
    return pool


def extract_candidates(
    records: Sequence[GameRecord],
    role: str,
    board: BoardSpec,
    knearest_k: Sequence[int] = (2, 3),
    workers: int = 1,
) -> FeaturePool:
    """
    Candidate features of `role` over all records.

    :param records: Finished matches; drawn ones contribute nothing.
    :param role: Role whose moves are scanned.
    :param board: Board extension used to read pieces and moves.
    :param knearest_k: K values instantiated for the k-nearest classes.
    :param workers: Processes scanning record chunks; pools are merged in record order.
    :return: The role's FeaturePool.
    """
    knearest_k = tuple(knearest_k)
    if workers <= 1 or len(records) < 2 * workers:
        return _scan_chunk((list(records), role, board, knearest_k))
    chunks = [list(records[i::workers]) for i in range(workers)]
    pool = FeaturePool(role)
    with ProcessPoolExecutor(max_workers=workers) as executor:
        for part in executor.map(_scan_chunk, [(c, role, board, knearest_k) for c in chunks]):
            pool.merge(part)
    return pool


# --- Selection by phi ---

def mine_features(pool: FeaturePool, threshold: float) -> tuple[list[Feature], list[Feature]]:
    """
    Features with |phi| > threshold, split by sign and weighted by |phi|.

    :return: (winning, losing), heaviest first.
    """
    if not 0.0 <= threshold < 1.0:
        raise ValueError(f"phi threshold {threshold} outside [0, 1)")
    if not pool.samples:
        return [], []
    df = pool.table()
    kept = df[df["phi"].abs() > threshold]
    winning = [f.with_weight(float(p)) for f, p in zip(kept["feature"], kept["phi"]) if p > 0]
    losing = [f.with_weight(float(-p)) for f, p in zip(kept["feature"], kept["phi"]) if p < 0]
    logger.info(
        f"    -> {pool.role}: {len(df)} candidates, {len(winning)} winning and {len(losing)} losing above {threshold}"
    )
    return sort_features(winning), sort_features(losing)


# --- Itemsets ---

def _rank_itemsets(itemsets: list[frozenset], desirable: list, undesirable: list, limit: int) -> list[frozenset]:
    ranked = sorted(
        itemsets,
        key=lambda s: (-support(s, desirable), support(s, undesirable), len(s), sorted(map(metafact_sort_key, s))),
    )
    return ranked[:limit]


def _baskets(pool: FeaturePool, feature: Feature, won: bool) -> list[frozenset]:
    return [s.basket for s in pool.samples if s.won == won and feature in s.features]


def attach_itemsets(
    features: Iterable[Feature],
    pool: FeaturePool,
    config: MiningConfig = MiningConfig(),
    winning_list: bool = True,
) -> list[Feature]:
    """
    Backs every feature with itemsets of meta facts.

    D holds the baskets of states where the feature occurred on the side of its
    list (winning states for the winning list, losing states for the losing
    list); U holds those of the other side.
    """
    out = []
    for feature in features:
        desirable = _baskets(pool, feature, winning_list)
        undesirable = _baskets(pool, feature, not winning_list)
        itemsets: list[frozenset] = []
        if desirable and config.max_itemsets_per_feature > 0:
            found = mine_dual_itemsets(
                desirable,
                undesirable,
                count_threshold(config.eps_d, len(desirable)),
                count_threshold(config.eps_u, len(undesirable), upper=True),
                config.n_naive,
                config.n_max,
                key=metafact_sort_key,
            )
            itemsets = _rank_itemsets(found, desirable, undesirable, config.max_itemsets_per_feature)
        if isinstance(feature, ItemsetsOnly) and not itemsets:
            continue
        out.append(feature.with_itemsets(itemsets))
    return out


def itemsets_only_feature(pool: FeaturePool, config: MiningConfig, winning_list: bool) -> Optional[Feature]:
    """
    ItemsetsOnly for one list: itemsets mined over every sample, weighted by the
    phi of "some itemset holds" against the outcome. None when nothing passes.
    """
    backed = attach_itemsets([ItemsetsOnly()], pool, config, winning_list)
    if not backed:
        return None
    feature = backed[0]
    fires = np.fromiter((any(i <= s.basket for i in feature.itemsets) for s in pool.samples), dtype=bool)
    won = np.fromiter((s.won for s in pool.samples), dtype=bool)
    table = ContingencyTable(
        int(np.sum(fires & won)), int(np.sum(fires & ~won)), int(np.sum(~fires & won)), int(np.sum(~fires & ~won))
    )
    value, _ = phi(table if winning_list else table.swapped())
    if value <= config.phi_threshold:
        return None
    return feature.with_weight(value)


# --- Whole pipeline ---

def mine_role(records: Sequence[GameRecord], role: str, board: BoardSpec, config: MiningConfig, limit: int) -> RoleKnowledge:
    pool = extract_candidates(records, role, board, config.knearest_k, config.workers)
    winning, losing = mine_features(pool, config.phi_threshold)
    lists = []
    for features, side in ((winning, True), (losing, False)):
        features = [f for f in features if not isinstance(f, ItemsetsOnly)]
        backed = attach_itemsets(features, pool, config, side)
        extra = itemsets_only_feature(pool, config, side)
        if extra is not None:
            backed.append(extra)
        lists.append(tuple(sort_features(backed)[:limit]))
    return RoleKnowledge(*lists)


def mine_knowledge(
    records: Sequence[GameRecord],
    board: BoardSpec,
    config: MiningConfig = MiningConfig(),
    parameters: KnowledgeParameters = KnowledgeParameters(),
    roles: Optional[Sequence[str]] = None,
) -> KnowledgeFile:
    """
    Mines winning and losing feature lists for every role.

    :param records: Game records of the game.
    :param board: Board extension of the game.
    :param config: Thresholds and itemset sizes.
    :param parameters: Parameters stored in the result; its max knowledge size truncates each list.
    :param roles: Roles to mine, every role seen in the records by default.
    :return: A KnowledgeFile holding the mined lists.
    """
    if roles is None:
        roles = list(dict.fromkeys(role for record in records for role in record.roles))
    logger.info(f"    -> Mining features of {len(roles)} roles from {len(records)} records")
    players = {role: mine_role(records, role, board, config, parameters.max_knowledge_size) for role in roles}
    knowledge = KnowledgeFile(parameters, players)
    logger.success(f"Mined {knowledge.feature_count()} features")
    return knowledge
