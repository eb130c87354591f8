"""
Apriori-style itemset mining over two basket sets at once.

An itemset is kept when it is frequent in the desirable baskets D
(count >= eps_d) and infrequent in the undesirable baskets U
(count <= eps_u). Up to size n_naive every subset of every basket is counted
directly; above it candidates grow one item at a time from the previous level.
"""
from __future__ import annotations

import math
from collections import Counter
from itertools import combinations
from typing import Callable, Hashable, Iterable, Optional, Sequence

from loguru import logger

Basket = frozenset
ItemsetT = frozenset


def count_threshold(value: float, pool_size: int, upper: bool = False) -> int:
    """
    Basket count from a threshold given as a count (>= 1) or a fraction (< 1) of the pool.

    Lower bounds round up, upper bounds round down.
    """
    if value < 0:
        raise ValueError(f"negative threshold {value}")
    if value >= 1 or value == 0:
        return int(value) if upper else math.ceil(value)
    scaled = value * pool_size
    return math.floor(scaled) if upper else max(1, math.ceil(scaled))


def support(itemset: ItemsetT, baskets: Sequence[Basket]) -> int:
    return sum(1 for basket in baskets if itemset <= basket)


def _level_counts(baskets: Iterable[Basket], k: int, allowed: set, key: Callable) -> Counter:
    counts: Counter = Counter()
    for basket in baskets:
        items = sorted((i for i in basket if i in allowed), key=key)
        counts.update(frozenset(c) for c in combinations(items, k))
    return counts


def mine_dual_itemsets(
    desirable: Sequence[Basket],
    undesirable: Sequence[Basket],
    eps_d: int,
    eps_u: int,
    n_naive: int = 3,
    n_max: int = 5,
    key: Optional[Callable[[Hashable], object]] = None,
) -> list[ItemsetT]:
    """
    :param desirable: Baskets D the itemsets must be frequent in.
    :param undesirable: Baskets U the itemsets must be rare in.
    :param eps_d: Minimum count in D (>= 1).
    :param eps_u: Maximum count in U (>= 0).
    :param n_naive: Largest size counted by plain enumeration.
    :param n_max: Largest itemset size.
    :param key: Item ordering used for deterministic output; repr by default.
    :return: Every kept itemset, ordered by size and then by item order.
    """
    if eps_d < 1 or eps_u < 0:
        raise ValueError(f"thresholds out of range: eps_d={eps_d}, eps_u={eps_u}")
    if not 1 <= n_naive <= n_max:
        raise ValueError(f"need 1 <= n_naive <= n_max, got {n_naive}, {n_max}")
    key = key or repr
    desirable = [frozenset(b) for b in desirable]
    undesirable = [frozenset(b) for b in undesirable]

    singles = Counter(item for basket in desirable for item in basket)
    # an itemset frequent in D only contains items frequent in D
    allowed = {item for item, n in singles.items() if n >= eps_d}

    levels: list[list[ItemsetT]] = []
    for k in range(1, n_naive + 1):
        counts = _level_counts(desirable, k, allowed, key)
        level = [s for s, n in counts.items() if n >= eps_d and support(s, undesirable) <= eps_u]
        levels.append(level)

    previous = levels[-1]
    for k in range(n_naive + 1, n_max + 1):
        if not previous:
            break
        items = set().union(*previous)
        candidates = {a | {b} for a in previous for b in items if b not in a}
        previous = [
            c for c in candidates if support(c, desirable) >= eps_d and support(c, undesirable) <= eps_u
        ]
        levels.append(previous)

    result = [s for level in levels for s in level]
    result.sort(key=lambda s: (len(s), sorted(map(key, s))))
    logger.debug(f"Mined {len(result)} itemsets from {len(desirable)}/{len(undesirable)} baskets")
    return result
