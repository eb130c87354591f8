"""
Search nodes and the transposition tables that own them.

Nodes are keyed by state hash. A node links to its children by joint-move
index tuple (one move ordinal per role) and remembers its parents so an
evicted node can be unhooked from the tree.
"""
from __future__ import annotations

from typing import Callable, Iterator, Optional

import numpy as np

from ..reasoning.engine import GameState
from ..rules.terms import Term

JointIndex = tuple[int, ...]


class Node:
    __slots__ = (
        "key", "state", "moves", "visits", "payouts", "n", "children", "parents",
        "terminal", "goals", "scores", "last_move", "prev", "next",
    )

    def __init__(self, key: int, state: Optional[GameState] = None, moves: tuple[list[Term], ...] = ()):
        self.key = key
        self.state = state
        self.moves = moves
        self.visits = [np.zeros(len(m), dtype=np.int64) for m in moves]
        self.payouts = [np.zeros(len(m), dtype=np.float64) for m in moves]
        self.n = 0
        self.children: dict[JointIndex, int] = {}
        self.parents: set[int] = set()
        self.terminal = False
        self.goals: tuple[float, ...] = ()
        # per-role knowledge scores, filled on first use
        self.scores: Optional[list[np.ndarray]] = None
        # joint move that first reached this state
        self.last_move: tuple[Term, ...] = ()
        self.prev: Optional[Node] = None
        self.next: Optional[Node] = None

    def means(self, role_index: int) -> np.ndarray:
        visits = self.visits[role_index]
        return np.divide(
            self.payouts[role_index], visits, out=np.zeros_like(self.payouts[role_index]), where=visits > 0
        )

    def __repr__(self) -> str:
        return f"Node({self.key:#018x}, n={self.n}, children={len(self.children)})"


class TranspositionTable:
    """Map from state hash to node; subclasses choose the eviction victim."""

    def __init__(self, capacity: Optional[int] = None):
        if capacity is not None and capacity < 1:
            raise ValueError(f"transposition table capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.table: dict[int, Node] = {}
        self.pinned: set[int] = set()
        self.evictions = 0

    def get(self, key: int) -> Optional[Node]:
        return self.table.get(key)

    def get_or_insert(self, key: int, make_node: Callable[[], Node]) -> tuple[Node, bool]:
        """
        Returns the stored node for `key`, creating it with `make_node` when absent.

        :param key: State hash.
        :param make_node: Factory called only on a miss.
        :return: The node and whether it was created.
        """
        node = self.table.get(key)
        if node is not None:
            self.touch(node)
            return node, False
        node = make_node()
        self._insert(node)
        while self.capacity is not None and len(self.table) > self.capacity:
            victim = self._victim()
            if victim is None:
                break
            self._remove(victim)
        return node, True

    def _insert(self, node: Node) -> None:
        self.table[node.key] = node

    def _victim(self) -> Optional[Node]:
        raise NotImplementedError

    def touch(self, node: Node) -> None:
        pass

    def pin(self, key: int) -> None:
        self.pinned = {key}

    def _remove(self, node: Node) -> None:
        del self.table[node.key]
        for parent_key in node.parents:
            parent = self.table.get(parent_key)
            if parent is None:
                continue
            for joint in [j for j, child in parent.children.items() if child == node.key]:
                del parent.children[joint]
        for child_key in node.children.values():
            child = self.table.get(child_key)
            if child is not None:
                child.parents.discard(node.key)
        self.evictions += 1

    def clear(self) -> None:
        self.table.clear()
        self.pinned.clear()

    def __len__(self) -> int:
        return len(self.table)

    def __contains__(self, key: object) -> bool:
        return key in self.table


class LinkedTT(TranspositionTable):
    """
    LRU table: the map plus a doubly linked recency list.

    The front of the list is the most recently visited node; on overflow
    the back node is dropped (pinned nodes are skipped).
    """

    def __init__(self, capacity: Optional[int] = None):
        super().__init__(capacity)
        self._head = Node(-1)
        self._head.prev = self._head.next = self._head

    def _link_front(self, node: Node) -> None:
        first = self._head.next
        node.prev, node.next = self._head, first
        first.prev = node  # type: ignore[union-attr]
        self._head.next = node

    @staticmethod
    def _unlink(node: Node) -> None:
        node.prev.next = node.next  # type: ignore[union-attr]
        node.next.prev = node.prev  # type: ignore[union-attr]
        node.prev = node.next = None

    def _insert(self, node: Node) -> None:
        super()._insert(node)
        self._link_front(node)

    def touch(self, node: Node) -> None:
        if node.prev is None or self._head.next is node:
            return
        self._unlink(node)
        self._link_front(node)

    def _victim(self) -> Optional[Node]:
        node = self._head.prev
        while node is not self._head:
            if node.key not in self.pinned:  # type: ignore[union-attr]
                return node
            node = node.prev  # type: ignore[union-attr]
        return None

    def _remove(self, node: Node) -> None:
        self._unlink(node)
        super()._remove(node)

    def order(self) -> list[int]:
        """Keys front (most recent) to back."""
        return [node.key for node in self]

    def __iter__(self) -> Iterator[Node]:
        node = self._head.next
        while node is not self._head:
            yield node  # type: ignore[misc]
            node = node.next  # type: ignore[union-attr]

    def clear(self) -> None:
        super().clear()
        self._head.prev = self._head.next = self._head


class RandomEvictionTT(TranspositionTable):
    """Bounded table that drops a uniformly random unpinned node on overflow."""

    def __init__(self, capacity: Optional[int] = None, seed: int = 0):
        super().__init__(capacity)
        self._rng = np.random.default_rng(seed)
        self._keys: list[int] = []
        self._slot: dict[int, int] = {}

    def _insert(self, node: Node) -> None:
        super()._insert(node)
        self._slot[node.key] = len(self._keys)
        self._keys.append(node.key)

    def _victim(self) -> Optional[Node]:
        candidates = len(self._keys) - len(self.pinned & self._slot.keys())
        if candidates <= 0:
            return None
        while True:
            key = self._keys[int(self._rng.integers(len(self._keys)))]
            if key not in self.pinned:
                return self.table[key]

    def _remove(self, node: Node) -> None:
        i = self._slot.pop(node.key)
        last = self._keys.pop()
        if last != node.key:
            self._keys[i] = last
            self._slot[last] = i
        super()._remove(node)

    def clear(self) -> None:
        super().clear()
        self._keys.clear()
        self._slot.clear()


def make_table(capacity: Optional[int], eviction: str = "lru", seed: int = 0) -> TranspositionTable:
    if eviction == "random":
        return RandomEvictionTT(capacity, seed)
    return LinkedTT(capacity)
