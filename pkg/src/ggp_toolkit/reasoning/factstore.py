"""
Fact stores and 64-bit tuple hashing.

A FactStore keeps the tuples of one relation in insertion order plus a memo
set for fully bound lookups. The memo is an open-addressing hash set with
double hashing: probe i visits (h1 + i*h2) mod size, size a power of two and
h2 odd, so every slot is reachable.
"""
from __future__ import annotations

import hashlib
from typing import Iterable, Iterator, Optional

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
MIN_SLOTS = 8

IdTuple = tuple[int, ...]


def mix64(x: int) -> int:
    """splitmix64 finalizer."""
    x = (x + GOLDEN) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def relation_seed(relation: str) -> int:
    return int.from_bytes(hashlib.blake2b(relation.encode(), digest_size=8).digest(), "little")


def tuple_digest(seed: int, ids: IdTuple) -> int:
    h = seed
    for v in ids:
        h = mix64(h ^ v)
    return mix64(h ^ len(ids))


def next_power_of_two(n: int) -> int:
    size = MIN_SLOTS
    while size < n:
        size <<= 1
    return size


class OpenAddressingSet:
    __slots__ = ("_slots", "_mask", "_count")

    def __init__(self, capacity: int = MIN_SLOTS):
        size = next_power_of_two(2 * max(capacity, 1))
        self._slots: list[Optional[IdTuple]] = [None] * size
        self._mask = size - 1
        self._count = 0

    @property
    def size(self) -> int:
        return self._mask + 1

    def _index(self, item: IdTuple) -> int:
        d = mix64(hash(item) & MASK64)
        mask = self._mask
        h1 = d & mask
        h2 = ((d >> 32) & mask) | 1
        slots = self._slots
        i = h1
        while True:
            current = slots[i]
            if current is None or current == item:
                return i
            i = (i + h2) & mask

    def add(self, item: IdTuple) -> bool:
        i = self._index(item)
        if self._slots[i] is not None:
            return False
        self._slots[i] = item
        self._count += 1
        if 2 * self._count > self.size:
            self._rehash(self.size * 2)
        return True

    def __contains__(self, item: object) -> bool:
        return self._slots[self._index(item)] is not None  # type: ignore[arg-type]

    def _rehash(self, size: int) -> None:
        items = [s for s in self._slots if s is not None]
        self._slots = [None] * size
        self._mask = size - 1
        self._count = 0
        for item in items:
            self._slots[self._index(item)] = item
            self._count += 1

    def clear(self) -> None:
        self._slots = [None] * self.size
        self._count = 0

    def __len__(self) -> int:
        return self._count

    def __iter__(self) -> Iterator[IdTuple]:
        return (s for s in self._slots if s is not None)


class FactStore:
    """Tuples of one relation with a memo set and lazily built partial-key indexes."""

    def __init__(self, relation: str, arity: int, tuples: Iterable[IdTuple] = (), capacity: int = 0):
        self.relation = relation
        self.arity = arity
        initial = list(tuples)
        self.tuples: list[IdTuple] = []
        self.memo = OpenAddressingSet(max(capacity, len(initial)))
        self._indexes: dict[tuple[int, ...], dict[IdTuple, list[IdTuple]]] = {}
        for t in initial:
            self.add(t)

    def add(self, t: IdTuple) -> bool:
        if not self.memo.add(t):
            return False
        self.tuples.append(t)
        if self._indexes:
            self._indexes.clear()
        return True

    def reset(self, tuples: Iterable[IdTuple] = ()) -> None:
        self.tuples.clear()
        self.memo.clear()
        self._indexes.clear()
        for t in tuples:
            self.add(t)

    def contains(self, t: IdTuple) -> bool:
        return t in self.memo

    def select(self, positions: tuple[int, ...], key: IdTuple) -> list[IdTuple] | tuple[IdTuple, ...]:
        """Tuples whose values at `positions` equal `key`."""
        if not positions:
            return self.tuples
        if len(positions) == self.arity:
            return (key,) if key in self.memo else ()
        index = self._indexes.get(positions)
        if index is None:
            index = {}
            for t in self.tuples:
                index.setdefault(tuple(t[p] for p in positions), []).append(t)
            self._indexes[positions] = index
        return index.get(key, ())

    def __len__(self) -> int:
        return len(self.tuples)

    def __repr__(self) -> str:
        return f"FactStore({self.relation}, {len(self.tuples)} tuples)"


def fact_lookup(store: FactStore, t: IdTuple) -> bool:
    return store.contains(t)
