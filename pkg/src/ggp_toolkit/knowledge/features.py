"""
Spatial move features and state meta facts.

A feature is a predicate over (board pieces, previous joint move, candidate
move). Each feature may be backed by itemsets of meta facts; a backed
feature only matches in states whose meta facts contain one full itemset.
Weights and itemsets are payload: two features with the same class and
parameters are the same feature.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from ggp_toolkit._compat import StrEnum
from functools import cached_property
from typing import ClassVar, Iterable, Optional, Sequence

import numpy as np

from ..rules.board import BoardSpec, Coords, extract_board_pieces, extract_move_coords
from ..rules.terms import Term
from .areas import AreaIndex, area_index, area_size

Piece = tuple[str, Coords]


# --- Meta facts ---

@dataclass(frozen=True, order=True, slots=True)
class AnyPieceInField:
    position: Coords

    def holds(self, pieces: Sequence[Piece]) -> bool:
        return any(coords == self.position for _, coords in pieces)


@dataclass(frozen=True, order=True, slots=True)
class PieceInArea:
    area_size: int
    area: AreaIndex
    piece: str

    def holds(self, pieces: Sequence[Piece], board: BoardSpec) -> bool:
        return any(
            piece == self.piece and board.in_bounds(coords) and area_index(coords, board, self.area_size) == self.area
            for piece, coords in pieces
        )


MetaFact = AnyPieceInField | PieceInArea
Itemset = frozenset[MetaFact]


def eval_metafact(fact: MetaFact, pieces: Sequence[Piece], board: BoardSpec) -> bool:
    if isinstance(fact, AnyPieceInField):
        return fact.holds(pieces)
    return fact.holds(pieces, board)


def metafact_vector(group: Sequence[MetaFact], pieces: Sequence[Piece], board: BoardSpec) -> np.ndarray:
    """Bit vector of a meta-fact group over one state; area facts of any size are evaluated directly."""
    return np.fromiter((eval_metafact(m, pieces, board) for m in group), dtype=bool, count=len(group))


def state_metafacts(pieces: Sequence[Piece], board: BoardSpec) -> frozenset[MetaFact]:
    """Every meta fact that holds in a state; itemset matching is a subset test against it."""
    s = area_size(board.width)
    out: set[MetaFact] = set()
    for piece, coords in pieces:
        out.add(AnyPieceInField(coords))
        # pieces off the board belong to no area
        if board.in_bounds(coords):
            out.add(PieceInArea(s, area_index(coords, board, s), piece))
    return frozenset(out)


def metafact_sort_key(fact: MetaFact) -> tuple:
    if isinstance(fact, AnyPieceInField):
        return (0, fact.position)
    return (1, fact.area_size, fact.area, fact.piece)


# --- Move context ---

@dataclass(frozen=True)
class MoveContext:
    """What a feature sees: board, last spatial moves and the candidate (piece, coords)."""

    board: BoardSpec
    pieces: tuple[Piece, ...]
    last_moves: tuple[Coords, ...] = ()
    move: Optional[Piece] = None

    @cached_property
    def basket(self) -> frozenset[MetaFact]:
        return state_metafacts(self.pieces, self.board)

    @cached_property
    def ranked_neighbours(self) -> list[tuple[float, str, Coords]]:
        """Board pieces other than the target field, nearest first (ties by piece, coords)."""
        if self.move is None:
            return []
        target = self.move[1]
        others = [(piece, coords) for piece, coords in self.pieces if coords != target]
        if not others:
            return []
        dist = np.linalg.norm(np.asarray([c for _, c in others]) - np.asarray(target), axis=1)
        return sorted((float(d), piece, coords) for d, (piece, coords) in zip(dist, others))

    def with_move(self, move: Optional[Piece]) -> "MoveContext":
        return MoveContext(self.board, self.pieces, self.last_moves, move)


def move_context(
    board: BoardSpec,
    state_terms: Iterable[Term],
    last_joint_move: Sequence[Term] = (),
    move: Optional[Term] = None,
) -> MoveContext:
    """Builds a MoveContext from GDL state facts and moves."""
    last = tuple(
        coords for coords in (extract_move_coords(board, m) for m in last_joint_move) if coords is not None
    )
    candidate = extract_move_coords(board, move) if move is not None else None
    return MoveContext(
        board=board,
        pieces=tuple(extract_board_pieces(board, state_terms)),
        last_moves=tuple(c for _, c in last),
        move=candidate,
    )


# --- Features ---

class FeatureClass(StrEnum):
    PROXIMITY = "proximity"
    BORDER_DIST = "border_dist"
    ABS_MOVE = "abs_move"
    ABS_MOVE_IN_AREA = "abs_move_in_area"
    KNEAREST = "knearest"
    KNEAREST_1D = "knearest_1d"
    ITEMSETS_ONLY = "itemsets_only"


CLASS_ORDER = {c: i for i, c in enumerate(FeatureClass)}


@dataclass(frozen=True)
class Feature:
    kind: ClassVar[FeatureClass]
    weight: float = field(default=0.0, compare=False, kw_only=True)
    itemsets: tuple[Itemset, ...] = field(default=(), compare=False, kw_only=True)

    def matches_move(self, ctx: MoveContext) -> bool:
        raise NotImplementedError

    def matches(self, ctx: MoveContext, use_itemsets: bool = True) -> bool:
        """
        Feature predicate for the candidate move in `ctx`.

        :param ctx: Board, last moves and candidate; a non-spatial candidate matches nothing.
        :param use_itemsets: Apply itemset gating when the feature carries itemsets.
        :return: True when the feature fires.
        """
        if ctx.move is None or not self.matches_move(ctx):
            return False
        if use_itemsets and self.itemsets:
            basket = ctx.basket
            return any(itemset <= basket for itemset in self.itemsets)
        return True

    def params(self) -> tuple:
        return ()

    @property
    def key(self) -> tuple:
        return (CLASS_ORDER[self.kind], self.params())

    def with_weight(self, weight: float) -> "Feature":
        return replace(self, weight=weight)

    def with_itemsets(self, itemsets: Iterable[Itemset]) -> "Feature":
        return replace(self, itemsets=tuple(itemsets))


@dataclass(frozen=True)
class Proximity(Feature):
    kind: ClassVar[FeatureClass] = FeatureClass.PROXIMITY
    distance: int = 0

    def matches_move(self, ctx: MoveContext) -> bool:
        d = nearest_last_move_distance(ctx)
        return d is not None and d == self.distance

    def params(self) -> tuple:
        return (self.distance,)


@dataclass(frozen=True)
class BorderDist(Feature):
    kind: ClassVar[FeatureClass] = FeatureClass.BORDER_DIST
    distance: int = 0
    lower: bool = True
    # 1-based
    dimension: int = 1

    def matches_move(self, ctx: MoveContext) -> bool:
        if self.dimension > len(ctx.move[1]):  # type: ignore[index]
            return False
        return border_distance(ctx.board, ctx.move[1], self.dimension, self.lower) == self.distance  # type: ignore[index]

    def params(self) -> tuple:
        return (self.dimension, self.lower, self.distance)


@dataclass(frozen=True)
class AbsMove(Feature):
    kind: ClassVar[FeatureClass] = FeatureClass.ABS_MOVE
    piece: str = ""
    position: Coords = ()

    def matches_move(self, ctx: MoveContext) -> bool:
        return ctx.move == (self.piece, self.position)

    def params(self) -> tuple:
        return (self.piece, self.position)


@dataclass(frozen=True)
class AbsMoveInArea(Feature):
    kind: ClassVar[FeatureClass] = FeatureClass.ABS_MOVE_IN_AREA
    piece: str = ""
    area_size: int = 1
    area: AreaIndex = ()

    def matches_move(self, ctx: MoveContext) -> bool:
        piece, coords = ctx.move  # type: ignore[misc]
        return piece == self.piece and area_index(coords, ctx.board, self.area_size) == self.area

    def params(self) -> tuple:
        return (self.piece, self.area_size, self.area)


@dataclass(frozen=True)
class KNearest(Feature):
    kind: ClassVar[FeatureClass] = FeatureClass.KNEAREST
    k: int = 1
    # sorted lexicographically
    pieces: tuple[str, ...] = ()

    def matches_move(self, ctx: MoveContext) -> bool:
        return k_nearest(ctx, self.k) == self.pieces

    def params(self) -> tuple:
        return (self.k, self.pieces)


@dataclass(frozen=True)
class KNearest1D(Feature):
    kind: ClassVar[FeatureClass] = FeatureClass.KNEAREST_1D
    k: int = 1
    dimension: int = 1
    # nearest first
    pieces: tuple[str, ...] = ()

    def matches_move(self, ctx: MoveContext) -> bool:
        return k_nearest_1d(ctx, self.k, self.dimension) == self.pieces

    def params(self) -> tuple:
        return (self.k, self.dimension, self.pieces)


@dataclass(frozen=True)
class ItemsetsOnly(Feature):
    kind: ClassVar[FeatureClass] = FeatureClass.ITEMSETS_ONLY

    def matches_move(self, ctx: MoveContext) -> bool:
        return True


FEATURE_TYPES: dict[FeatureClass, type[Feature]] = {
    cls.kind: cls for cls in (Proximity, BorderDist, AbsMove, AbsMoveInArea, KNearest, KNearest1D, ItemsetsOnly)
}


def sort_features(features: Iterable[Feature]) -> list[Feature]:
    """Heaviest first; equal weights by class and parameters."""
    return sorted(features, key=lambda f: (-f.weight, f.key))


# --- Measurements shared by matching and mining ---

def nearest_last_move_distance(ctx: MoveContext) -> Optional[int]:
    if ctx.move is None or not ctx.last_moves:
        return None
    diffs = np.asarray(ctx.last_moves, dtype=float) - np.asarray(ctx.move[1], dtype=float)
    return int(math.floor(float(np.min(np.linalg.norm(diffs, axis=1)))))


def border_distance(board: BoardSpec, coords: Coords, dimension: int, lower: bool) -> int:
    r = coords[dimension - 1]
    return int(math.floor(r - board.d_min if lower else board.d_max - r))


def k_nearest(ctx: MoveContext, k: int) -> Optional[tuple[str, ...]]:
    ranked = ctx.ranked_neighbours
    if len(ranked) < k:
        return None
    return tuple(sorted(piece for _, piece, _ in ranked[:k]))


def k_nearest_1d(ctx: MoveContext, k: int, dimension: int) -> Optional[tuple[str, ...]]:
    if ctx.move is None or dimension > len(ctx.move[1]):
        return None
    target = ctx.move[1]
    axis = dimension - 1
    line = [
        (d, piece) for d, piece, coords in ctx.ranked_neighbours
        if all(c == t for i, (c, t) in enumerate(zip(coords, target)) if i != axis)
    ]
    if len(line) < k:
        return None
    return tuple(piece for _, piece in line[:k])


def observe_features(ctx: MoveContext, knearest_k: Sequence[int] = (2, 3)) -> list[Feature]:
    """
    Every feature instance the candidate move exhibits, with zero weight.

    :param ctx: Context with a spatial candidate; a non-spatial one yields nothing.
    :param knearest_k: K values instantiated for the k-nearest classes.
    :return: The observed features, ItemsetsOnly included.
    """
    if ctx.move is None:
        return []
    piece, coords = ctx.move
    board = ctx.board
    found: list[Feature] = [AbsMove(piece=piece, position=coords)]
    s = area_size(board.width)
    if board.in_bounds(coords):
        found.append(AbsMoveInArea(piece=piece, area_size=s, area=area_index(coords, board, s)))
        for dim in range(1, len(coords) + 1):
            for lower in (True, False):
                found.append(BorderDist(distance=border_distance(board, coords, dim, lower), lower=lower, dimension=dim))
    d = nearest_last_move_distance(ctx)
    if d is not None:
        found.append(Proximity(distance=d))
    for k in knearest_k:
        near = k_nearest(ctx, k)
        if near is not None:
            found.append(KNearest(k=k, pieces=near))
        for dim in range(1, len(coords) + 1):
            line = k_nearest_1d(ctx, k, dim)
            if line is not None:
                found.append(KNearest1D(k=k, dimension=dim, pieces=line))
    found.append(ItemsetsOnly())
    return found
