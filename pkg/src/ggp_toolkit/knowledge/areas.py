"""Square areas tiling a hypercubical board."""
from __future__ import annotations

import itertools
import math

import numpy as np

from ..rules.board import BoardSpec, Coords

AreaIndex = tuple[int, ...]


def area_size(d: float) -> int:
    """
    Side length of an area for a board spanning `d` = |d_max - d_min|.

    Gives 2 on an 8x8 board; never less than 1.
    """
    if d < 0:
        raise ValueError(f"board span must be >= 0, got {d}")
    return max(1, math.floor((d + 1) / (math.log2(d + 1) + 1)))


def area_index(coords: Coords, board: BoardSpec, size: int | None = None) -> AreaIndex:
    """
    Area containing `coords`: t_i = floor((r_i - d_min) / s).

    :param coords: Field coordinates.
    :param board: Board the coordinates live on.
    :param size: Area side, area_size(board.width) when omitted.
    :return: The area indices, one per dimension.
    """
    if not board.in_bounds(coords):
        raise ValueError(f"coordinates {coords} outside board [{board.d_min}, {board.d_max}]")
    s = area_size(board.width) if size is None else size
    return tuple(int(t) for t in np.floor((np.asarray(coords, dtype=float) - board.d_min) / s))


def area_bounds(index: AreaIndex, board: BoardSpec, size: int | None = None) -> list[tuple[float, float]]:
    """Per-dimension [low, high) bounds of an area."""
    s = area_size(board.width) if size is None else size
    return [(board.d_min + s * t, board.d_min + s * (t + 1)) for t in index]


def areas_per_dim(board: BoardSpec, size: int | None = None) -> int:
    s = area_size(board.width) if size is None else size
    return int(board.width // s) + 1


def all_areas(board: BoardSpec, size: int | None = None) -> list[AreaIndex]:
    n = areas_per_dim(board, size)
    return list(itertools.product(range(n), repeat=board.n_dims))


def board_points(board: BoardSpec) -> list[Coords]:
    """Integer points of the board, for boards with integer bounds."""
    axis = [float(r) for r in range(math.ceil(board.d_min), math.floor(board.d_max) + 1)]
    return list(itertools.product(axis, repeat=board.n_dims))
