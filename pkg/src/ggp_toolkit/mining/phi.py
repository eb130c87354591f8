"""Phi correlation between feature presence and winning/losing states."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ContingencyTable:
    """
    2x2 counts. Rows: feature present (0) / absent (1).
    Columns: winning state (0) / losing state (1).
    """

    n00: int
    n01: int
    n10: int
    n11: int

    def __post_init__(self) -> None:
        if min(self.n00, self.n01, self.n10, self.n11) < 0:
            raise ValueError(f"negative count in {self}")

    @property
    def row_sums(self) -> tuple[int, int]:
        return self.n00 + self.n01, self.n10 + self.n11

    @property
    def column_sums(self) -> tuple[int, int]:
        return self.n00 + self.n10, self.n01 + self.n11

    @property
    def total(self) -> int:
        return self.n00 + self.n01 + self.n10 + self.n11

    def swapped(self) -> "ContingencyTable":
        """Same table with winning and losing exchanged."""
        return ContingencyTable(self.n01, self.n00, self.n11, self.n10)


def phi(table: ContingencyTable) -> tuple[float, bool]:
    """
    (n00*n11 - n01*n10) / sqrt(n0* * n1* * n*0 * n*1).

    :return: (phi, degenerate); a zero marginal gives (0.0, True).
    """
    r0, r1 = table.row_sums
    c0, c1 = table.column_sums
    denominator = r0 * r1 * c0 * c1
    if denominator == 0:
        return 0.0, True
    value = (table.n00 * table.n11 - table.n01 * table.n10) / math.sqrt(denominator)
    return max(-1.0, min(1.0, value)), False


def phi_vector(present_win: np.ndarray, present_loss: np.ndarray, n_win: int, n_loss: int) -> np.ndarray:
    """
    Phi for many features at once from their presence counts in winning and
    losing states; degenerate tables give 0.
    """
    n00 = np.asarray(present_win, dtype=float)
    n01 = np.asarray(present_loss, dtype=float)
    n10 = n_win - n00
    n11 = n_loss - n01
    denominator = (n00 + n01) * (n10 + n11) * float(n_win) * float(n_loss)
    with np.errstate(divide="ignore", invalid="ignore"):
        values = (n00 * n11 - n01 * n10) / np.sqrt(denominator)
    return np.clip(np.where(denominator > 0, values, 0.0), -1.0, 1.0)
