"""
The Euclidean board extension.

Five ground relations describe a hypercubical board and the meaning of the
arguments of board facts and moves:

    (boardboundaries 1 8)
    (boardfunctor cell)          ; boardrelation is accepted as a synonym
    (boardpattern dim dim piece)
    (playfunctor play)
    (playpattern piece skip skip dim dim)

A sheet without any of them simply has no board.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from ggp_toolkit._compat import StrEnum
from typing import TYPE_CHECKING, Iterable, Optional

from loguru import logger

from ..errors import BoardExtensionError
from .terms import Compound, Constant, Term, is_ground, to_kif

if TYPE_CHECKING:
    from .kif import RuleSheet

EXTENSION_RELATIONS = frozenset(
    {"boardboundaries", "boardfunctor", "boardrelation", "boardpattern", "playfunctor", "playpattern"}
)
REQUIRED_RELATIONS = ("boardboundaries", "boardfunctor/boardrelation", "boardpattern", "playfunctor", "playpattern")

REAL_NUMBER = re.compile(r"^[+-]?\d+(\.\d+)?$")

Coords = tuple[float, ...]


class Slot(StrEnum):
    PIECE = "piece"
    DIM = "dim"
    SKIP = "skip"


@dataclass(frozen=True, slots=True)
class BoardSpec:
    d_min: float
    d_max: float
    board_functor: str
    board_pattern: tuple[Slot, ...]
    play_functor: str
    play_pattern: tuple[Slot, ...]

    @property
    def n_dims(self) -> int:
        return sum(1 for s in self.board_pattern if s is Slot.DIM)

    @property
    def width(self) -> float:
        return abs(self.d_max - self.d_min)

    def in_bounds(self, coords: Coords) -> bool:
        return all(self.d_min <= r <= self.d_max for r in coords)

    def to_kif(self) -> list[str]:
        def num(x: float) -> str:
            return str(int(x)) if float(x).is_integer() else repr(x)

        return [
            f"(boardboundaries {num(self.d_min)} {num(self.d_max)})",
            f"(boardfunctor {self.board_functor})",
            "(boardpattern " + " ".join(self.board_pattern) + ")",
            f"(playfunctor {self.play_functor})",
            "(playpattern " + " ".join(self.play_pattern) + ")",
        ]


def parse_real(text: str) -> float:
    if not REAL_NUMBER.match(text):
        raise BoardExtensionError(f"'{text}' is not a real number")
    return float(text)


def _single(sentences: list[Compound], name: str) -> Compound:
    if len(sentences) != 1:
        raise BoardExtensionError(f"expected exactly one {name} sentence, found {len(sentences)}")
    return sentences[0]


def _symbol_args(sentence: Compound) -> list[str]:
    out = []
    for arg in sentence.args:
        if not isinstance(arg, Constant):
            raise BoardExtensionError(f"{to_kif(sentence)}: arguments must be constants")
        out.append(arg.symbol)
    return out


def _pattern(sentence: Compound) -> tuple[Slot, ...]:
    try:
        return tuple(Slot(s) for s in _symbol_args(sentence))
    except ValueError:
        raise BoardExtensionError(
            f"{to_kif(sentence)}: pattern symbols must be piece, dim or skip"
        ) from None


def parse_board_extension(sheet: RuleSheet) -> Optional[BoardSpec]:
    """
    Reads the board extension of a parsed sheet.

    :param sheet: The parsed rule sheet.
    :return: The BoardSpec, or None when the sheet carries no extension at all.
    """
    found: dict[str, list[Compound]] = {}
    for sentence in sheet.extension:
        if not isinstance(sentence, Compound) or not is_ground(sentence):
            raise BoardExtensionError(f"extension sentence {to_kif(sentence)} must be ground")
        name = "boardfunctor" if sentence.functor == "boardrelation" else sentence.functor
        found.setdefault(name, []).append(sentence)

    if not found:
        return None

    missing = [r for r in REQUIRED_RELATIONS if r.split("/")[0] not in found]
    if missing:
        logger.error(f"Board extension incomplete, missing: {', '.join(missing)}")
        raise BoardExtensionError(
            "board extension needs all of " + ", ".join(REQUIRED_RELATIONS) + f"; missing {', '.join(missing)}"
        )

    bounds = _single(found["boardboundaries"], "boardboundaries")
    if len(bounds.args) != 2:
        raise BoardExtensionError("boardboundaries takes two arguments")
    d_min, d_max = (parse_real(s) for s in _symbol_args(bounds))
    if d_min > d_max:
        raise BoardExtensionError(f"boardboundaries: d_min {d_min} > d_max {d_max}")

    board_functor = _symbol_args(_single(found["boardfunctor"], "boardfunctor"))
    play_functor = _symbol_args(_single(found["playfunctor"], "playfunctor"))
    if len(board_functor) != 1 or len(play_functor) != 1:
        raise BoardExtensionError("boardfunctor and playfunctor take one argument")

    board_pattern = _pattern(_single(found["boardpattern"], "boardpattern"))
    play_pattern = _pattern(_single(found["playpattern"], "playpattern"))

    n_dims = board_pattern.count(Slot.DIM)
    if board_pattern.count(Slot.PIECE) != 1 or n_dims < 1:
        raise BoardExtensionError("boardpattern needs exactly one piece and at least one dim")
    if play_pattern.count(Slot.PIECE) != 1 or play_pattern.count(Slot.DIM) != n_dims:
        raise BoardExtensionError(f"playpattern needs exactly one piece and {n_dims} dim entries")

    used = sheet.functors()
    for functor in (board_functor[0], play_functor[0]):
        if functor not in used:
            raise BoardExtensionError(f"pattern relation '{functor}' does not appear in the rule sheet")

    return BoardSpec(
        d_min=d_min,
        d_max=d_max,
        board_functor=board_functor[0],
        board_pattern=board_pattern,
        play_functor=play_functor[0],
        play_pattern=play_pattern,
    )


def _apply_pattern(pattern: tuple[Slot, ...], sentence: Compound) -> tuple[str, Coords]:
    piece = ""
    coords = []
    for slot, arg in zip(pattern, sentence.args):
        if slot is Slot.PIECE:
            piece = to_kif(arg)
        elif slot is Slot.DIM:
            if not isinstance(arg, Constant):
                raise BoardExtensionError(f"{to_kif(sentence)}: coordinate {to_kif(arg)} is not a number")
            coords.append(parse_real(arg.symbol))
    return piece, tuple(coords)


def extract_move_coords(spec: BoardSpec, move: Term) -> Optional[tuple[str, Coords]]:
    if not (
        isinstance(move, Compound)
        and move.functor == spec.play_functor
        and len(move.args) == len(spec.play_pattern)
    ):
        return None
    return _apply_pattern(spec.play_pattern, move)


def extract_board_pieces(spec: BoardSpec, state: Iterable[Term]) -> list[tuple[str, Coords]]:
    pieces = [
        _apply_pattern(spec.board_pattern, fact)
        for fact in state
        if isinstance(fact, Compound)
        and fact.functor == spec.board_functor
        and len(fact.args) == len(spec.board_pattern)
    ]
    pieces.sort(key=lambda p: (p[1], p[0]))
    return pieces
