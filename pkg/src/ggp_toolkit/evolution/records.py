"""Game records: the XML trace of one finished match."""
from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass
from ggp_toolkit._compat import StrEnum
from pathlib import Path
from typing import Iterable

from loguru import logger

from ..errors import GgpError, RecordFormatError
from ..rules.kif import parse_term
from ..rules.terms import Term, to_kif


class Outcome(StrEnum):
    WIN = "win"
    LOSS = "loss"
    DRAW = "draw"


@dataclass(frozen=True)
class RecordState:
    number: int
    facts: tuple[Term, ...]
    # (role, move); empty for the final state
    moves: tuple[tuple[str, Term], ...] = ()

    def move_of(self, role: str) -> Term | None:
        for r, move in self.moves:
            if r == role:
                return move
        return None


@dataclass(frozen=True)
class GameRecord:
    match_id: str
    scores: tuple[tuple[str, int], ...]
    states: tuple[RecordState, ...]

    def __post_init__(self) -> None:
        if not self.states:
            raise RecordFormatError(f"match {self.match_id} has no states")

    @property
    def roles(self) -> tuple[str, ...]:
        return tuple(role for role, _ in self.scores)

    def score(self, role: str) -> int:
        return dict(self.scores)[role]

    def outcome(self, role: str) -> Outcome:
        """Win when strictly above every other role, loss when strictly below every other."""
        own = self.score(role)
        others = [s for r, s in self.scores if r != role]
        if not others:
            # single player: measured against the middle of the goal scale
            others = [50]
        if all(own > s for s in others):
            return Outcome.WIN
        if all(own < s for s in others):
            return Outcome.LOSS
        return Outcome.DRAW

    def previous_joint_move(self, index: int) -> tuple[Term, ...]:
        if index == 0:
            return ()
        return tuple(move for _, move in self.states[index - 1].moves)


# --- XML ---

def _text(parent: ET.Element, tag: str, where: str) -> str:
    child = parent.find(tag)
    if child is None or child.text is None:
        raise RecordFormatError(f"{where}: missing <{tag}>")
    return child.text.strip()


def _parse(text: str, where: str) -> Term:
    try:
        return parse_term(text)
    except GgpError as e:
        raise RecordFormatError(f"{where}: cannot parse '{text}': {e}") from e


def record_to_xml(record: GameRecord) -> ET.Element:
    root = ET.Element("Match", Id=record.match_id)
    for role, score in record.scores:
        player = ET.SubElement(root, "Player")
        ET.SubElement(player, "Role").text = role
        ET.SubElement(player, "Score").text = str(score)
    for state in record.states:
        elem = ET.SubElement(root, "State", Number=str(state.number))
        for fact in state.facts:
            ET.SubElement(elem, "Fact").text = to_kif(fact)
        for role, move in state.moves:
            move_elem = ET.SubElement(elem, "Move")
            ET.SubElement(move_elem, "Role").text = role
            ET.SubElement(move_elem, "MoveFact").text = to_kif(move)
    return root


def record_from_xml(root: ET.Element) -> GameRecord:
    if root.tag != "Match":
        raise RecordFormatError(f"expected <Match> root, found <{root.tag}>")
    match_id = root.get("Id")
    if match_id is None:
        raise RecordFormatError("<Match> without an Id attribute")

    scores = []
    for player in root.findall("Player"):
        role = _text(player, "Role", match_id)
        raw = _text(player, "Score", match_id)
        try:
            scores.append((role, int(float(raw))))
        except ValueError:
            raise RecordFormatError(f"{match_id}: malformed score '{raw}' for {role}") from None

    states = []
    for elem in root.findall("State"):
        where = f"{match_id} state {elem.get('Number')}"
        try:
            number = int(elem.get("Number", ""))
        except ValueError:
            raise RecordFormatError(f"{where}: malformed Number attribute") from None
        facts = tuple(_parse((f.text or "").strip(), where) for f in elem.findall("Fact"))
        moves = tuple(
            (_text(m, "Role", where), _parse(_text(m, "MoveFact", where), where)) for m in elem.findall("Move")
        )
        states.append(RecordState(number, facts, moves))
    if not states:
        raise RecordFormatError(f"match {match_id} has no states")
    states.sort(key=lambda s: s.number)
    return GameRecord(match_id, tuple(scores), tuple(states))


def dumps_record(record: GameRecord) -> str:
    root = record_to_xml(record)
    ET.indent(root, space="  ")
    return ET.tostring(root, encoding="unicode") + "\n"


def loads_record(text: str) -> GameRecord:
    try:
        return record_from_xml(ET.fromstring(text))
    except ET.ParseError as e:
        raise RecordFormatError(f"malformed record XML: {e}") from e


def save_record(record: GameRecord, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_record(record), encoding="utf-8")
    return path


def load_record(path: str | Path) -> GameRecord:
    path = Path(path)
    try:
        return loads_record(path.read_text(encoding="utf-8"))
    except RecordFormatError as e:
        logger.error(f"Failed to read record {path}: {e}")
        raise RecordFormatError(f"{path}: {e}") from e


def load_records(paths: Iterable[str | Path]) -> list[GameRecord]:
    """Loads record files; a directory contributes every *.xml below it, sorted."""
    files: list[Path] = []
    for p in map(Path, paths):
        files.extend(sorted(p.rglob("*.xml")) if p.is_dir() else [p])
    records = [load_record(f) for f in files]
    logger.info(f"    -> Loaded {len(records)} game records")
    return records
