"""
Knowledge XML: parameters plus per-role winning and losing feature lists.

    <Knowledge>
       <Parameters> <MaxKnowledgeSize>50</MaxKnowledgeSize> ... </Parameters>
       <Player role="red">
          <WinningFeatures> ... </WinningFeatures>
          <LoosingFeatures> ... </LoosingFeatures>
       </Player>
    </Knowledge>
"""
from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional

from loguru import logger
from pydantic import ValidationError

from ..errors import KnowledgeFormatError
from .features import (
    AbsMove,
    AbsMoveInArea,
    FEATURE_TYPES,
    AnyPieceInField,
    BorderDist,
    Feature,
    FeatureClass,
    Itemset,
    KNearest,
    KNearest1D,
    MetaFact,
    PieceInArea,
    Proximity,
    metafact_sort_key,
)
from .parameters import CAMEL_TO_FIELD, KnowledgeParameters, camel_case, gene_bounds

LOSING_LIST = "LoosingFeatures"
WINNING_LIST = "WinningFeatures"

ELEMENT_NAMES: dict[FeatureClass, str] = {
    FeatureClass.PROXIMITY: "FeatureRelEuclidProximity",
    FeatureClass.BORDER_DIST: "FeatureAbsEuclidBorderDist",
    FeatureClass.ABS_MOVE: "FeatureAbsEuclidMove",
    FeatureClass.ABS_MOVE_IN_AREA: "FeatureAbsEuclidMoveInArea",
    FeatureClass.KNEAREST: "FeatureRelEuclidKNearest",
    FeatureClass.KNEAREST_1D: "FeatureRelEuclidKNearest1D",
    FeatureClass.ITEMSETS_ONLY: "FeatureItemsetsOnly",
}
ELEMENT_CLASSES = {name: kind for kind, name in ELEMENT_NAMES.items()}


@dataclass(frozen=True)
class RoleKnowledge:
    winning: tuple[Feature, ...] = ()
    losing: tuple[Feature, ...] = ()


@dataclass(frozen=True)
class KnowledgeFile:
    parameters: KnowledgeParameters = field(default_factory=KnowledgeParameters)
    players: dict[str, RoleKnowledge] = field(default_factory=dict)

    def __post_init__(self) -> None:
        limit = self.parameters.max_knowledge_size
        for role, lists in self.players.items():
            for name, features in ((WINNING_LIST, lists.winning), (LOSING_LIST, lists.losing)):
                if len(features) > limit:
                    raise KnowledgeFormatError(
                        f"{role}: {name} holds {len(features)} features, max knowledge size is {limit}"
                    )

    def role(self, role: str) -> RoleKnowledge:
        return self.players.get(role, RoleKnowledge())

    def feature_count(self) -> int:
        return sum(len(r.winning) + len(r.losing) for r in self.players.values())


# --- Value formatting ---

def format_number(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def format_coords(coords: Iterable[float]) -> str:
    return " ".join(format_number(c) for c in coords)


def format_bool(value: bool) -> str:
    return "True" if value else "False"


def parse_bool(text: str, where: str) -> bool:
    value = text.strip().lower()
    if value not in ("true", "false"):
        raise KnowledgeFormatError(f"{where}: '{text}' is not True/False")
    return value == "true"


def parse_float(text: str, where: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise KnowledgeFormatError(f"{where}: malformed number '{text}'") from None


def parse_int(text: str, where: str) -> int:
    value = parse_float(text, where)
    if not value.is_integer():
        raise KnowledgeFormatError(f"{where}: '{text}' is not an integer")
    return int(value)


def parse_coords(text: str, where: str) -> tuple[float, ...]:
    return tuple(parse_float(t, where) for t in text.split())


def _child_text(elem: ET.Element, tag: str) -> str:
    child = elem.find(tag)
    if child is None or child.text is None:
        raise KnowledgeFormatError(f"<{elem.tag}> is missing <{tag}>")
    return child.text.strip()


def _sub(parent: ET.Element, tag: str, text: str) -> ET.Element:
    child = ET.SubElement(parent, tag)
    child.text = text
    return child


# --- Meta facts and itemsets ---

def metafact_to_xml(fact: MetaFact, parent: ET.Element) -> None:
    if isinstance(fact, AnyPieceInField):
        elem = ET.SubElement(parent, "MetafactAnyPieceInField")
        _sub(elem, "Position", format_coords(fact.position))
    else:
        elem = ET.SubElement(parent, "MetafactPieceInArea")
        _sub(elem, "AreaSize", str(fact.area_size))
        _sub(elem, "AreaDimensions", " ".join(str(t) for t in fact.area))
        _sub(elem, "Piece", fact.piece)


def metafact_from_xml(elem: ET.Element) -> MetaFact:
    if elem.tag == "MetafactAnyPieceInField":
        return AnyPieceInField(parse_coords(_child_text(elem, "Position"), elem.tag))
    if elem.tag == "MetafactPieceInArea":
        return PieceInArea(
            area_size=parse_int(_child_text(elem, "AreaSize"), elem.tag),
            area=tuple(parse_int(t, elem.tag) for t in _child_text(elem, "AreaDimensions").split()),
            piece=_child_text(elem, "Piece"),
        )
    raise KnowledgeFormatError(f"unknown meta fact element <{elem.tag}>")


def itemset_from_xml(elem: ET.Element) -> Itemset:
    return frozenset(metafact_from_xml(child) for child in elem)


# --- Features ---

def _feature_fields(feature: Feature) -> list[tuple[str, str]]:
    match feature:
        case Proximity():
            return [("Distance", str(feature.distance))]
        case BorderDist():
            return [
                ("Distance", str(feature.distance)),
                ("Lower", format_bool(feature.lower)),
                ("Dimension", str(feature.dimension)),
            ]
        case AbsMove():
            return [("Piece", feature.piece), ("Position", format_coords(feature.position))]
        case AbsMoveInArea():
            return [
                ("Piece", feature.piece),
                ("AreaSize", str(feature.area_size)),
                ("AreaDimensions", " ".join(str(t) for t in feature.area)),
            ]
        case KNearest():
            return [("K", str(feature.k)), ("Pieces", " ".join(feature.pieces))]
        case KNearest1D():
            return [
                ("K", str(feature.k)),
                ("Dimension", str(feature.dimension)),
                ("Pieces", " ".join(feature.pieces)),
            ]
    return []


def feature_to_xml(feature: Feature, parent: ET.Element) -> ET.Element:
    elem = ET.SubElement(parent, ELEMENT_NAMES[feature.kind], weight=repr(float(feature.weight)))
    for tag, text in _feature_fields(feature):
        _sub(elem, tag, text)
    for itemset in feature.itemsets:
        item_elem = ET.SubElement(elem, "Itemset")
        for fact in sorted(itemset, key=metafact_sort_key):
            metafact_to_xml(fact, item_elem)
    return elem


def _pieces(text: str) -> tuple[str, ...]:
    return tuple(text.split())


_READERS: dict[FeatureClass, Callable[[ET.Element, str], dict]] = {
    FeatureClass.PROXIMITY: lambda e, w: {"distance": parse_int(_child_text(e, "Distance"), w)},
    FeatureClass.BORDER_DIST: lambda e, w: {
        "distance": parse_int(_child_text(e, "Distance"), w),
        "lower": parse_bool(_child_text(e, "Lower"), w),
        "dimension": parse_int(_child_text(e, "Dimension"), w),
    },
    FeatureClass.ABS_MOVE: lambda e, w: {
        "piece": _child_text(e, "Piece"),
        "position": parse_coords(_child_text(e, "Position"), w),
    },
    FeatureClass.ABS_MOVE_IN_AREA: lambda e, w: {
        "piece": _child_text(e, "Piece"),
        "area_size": parse_int(_child_text(e, "AreaSize"), w),
        "area": tuple(parse_int(t, w) for t in _child_text(e, "AreaDimensions").split()),
    },
    FeatureClass.KNEAREST: lambda e, w: {
        "k": parse_int(_child_text(e, "K"), w),
        "pieces": _pieces(_child_text(e, "Pieces")),
    },
    FeatureClass.KNEAREST_1D: lambda e, w: {
        "k": parse_int(_child_text(e, "K"), w),
        "dimension": parse_int(_child_text(e, "Dimension"), w),
        "pieces": _pieces(_child_text(e, "Pieces")),
    },
    FeatureClass.ITEMSETS_ONLY: lambda e, w: {},
}


def feature_from_xml(elem: ET.Element) -> Feature:
    kind = ELEMENT_CLASSES.get(elem.tag)
    if kind is None:
        logger.error(f"Unknown feature element <{elem.tag}>")
        raise KnowledgeFormatError(f"unknown feature element <{elem.tag}>")
    raw_weight = elem.get("weight")
    if raw_weight is None:
        raise KnowledgeFormatError(f"<{elem.tag}> is missing the weight attribute")
    weight = parse_float(raw_weight, f"<{elem.tag}> weight")
    params = _READERS[kind](elem, f"<{elem.tag}>")
    itemsets = tuple(itemset_from_xml(child) for child in elem.findall("Itemset"))
    feature = FEATURE_TYPES[kind](**params, weight=weight, itemsets=itemsets)
    if (isinstance(feature, (KNearest, KNearest1D)) and feature.k < 1) or getattr(feature, "dimension", 1) < 1:
        raise KnowledgeFormatError(f"<{elem.tag}>: K and Dimension must be >= 1")
    if getattr(feature, "distance", 0) < 0:
        raise KnowledgeFormatError(f"<{elem.tag}>: Distance must be >= 0")
    return feature


# --- Parameters ---

def parameters_to_xml(params: KnowledgeParameters, parent: ET.Element) -> None:
    elem = ET.SubElement(parent, "Parameters")
    for name, value in params.model_dump().items():
        if isinstance(value, bool):
            text = format_bool(value)
        elif isinstance(value, int):
            text = str(value)
        else:
            text = repr(float(value))
        _sub(elem, camel_case(name), text)


def parameters_from_xml(elem: Optional[ET.Element]) -> KnowledgeParameters:
    if elem is None:
        return KnowledgeParameters()
    types = gene_bounds()
    values: dict[str, object] = {}
    for child in elem:
        name = CAMEL_TO_FIELD.get(child.tag)
        if name is None:
            raise KnowledgeFormatError(f"unknown parameter element <{child.tag}>")
        text = (child.text or "").strip()
        kind = types[name][0]
        if kind == "boolean":
            values[name] = parse_bool(text, child.tag)
        elif kind == "integer":
            values[name] = parse_int(text, child.tag)
        else:
            values[name] = parse_float(text, child.tag)
    try:
        return KnowledgeParameters(**values)
    except ValidationError as e:
        raise KnowledgeFormatError(f"parameters out of bounds: {e}") from e


# --- Files ---

def knowledge_to_xml(knowledge: KnowledgeFile) -> ET.Element:
    root = ET.Element("Knowledge")
    parameters_to_xml(knowledge.parameters, root)
    for role, lists in knowledge.players.items():
        player = ET.SubElement(root, "Player", role=role)
        for tag, features in ((WINNING_LIST, lists.winning), (LOSING_LIST, lists.losing)):
            list_elem = ET.SubElement(player, tag)
            for feature in features:
                feature_to_xml(feature, list_elem)
    return root


def knowledge_from_xml(root: ET.Element) -> KnowledgeFile:
    if root.tag != "Knowledge":
        raise KnowledgeFormatError(f"expected <Knowledge> root, found <{root.tag}>")
    params = parameters_from_xml(root.find("Parameters"))
    players: dict[str, RoleKnowledge] = {}
    for player in root.findall("Player"):
        role = player.get("role")
        if role is None:
            raise KnowledgeFormatError("<Player> without a role attribute")
        lists = {}
        for tag in (WINNING_LIST, LOSING_LIST):
            list_elem = player.find(tag)
            lists[tag] = tuple(feature_from_xml(e) for e in list_elem) if list_elem is not None else ()
        players[role] = RoleKnowledge(lists[WINNING_LIST], lists[LOSING_LIST])
    for child in root:
        if child.tag not in ("Parameters", "Player"):
            raise KnowledgeFormatError(f"unknown element <{child.tag}> in <Knowledge>")
    return KnowledgeFile(params, players)


def dumps_knowledge(knowledge: KnowledgeFile) -> str:
    root = knowledge_to_xml(knowledge)
    ET.indent(root, space="   ")
    return ET.tostring(root, encoding="unicode") + "\n"


def loads_knowledge(text: str) -> KnowledgeFile:
    try:
        root = ET.fromstring(text)
    except ET.ParseError as e:
        raise KnowledgeFormatError(f"malformed knowledge XML: {e}") from e
    return knowledge_from_xml(root)


def save_knowledge(knowledge: KnowledgeFile, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_knowledge(knowledge), encoding="utf-8")
    logger.debug(f"Wrote knowledge ({knowledge.feature_count()} features) to {path}")
    return path


def load_knowledge(path: str | Path) -> KnowledgeFile:
    """
    Reads a knowledge XML file.

    :param path: File to read.
    :return: The KnowledgeFile.
    """
    path = Path(path)
    if not path.is_file():
        logger.error(f"Knowledge file {path} not found.")
        raise FileNotFoundError(f"knowledge file {path} not found")
    try:
        return loads_knowledge(path.read_text(encoding="utf-8"))
    except KnowledgeFormatError as e:
        logger.error(f"Failed to read {path}: {e}")
        raise KnowledgeFormatError(f"{path}: {e}") from e
