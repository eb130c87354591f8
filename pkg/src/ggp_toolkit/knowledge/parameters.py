"""Knowledge parameters: the genes of an evolved agent, with their bounds."""
from __future__ import annotations

from typing import Any

from pydantic import BaseModel, ConfigDict, Field

from .features import FeatureClass


def _weight(default: float = 1.0) -> Any:
    return Field(default=default, ge=0.0, le=2.0)


class KnowledgeParameters(BaseModel):
    """
    Every field is a gene. Numeric genes carry their bounds in the Field
    (ge/le), which mutation and random initialization read back from the
    JSON schema.
    """

    model_config = ConfigDict(frozen=True)

    max_knowledge_size: int = Field(default=50, ge=1, le=200)

    weight_proximity: float = _weight()
    weight_border_dist: float = _weight()
    weight_abs_move: float = _weight()
    weight_abs_move_in_area: float = _weight()
    weight_knearest: float = _weight()
    weight_knearest_1d: float = _weight()
    weight_itemsets_only: float = _weight()

    learning_factor: float = Field(default=0.5, ge=0.0, le=1.0)
    winning_weight: float = _weight()
    losing_weight: float = _weight()
    base_value: float = Field(default=1.0, ge=0.1, le=5.0)
    # impact of knowledge on selection (progressive bias) and simulation
    bias_weight: float = Field(default=1.0, ge=0.0, le=5.0)
    simulation_weight: float = Field(default=1.0, ge=0.0, le=1.0)

    widening_coefficient: float = Field(default=1.0, ge=0.5, le=4.0)
    widening_exponent: float = Field(default=0.5, ge=0.1, le=1.0)

    use_proximity: bool = True
    use_border_dist: bool = True
    use_abs_move: bool = True
    use_abs_move_in_area: bool = True
    use_knearest: bool = True
    use_knearest_1d: bool = True
    use_itemsets_only: bool = True

    itemsets_proximity: bool = True
    itemsets_border_dist: bool = True
    itemsets_abs_move: bool = True
    itemsets_abs_move_in_area: bool = True
    itemsets_knearest: bool = True
    itemsets_knearest_1d: bool = True
    itemsets_itemsets_only: bool = True

    use_itemsets_in_selection: bool = True
    use_itemsets_in_simulation: bool = True
    progressive_widening: bool = False
    first_feature_scoring: bool = False
    use_in_selection: bool = True

    def class_weight(self, kind: FeatureClass) -> float:
        return getattr(self, f"weight_{kind.value}")

    def class_enabled(self, kind: FeatureClass) -> bool:
        return getattr(self, f"use_{kind.value}")

    def class_itemsets(self, kind: FeatureClass) -> bool:
        return getattr(self, f"itemsets_{kind.value}")


def gene_bounds() -> dict[str, tuple[str, float | None, float | None]]:
    """
    Gene table read from the model schema.

    :return: name -> (json type, minimum, maximum); booleans have no bounds.
    """
    schema = KnowledgeParameters.model_json_schema()["properties"]
    return {
        name: (prop["type"], prop.get("minimum"), prop.get("maximum"))
        for name, prop in schema.items()
    }


def camel_case(name: str) -> str:
    return "".join(part.capitalize() for part in name.split("_"))


CAMEL_TO_FIELD = {camel_case(name): name for name in KnowledgeParameters.model_fields}
