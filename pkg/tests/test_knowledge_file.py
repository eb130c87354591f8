import pytest

from ggp_toolkit.errors import KnowledgeFormatError
from ggp_toolkit.knowledge.features import (
    AbsMoveInArea,
    AnyPieceInField,
    BorderDist,
    ItemsetsOnly,
    KNearest,
    KNearest1D,
    PieceInArea,
    Proximity,
)
from ggp_toolkit.knowledge.knowledge_file import (
    KnowledgeFile,
    RoleKnowledge,
    dumps_knowledge,
    load_knowledge,
    loads_knowledge,
    save_knowledge,
)
from ggp_toolkit.knowledge.parameters import CAMEL_TO_FIELD, KnowledgeParameters, camel_case, gene_bounds

EXCERPT = """<Knowledge>
   <Parameters>
      <MaxKnowledgeSize>50</MaxKnowledgeSize>
      <LearningFactor>0.5</LearningFactor>
   </Parameters>
   <Player role="black">
      <WinningFeatures>
         <FeatureRelEuclidKNearest weight="0.5">
            <K>3</K>
            <Pieces> redpiece redpiece redpiece </Pieces>
            <Itemset>
               <MetafactPieceInArea>
                  <AreaSize>2</AreaSize>
                  <AreaDimensions>7 1</AreaDimensions>
                  <Piece>blackpiece</Piece>
               </MetafactPieceInArea>
               <MetafactAnyPieceInField>
                  <Position>7 1</Position>
               </MetafactAnyPieceInField>
            </Itemset>
         </FeatureRelEuclidKNearest>
         <FeatureRelEuclidProximity weight="0.3">
            <Distance>1</Distance>
         </FeatureRelEuclidProximity>
         <FeatureAbsEuclidBorderDist weight="0.1">
            <Distance>0</Distance>
            <Lower>True</Lower>
            <Dimension>2</Dimension>
         </FeatureAbsEuclidBorderDist>
      </WinningFeatures>
      <LoosingFeatures />
   </Player>
</Knowledge>
"""


def test_excerpt_loads():
    knowledge = loads_knowledge(EXCERPT)
    winning = knowledge.role("black").winning
    assert winning[0] == KNearest(k=3, pieces=("redpiece", "redpiece", "redpiece"))
    assert winning[0].weight == 0.5
    [itemset] = winning[0].itemsets
    assert itemset == {PieceInArea(2, (7, 1), "blackpiece"), AnyPieceInField((7.0, 1.0))}
    assert winning[1] == Proximity(distance=1) and winning[1].weight == 0.3
    assert winning[2] == BorderDist(distance=0, lower=True, dimension=2)
    assert knowledge.role("black").losing == ()
    assert knowledge.role("red") == RoleKnowledge()


def test_save_is_idempotent():
    once = dumps_knowledge(loads_knowledge(EXCERPT))
    assert dumps_knowledge(loads_knowledge(once)) == once
    assert "<LoosingFeatures />" in once
    assert "LosingFeatures" not in once


def sample_knowledge() -> KnowledgeFile:
    params = KnowledgeParameters(max_knowledge_size=10, bias_weight=2.5, progressive_widening=True)
    itemset = frozenset({AnyPieceInField((1.0, 2.0)), PieceInArea(2, (0, 1), "x")})
    return KnowledgeFile(
        params,
        {
            "xplayer": RoleKnowledge(
                winning=(
                    KNearest1D(k=2, dimension=1, pieces=("o", "x"), weight=0.75),
                    AbsMoveInArea(piece="x", area_size=2, area=(1, 0), weight=0.2, itemsets=(itemset,)),
                ),
                losing=(ItemsetsOnly(weight=0.4, itemsets=(itemset,)),),
            ),
            "oplayer": RoleKnowledge(),
        },
    )


def test_save_and_load(tmp_path):
    knowledge = sample_knowledge()
    path = save_knowledge(knowledge, tmp_path / "sub" / "knowledge.xml")
    loaded = load_knowledge(path)
    assert loaded == knowledge
    for role in ("xplayer", "oplayer"):
        for mine, theirs in zip(knowledge.role(role).winning, loaded.role(role).winning):
            assert (mine.weight, mine.itemsets) == (theirs.weight, theirs.itemsets)
    assert loaded.parameters.bias_weight == 2.5
    assert loaded.feature_count() == 3


def test_unknown_feature_element():
    text = EXCERPT.replace("FeatureRelEuclidProximity", "FeatureFoo")
    with pytest.raises(KnowledgeFormatError, match="FeatureFoo"):
        loads_knowledge(text)


def test_missing_weight():
    with pytest.raises(KnowledgeFormatError, match="weight"):
        loads_knowledge(EXCERPT.replace('<FeatureRelEuclidProximity weight="0.3">', "<FeatureRelEuclidProximity>"))


@pytest.mark.parametrize(
    "old, new",
    [
        ("<Distance>1</Distance>", "<Distance>one</Distance>"),
        ("<K>3</K>", "<K>2.5</K>"),
        ("<K>3</K>", "<K>0</K>"),
        ("<Lower>True</Lower>", "<Lower>yes</Lower>"),
        ("<MaxKnowledgeSize>50</MaxKnowledgeSize>", "<MaxKnowledgeSize>0</MaxKnowledgeSize>"),
        ("<MaxKnowledgeSize>50</MaxKnowledgeSize>", "<MaxKnowledgeSize>2</MaxKnowledgeSize>"),
        ("<LearningFactor>0.5</LearningFactor>", "<Speed>0.5</Speed>"),
        ("</Knowledge>", "<Extra /></Knowledge>"),
        ("</Knowledge>", ""),
    ],
)
def test_malformed_knowledge(old, new):
    with pytest.raises(KnowledgeFormatError):
        loads_knowledge(EXCERPT.replace(old, new))


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_knowledge(tmp_path / "absent.xml")


def test_errors_name_the_file(tmp_path):
    path = tmp_path / "broken.xml"
    path.write_text(EXCERPT.replace("FeatureRelEuclidProximity", "FeatureFoo"), encoding="utf-8")
    with pytest.raises(KnowledgeFormatError, match="broken.xml"):
        load_knowledge(path)


def test_parameter_names():
    assert camel_case("max_knowledge_size") == "MaxKnowledgeSize"
    assert CAMEL_TO_FIELD["WeightKnearest1d"] == "weight_knearest_1d"
    kind, low, high = gene_bounds()["bias_weight"]
    assert (kind, low, high) == ("number", 0.0, 5.0)
    assert gene_bounds()["first_feature_scoring"][0] == "boolean"
