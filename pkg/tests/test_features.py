from hypothesis import given
from hypothesis import strategies as st

from ggp_toolkit.knowledge.features import (
    AbsMove,
    AbsMoveInArea,
    AnyPieceInField,
    BorderDist,
    FeatureClass,
    ItemsetsOnly,
    KNearest,
    KNearest1D,
    MoveContext,
    PieceInArea,
    Proximity,
    eval_metafact,
    metafact_vector,
    move_context,
    observe_features,
    sort_features,
    state_metafacts,
)
from ggp_toolkit.rules.kif import parse_term

PIECES = (("o", (2.0, 5.0)), ("o", (3.0, 4.0)), ("x", (1.0, 1.0)), ("x", (3.0, 6.0)))


def ctx_at(board, coords, piece="x", last=((3.0, 3.0),)):
    return MoveContext(board, PIECES, last, (piece, coords))


def test_proximity(board8):
    ctx = ctx_at(board8, (3.0, 5.0))
    assert Proximity(distance=2).matches(ctx)
    assert not Proximity(distance=1).matches(ctx)
    assert not Proximity(distance=2).matches(ctx_at(board8, (3.0, 5.0), last=()))


def test_proximity_floors_the_distance(board8):
    # sqrt(1 + 4) = 2.24
    assert Proximity(distance=2).matches(ctx_at(board8, (4.0, 5.0)))


def test_border_distance(board8):
    ctx = ctx_at(board8, (2.0, 8.0))
    assert BorderDist(distance=1, lower=True, dimension=1).matches(ctx)
    assert BorderDist(distance=0, lower=False, dimension=2).matches(ctx)
    assert not BorderDist(distance=0, lower=True, dimension=2).matches(ctx)
    assert not BorderDist(distance=0, lower=True, dimension=3).matches(ctx)


def test_absolute_moves(board8):
    ctx = ctx_at(board8, (3.0, 5.0))
    assert AbsMove(piece="x", position=(3.0, 5.0)).matches(ctx)
    assert not AbsMove(piece="o", position=(3.0, 5.0)).matches(ctx)
    assert AbsMoveInArea(piece="x", area_size=2, area=(1, 2)).matches(ctx)
    assert not AbsMoveInArea(piece="x", area_size=2, area=(1, 1)).matches(ctx)


def test_knearest_excludes_the_target_field(board8):
    # (3,5): neighbours (3,4) o and (3,6) x at 1, (2,5) o at 1
    ctx = ctx_at(board8, (3.0, 5.0))
    assert KNearest(k=3, pieces=("o", "o", "x")).matches(ctx)
    on_piece = ctx_at(board8, (3.0, 4.0))
    assert all(coords != (3.0, 4.0) for _, _, coords in on_piece.ranked_neighbours)


def test_knearest_needs_k_pieces(board8):
    ctx = MoveContext(board8, (("o", (1.0, 1.0)),), (), ("x", (4.0, 4.0)))
    assert not KNearest(k=2, pieces=("o", "o")).matches(ctx)


def test_knearest_1d(board8):
    ctx = ctx_at(board8, (3.0, 5.0))
    # along dimension 2 only (3,4) and (3,6) share the first coordinate; tie broken by piece
    assert KNearest1D(k=2, dimension=2, pieces=("o", "x")).matches(ctx)
    assert KNearest1D(k=1, dimension=1, pieces=("o",)).matches(ctx)


def test_non_spatial_move_matches_nothing(board8):
    ctx = MoveContext(board8, PIECES, (), None)
    assert not ItemsetsOnly().matches(ctx)
    assert observe_features(ctx) == []


def test_itemset_gating(board8):
    ctx = ctx_at(board8, (3.0, 5.0))
    present = frozenset({AnyPieceInField((1.0, 1.0)), PieceInArea(2, (0, 0), "x")})
    absent = frozenset({AnyPieceInField((8.0, 8.0))})
    gated = Proximity(distance=2, itemsets=(absent,))
    assert not gated.matches(ctx)
    assert gated.matches(ctx, use_itemsets=False)
    assert Proximity(distance=2, itemsets=(absent, present)).matches(ctx)


def test_state_metafacts(board8):
    facts = state_metafacts(PIECES, board8)
    assert AnyPieceInField((2.0, 5.0)) in facts
    assert PieceInArea(2, (1, 2), "x") in facts
    assert PieceInArea(2, (1, 1), "o") in facts
    assert PieceInArea(2, (1, 2), "o") not in facts
    assert len([f for f in facts if isinstance(f, AnyPieceInField)]) == 4
    group = [AnyPieceInField((1.0, 1.0)), AnyPieceInField((8.0, 8.0))]
    assert metafact_vector(group, PIECES, board8).tolist() == [True, False]
    # area facts of a size other than the board default
    assert eval_metafact(PieceInArea(4, (0, 1), "o"), PIECES, board8)
    assert not eval_metafact(PieceInArea(4, (1, 1), "o"), PIECES, board8)
    assert metafact_vector([PieceInArea(4, (0, 0), "x")], PIECES, board8).tolist() == [True]


def test_off_board_pieces_have_no_area(board8):
    pieces = (*PIECES, ("x", (9.0, 0.0)))
    facts = state_metafacts(pieces, board8)
    assert AnyPieceInField((9.0, 0.0)) in facts
    areas = {f for f in facts if isinstance(f, PieceInArea)}
    assert areas == {f for f in state_metafacts(PIECES, board8) if isinstance(f, PieceInArea)}
    assert not eval_metafact(PieceInArea(2, (4, 0), "x"), pieces, board8)
    assert MoveContext(board8, pieces, (), ("x", (3.0, 5.0))).basket == facts


def test_move_context_from_terms(board8):
    state = [parse_term("(cell 1 1 x)"), parse_term("(control white)")]
    ctx = move_context(board8, state, [parse_term("(play 2 2 x)"), parse_term("noop")], parse_term("(play 3 3 x)"))
    assert ctx.pieces == (("x", (1.0, 1.0)),)
    assert ctx.last_moves == ((2.0, 2.0),)
    assert ctx.move == ("x", (3.0, 3.0))


def test_observe_features(board8):
    found = observe_features(ctx_at(board8, (3.0, 5.0)), knearest_k=(2,))
    kinds = {f.kind for f in found}
    assert kinds == set(FeatureClass)
    assert AbsMove(piece="x", position=(3.0, 5.0)) in found
    assert Proximity(distance=2) in found
    assert BorderDist(distance=3, lower=False, dimension=2) in found
    assert all(f.weight == 0.0 for f in found)


def test_identity_ignores_weight_and_itemsets():
    a = Proximity(distance=1, weight=0.3)
    b = Proximity(distance=1, weight=0.9, itemsets=(frozenset({AnyPieceInField((1.0,))}),))
    assert a == b and hash(a) == hash(b)


def test_sort_features():
    features = [
        Proximity(distance=1, weight=0.2),
        AbsMove(piece="x", position=(1.0, 1.0), weight=0.5),
        Proximity(distance=0, weight=0.5),
    ]
    assert sort_features(features) == [features[2], features[1], features[0]]


coords = st.tuples(st.integers(1, 8), st.integers(1, 8)).map(lambda c: (float(c[0]), float(c[1])))
pieces = st.lists(st.tuples(st.sampled_from(["x", "o"]), coords), max_size=10, unique_by=lambda p: p[1])


@given(pieces, coords, st.lists(coords, max_size=2))
def test_matching_is_deterministic(board8, board_pieces, target, last):
    ctx = MoveContext(board8, tuple(board_pieces), tuple(last), ("x", target))
    again = MoveContext(board8, tuple(board_pieces), tuple(last), ("x", target))
    first = observe_features(ctx)
    assert first == observe_features(again)
    assert all(f.matches(again) for f in first)
