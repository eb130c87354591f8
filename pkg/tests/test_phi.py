import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ggp_toolkit.mining.phi import ContingencyTable, phi, phi_vector


@pytest.mark.parametrize(
    "counts, expected",
    [((3, 1, 1, 3), 0.5), ((5, 0, 0, 5), 1.0), ((0, 5, 5, 0), -1.0), ((2, 2, 2, 2), 0.0)],
)
def test_phi_values(counts, expected):
    value, degenerate = phi(ContingencyTable(*counts))
    assert value == pytest.approx(expected)
    assert not degenerate


def test_zero_marginal_is_degenerate():
    assert phi(ContingencyTable(5, 5, 0, 0)) == (0.0, True)
    assert phi(ContingencyTable(0, 0, 0, 0)) == (0.0, True)


def test_negative_count():
    with pytest.raises(ValueError):
        ContingencyTable(1, -1, 0, 0)


def test_marginals():
    table = ContingencyTable(3, 1, 2, 4)
    assert table.row_sums == (4, 6)
    assert table.column_sums == (5, 5)
    assert table.total == 10


counts = st.integers(0, 30)


@given(counts, counts, counts, counts)
def test_swapping_outcomes_negates_phi(n00, n01, n10, n11):
    table = ContingencyTable(n00, n01, n10, n11)
    value, degenerate = phi(table)
    swapped, _ = phi(table.swapped())
    assert -1.0 <= value <= 1.0
    assert swapped == pytest.approx(-value, abs=1e-12)
    if degenerate:
        assert value == 0.0


@given(st.lists(st.tuples(counts, counts), min_size=1, max_size=10), counts, counts)
def test_vector_agrees_with_scalar(present, extra_win, extra_loss):
    n_win = max(w for w, _ in present) + extra_win
    n_loss = max(l for _, l in present) + extra_loss
    vector = phi_vector(np.array([w for w, _ in present]), np.array([l for _, l in present]), n_win, n_loss)
    for (w, l), v in zip(present, vector):
        expected, _ = phi(ContingencyTable(w, l, n_win - w, n_loss - l))
        assert v == pytest.approx(expected, abs=1e-9)
