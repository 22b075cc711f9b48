import numpy as np
import pytest
from hypothesis import given, strategies as st

from expert_lab.core import (ALPHA, THETA, ExpertSubset, all_subsets, as_state, comb_masks,
                             comb_subset, phi, rank_state, subset_matrix, theta_dot)
from expert_lab.errors import DomainError

finite = st.floats(-50, 50, allow_nan=False)


def test_alpha_theta_invariants():
    assert np.allclose(np.diag(ALPHA), 3 / np.sqrt(2))
    assert np.allclose(ALPHA[0, 1:], -1 / np.sqrt(2))
    assert np.allclose(ALPHA.sum(0), 0) and np.allclose(ALPHA.sum(1), 0)
    assert abs(THETA.sum()) < 1e-15


@pytest.mark.parametrize("x, srt, perm", [
    ((3, 1, 2, 0), (0, 1, 2, 3), (3, 1, 2, 0)),
    ((0, 0, 0, 0), (0, 0, 0, 0), (0, 1, 2, 3)),
    ((1, 1, 0, 1), (0, 1, 1, 1), (2, 0, 1, 3)),
])
def test_rank_state_examples(x, srt, perm):
    r = rank_state(x)
    assert tuple(r.sorted) == srt and tuple(r.perm) == perm


def test_rank_state_rejects_non_finite():
    with pytest.raises(DomainError):
        rank_state([0, np.nan, 1, 2])
    with pytest.raises(DomainError):
        as_state([0, 1, 2], 4)


@given(st.lists(finite, min_size=2, max_size=4))
def test_rank_state_properties(x):
    r = rank_state(x)
    assert np.array_equal(r.sorted, np.asarray(x)[list(r.perm)])
    assert np.all(np.diff(r.sorted) >= 0)
    again = rank_state(r.sorted)
    assert np.array_equal(again.sorted, r.sorted) and tuple(again.perm) == tuple(range(len(x)))


@pytest.mark.parametrize("x, expect", [
    ((3, 1, 2, 0), {1, 0}), ((0, 0, 0, 0), {1, 3}), ((0, 1, 2, 3), {1, 3}),
])
def test_comb_subset_examples(x, expect):
    assert set(comb_subset(x).indices) == expect


def test_comb_subset_three_experts_and_unsupported():
    assert set(comb_subset((0, 1, 2)).indices) == {0, 2}
    with pytest.raises(DomainError):
        comb_subset((0, 1))


@given(st.lists(finite, min_size=4, max_size=4))
def test_comb_masks_match_scalar(x):
    C = comb_masks(np.array([x]))[0]
    assert set(np.flatnonzero(C)) == set(comb_subset(x).indices)


@pytest.mark.parametrize("x, v", [((0, 0, 0, 0), 0.0), ((0, 0, 0, 1), -1 / np.sqrt(2)),
                                  ((1, 2, 3, 4), -4 / np.sqrt(2))])
def test_theta_dot(x, v):
    assert theta_dot(x) == pytest.approx(v, abs=1e-15)


def test_subsets():
    S = subset_matrix(4)
    assert S.shape == (16, 4)
    J = ExpertSubset.from_indices([0, 2], 4)
    assert J.mask == 5 and 2 in J and 1 not in J and len(J) == 2
    assert J.complement().indices == (1, 3)
    assert np.array_equal(J.indicator(), [1, 0, 1, 0])
    assert [s.mask for s in all_subsets(3)] == list(range(8))
    with pytest.raises(DomainError):
        ExpertSubset.from_indices([4], 4)
    assert phi([1, 5, -2]) == 5
