import numpy as np
import pytest

from rglasso.errors import BadPartition, InvalidTransition, ZeroSignEntry
from rglasso.groups import (ActiveSets, apply_action, build_sign_matrix, compute_sets, make_partition,
                            singleton_partition, with_group)


def test_partition_from_sizes():
    part = make_partition(10, [5, 5])
    assert part.groups == ((0, 1, 2, 3, 4), (5, 6, 7, 8, 9))
    assert part.n_groups == 2
    assert part.boundaries() == [1, 6]
    assert list(part.group_of) == [0] * 5 + [1] * 5


def test_reference_layout_twenty_groups():
    part = make_partition(100, [5] * 20)
    assert part.n_groups == 20
    assert all(len(g) == 5 for g in part.groups)
    assert part.boundaries()[:3] == [1, 6, 11]


def test_partition_one_based_groups():
    part = make_partition(4, groups=[[1, 3], [2, 4]], one_based=True)
    assert part.groups == ((0, 2), (1, 3))


@pytest.mark.parametrize("groups", [[[0, 1], [1, 2, 3]], [[0, 1], [3]], [[0, 1, 2, 3], []], [[0, 1, 2, 4]]])
def test_partition_rejects_bad_layouts(groups):
    with pytest.raises(BadPartition):
        make_partition(4, groups=groups)


def test_partition_rejects_bad_sizes():
    with pytest.raises(BadPartition):
        make_partition(4, [2, 3])
    with pytest.raises(BadPartition):
        make_partition(4, [4, 0])


def test_singletons():
    part = singleton_partition(3)
    assert part.groups == ((0,), (1,), (2,))


def test_compute_sets_example():
    part = make_partition(6, [3, 3])
    sets = compute_sets(np.array([2.0, -2.0, 1.0, 0, 0, 0]), part)
    assert sets.P == (0,)
    assert sets.A[0] == (0, 1)
    assert sets.B[0] == (2,)
    assert sets.Q == (1,)
    assert list(sets.C_idx) == [3, 4, 5]
    assert sets.order == 2


def test_compute_sets_zero_vector():
    sets = compute_sets(np.zeros(4), make_partition(4, [2, 2]))
    assert sets.P == () and sets.order == 0
    assert list(sets.C_idx) == [0, 1, 2, 3]


def test_derived_index_arrays():
    part = make_partition(7, [3, 2, 2])
    sets = compute_sets(np.array([1.0, 1.0, 0.5, 0, 0, -3, 2]), part)
    assert sets.P == (0, 2)
    assert list(sets.A_idx) == [0, 1, 5]
    assert list(sets.A_owner) == [0, 0, 1]
    assert list(sets.B_idx) == [2, 6]
    assert list(sets.B_owner) == [0, 1]
    assert list(sets.A_tied) == [0, 1]
    sets.check()


def test_sign_matrix():
    part = make_partition(4, [2, 2])
    w = np.array([3.0, -3.0, 0.0, 1.0])
    sets = compute_sets(w, part)
    S = build_sign_matrix(w, sets)
    np.testing.assert_array_equal(S.dense(sets), [[1, 0], [-1, 0], [0, 1]])


def test_sign_matrix_zero_entry_needs_hint():
    part = make_partition(2, [2])
    sets = ActiveSets(part, (0,), {0: (0, 1)}, {0: ()})
    with pytest.raises(ZeroSignEntry):
        build_sign_matrix(np.array([1.0, 0.0]), sets)
    S = build_sign_matrix(np.array([1.0, 0.0]), sets, hint=np.array([0.0, -2.0]))
    assert list(S.s) == [1, -1]


def test_actions_roundtrip():
    part = make_partition(6, [3, 3])
    sets = ActiveSets.empty(part)
    sets = apply_action(sets, 4, 1)
    assert sets.P == (1,) and sets.A[1] == (3, 4, 5)
    sets = apply_action(sets, 1, 4)
    assert sets.A[1] == (3, 5) and sets.B[1] == (4,)
    sets = apply_action(sets, 2, 4)
    assert sets.A[1] == (3, 4, 5) and sets.B[1] == ()
    sets = apply_action(sets, 3, 1)
    assert sets.P == ()


def test_action1_needs_tie():
    part = make_partition(3, [3])
    sets = with_group(apply_action(ActiveSets.empty(part), 4, 0), 0, [1], [0, 2])
    with pytest.raises(InvalidTransition):
        apply_action(sets, 1, 1)


@pytest.mark.parametrize("cond,target", [(1, 0), (2, 0), (3, 0), (5, 0), (1, 9)])
def test_illegal_transitions(cond, target):
    sets = ActiveSets.empty(make_partition(4, [2, 2]))
    with pytest.raises(InvalidTransition):
        apply_action(sets, cond, target)


def test_action4_on_active_group():
    sets = apply_action(ActiveSets.empty(make_partition(4, [2, 2])), 4, 0)
    with pytest.raises(InvalidTransition):
        apply_action(sets, 4, 0)


def test_with_group_validates():
    sets = apply_action(ActiveSets.empty(make_partition(4, [2, 2])), 4, 0)
    with pytest.raises(InvalidTransition):
        with_group(sets, 0, [], [0, 1])
    with pytest.raises(InvalidTransition):
        with_group(sets, 0, [0], [0, 1])
