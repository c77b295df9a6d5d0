import pytest
from hypothesis import given
from hypothesis import strategies as st

from rcbar.tree import (MAX_GENERATION, LabelOverflowError, TreeShape, children,
                        generation_of, generation_range, parent, subtree_size)


def test_children():
    assert children(1) == (2, 3)
    assert children(5) == (10, 11)
    with pytest.raises(LabelOverflowError):
        children(2**62)


def test_parent():
    assert parent(7) == 3
    assert parent(10) == 5
    with pytest.raises(ValueError):
        parent(1)


@pytest.mark.parametrize("n,g", [(1, 0), (4, 2), (15, 3), (16, 4), (2**40, 40)])
def test_generation_of(n, g):
    assert generation_of(n) == g


def test_generation_range_and_size():
    assert generation_range(0) == (1, 1)
    assert subtree_size(0) == 1
    assert generation_range(3) == (8, 15)
    assert subtree_size(3) == 15
    assert subtree_size(13) == 16383 == 2**14 - 1


def test_generation_cap():
    subtree_size(MAX_GENERATION)
    with pytest.raises(LabelOverflowError):
        subtree_size(MAX_GENERATION + 1)
    with pytest.raises(LabelOverflowError):
        TreeShape(41)
    with pytest.raises(ValueError):
        generation_range(-1)


def test_bad_labels():
    with pytest.raises(ValueError):
        children(0)
    with pytest.raises(LabelOverflowError):
        generation_of(2**63)


@given(st.integers(min_value=1, max_value=2**61))
def test_parent_inverts_children(n):
    left, right = children(n)
    assert parent(left) == n and parent(right) == n
    assert generation_of(left) == generation_of(right) == generation_of(n) + 1


@given(st.integers(min_value=0, max_value=12))
def test_generations_partition_subtree(g):
    labels = []
    for h in range(g + 1):
        lo, hi = generation_range(h)
        assert generation_of(lo) == generation_of(hi) == h
        labels.extend(range(lo, hi + 1))
    assert labels == list(range(1, subtree_size(g) + 1))


def test_tree_shape_slices():
    shape = TreeShape(3)
    assert shape.size == 15
    assert shape.generation_slice(2) == slice(3, 7)
    assert shape.generation_size(3) == 8
