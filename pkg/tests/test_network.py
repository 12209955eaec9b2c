import pytest
from hypothesis import given, settings, strategies as st

from patient_zero.analytic import rb_path_count_recurrence, RBTreeParams
from patient_zero.network import (BLUE, RED, NetworkParams, ParameterError, RBTree, dump_graph,
                                  generate_hnm, household_members, load_graph, rb_children, rb_paths)


def test_tiny_hnm_structure():
    for seed in range(20):
        g = generate_hnm(NetworkParams(4, 1, 1), seed)
        assert sorted(map(tuple, g.households.values())) == [(0, 1), (2, 3)]
        for v in g:
            mate = [u for u in g.household(v) if u != v]
            assert mate[0] in g.neighbors(v)
            assert len(set(g.neighbors(v)) - set(g.household(v))) <= 1


def test_divisibility_rejected():
    with pytest.raises(ParameterError):
        NetworkParams(400, 2, 3)
    NetworkParams(399, 2, 3)


def test_same_seed_same_graph():
    a = generate_hnm(NetworkParams(300, 2, 3), 11)
    b = generate_hnm(NetworkParams(300, 2, 3), 11)
    assert a.adjacency == b.adjacency
    assert a != generate_hnm(NetworkParams(300, 2, 3), 12)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(0, 3), st.integers(1, 40), st.integers(0, 2**31))
def test_hnm_invariants(d_c, d_h, households, seed):
    g = generate_hnm(NetworkParams(households * (d_h + 1), d_h, d_c), seed)
    for v in g:
        assert g.degree(v) <= d_c + d_h
        assert v not in g.neighbors(v)
        for u in g.neighbors(v):
            assert v in g.neighbors(u)
        for u in g.household(v):
            assert u == v or u in g.neighbors(v)


def test_discarded_fraction_small():
    g = generate_hnm(NetworkParams(300, 2, 3), 3)
    assert g.discarded_pairs / (300 * 3 / 2) < 0.05


def test_household_members_and_unknown_node():
    g = generate_hnm(NetworkParams(6, 0, 2), 1)
    assert household_members(g, 3) == (3,)
    with pytest.raises(KeyError):
        g.neighbors(6)


def test_dump_load_roundtrip():
    g = generate_hnm(NetworkParams(30, 2, 3), 5)
    assert load_graph(dump_graph(g)) == g


def test_rb_children_rules():
    tree = RBTree(3, 2)
    kids = rb_children((), tree)
    assert [k.color for k in kids] == [RED] * 3 + [BLUE] * 2
    red, blue = kids[0].address, kids[3].address
    assert [k.color for k in rb_children(red, tree)] == [RED] * 2 + [BLUE] * 2
    assert [k.color for k in rb_children(blue, tree)] == [RED] * 3
    assert RBTree(1, 0).children((0,)) == []


def test_rb_households():
    tree = RBTree(3, 2)
    blue = (3,)
    assert tree.household(blue) == [(), (3,), (4,)]
    assert tree.household((0,)) == [(0,), (0, 2), (0, 3)]
    assert RBTree(2, 0).household((1,)) == [(1,)]
    with pytest.raises(KeyError):
        tree.color((7,))


@pytest.mark.parametrize("d_c,d_h", [(3, 2), (1, 1), (2, 3), (4, 0)])
def test_rb_path_enumeration_matches_recurrence(d_c, d_h):
    tree = RBTree(d_c, d_h)
    for n in range(6):
        assert sum(1 for _ in rb_paths(tree, n)) == rb_path_count_recurrence(n, RBTreeParams(d_c, d_h))
