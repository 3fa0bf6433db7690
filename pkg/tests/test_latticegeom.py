import networkx as nx
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ymstab.latticegeom import (Bond, LatticeSpec, Plaquette, bond_plaquette_counts,
                                enhanced_temporal_tree, enumerate_bonds, enumerate_plaquettes,
                                is_spanning_tree, n_bonds_formula, n_plaquettes_formula,
                                retained_bonds, retained_count, tables)

SMALL = [(d, L) for d in (2, 3, 4) for L in (2, 3, 4) if L ** d <= 256]


def graph(spec, bonds):
    g = nx.Graph()
    g.add_nodes_from(range(spec.L ** spec.d))
    ends = tables(spec).bond_sites
    index = tables(spec).bond_index
    for b in bonds:
        i = index[b]
        g.add_edge(int(ends[i, 0]), int(ends[i, 1]))
    return g


@pytest.mark.parametrize("d,L,a", [(1, 2, 1.0), (5, 2, 1.0), (2, 1, 1.0), (2, 2, 0.0), (2, 2, 1.5)])
def test_spec_validation(d, L, a):
    with pytest.raises(ValueError):
        LatticeSpec(d, L, a)


@pytest.mark.parametrize("d,L", SMALL)
def test_counts(d, L):
    spec = LatticeSpec(d, L)
    assert len(enumerate_bonds(spec)) == n_bonds_formula(spec)
    assert len(enumerate_plaquettes(spec)) == n_plaquettes_formula(spec)


def test_d2_l2_tree_by_hand():
    spec = LatticeSpec(2, 2)
    assert enhanced_temporal_tree(spec) == {Bond((1, 1), 0), Bond((1, 2), 0), Bond((1, 1), 1)}
    assert retained_bonds(spec) == [Bond((2, 1), 1)]


def test_d3_l2_tree_contents():
    tree = enhanced_temporal_tree(LatticeSpec(3, 2))
    spatial = sorted(b for b in tree if b.direction > 0)
    assert spatial == [Bond((1, 1, 1), 1), Bond((1, 1, 1), 2), Bond((1, 1, 2), 1)]
    assert len(tree) == 7


@pytest.mark.parametrize("d,L", SMALL)
def test_tree_is_maximal_tree(d, L):
    spec = LatticeSpec(d, L)
    tree = enhanced_temporal_tree(spec)
    g = graph(spec, tree)
    assert nx.is_tree(g)
    assert is_spanning_tree(spec, tree)
    for b in retained_bonds(spec):
        assert not nx.is_forest(graph(spec, tree | {b}))


@pytest.mark.parametrize("d", [2, 3, 4])
@pytest.mark.parametrize("L", range(2, 9))
def test_retained_count_closed_forms(d, L):
    spec = LatticeSpec(d, L)
    assert retained_count(spec) == n_bonds_formula(spec) - (L ** d - 1)


def test_retained_examples():
    assert retained_count(LatticeSpec(2, 3)) == 4
    assert retained_count(LatticeSpec(3, 2)) == 5
    assert retained_count(LatticeSpec(4, 2)) == 17


def test_is_spanning_tree_rejects():
    spec = LatticeSpec(2, 3)
    tree = sorted(enhanced_temporal_tree(spec))
    assert not is_spanning_tree(spec, tree[:-1])
    cyc = tree[:-1] + [retained_bonds(spec)[0]]
    assert is_spanning_tree(spec, cyc) == nx.is_tree(graph(spec, cyc))


def test_plaquette_path_closes():
    p = Plaquette((1, 2, 1), 0, 2)
    b1, b2, b3, b4 = p.bonds()
    assert b1.end == b2.base and b3.end == b2.end and b4.end == b3.base and b4.base == b1.base


def test_plaquette_enumeration_order():
    ps = enumerate_plaquettes(LatticeSpec(3, 2))
    assert ps == sorted(ps)
    assert ps[0] == Plaquette((1, 1, 1), 0, 1)


@given(st.integers(2, 4), st.integers(2, 4))
def test_bond_plaquette_incidence(d, L):
    spec = LatticeSpec(d, L)
    counts = bond_plaquette_counts(spec)
    assert counts.sum() == 4 * n_plaquettes_formula(spec)
    assert counts.max() <= 2 * (d - 1)
    assert counts.min() >= 1


def test_tables_read_only():
    t = tables(LatticeSpec(2, 3))
    with pytest.raises(ValueError):
        t.plaquette_bonds[0, 0] = 1
