"""Hypercubic lattice with free boundary conditions.

Public site coordinates run over 1..L in every direction, with x^0 the time
coordinate.  Bonds and plaquettes are enumerated site-major in lexicographic
coordinate order, then by direction (or plane).
"""
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, product
from math import comb

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

__all__ = [
    "LatticeSpec", "Bond", "Plaquette", "LatticeTables", "enumerate_bonds",
    "enumerate_plaquettes", "enhanced_temporal_tree", "retained_count",
    "retained_bonds", "tables", "is_spanning_tree", "n_sites", "bond_plaquette_counts",
    "n_bonds_formula", "n_plaquettes_formula",
]


@dataclass(frozen=True)
class LatticeSpec:
    d: int
    L: int
    a: float = 1.0

    def __post_init__(self):
        if self.d not in (2, 3, 4):
            raise ValueError(f"dimension must be 2, 3 or 4, got {self.d}")
        if int(self.L) != self.L or self.L < 2:
            raise ValueError(f"need L >= 2 sites per side, got {self.L}")
        if not 0.0 < self.a <= 1.0:
            raise ValueError(f"lattice spacing must lie in (0, 1], got {self.a}")
        object.__setattr__(self, "L", int(self.L))
        object.__setattr__(self, "a", float(self.a))


@dataclass(frozen=True, order=True)
class Bond:
    """Bond ``b_nu(x)`` from `base` to ``base + e^nu`` (1-based coordinates)."""

    base: tuple
    direction: int

    @property
    def end(self):
        return tuple(c + (i == self.direction) for i, c in enumerate(self.base))


@dataclass(frozen=True, order=True)
class Plaquette:
    """Unit square at `base` spanning directions ``mu < nu``."""

    base: tuple
    mu: int
    nu: int

    def bonds(self):
        """The four sides in path order: ``b_mu(x), b_nu(x+mu), b_mu(x+nu), b_nu(x)``.

        The holonomy is ``U1 U2 U3^-1 U4^-1`` over these bonds.
        """
        x, mu, nu = self.base, self.mu, self.nu
        x_mu = tuple(c + (i == mu) for i, c in enumerate(x))
        x_nu = tuple(c + (i == nu) for i, c in enumerate(x))
        return (Bond(x, mu), Bond(x_mu, nu), Bond(x_nu, mu), Bond(x, nu))


def n_sites(spec):
    return spec.L ** spec.d


def _sites(spec):
    return product(range(1, spec.L + 1), repeat=spec.d)


def enumerate_bonds(spec):
    """All ``d L^(d-1) (L-1)`` nearest-neighbour bonds."""
    return [Bond(x, nu) for x in _sites(spec) for nu in range(spec.d) if x[nu] < spec.L]


def enumerate_plaquettes(spec):
    """All ``C(d,2) L^(d-2) (L-1)^2`` plaquettes."""
    return [Plaquette(x, mu, nu)
            for x in _sites(spec)
            for mu, nu in combinations(range(spec.d), 2)
            if x[mu] < spec.L and x[nu] < spec.L]


def enhanced_temporal_tree(spec):
    """Bonds fixed to the identity by the enhanced temporal gauge.

    All temporal bonds, plus ``b_nu(x)`` for ``nu >= 1`` whenever every
    coordinate before ``nu`` equals 1 (the comb / scrub-brush construction).
    The result is a maximal tree with ``L^d - 1`` bonds.
    """
    return frozenset(b for b in enumerate_bonds(spec)
                     if all(c == 1 for c in b.base[:b.direction]))


def retained_count(spec):
    """Number of bonds surviving the enhanced temporal gauge, in closed form."""
    L = spec.L
    if spec.d == 2:
        return (L - 1) ** 2
    if spec.d == 3:
        return (2 * L + 1) * (L - 1) ** 2
    return (3 * L ** 3 - L ** 2 - L - 1) * (L - 1)


def retained_bonds(spec):
    tree = enhanced_temporal_tree(spec)
    return [b for b in enumerate_bonds(spec) if b not in tree]


def _site_index(spec, x):
    idx = 0
    for c in x:
        idx = idx * spec.L + (c - 1)
    return idx


@dataclass(frozen=True)
class LatticeTables:
    """Integer index tables used by the vectorised kernels."""

    bond_sites: np.ndarray        # (n_bonds, 2) start/end site indices
    plaquette_bonds: np.ndarray   # (n_plaquettes, 4) bond indices in path order
    tree_mask: np.ndarray         # (n_bonds,) True for gauge-fixed bonds
    bond_index: dict


@lru_cache(maxsize=64)
def tables(spec):
    bonds = enumerate_bonds(spec)
    index = {b: i for i, b in enumerate(bonds)}
    bond_sites = np.array([[_site_index(spec, b.base), _site_index(spec, b.end)] for b in bonds],
                          dtype=np.int64).reshape(-1, 2)
    plaq = np.array([[index[b] for b in p.bonds()] for p in enumerate_plaquettes(spec)],
                    dtype=np.int64).reshape(-1, 4)
    tree = enhanced_temporal_tree(spec)
    mask = np.array([b in tree for b in bonds])
    for arr in (bond_sites, plaq, mask):
        arr.setflags(write=False)
    return LatticeTables(bond_sites, plaq, mask, index)


def is_spanning_tree(spec, bonds):
    """True if `bonds` are ``L^d - 1`` bonds connecting every site."""
    bonds = list(bonds)
    nv = n_sites(spec)
    if len(bonds) != nv - 1:
        return False
    if nv == 1:
        return True
    ends = np.array([[_site_index(spec, b.base), _site_index(spec, b.end)] for b in bonds])
    graph = coo_matrix((np.ones(len(bonds)), (ends[:, 0], ends[:, 1])), shape=(nv, nv))
    n_comp, _ = connected_components(graph, directed=False)
    return n_comp == 1


def bond_plaquette_counts(spec):
    """How many plaquettes contain each bond (in `enumerate_bonds` order)."""
    t = tables(spec)
    return np.bincount(t.plaquette_bonds.ravel(), minlength=len(t.bond_index))


def n_bonds_formula(spec):
    return spec.d * spec.L ** (spec.d - 1) * (spec.L - 1)


def n_plaquettes_formula(spec):
    return comb(spec.d, 2) * spec.L ** (spec.d - 2) * (spec.L - 1) ** 2
