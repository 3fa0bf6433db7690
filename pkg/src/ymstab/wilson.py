"""Wilson partition function on a free-boundary lattice.

``Z = int exp(-c sum_p A_p) prod_b dsigma(g_b)`` with ``c = a^(d-4) / g^2``
and ``A_p = ||1 - U_p||^2_HS``.  The Monte Carlo estimators average the
integrand over independent Haar draws of every (or every retained) bond.
"""
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .grouplib import GroupKind, check_unitary, haar_sample, hs_norm
from .latticegeom import LatticeSpec, retained_count, tables
from .mc import McEstimate, estimate_mean_exp

__all__ = [
    "ActionParams", "GaugeConfig", "McGuardError", "MC_GUARD_LIMIT",
    "plaquette_holonomy", "plaquette_action", "total_action", "gauge_transform",
    "mc_partition_estimate", "gauge_fixed_mc_estimate", "check_mc_guard",
    "normalized_partition", "log_normalized_partition", "free_energy", "max_total_action",
    "log_normalization",
]

MC_GUARD_LIMIT = 50.0


class McGuardError(ValueError):
    """Raised when ``c * max(total action)`` is too large for plain Haar sampling."""


@dataclass(frozen=True)
class ActionParams:
    spec: LatticeSpec
    kind: GroupKind
    gsq: float
    g0sq: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.g0sq) or self.g0sq <= 0:
            raise ValueError("g0sq must be positive and finite")
        if not 0.0 < self.gsq <= self.g0sq:
            raise ValueError(f"gsq must lie in (0, g0sq={self.g0sq}], got {self.gsq}")

    @property
    def a(self):
        return self.spec.a

    @property
    def prefactor(self):
        """``c = a^(d-4) / g^2``."""
        return self.spec.a ** (self.spec.d - 4) / self.gsq


class GaugeConfig:
    """Assignment of a group element to every bond of a lattice.

    `links` has shape (n_bonds, N, N) in `enumerate_bonds` order; indexing with
    a ``Bond`` returns its matrix.
    """

    def __init__(self, spec, kind, links, validate=True):
        links = np.asarray(links, dtype=np.complex128)
        nb = len(tables(spec).bond_index)
        if links.shape != (nb, kind.n, kind.n):
            raise ValueError(f"expected links of shape {(nb, kind.n, kind.n)}, got {links.shape}")
        if validate:
            check_unitary(links, kind)
        self.spec = spec
        self.kind = kind
        self.links = links

    @classmethod
    def identity(cls, spec, kind):
        nb = len(tables(spec).bond_index)
        return cls(spec, kind, np.broadcast_to(np.eye(kind.n, dtype=complex), (nb, kind.n, kind.n)).copy())

    @classmethod
    def random(cls, spec, kind, rng):
        nb = len(tables(spec).bond_index)
        return cls(spec, kind, haar_sample(kind, rng, nb))

    def __getitem__(self, bond):
        return self.links[tables(self.spec).bond_index[bond]]

    def with_bond(self, bond, matrix):
        links = self.links.copy()
        links[tables(self.spec).bond_index[bond]] = matrix
        return GaugeConfig(self.spec, self.kind, links)


def plaquette_holonomy(config, p):
    """``U_p = U1 U2 U3^-1 U4^-1`` around plaquette `p`."""
    u1, u2, u3, u4 = (config[b] for b in p.bonds())
    return u1 @ u2 @ u3.conj().T @ u4.conj().T


def plaquette_action(u_p):
    """``||1 - U_p||^2_HS``, equal to ``2 Re Tr(1 - U_p)`` for unitary ``U_p``."""
    u_p = np.asarray(u_p)
    n = u_p.shape[-1]
    return float(hs_norm(np.eye(n) - u_p) ** 2)


def total_action(config):
    return float(kernels.total_action(config.links, tables(config.spec).plaquette_bonds)[0])


def gauge_transform(config, r):
    """Apply ``g_b -> r_x g_b r_(x+e)^-1`` for bond ``b`` from ``x`` to ``x+e``.

    `r` is either an array of shape (L^d, N, N) indexed like the lattice sites
    or a mapping from 1-based site tuples to matrices.
    """
    spec = config.spec
    if isinstance(r, dict):
        arr = np.empty((spec.L ** spec.d, config.kind.n, config.kind.n), dtype=complex)
        for site, m in r.items():
            idx = 0
            for c in site:
                idx = idx * spec.L + (c - 1)
            arr[idx] = m
        r = arr
    r = np.asarray(r, dtype=np.complex128)
    ends = tables(spec).bond_sites
    links = r[ends[:, 0]] @ config.links @ np.swapaxes(r[ends[:, 1]], -1, -2).conj()
    return GaugeConfig(spec, config.kind, links)


def max_total_action(params):
    """Upper bound ``4N * n_plaquettes`` on the total action."""
    return 4.0 * params.kind.n * len(tables(params.spec).plaquette_bonds)


def check_mc_guard(params, limit=MC_GUARD_LIMIT):
    """Raise ``McGuardError`` if ``c * max(total action) > limit``."""
    load = params.prefactor * max_total_action(params)
    if load > limit:
        raise McGuardError(
            f"c * max action = {load:.4g} exceeds {limit:g}; integrand too concentrated for Haar MC")
    return load


def _log_integrand_sampler(params, fixed, prefactor, backend):
    spec, kind = params.spec, params.kind
    t = tables(spec)
    nb = len(t.bond_index)
    free = np.flatnonzero(~t.tree_mask) if fixed else np.arange(nb)
    eye = np.eye(kind.n, dtype=complex)
    plaq = t.plaquette_bonds

    def draw(rng, size):
        links = np.empty((size, nb, kind.n, kind.n), dtype=complex)
        links[:] = eye
        links[:, free] = haar_sample(kind, rng, (size, free.size), backend=backend)
        return -prefactor * kernels.total_action(links, plaq, backend=backend)

    return draw


def _estimate(params, n, seed, fixed, workers, prefactor, backend):
    c = params.prefactor if prefactor is None else float(prefactor)
    if c == 0.0:
        return McEstimate.exact(1.0, n, seed)
    draw = _log_integrand_sampler(params, fixed, c, backend)
    return estimate_mean_exp(draw, n, seed, workers=workers)


def mc_partition_estimate(params, n, seed, workers=1, prefactor=None, backend=None):
    """Estimate ``Z`` by averaging ``exp(-c A)`` over i.i.d. Haar configurations.

    `prefactor` overrides ``c`` (``0`` gives the infinite-coupling value 1).
    """
    return _estimate(params, n, seed, False, workers, prefactor, backend)


def gauge_fixed_mc_estimate(params, n, seed, workers=1, prefactor=None, backend=None):
    """As `mc_partition_estimate`, with the enhanced-temporal-gauge tree set to 1."""
    return _estimate(params, n, seed, True, workers, prefactor, backend)


def log_normalization(params, n_retained):
    """``log (a^(d-4)/g^2)^(d(N) Lambda_r / 2)``."""
    return 0.5 * params.kind.algebra_dim * n_retained * math.log(params.prefactor)


def normalized_partition(value, params, n_retained=None):
    """``Z^n = (a^(d-4)/g^2)^(d(N) Lambda_r / 2) Z``."""
    if not value > 0:
        raise ValueError("partition function value must be positive")
    if n_retained is None:
        n_retained = retained_count(params.spec)
    return math.exp(math.log(value) + log_normalization(params, n_retained))


def log_normalized_partition(log_value, params, n_retained=None):
    if n_retained is None:
        n_retained = retained_count(params.spec)
    return log_value + log_normalization(params, n_retained)


def free_energy(zn, n_retained, kind):
    """``f^n = ln(Z^n) / (d(N) Lambda_r)``."""
    if not zn > 0:
        raise ValueError("normalized partition function must be positive")
    return math.log(zn) / (kind.algebra_dim * n_retained)
