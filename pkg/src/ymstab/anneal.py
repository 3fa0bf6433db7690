"""Annealed importance sampling for the gauge-fixed partition function.

Plain Haar sampling of ``exp(-c S)`` degenerates once ``c * max(S)`` is large:
a handful of draws carry all the weight.  Here each chain starts from an
exact Haar draw of the retained bonds and is annealed through a ladder of
couplings ``0 = t_0 < t_1 < ... < t_K = c``.  Before moving to ``t_k`` the
chain picks up the log-weight ``-(t_k - t_{k-1}) S`` and then does one
Metropolis sweep that leaves ``exp(-t_k S)`` invariant.  The mean of the
weights is an unbiased estimate of ``Z`` at any ladder length; a longer
ladder only reduces the variance.

Metropolis proposals left-multiply a link by a matrix drawn from a small
pool that is closed under inversion, so the proposal is symmetric with
respect to Haar measure.
"""
import math
from dataclasses import dataclass

import numpy as np

from . import _accel, kernels
from .grouplib import exp_map_batch, haar_sample
from .latticegeom import tables
from .mc import estimate_mean_exp

__all__ = ["AnnealSchedule", "coupling_ladder", "annealed_log_weights", "annealed_mc_estimate"]

POOL_SIZE = 128


@dataclass(frozen=True)
class AnnealSchedule:
    """Annealing controls.

    Attributes
    ----------
    chains : int
        Independent chains (the sample count of the weight average).
    var_target : float
        Predicted variance of the log-weights; sets the ladder length.
    max_steps : int
        Hard cap on the ladder length.
    step_scale : float
        Proposal width in units of ``1 / sqrt(t * plaquettes per bond)``.
    """

    chains: int = 1024
    var_target: float = 0.1
    max_steps: int = 20000
    step_scale: float = 1.2

    def __post_init__(self):
        if self.chains < 1 or self.max_steps < 1:
            raise ValueError("chains and max_steps must be >= 1")
        if not self.var_target > 0 or not self.step_scale > 0:
            raise ValueError("var_target and step_scale must be positive")


def _action_variance(kind):
    # Haar variance of one plaquette action 2(N - Re Tr U): 4 Var(Re Tr U)
    return 4.0 if (kind.special and kind.n == 2) else 2.0


def coupling_ladder(c, n_dof, n_plaq, var0, schedule):
    """Couplings ``t_0 = 0 < ... < t_K = c`` with equal predicted weight variance per step.

    The action variance is modelled as ``min(V0, n_dof / (2 t^2))``: the Haar
    value ``V0 = n_plaq * var0`` at weak coupling and the Gaussian value
    near the minimum.  Steps of equal ``dt * sqrt(Var S)`` then make the
    log-weight variance roughly ``length^2 / K``.
    """
    v0 = n_plaq * var0
    t_star = math.sqrt(n_dof / (2.0 * v0))
    slope = math.sqrt(n_dof / 2.0)

    def length(t):
        return t * math.sqrt(v0) if t <= t_star else t_star * math.sqrt(v0) + slope * math.log(t / t_star)

    total = length(c)
    k = int(min(schedule.max_steps, max(8, math.ceil(total ** 2 / schedule.var_target))))
    s = np.linspace(0.0, total, k + 1)
    s_star = t_star * math.sqrt(v0)
    t = np.where(s <= s_star, s / math.sqrt(v0), t_star * np.exp((s - s_star) / slope))
    t[-1] = c
    return t


def _incidence(plaq, n_bonds):
    counts = np.bincount(plaq.ravel(), minlength=n_bonds)
    inc = np.full((n_bonds, max(int(counts.max()), 1)), -1, dtype=np.int64)
    fill = np.zeros(n_bonds, dtype=np.int64)
    for p, row in enumerate(plaq):
        for b in row:
            inc[b, fill[b]] = p
            fill[b] += 1
    return inc


@_accel.njit
def _retr_plaquette(links, ch, row):
    # Re Tr(U1 U2 U3^H U4^H) = Re sum_ij (U1 U2)_ij conj((U4 U3)_ij)
    n = links.shape[-1]
    u1, u2, u3, u4 = links[ch, row[0]], links[ch, row[1]], links[ch, row[2]], links[ch, row[3]]
    acc = 0.0
    for i in range(n):
        for j in range(n):
            m = 0j
            k = 0j
            for l in range(n):
                m += u1[i, l] * u2[l, j]
                k += u4[i, l] * u3[l, j]
            acc += (m * k.conjugate()).real
    return acc


@_accel.njit
def _sweep_loop(links, free, pool, pick, logu, t, inc, plaq, action):
    n_chains = links.shape[0]
    n = links.shape[-1]
    old = np.empty((n, n), dtype=np.complex128)
    for ch in range(n_chains):
        for j in range(free.shape[0]):
            b = free[j]
            before = 0.0
            for q in range(inc.shape[1]):
                p = inc[b, q]
                if p >= 0:
                    before += _retr_plaquette(links, ch, plaq[p])
            r = pool[pick[ch, j]]
            for i in range(n):
                for k in range(n):
                    old[i, k] = links[ch, b, i, k]
            for i in range(n):
                for k in range(n):
                    z = 0j
                    for l in range(n):
                        z += r[i, l] * old[l, k]
                    links[ch, b, i, k] = z
            after = 0.0
            for q in range(inc.shape[1]):
                p = inc[b, q]
                if p >= 0:
                    after += _retr_plaquette(links, ch, plaq[p])
            delta = 2.0 * (before - after)  # change of sum 2(N - Re Tr U_p)
            if logu[ch, j] < -t * delta:
                action[ch] += delta
            else:
                for i in range(n):
                    for k in range(n):
                        links[ch, b, i, k] = old[i, k]


def _sweep_numpy(links, free, pool, pick, logu, t, inc, plaq, action):
    for j, b in enumerate(free):
        ps = inc[b][inc[b] >= 0]
        rows = plaq[ps]
        before = kernels.plaquette_actions(links, rows, backend="numpy").sum(axis=1)
        old = links[:, b].copy()
        links[:, b] = pool[pick[:, j]] @ old
        after = kernels.plaquette_actions(links, rows, backend="numpy").sum(axis=1)
        delta = after - before
        accept = logu[:, j] < -t * delta
        action += np.where(accept, delta, 0.0)
        links[~accept, b] = old[~accept]


def _proposal_pool(kind, rng, width):
    x = rng.standard_normal((POOL_SIZE, kind.algebra_dim)) * width
    r = exp_map_batch(kind, x)
    return np.concatenate([r, np.swapaxes(r, -1, -2).conj()])


def annealed_log_weights(params, rng, size, schedule=AnnealSchedule(), backend=None, ladder=None):
    """Log importance weights of `size` annealing chains (their mean-exp estimates ``Z``)."""
    spec, kind = params.spec, params.kind
    tb = tables(spec)
    nb = len(tb.bond_index)
    free = np.flatnonzero(~tb.tree_mask)
    plaq = tb.plaquette_bonds
    inc = _incidence(plaq, nb)
    if ladder is None:
        ladder = coupling_ladder(params.prefactor, kind.algebra_dim * free.size, len(plaq),
                                 _action_variance(kind), schedule)
    use_loop = kernels._resolve(backend) == "numba"
    per_bond = 2.0 * (spec.d - 1)

    links = np.empty((size, nb, kind.n, kind.n), dtype=np.complex128)
    links[:] = np.eye(kind.n)
    links[:, free] = haar_sample(kind, rng, (size, free.size), backend=backend)
    action = kernels.total_action(links, plaq, backend=backend)
    logw = np.zeros(size)
    for k in range(1, len(ladder)):
        t = float(ladder[k])
        logw -= (t - ladder[k - 1]) * action
        width = min(1.0, schedule.step_scale / math.sqrt(t * per_bond))
        pool = _proposal_pool(kind, rng, width)
        pick = rng.integers(0, len(pool), size=(size, free.size))
        logu = np.log(rng.random((size, free.size)))
        if use_loop:
            _sweep_loop(links, free, pool, pick, logu, t, inc, plaq, action)
        else:
            _sweep_numpy(links, free, pool, pick, logu, t, inc, plaq, action)
    return logw


def annealed_mc_estimate(params, seed, schedule=AnnealSchedule(), workers=1, backend=None):
    """Estimate ``Z`` (gauge-fixed, equal to the full ``Z``) by annealed importance sampling.

    Returns an ``McEstimate`` over ``schedule.chains`` weights; its ``ess``
    measures how evenly the weight is spread over chains.
    """
    spec, kind = params.spec, params.kind
    tb = tables(spec)
    free = int((~tb.tree_mask).sum())
    ladder = coupling_ladder(params.prefactor, kind.algebra_dim * free, len(tb.plaquette_bonds),
                             _action_variance(kind), schedule)

    def draw(rng, size):
        return annealed_log_weights(params, rng, size, schedule, backend, ladder)

    return estimate_mean_exp(draw, schedule.chains, seed, workers=workers)
