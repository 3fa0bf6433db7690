"""Eigenphase integrals for class functions on U(N) and SU(N).

Periodic integrands on the torus use the uniform (trapezoidal) rule, which is
spectrally accurate for smooth periodic functions.  Integrals over boxes
(the small-field integral and the GUE-type integral) use tensor
Gauss-Legendre rules.
"""
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np

from .grouplib import GroupKind, haar_sample, hs_norm
from .mc import McEstimate, estimate_mean_exp

__all__ = [
    "QuadratureGrid", "default_grid", "weyl_normalization", "vandermonde_density",
    "vandermonde_density_exp", "torus_rule", "class_integral", "single_plaquette_z",
    "small_field_cutoff", "restricted_z", "gue_integral", "gue_integral_inf",
    "CrossCheck", "weyl_haar_crosscheck",
]

# Gaussian tails beyond exp(-TAIL_EXPONENT) relative are dropped; truncating a
# positive integrand can only lower the value.
TAIL_EXPONENT = 40.0
GUE_CLIP = 14.0
DEFAULT_GL_ORDER = 64
_CHUNK = 1 << 18


@dataclass(frozen=True)
class QuadratureGrid:
    points_per_dim: int = 256

    def __post_init__(self):
        if int(self.points_per_dim) != self.points_per_dim or self.points_per_dim < 8:
            raise ValueError("quadrature grid needs at least 8 points per dimension")

    def doubled(self):
        return QuadratureGrid(2 * self.points_per_dim)


def default_grid(kind):
    """256 points per dimension for N <= 2, 96 for N = 3 (and larger)."""
    return QuadratureGrid(256 if kind.n <= 2 else 96)


def weyl_normalization(n):
    """``1 / ((2 pi)^N N!)``."""
    return 1.0 / ((2.0 * math.pi) ** n * math.factorial(n))


def vandermonde_density(lam):
    """``prod_{j<k} 2 [1 - cos(lam_j - lam_k)]`` over the last axis."""
    lam = np.asarray(lam, dtype=np.float64)
    out = np.ones(lam.shape[:-1])
    for j, k in combinations(range(lam.shape[-1]), 2):
        out = out * (2.0 * (1.0 - np.cos(lam[..., j] - lam[..., k])))
    return out


def vandermonde_density_exp(lam):
    """``prod_{j<k} |e^{i lam_j} - e^{i lam_k}|^2``; same value as `vandermonde_density`."""
    z = np.exp(1j * np.asarray(lam, dtype=np.float64))
    out = np.ones(z.shape[:-1])
    for j, k in combinations(range(z.shape[-1]), 2):
        out = out * np.abs(z[..., j] - z[..., k]) ** 2
    return out


def _wrap(x):
    """Map to (-pi, pi]."""
    y = np.mod(x + np.pi, 2.0 * np.pi) - np.pi
    return np.where(y <= -np.pi, y + 2.0 * np.pi, y)


@lru_cache(maxsize=16)
def _torus_rule_cached(name, n, m):
    kind = GroupKind(name, n)
    h = 2.0 * math.pi / m
    nodes = -math.pi + h * np.arange(1, m + 1)  # uniform grid ending at +pi
    free = n - 1 if kind.special else n
    mesh = np.stack(np.meshgrid(*([nodes] * free), indexing="ij"), axis=-1).reshape(-1, free)
    if kind.special:
        last = _wrap(-mesh.sum(axis=1))
        mesh = np.concatenate([mesh, last[:, None]], axis=1)
        weight = weyl_normalization(n) * 2.0 * math.pi * h ** free
    else:
        weight = weyl_normalization(n) * h ** free
    w = weight * vandermonde_density(mesh)
    mesh.setflags(write=False)
    w.setflags(write=False)
    return mesh, w


def torus_rule(kind, grid=None):
    """Nodes ``lam`` (P, N) and weights (P,) with ``sum w f(lam)`` = Haar mean of `f`.

    The weights already carry the Weyl density and normalisation.  For SU(N)
    the last eigenphase is eliminated, ``lam_N = -(lam_1 + ... + lam_{N-1})``
    wrapped into (-pi, pi].
    """
    grid = grid or default_grid(kind)
    return _torus_rule_cached(kind.name, kind.n, grid.points_per_dim)


def class_integral(kind, f, grid=None):
    """Haar integral of a class function given through its eigenphases.

    `f` maps an array of eigenphases of shape (P, N) to P values.
    """
    lam, w = torus_rule(kind, grid)
    total = 0.0
    for start in range(0, len(w), _CHUNK):
        vals = np.asarray(f(lam[start:start + _CHUNK]), dtype=np.float64)
        if not np.all(np.isfinite(vals)):
            raise ValueError("class function is not finite on the quadrature grid")
        total += float(np.dot(w[start:start + _CHUNK], vals))
    return total


def single_plaquette_z(c, kind, grid=None):
    """``z(c) = int exp(-c ||1 - g||^2_HS) dsigma(g)``."""
    if c < 0:
        raise ValueError("c must be nonnegative")
    if c == 0:
        return 1.0
    return class_integral(kind, lambda lam: np.exp(-2.0 * c * (1.0 - np.cos(lam)).sum(axis=-1)), grid)


def small_field_cutoff(n):
    """Eigenphase cutoff ``gamma = 1/N``."""
    return 1.0 / n


def _gl(order, lo, hi):
    x, w = np.polynomial.legendre.leggauss(order)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


def _gl_box(order, lo, hi, dim):
    x, w = _gl(order, lo, hi)
    nodes = np.stack(np.meshgrid(*([x] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
    weights = np.ones(1)
    for _ in range(dim):
        weights = np.multiply.outer(weights, w).reshape(-1)
    return nodes, weights


def _restricted_su3(alpha, gamma, t, order):
    # lam1 in [-t, t]; lam2 limited by |lam2| < t and |lam1 + lam2| < gamma.
    # The lam2 limits have kinks at lam1 = +-(gamma - t); split there.
    cuts = sorted({-t, t} | {v for v in (t - gamma, gamma - t) if -t < v < t})
    total = 0.0
    for lo1, hi1 in zip(cuts[:-1], cuts[1:]):
        x1, w1 = _gl(order, lo1, hi1)
        for a, wa in zip(x1, w1):
            lo2 = max(-t, -gamma - a)
            hi2 = min(t, gamma - a)
            if hi2 <= lo2:
                continue
            x2, w2 = _gl(order, lo2, hi2)
            lam = np.stack([np.full_like(x2, a), x2, -(a + x2)], axis=-1)
            vals = np.exp(-alpha * (lam ** 2).sum(axis=-1)) * vandermonde_density(lam)
            total += wa * float(np.dot(w2, vals))
    return total


def restricted_z(c, d, kind, gamma=None, order=DEFAULT_GL_ORDER):
    """Small-field single-bond integral

    ``N(N) int_{|lam_k| < gamma} exp(-2 c (d-1) C^2 sum_k lam_k^2) rho(lam) d^N lam``

    with ``C = 2(1 + 2 N^(3/2))`` and the Weyl measure of `kind` (for SU(N) the
    constraint ``sum lam_k = 0`` with every ``|lam_k| < gamma``).
    """
    from .bounds import lemma1_constant

    if c < 0:
        raise ValueError("c must be nonnegative")
    n = kind.n
    gamma = small_field_cutoff(n) if gamma is None else float(gamma)
    if not 0 < gamma <= math.pi:
        raise ValueError("gamma must lie in (0, pi]")
    alpha = 2.0 * c * (d - 1) * lemma1_constant(n) ** 2
    t = gamma if alpha == 0 else min(gamma, math.sqrt(TAIL_EXPONENT / alpha))
    norm = weyl_normalization(n)
    if not kind.special:
        lam, w = _gl_box(order, -t, t, n)
        vals = np.exp(-alpha * (lam ** 2).sum(axis=-1)) * vandermonde_density(lam)
        return norm * float(np.dot(w, vals))
    if n == 2:
        x, w = _gl(order, -t, t)
        lam = np.stack([x, -x], axis=-1)
        vals = np.exp(-alpha * (lam ** 2).sum(axis=-1)) * vandermonde_density(lam)
        return norm * 2.0 * math.pi * float(np.dot(w, vals))
    if n == 3:
        return norm * 2.0 * math.pi * _restricted_su3(alpha, gamma, t, order)
    raise NotImplementedError("restricted_z supports SU(N) only for N <= 3")


def gue_integral_inf(n):
    """Closed form ``I(inf) = (2 pi)^(-N/2) prod_{j=1}^{N-1} j!``."""
    return (2.0 * math.pi) ** (-n / 2.0) * math.prod(math.factorial(j) for j in range(1, n))


def _real_vandermonde_sq(y):
    out = np.ones(y.shape[:-1])
    for j, k in combinations(range(y.shape[-1]), 2):
        out = out * (y[..., j] - y[..., k]) ** 2
    return out


def gue_integral(u, n, order=96):
    """``I(u) = N(N) int_{[-u,u]^N} exp(-|y|^2/2) prod_{j<k} (y_j - y_k)^2 d^N y``.

    ``u = inf`` returns the closed form.  Finite ``u`` is integrated over
    ``[-min(u, 14), min(u, 14)]^N``; the Gaussian tail beyond 14 is below
    double precision.
    """
    if u < 0:
        raise ValueError("u must be nonnegative")
    if math.isinf(u):
        return gue_integral_inf(n)
    if u == 0:
        return 0.0
    v = min(float(u), GUE_CLIP)
    y, w = _gl_box(order, -v, v, n)
    vals = np.exp(-0.5 * (y ** 2).sum(axis=-1)) * _real_vandermonde_sq(y)
    return weyl_normalization(n) * float(np.dot(w, vals))


@dataclass(frozen=True)
class CrossCheck:
    mc: McEstimate
    quad: float
    sigma_distance: float


def weyl_haar_crosscheck(kind, c, n_samples, seed, grid=None, workers=1):
    """Compare ``E_Haar[exp(-c ||1 - U||^2)]`` from sampling with `single_plaquette_z`."""
    quad = single_plaquette_z(c, kind, grid)
    if c == 0:
        mc = McEstimate.exact(1.0, n_samples, seed)
    else:
        eye = np.eye(kind.n)

        def draw(rng, size):
            u = haar_sample(kind, rng, size)
            return -c * hs_norm(eye - u) ** 2

        mc = estimate_mean_exp(draw, n_samples, seed, workers=workers)
    return CrossCheck(mc, quad, mc.sigma_distance(quad))
