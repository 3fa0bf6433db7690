"""Two-sided bounds on the normalized partition function.

Everything here is expressed per retained bond: for a lattice with
``Lambda_r`` retained bonds the bounds on ``ln Z^n`` are ``Lambda_r`` times a
per-bond value that does not depend on L.  The upper bound drops plaquettes
and bounds the single-bond integral ``z(c)`` by a GUE-type integral; the
lower bound restricts every retained bond to small fields, where the action
is bounded by ``2 (d-1) C^2 sum_b |x_b|^2``, and is evaluated by quadrature.
"""
import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .anneal import AnnealSchedule, annealed_mc_estimate
from .grouplib import exp_map, exp_map_batch, hs_norm
from .latticegeom import retained_count
from .mc import McEstimate
from .weylquad import (
    GUE_CLIP, _gl_box, gue_integral, gue_integral_inf, restricted_z,
    small_field_cutoff, vandermonde_density, weyl_normalization,
)
from .wilson import (
    MC_GUARD_LIMIT, check_mc_guard, gauge_fixed_mc_estimate, log_normalized_partition,
    max_total_action,
)

__all__ = [
    "lemma1_constant", "cosine_lower", "cosine_upper", "Lemma1Result", "lemma1_bound",
    "lemma1_bound_batch", "theta_constant", "upper_bound_per_bond",
    "relaxed_upper_per_bond", "c_upper", "UpperBound", "upper_bound_ln_zn",
    "lower_bound_per_bond", "closed_form_lower_per_bond", "c_lower", "LowerBound",
    "lower_bound_ln_zn", "su_action_bounds", "su_density_bounds",
    "StabilityCertificate", "stability_certificate",
]

SIGMA_GATE = 3.0


def lemma1_constant(n):
    """``C = 2 (1 + 2 N^(3/2))``."""
    return 2.0 * (1.0 + 2.0 * n ** 1.5)


def cosine_lower(theta):
    """``(2(1 - cos t), 4 t^2 / pi^2)``; the first dominates for ``|t| < pi``."""
    theta = np.asarray(theta, dtype=np.float64)
    if np.any(np.abs(theta) >= math.pi):
        raise ValueError("cosine lower bound needs |theta| < pi")
    return 2.0 * (1.0 - np.cos(theta)), 4.0 * theta ** 2 / math.pi ** 2


def cosine_upper(theta):
    """``(2(1 - cos t), t^2)``; the second dominates for every real t."""
    theta = np.asarray(theta, dtype=np.float64)
    return 2.0 * (1.0 - np.cos(theta)), theta ** 2


# ---------------------------------------------------------------------------
# Quadratic bound on the plaquette action for small fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Lemma1Result:
    action: float
    intermediate: float
    bound: float

    @property
    def holds(self):
        return self.action <= self.intermediate <= self.bound


def _lemma1_terms(n, norms, action):
    q = np.sum(norms ** 2, axis=-1)
    s = np.sum(norms, axis=-1)
    intermediate = 4.0 * (1.0 + n ** 2 * s + n ** 4 * q) * q
    return action, intermediate, lemma1_constant(n) ** 2 * q


def lemma1_bound(fields):
    """Plaquette action of ``U1 U2 U3^H U4^H`` with both quadratic bounds.

    `fields` are four ``AlgebraCoefficients`` of one group, each with
    ``|x| < N^(-1/2)``.
    """
    fields = list(fields)
    if len(fields) != 4:
        raise ValueError("a plaquette has four bonds")
    kind = fields[0].kind
    n = kind.n
    norms = np.array([f.norm() for f in fields])
    if any(f.kind != kind for f in fields) or np.any(norms >= n ** -0.5):
        raise ValueError("precondition violated: every |x| must be below N^(-1/2)")
    u1, u2, u3, u4 = (exp_map(f) for f in fields)
    u_p = u1 @ u2 @ u3.conj().T @ u4.conj().T
    action = float(hs_norm(np.eye(n) - u_p) ** 2)
    return Lemma1Result(*(float(v) for v in _lemma1_terms(n, norms, action)))


def lemma1_bound_batch(kind, x):
    """Vectorised small-field bound check for coefficients of shape (B, 4, d(N)).

    Returns ``(action, intermediate, bound)`` arrays of shape (B,).
    """
    x = np.asarray(x, dtype=np.float64)
    norms = np.linalg.norm(x, axis=-1)
    if np.any(norms >= kind.n ** -0.5):
        raise ValueError("precondition violated: every |x| must be below N^(-1/2)")
    u = exp_map_batch(kind, x)
    uh = np.swapaxes(u, -1, -2).conj()
    u_p = u[:, 0] @ u[:, 1] @ uh[:, 2] @ uh[:, 3]
    action = hs_norm(np.eye(kind.n) - u_p) ** 2
    return _lemma1_terms(kind.n, norms, action)


# ---------------------------------------------------------------------------
# SU(N) replacement inequalities
# ---------------------------------------------------------------------------

def _su_full(lam_free):
    lam_free = np.asarray(lam_free, dtype=np.float64)
    return np.concatenate([lam_free, -lam_free.sum(axis=-1, keepdims=True)], axis=-1)


def _rho_check(lam_free):
    """``prod_{j<k<N} (l_j - l_k)^2 prod_{j<N} (l_j - l_N)^2`` with ``l_N = -sum l_j``."""
    lam = _su_full(lam_free)
    out = np.ones(lam.shape[:-1])
    for j, k in combinations(range(lam.shape[-1]), 2):
        out = out * (lam[..., j] - lam[..., k]) ** 2
    return out


def su_action_bounds(lam_free):
    """Exact single-bond SU(N) action and its quadratic lower/upper replacements.

    For free eigenphases ``l_1..l_{N-1}`` (with ``l_N = -sum``), returns
    ``(sum_k 2(1 - cos l_k), sum_{k<N} 2 l_k^2 / pi^2, N sum_{k<N} l_k^2)``.
    """
    lam_free = np.asarray(lam_free, dtype=np.float64)
    exact = (2.0 * (1.0 - np.cos(_su_full(lam_free)))).sum(axis=-1)
    sq = (lam_free ** 2).sum(axis=-1)
    n = lam_free.shape[-1] + 1
    return exact, 2.0 * sq / math.pi ** 2, n * sq


def su_density_bounds(lam_free):
    """``(rho, (2/pi^2)^(N(N-1)/2) rho_check, rho_check)`` at ``l_N = -sum l_k``.

    The upper value holds everywhere; the lower one for ``|l_k| <= pi/N``.
    """
    lam_free = np.asarray(lam_free, dtype=np.float64)
    n = lam_free.shape[-1] + 1
    check = _rho_check(lam_free)
    rho = vandermonde_density(_su_full(lam_free))
    return rho, (2.0 / math.pi ** 2) ** (n * (n - 1) / 2) * check, check


# ---------------------------------------------------------------------------
# Upper bound
# ---------------------------------------------------------------------------

def _su_upper_integral(u, n, order=64):
    """``int_{[-u,u]^(N-1)} exp(-|y|^2/2) rho_check(y) d^(N-1) y``."""
    v = min(u, GUE_CLIP)
    if v == 0:
        return 0.0
    y, w = _gl_box(order, -v, v, n - 1)
    return float(np.dot(w, np.exp(-0.5 * (y ** 2).sum(axis=-1)) * _rho_check(y)))


def upper_bound_per_bond(c, kind):
    """Upper bound on ``ln(c^(d(N)/2) z(c))``.

    U(N): ``d(N) ln(pi / (2 sqrt 2)) + ln I(2 sqrt(2c))``.  SU(N) uses the
    exponent bound ``sum_{k<N} 2 l_k^2 / pi^2`` and ``rho <= rho_check``,
    which after rescaling gives ``ln[N(N) 2 pi (pi/2)^d(N) J(2 sqrt c)]``.
    """
    if c < 0:
        raise ValueError("c must be nonnegative")
    if c == 0:
        return -math.inf
    n, dn = kind.n, kind.algebra_dim
    if not kind.special:
        return dn * math.log(math.pi / (2.0 * math.sqrt(2.0))) + math.log(gue_integral(2.0 * math.sqrt(2.0 * c), n))
    return (math.log(weyl_normalization(n) * 2.0 * math.pi) + dn * math.log(math.pi / 2.0)
            + math.log(_su_upper_integral(2.0 * math.sqrt(c), n)))


def relaxed_upper_per_bond(kind):
    """The a- and g-independent limit of `upper_bound_per_bond` (``u -> inf``)."""
    n, dn = kind.n, kind.algebra_dim
    if not kind.special:
        return dn * math.log(math.pi / (2.0 * math.sqrt(2.0))) + math.log(gue_integral_inf(n))
    return (math.log(weyl_normalization(n) * 2.0 * math.pi) + dn * math.log(math.pi / 2.0)
            + math.log(_su_upper_integral(math.inf, n)))


def c_upper(kind):
    """Upper stability constant ``c_u`` with ``Z^n <= exp(c_u d(N) Lambda_r)``."""
    return relaxed_upper_per_bond(kind) / kind.algebra_dim


@dataclass(frozen=True)
class UpperBound:
    ln_bound: float
    ln_relaxed: float
    per_bond: float
    relaxed_per_bond: float


def upper_bound_ln_zn(params, n_retained=None):
    if n_retained is None:
        n_retained = retained_count(params.spec)
    per_bond = upper_bound_per_bond(params.prefactor, params.kind)
    relaxed = relaxed_upper_per_bond(params.kind)
    return UpperBound(n_retained * per_bond, n_retained * relaxed, per_bond, relaxed)


# ---------------------------------------------------------------------------
# Lower bound
# ---------------------------------------------------------------------------

def theta_constant(n, d, kind=None):
    """``N(N) (4/pi^2)^(N(N-1)/2) [(d-1)^(1/2) 2 C gamma]^(-d(N))`` with ``gamma = 1/N``."""
    dn = n * n if kind is None else kind.algebra_dim
    gamma = small_field_cutoff(n)
    return (weyl_normalization(n) * (4.0 / math.pi ** 2) ** (n * (n - 1) / 2)
            * (math.sqrt(d - 1) * 2.0 * lemma1_constant(n) * gamma) ** (-dn))


def lower_bound_per_bond(c, d, kind, order=None):
    """``ln(c^(d(N)/2) z_small(c))`` with the small-field integral by quadrature."""
    if c <= 0:
        raise ValueError("c must be positive")
    z = restricted_z(c, d, kind) if order is None else restricted_z(c, d, kind, order=order)
    return 0.5 * kind.algebra_dim * math.log(c) + math.log(z)


def closed_form_lower_per_bond(c, d, kind):
    """``ln(Theta I(2 (d-1)^(1/2) C gamma sqrt c))``, the closed-form lower value.

    Reported for comparison only; see the README for why certificates use
    `lower_bound_per_bond` instead.
    """
    n = kind.n
    u = 2.0 * math.sqrt(d - 1) * lemma1_constant(n) * small_field_cutoff(n) * math.sqrt(c)
    return math.log(theta_constant(n, d, kind)) + math.log(gue_integral(u, n))


def c_lower(d, kind, g0sq=1.0):
    """Lower stability constant from the quadrature route at ``a = 1, g^2 = g0^2``.

    ``c = a^(d-4)/g^2 >= 1/g0^2`` on the whole parameter range and the
    per-bond lower value increases with c, so this is uniform in a and g.
    """
    return lower_bound_per_bond(1.0 / g0sq, d, kind) / kind.algebra_dim


@dataclass(frozen=True)
class LowerBound:
    ln_bound: float
    ln_closed_form: float
    per_bond: float
    closed_form_per_bond: float


def lower_bound_ln_zn(params, n_retained=None):
    """Quadrature lower bound on ``ln Z^n`` plus the closed form at ``a = 1, g^2 = g0^2``."""
    if n_retained is None:
        n_retained = retained_count(params.spec)
    d = params.spec.d
    per_bond = lower_bound_per_bond(params.prefactor, d, params.kind)
    closed = closed_form_lower_per_bond(1.0 / params.g0sq, d, params.kind)
    return LowerBound(n_retained * per_bond, n_retained * closed, per_bond, closed)


# ---------------------------------------------------------------------------
# Certificates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StabilityCertificate:
    params: object
    n_retained: int
    estimate: McEstimate
    ln_zn_mc: float
    sigma: float
    ln_lower: float
    ln_upper: float
    lower_per_dof: float
    upper_per_dof: float
    relaxed_upper_per_dof: float
    closed_form_lower_per_dof: float
    guard_load: float
    guard_exceeded: bool
    method: str = "haar"

    @property
    def spec(self):
        return self.params.spec

    @property
    def free_energy(self):
        """MC estimate of ``f^n = ln Z^n / (d(N) Lambda_r)``."""
        return self.ln_zn_mc / (self.params.kind.algebra_dim * self.n_retained)

    @property
    def passed(self):
        s = SIGMA_GATE * self.sigma
        return self.ln_lower - s <= self.ln_zn_mc <= self.ln_upper + s


def stability_certificate(params, n_samples, seed, workers=1, enforce_guard=True,
                          method="auto", schedule=AnnealSchedule()):
    """Check ``lower <= ln Z^n <= upper`` against a Monte Carlo estimate of ``Z``.

    Parameters
    ----------
    params : ActionParams
    n_samples : int
        Haar samples for ``method="haar"``.
    seed : int
    workers : int
    enforce_guard : bool
        Raise ``McGuardError`` when ``c * max(action)`` exceeds the guard and
        plain Haar sampling would be used.
    method : {"auto", "haar", "anneal"}
        ``"auto"`` uses gauge-fixed Haar sampling within the guard and
        annealed importance sampling (``schedule``) beyond it.
    """
    if method not in ("auto", "haar", "anneal"):
        raise ValueError(f"unknown method {method!r}")
    load = params.prefactor * max_total_action(params)
    exceeded = load > MC_GUARD_LIMIT
    if method == "auto":
        method = "anneal" if exceeded else "haar"
    if method == "haar":
        if enforce_guard:
            check_mc_guard(params)
        est = gauge_fixed_mc_estimate(params, n_samples, seed, workers=workers)
    else:
        est = annealed_mc_estimate(params, seed, schedule, workers=workers)
    n_ret = retained_count(params.spec)
    ln_zn = log_normalized_partition(est.log_mean, params, n_ret)
    lower = lower_bound_ln_zn(params, n_ret)
    upper = upper_bound_ln_zn(params, n_ret)
    dn = params.kind.algebra_dim
    return StabilityCertificate(
        params=params,
        n_retained=n_ret,
        estimate=est,
        ln_zn_mc=ln_zn,
        sigma=est.log_std_error,
        ln_lower=lower.ln_bound,
        ln_upper=upper.ln_bound,
        lower_per_dof=lower.per_bond / dn,
        upper_per_dof=upper.per_bond / dn,
        relaxed_upper_per_dof=upper.relaxed_per_bond / dn,
        closed_form_lower_per_dof=lower.closed_form_per_bond / dn,
        guard_load=load,
        guard_exceeded=exceeded,
        method=method,
    )
