"""Matrix algebra for U(N) and SU(N) at small N.

Group elements are plain complex ``ndarray`` objects of shape (N, N); most
functions also accept stacks of shape (..., N, N).  ``AlgebraCoefficients``
holds the real gluon-field vector ``x`` of ``U = exp(i sum_a x_a theta_a)``.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from . import kernels

__all__ = [
    "GroupKind", "AlgebraCoefficients", "basis", "exp_map", "log_map", "hs_norm",
    "angular_eigenvalues", "haar_sample", "check_unitary", "UNITARITY_TOL",
    "DET_TOL", "BRANCH_TOL",
]

UNITARITY_TOL = 1e-12
DET_TOL = 1e-10
BRANCH_TOL = 1e-12


@dataclass(frozen=True)
class GroupKind:
    """A unitary group: ``name`` is ``"U"`` or ``"SU"``, ``n`` the matrix order."""

    name: str
    n: int

    def __post_init__(self):
        name = str(self.name).upper()
        object.__setattr__(self, "name", name)
        if name not in ("U", "SU") or int(self.n) != self.n or self.n < 1:
            raise ValueError(f"unsupported group: {self.name}({self.n})")
        if name == "SU" and self.n < 2:
            raise ValueError("unsupported group: SU(1) is trivial")
        object.__setattr__(self, "n", int(self.n))

    @property
    def special(self):
        return self.name == "SU"

    @property
    def algebra_dim(self):
        """d(N): N^2 for U(N), N^2 - 1 for SU(N)."""
        return self.n * self.n - (1 if self.special else 0)

    def __str__(self):
        return f"{self.name}({self.n})"


@lru_cache(maxsize=None)
def _basis_array(name, n):
    mats = []
    for k in range(1, n):
        for j in range(k):
            sym = np.zeros((n, n), dtype=complex)
            sym[j, k] = sym[k, j] = 1.0
            anti = np.zeros((n, n), dtype=complex)
            anti[j, k], anti[k, j] = -1j, 1j
            mats += [sym / np.sqrt(2.0), anti / np.sqrt(2.0)]
        diag = np.zeros(n)
        diag[:k] = 1.0
        diag[k] = -k
        mats.append(np.diag(diag / np.sqrt(k * (k + 1.0))).astype(complex))
    if name == "U":
        mats.append(np.eye(n, dtype=complex) / np.sqrt(n))
    out = np.array(mats).reshape(len(mats), n, n)
    out.setflags(write=False)
    return out


def basis(kind):
    """Orthonormal self-adjoint generators with ``Tr(theta_a theta_b) = delta_ab``.

    Ordered as generalised Gell-Mann matrices (symmetric and antisymmetric
    pairs, then the diagonal generator, for each new row), with ``1/sqrt(N)``
    appended last for U(N).  For SU(2) these are the Pauli matrices over
    ``sqrt(2)``.
    """
    return list(_basis_array(kind.name, kind.n))


@dataclass(frozen=True)
class AlgebraCoefficients:
    kind: GroupKind
    x: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=np.float64).reshape(-1)
        if x.size != self.kind.algebra_dim:
            raise ValueError(f"{self.kind} needs {self.kind.algebra_dim} coefficients, got {x.size}")
        if not np.all(np.isfinite(x)):
            raise ValueError("non-finite algebra coefficients")
        x.setflags(write=False)
        object.__setattr__(self, "x", x)

    def matrix(self):
        """The self-adjoint matrix ``X = sum_a x_a theta_a``."""
        return np.tensordot(self.x, _basis_array(self.kind.name, self.kind.n), axes=1)

    def norm(self):
        return float(np.linalg.norm(self.x))


def _expi_hermitian(h):
    w, v = np.linalg.eigh(h)
    return (v * np.exp(1j * w)[..., None, :]) @ np.swapaxes(v, -1, -2).conj()


def exp_map(coeffs):
    """``exp(iX)`` for ``X = sum_a x_a theta_a``, via the spectral decomposition."""
    return _expi_hermitian(coeffs.matrix())


def exp_map_batch(kind, x):
    """Vectorised `exp_map` for coefficient rows ``x`` of shape (..., d(N))."""
    x = np.asarray(x, dtype=np.float64)
    return _expi_hermitian(np.tensordot(x, _basis_array(kind.name, kind.n), axes=1))


def hs_norm(m):
    """Hilbert-Schmidt norm ``[Tr(M^H M)]^(1/2)``; stacks give one value per matrix."""
    m = np.asarray(m)
    return np.sqrt(np.einsum("...ij,...ij->...", m.conj(), m).real)


def check_unitary(u, kind=None):
    """Validate the unitarity (and unit determinant for SU) invariants.

    Returns `u` as a complex array; raises ``ValueError`` on failure.
    """
    u = np.asarray(u, dtype=np.complex128)
    if u.ndim < 2 or u.shape[-1] != u.shape[-2]:
        raise ValueError("expected square matrices")
    n = u.shape[-1]
    if kind is not None and n != kind.n:
        raise ValueError(f"matrix order {n} does not match {kind}")
    if not np.all(np.isfinite(u)):
        raise ValueError("non-finite matrix entries")
    eye = np.eye(n)
    err = hs_norm(np.swapaxes(u, -1, -2).conj() @ u - eye)
    if np.any(err > UNITARITY_TOL * n):
        raise ValueError(f"matrix is not unitary (|U^H U - 1| = {np.max(err):.3e})")
    if kind is not None and kind.special:
        derr = np.abs(np.linalg.det(u) - 1.0)
        if np.any(derr > DET_TOL):
            raise ValueError(f"determinant differs from 1 by {np.max(derr):.3e}")
    return u


def angular_eigenvalues(u):
    """Eigenphases in (-pi, pi], sorted ascending.

    Works on stacks; the boundary value -pi is reported as +pi.
    """
    u = np.asarray(u, dtype=np.complex128)
    if not np.all(np.isfinite(u)):
        raise ValueError("non-finite matrix entries")
    ev = np.linalg.eigvals(u)
    lam = np.angle(ev)
    lam = np.where(lam <= -np.pi, lam + 2.0 * np.pi, lam)
    return np.sort(lam, axis=-1)


def log_map(u, kind):
    """Principal logarithm ``X = -i ln U`` expressed in the algebra basis.

    Raises ``ValueError("branch-cut eigenvalue")`` when an eigenphase lies
    within ``BRANCH_TOL`` of +-pi, where the principal branch is undefined.
    """
    u = check_unitary(u, kind)
    t, z = scipy.linalg.schur(u, output="complex")
    lam = np.angle(np.diag(t))
    if np.any(np.pi - np.abs(lam) <= BRANCH_TOL):
        raise ValueError("branch-cut eigenvalue")
    x_mat = (z * lam) @ z.conj().T
    if kind.special and abs(lam.sum()) > 1e-9:
        raise ValueError("principal logarithm is not traceless; no su(N) preimage on this branch")
    gens = _basis_array(kind.name, kind.n)
    x = np.einsum("aij,ji->a", gens, x_mat).real
    return AlgebraCoefficients(kind, x)


def haar_sample(kind, rng, size=None, backend=None):
    """Draw from the normalised Haar measure of `kind`.

    Ginibre matrices are orthonormalised with the phase convention that makes
    the law exactly Haar; SU(N) samples are rotated by a uniformly chosen
    N-th root of ``det(U)^-1``.

    Parameters
    ----------
    kind : GroupKind
    rng : numpy.random.Generator
    size : int or tuple, optional
        Leading batch shape.  ``None`` returns one (N, N) matrix.
    """
    lead = () if size is None else (size if isinstance(size, tuple) else (int(size),))
    n = kind.n
    re = rng.standard_normal(lead + (n, n))
    im = rng.standard_normal(lead + (n, n))
    root_u = rng.random(lead) if kind.special else None
    return kernels.haar_from_normals(re, im, root_u, kind.special, backend=backend)
