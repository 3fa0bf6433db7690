"""Hot inner loops: Haar matrices from Gaussian draws and batched Wilson actions.

Every kernel has a vectorised numpy implementation and an explicit-loop
implementation compiled with numba.  ``backend=None`` picks numba unless it is
missing or disabled through ``YMSTAB_DISABLE_NUMBA``.
"""
import numpy as np

from . import _accel

__all__ = ["haar_from_normals", "total_action", "plaquette_actions", "BACKENDS"]

BACKENDS = ("numpy", "numba")


def _resolve(backend):
    if backend is None:
        return _accel.BACKEND
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}")
    return backend


# ---------------------------------------------------------------------------
# Haar sampling
# ---------------------------------------------------------------------------

def _haar_numpy(re, im, root_u, special):
    z = re + 1j * im
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    q = q * (diag / np.abs(diag))[..., None, :]
    if special:
        n = q.shape[-1]
        phi = np.angle(np.linalg.det(q))
        k = np.floor(root_u * n)
        omega = np.exp(-1j * (phi + 2.0 * np.pi * k) / n)
        q = q * omega[..., None, None]
    return q


@_accel.njit
def _det_small(m):
    n = m.shape[0]
    if n == 1:
        return m[0, 0]
    if n == 2:
        return m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if n == 3:
        return (m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
                - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
                + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0]))
    return np.linalg.det(m)


@_accel.njit
def _haar_loop(re, im, root_u, special, out):
    m, n, _ = re.shape
    for s in range(m):
        for j in range(n):
            for i in range(n):
                out[s, i, j] = complex(re[s, i, j], im[s, i, j])
            # two Gram-Schmidt sweeps keep |Q^H Q - 1| at rounding level
            for _sweep in range(2):
                for k in range(j):
                    proj = 0j
                    for i in range(n):
                        proj += out[s, i, k].conjugate() * out[s, i, j]
                    for i in range(n):
                        out[s, i, j] -= proj * out[s, i, k]
            nrm = 0.0
            for i in range(n):
                v = out[s, i, j]
                nrm += v.real * v.real + v.imag * v.imag
            nrm = np.sqrt(nrm)
            for i in range(n):
                out[s, i, j] /= nrm
        if special:
            phi = np.angle(_det_small(out[s]))
            k = np.floor(root_u[s] * n)
            omega = np.exp(-1j * (phi + 2.0 * np.pi * k) / n)
            for i in range(n):
                for j in range(n):
                    out[s, i, j] *= omega


def haar_from_normals(re, im, root_u=None, special=False, backend=None):
    """Map independent standard normals to Haar-distributed unitaries.

    Parameters
    ----------
    re, im : ndarray, shape (..., N, N)
        Real and imaginary parts of a Ginibre matrix.
    root_u : ndarray, shape (...), optional
        Uniform variates in [0, 1) choosing the N-th root of ``det(U)^-1``.
        Required when `special` is true.
    special : bool
        Project onto SU(N).

    Returns
    -------
    ndarray, shape (..., N, N), complex128
    """
    re = np.asarray(re, dtype=np.float64)
    im = np.asarray(im, dtype=np.float64)
    if special and root_u is None:
        raise ValueError("root_u is required for SU(N) sampling")
    lead = re.shape[:-2]
    n = re.shape[-1]
    ru = np.zeros(lead) if root_u is None else np.asarray(root_u, dtype=np.float64)
    if _resolve(backend) == "numpy":
        return _haar_numpy(re, im, ru, special)
    out = np.empty(lead + (n, n), dtype=np.complex128)
    _haar_loop(re.reshape(-1, n, n), im.reshape(-1, n, n), ru.reshape(-1),
               bool(special), out.reshape(-1, n, n))
    return out


# ---------------------------------------------------------------------------
# Wilson action
# ---------------------------------------------------------------------------

def _plaquette_actions_numpy(links, plaq):
    n = links.shape[-1]
    # Re Tr(U1 U2 U3^H U4^H) = Re <U1 U2, U4 U3>_HS
    p = links[:, plaq[:, 0]] @ links[:, plaq[:, 1]]
    q = links[:, plaq[:, 3]] @ links[:, plaq[:, 2]]
    re_tr = np.einsum("bpij,bpij->bp", p, q.conj()).real
    return 2.0 * n - 2.0 * re_tr


@_accel.njit
def _plaquette_actions_loop(links, plaq, out):
    nsamp = links.shape[0]
    n = links.shape[2]
    for s in range(nsamp):
        for p in range(plaq.shape[0]):
            b1 = plaq[p, 0]
            b2 = plaq[p, 1]
            b3 = plaq[p, 2]
            b4 = plaq[p, 3]
            tr = 0.0
            for i in range(n):
                for j in range(n):
                    pij = 0j
                    qij = 0j
                    for k in range(n):
                        pij += links[s, b1, i, k] * links[s, b2, k, j]
                        qij += links[s, b4, i, k] * links[s, b3, k, j]
                    tr += (pij * qij.conjugate()).real
            out[s, p] = 2.0 * n - 2.0 * tr


@_accel.njit
def _total_action_loop(links, plaq, out):
    nsamp = links.shape[0]
    n = links.shape[2]
    for s in range(nsamp):
        acc = 0.0
        for p in range(plaq.shape[0]):
            b1 = plaq[p, 0]
            b2 = plaq[p, 1]
            b3 = plaq[p, 2]
            b4 = plaq[p, 3]
            tr = 0.0
            for i in range(n):
                for j in range(n):
                    pij = 0j
                    qij = 0j
                    for k in range(n):
                        pij += links[s, b1, i, k] * links[s, b2, k, j]
                        qij += links[s, b4, i, k] * links[s, b3, k, j]
                    tr += (pij * qij.conjugate()).real
            acc += 2.0 * n - 2.0 * tr
        out[s] = acc


def _prepare(links, plaq):
    links = np.ascontiguousarray(links, dtype=np.complex128)
    if links.ndim == 3:
        links = links[None]
    return links, np.ascontiguousarray(plaq, dtype=np.int64)


def plaquette_actions(links, plaq, backend=None):
    """Per-plaquette actions ``2 Re Tr(1 - U_p)`` for a batch of configurations.

    `links` has shape (B, n_bonds, N, N) (a single configuration of shape
    (n_bonds, N, N) is promoted); `plaq` holds the four bond indices of each
    plaquette in path order.  Returns shape (B, n_plaquettes).
    """
    links, plaq = _prepare(links, plaq)
    if _resolve(backend) == "numpy":
        return _plaquette_actions_numpy(links, plaq)
    out = np.empty((links.shape[0], plaq.shape[0]))
    _plaquette_actions_loop(links, plaq, out)
    return out


def total_action(links, plaq, backend=None):
    """Total Wilson action per configuration, shape (B,)."""
    links, plaq = _prepare(links, plaq)
    if _resolve(backend) == "numpy":
        return _plaquette_actions_numpy(links, plaq).sum(axis=1)
    out = np.empty(links.shape[0])
    _total_action_loop(links, plaq, out)
    return out
