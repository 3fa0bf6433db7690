import subprocess
import sys

import numpy as np
import pytest

from ymstab import _accel, kernels
from ymstab.grouplib import GroupKind, check_unitary, haar_sample, hs_norm
from ymstab.latticegeom import LatticeSpec, tables


def _normals(rng, lead, n):
    return rng.standard_normal(lead + (n, n)), rng.standard_normal(lead + (n, n))


@pytest.mark.parametrize("n,special", [(1, False), (2, False), (3, False), (2, True), (3, True)])
def test_haar_backends_agree(n, special, rng):
    re, im = _normals(rng, (300,), n)
    ru = rng.random(300)
    a = kernels.haar_from_normals(re, im, ru, special, backend="numpy")
    b = kernels.haar_from_normals(re, im, ru, special, backend="numba")
    np.testing.assert_allclose(a, b, atol=1e-12)
    check_unitary(b, GroupKind("SU" if special else "U", n))


def test_haar_loop_python_path_matches(rng):
    re, im = _normals(rng, (20,), 3)
    ru = rng.random(20)
    out = np.empty((20, 3, 3), dtype=complex)
    kernels._haar_loop.py_func(re, im, ru, True, out)
    np.testing.assert_allclose(out, kernels.haar_from_normals(re, im, ru, True, backend="numpy"),
                               atol=1e-12)


def test_haar_requires_root_for_su(rng):
    re, im = _normals(rng, (2,), 2)
    with pytest.raises(ValueError):
        kernels.haar_from_normals(re, im, special=True)


def test_unknown_backend(rng):
    re, im = _normals(rng, (2,), 2)
    with pytest.raises(ValueError):
        kernels.haar_from_normals(re, im, backend="cuda")


@pytest.mark.parametrize("d,L,n", [(2, 3, 1), (3, 2, 2), (4, 2, 3)])
def test_action_backends_agree(d, L, n, rng):
    spec = LatticeSpec(d, L)
    t = tables(spec)
    kind = GroupKind("U", n)
    links = haar_sample(kind, rng, (7, len(t.bond_index)))
    a = kernels.plaquette_actions(links, t.plaquette_bonds, backend="numpy")
    b = kernels.plaquette_actions(links, t.plaquette_bonds, backend="numba")
    np.testing.assert_allclose(a, b, atol=1e-12)
    # direct product of the four matrices, as a reference
    u = links[:, t.plaquette_bonds]
    h = lambda m: np.swapaxes(m, -1, -2).conj()
    up = u[:, :, 0] @ u[:, :, 1] @ h(u[:, :, 2]) @ h(u[:, :, 3])
    np.testing.assert_allclose(a, hs_norm(np.eye(n) - up) ** 2, atol=1e-12)
    for backend in kernels.BACKENDS:
        np.testing.assert_allclose(kernels.total_action(links, t.plaquette_bonds, backend=backend),
                                   a.sum(axis=1), atol=1e-11)


def test_env_flag_selects_numpy():
    code = "from ymstab import _accel; print(_accel.BACKEND, _accel.DISABLED)"
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True,
                         env={"YMSTAB_DISABLE_NUMBA": "1", "PATH": ""}, check=True)
    assert out.stdout.split() == ["numpy", "True"]


def test_default_backend():
    assert _accel.BACKEND == ("numpy" if _accel.DISABLED else "numba")
