import math

import numpy as np
import pytest

from oracles import z_toeplitz, z_u1
from ymstab.grouplib import GroupKind, haar_sample
from ymstab.latticegeom import Bond, LatticeSpec, Plaquette, enumerate_plaquettes, retained_count
from ymstab.mc import combined_sigma_distance
from ymstab.wilson import (ActionParams, GaugeConfig, McGuardError, check_mc_guard, free_energy,
                           gauge_fixed_mc_estimate, gauge_transform, log_normalized_partition,
                           mc_partition_estimate, normalized_partition, plaquette_action,
                           plaquette_holonomy, total_action)

U1, U2, SU2 = GroupKind("U", 1), GroupKind("U", 2), GroupKind("SU", 2)


def test_params_validation():
    spec = LatticeSpec(2, 2)
    with pytest.raises(ValueError):
        ActionParams(spec, U1, 1.5, 1.0)
    with pytest.raises(ValueError):
        ActionParams(spec, U1, 0.0)
    with pytest.raises(ValueError):
        ActionParams(spec, U1, 0.5, -1.0)


@pytest.mark.parametrize("d,a,gsq,c", [(2, 0.5, 1.0, 4.0), (3, 0.5, 0.5, 4.0), (4, 0.3, 0.5, 2.0)])
def test_prefactor(d, a, gsq, c):
    assert ActionParams(LatticeSpec(d, 2, a), U1, gsq).prefactor == pytest.approx(c)


def test_holonomy_path_order():
    spec = LatticeSpec(2, 2)
    vals = {Bond((1, 1), 0): 0.1, Bond((2, 1), 1): 0.2, Bond((1, 2), 0): 0.4, Bond((1, 1), 1): 0.8}
    cfg = GaugeConfig.identity(spec, U1)
    for b, t in vals.items():
        cfg = cfg.with_bond(b, np.array([[np.exp(1j * t)]]))
    u = plaquette_holonomy(cfg, Plaquette((1, 1), 0, 1))
    assert u[0, 0] == pytest.approx(np.exp(1j * (0.1 + 0.2 - 0.4 - 0.8)))


def test_action_identity_and_maximum():
    spec = LatticeSpec(3, 2)
    assert total_action(GaugeConfig.identity(spec, U2)) == 0.0
    assert plaquette_action(-np.eye(2)) == pytest.approx(8.0)


def test_action_matches_trace_form(rng):
    spec = LatticeSpec(3, 2)
    cfg = GaugeConfig.random(spec, SU2, rng)
    ref = sum(2 * np.real(np.trace(np.eye(2) - plaquette_holonomy(cfg, p)))
              for p in enumerate_plaquettes(spec))
    assert total_action(cfg) == pytest.approx(ref, abs=1e-12)


def test_config_validation(rng):
    spec = LatticeSpec(2, 2)
    with pytest.raises(ValueError):
        GaugeConfig(spec, U2, np.zeros((4, 2, 2)))
    with pytest.raises(ValueError):
        GaugeConfig(spec, U2, np.zeros((3, 2, 2)))


@pytest.mark.parametrize("kind", [U1, U2, GroupKind("SU", 3)], ids=str)
@pytest.mark.parametrize("d,L", [(2, 3), (3, 2), (4, 2)])
def test_gauge_invariance_of_action(kind, d, L, rng):
    spec = LatticeSpec(d, L)
    for _ in range(5):
        cfg = GaugeConfig.random(spec, kind, rng)
        r = haar_sample(kind, rng, L ** d)
        assert abs(total_action(gauge_transform(cfg, r)) - total_action(cfg)) < 1e-9


def test_gauge_transform_dict_form(rng):
    spec = LatticeSpec(2, 2)
    cfg = GaugeConfig.random(spec, U2, rng)
    r = haar_sample(U2, rng, 4)
    sites = [(1, 1), (1, 2), (2, 1), (2, 2)]
    a = gauge_transform(cfg, r)
    b = gauge_transform(cfg, dict(zip(sites, r)))
    np.testing.assert_allclose(a.links, b.links)
    bond = Bond((1, 2), 0)
    np.testing.assert_allclose(a[bond], r[1] @ cfg[bond] @ r[3].conj().T, atol=1e-14)


def test_d2_exact_small_run():
    params = ActionParams(LatticeSpec(2, 3), U1, 1.0)
    est = mc_partition_estimate(params, 100_000, 3)
    assert est.sigma_distance(z_u1(1.0) ** 4) < 4


def test_d2_exact_u2_gauge_fixed():
    params = ActionParams(LatticeSpec(2, 2), U2, 1.0, 1.0)
    est = gauge_fixed_mc_estimate(params, 100_000, 4)
    assert est.sigma_distance(z_toeplitz(1.0, 2)) < 4


def test_fixed_and_unfixed_agree_small():
    params = ActionParams(LatticeSpec(3, 2), U1, 1.0)
    a = mc_partition_estimate(params, 50_000, 1)
    b = gauge_fixed_mc_estimate(params, 50_000, 2)
    assert combined_sigma_distance(a, b) < 4


def test_zero_prefactor_is_one():
    params = ActionParams(LatticeSpec(2, 2), U1, 1.0)
    assert mc_partition_estimate(params, 10, 1, prefactor=0).mean == 1.0


def test_backends_give_same_estimate():
    params = ActionParams(LatticeSpec(2, 3), SU2, 1.0)
    a = mc_partition_estimate(params, 3000, 8, backend="numpy")
    b = mc_partition_estimate(params, 3000, 8, backend="numba")
    assert a.mean == pytest.approx(b.mean, rel=1e-10)


def test_mc_guard():
    assert check_mc_guard(ActionParams(LatticeSpec(2, 2), U1, 1.0)) == pytest.approx(4.0)
    with pytest.raises(McGuardError):
        check_mc_guard(ActionParams(LatticeSpec(3, 3, 0.5), U2, 0.5))


def test_normalization():
    params = ActionParams(LatticeSpec(2, 3, 0.5), U2, 1.0)
    zn = normalized_partition(2.0, params)
    assert zn == pytest.approx(2.0 * 4.0 ** (4 * 4 / 2))
    assert math.log(zn) == pytest.approx(log_normalized_partition(math.log(2.0), params))
    assert free_energy(zn, retained_count(params.spec), U2) == pytest.approx(math.log(zn) / 16)
    with pytest.raises(ValueError):
        normalized_partition(0.0, params)
    with pytest.raises(ValueError):
        free_energy(-1.0, 4, U2)
