"""Compare the numba and pure-numpy kernels on the hot paths.

Usage: python benchmarks/bench_kernels.py [--repeat 5]

Each kernel is timed with identical inputs under both backends after a
warm-up call (which also triggers numba compilation).  The numpy path is the
one used when ``YMSTAB_DISABLE_NUMBA=1`` is set.
"""
import argparse
import time

import numpy as np

from ymstab import kernels
from ymstab.anneal import AnnealSchedule, annealed_log_weights
from ymstab.grouplib import GroupKind, haar_sample
from ymstab.latticegeom import LatticeSpec, tables
from ymstab.mc import make_stream
from ymstab.wilson import ActionParams


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    rng = np.random.default_rng(0)
    for n, special in ((1, False), (2, False), (3, True)):
        re = rng.standard_normal((200_000, n, n))
        im = rng.standard_normal((200_000, n, n))
        ru = rng.random(200_000)
        name = f"haar {'SU' if special else 'U'}({n}) x 2e5"
        yield name, lambda b, re=re, im=im, ru=ru, s=special: kernels.haar_from_normals(re, im, ru, s, backend=b)

    for d, L, n in ((2, 3, 1), (3, 3, 2), (4, 2, 3)):
        t = tables(LatticeSpec(d, L))
        links = haar_sample(GroupKind("U", n), rng, (4096, len(t.bond_index)))
        name = f"action d={d} L={L} U({n}) x 4096"
        yield name, lambda b, links=links, plaq=t.plaquette_bonds: kernels.total_action(links, plaq, backend=b)

    params = ActionParams(LatticeSpec(3, 2, 0.5), GroupKind("U", 2), 0.5)
    sched = AnnealSchedule(var_target=2.0)
    yield ("anneal d=3 L=2 U(2) x 256 chains",
           lambda b: annealed_log_weights(params, make_stream(1), 256, sched, backend=b))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    print(f"{'kernel':<36} {'numpy [ms]':>11} {'numba [ms]':>11} {'speedup':>8}")
    for name, fn in cases():
        t_np = best_of(lambda: fn("numpy"), args.repeat)
        t_nb = best_of(lambda: fn("numba"), args.repeat)
        print(f"{name:<36} {1e3 * t_np:11.2f} {1e3 * t_nb:11.2f} {t_np / t_nb:8.2f}")


if __name__ == "__main__":
    main()
