"""Seeded streams and log-space Monte Carlo averaging of ``exp(x)`` samples.

A run of `n` samples is cut into fixed blocks of ``BLOCK_SIZE``.  Block ``b``
draws from its own stream ``SeedSequence(seed, spawn_key=(b,))``, so the
samples never depend on how blocks are spread over workers, and partial sums
are merged in block order.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

__all__ = [
    "BLOCK_SIZE", "DEFAULT_SEED", "McEstimate", "make_stream", "estimate_mean_exp",
    "combined_sigma_distance", "derive_seed",
]

BLOCK_SIZE = 1 << 14
DEFAULT_SEED = 20191007


def make_stream(seed, *key):
    """Return an independent ``numpy.random.Generator`` for ``(seed, *key)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class McEstimate:
    """Sample mean of a positive integrand with its standard error.

    ``log_mean`` and ``rel_error`` (std_error / mean) are computed without
    forming the mean itself, so they stay finite when ``mean`` underflows.
    ``ess`` is the effective sample size ``(sum w)^2 / sum w^2``.
    """

    mean: float
    std_error: float
    n_samples: int
    seed: int
    log_mean: float
    rel_error: float
    ess: float

    @property
    def log_std_error(self):
        """First-order standard error of ``log(mean)``."""
        return self.rel_error

    def sigma_distance(self, value):
        """Distance ``|mean - value|`` in units of the standard error."""
        diff = abs(self.mean - value)
        if self.std_error == 0.0:
            return 0.0 if diff == 0.0 else math.inf
        return diff / self.std_error

    @classmethod
    def exact(cls, value, n_samples, seed):
        return cls(float(value), 0.0, int(n_samples), int(seed),
                   math.log(value), 0.0, float(n_samples))


def combined_sigma_distance(first, second):
    """``|m1 - m2| / sqrt(se1^2 + se2^2)`` for two independent estimates."""
    se = math.hypot(first.std_error, second.std_error)
    diff = abs(first.mean - second.mean)
    if se == 0.0:
        return 0.0 if diff == 0.0 else math.inf
    return diff / se


def _block_stats(x):
    m = float(np.max(x))
    w = np.exp(x - m)
    return x.size, m, float(w.sum()), float(np.dot(w, w))


def _merge(acc, blk):
    n1, m1, s1, q1 = acc
    n2, m2, s2, q2 = blk
    m = max(m1, m2)
    e1, e2 = math.exp(m1 - m), math.exp(m2 - m)
    return n1 + n2, m, s1 * e1 + s2 * e2, q1 * e1 * e1 + q2 * e2 * e2


def estimate_mean_exp(log_integrand_block, n, seed, workers=1):
    """Estimate ``E[exp(X)]`` from `n` i.i.d. draws of the log-integrand ``X``.

    Parameters
    ----------
    log_integrand_block : callable
        ``f(rng, size) -> ndarray`` returning `size` draws of ``X``.  It must
        only draw from the generator it is given.
    n : int
        Number of samples, at least 1.
    seed : int
        Master seed.
    workers : int
        Thread count.  Results are bit-identical for any value.
    """
    n = int(n)
    if n < 1:
        raise ValueError("sample count must be >= 1")
    sizes = [BLOCK_SIZE] * (n // BLOCK_SIZE)
    if n % BLOCK_SIZE:
        sizes.append(n % BLOCK_SIZE)

    def run(b):
        x = np.asarray(log_integrand_block(make_stream(seed, b), sizes[b]), dtype=np.float64)
        if not np.all(np.isfinite(x)):
            raise FloatingPointError("non-finite log-integrand sample")
        return _block_stats(x)

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(run, range(len(sizes))))
    else:
        blocks = [run(b) for b in range(len(sizes))]

    acc = blocks[0]
    for blk in blocks[1:]:
        acc = _merge(acc, blk)
    count, shift, s1, s2 = acc
    scaled_mean = s1 / count
    var = max((s2 - s1 * s1 / count) / (count - 1), 0.0) if count > 1 else 0.0
    scaled_se = math.sqrt(var / count)
    scale = math.exp(shift)
    return McEstimate(
        mean=scale * scaled_mean,
        std_error=scale * scaled_se,
        n_samples=count,
        seed=int(seed),
        log_mean=shift + math.log(scaled_mean),
        rel_error=scaled_se / scaled_mean,
        ess=s1 * s1 / s2,
    )


def derive_seed(seed, *key):
    """A 63-bit child seed of `seed`, distinct for every `key` tuple."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
