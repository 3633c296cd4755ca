"""Shared oracles and fixtures.

The oracle functions here recompute quantities by brute-force enumeration
over all 2**(n_v+n_h) joint states with per-term energy sums. They share
no code path with the library's marginalized implementations.
"""

import numpy as np
import pytest

from anneal_rbm.rbm import RbmParams


def brute_energy(rbm: RbmParams, v, h) -> float:
    """Per-term re-summation of the energy, used as the oracle."""
    total = 0.0
    for i in range(rbm.n_v):
        for j in range(rbm.n_h):
            if rbm.mask[i, j]:
                total -= rbm.w[i, j] * v[i] * h[j]
    for i in range(rbm.n_v):
        total -= rbm.a[i] * v[i]
    for j in range(rbm.n_h):
        total -= rbm.b[j] * h[j]
    return total


def all_bits(n: int) -> np.ndarray:
    """All binary vectors of length n (row per config, LSB first)."""
    return np.array([[(k >> i) & 1 for i in range(n)] for k in range(2 ** n)],
                    dtype=np.uint8)


def brute_joint_table(rbm: RbmParams):
    """Energies and Boltzmann probabilities of every joint state."""
    vs = all_bits(rbm.n_v)
    hs = all_bits(rbm.n_h)
    energies = np.empty((len(vs), len(hs)))
    for iv, v in enumerate(vs):
        for ih, h in enumerate(hs):
            energies[iv, ih] = brute_energy(rbm, v, h)
    weights = np.exp(-(energies - energies.min()))
    probs = weights / weights.sum()
    return vs, hs, energies, probs


def brute_log_partition(rbm: RbmParams) -> float:
    _, _, energies, _ = brute_joint_table(rbm)
    shift = energies.min()
    return float(np.log(np.exp(-(energies - shift)).sum()) - shift)


def brute_model_stats(rbm: RbmParams):
    vs, hs, _, probs = brute_joint_table(rbm)
    vh = np.zeros((rbm.n_v, rbm.n_h))
    v_mean = np.zeros(rbm.n_v)
    h_mean = np.zeros(rbm.n_h)
    for iv, v in enumerate(vs):
        for ih, h in enumerate(hs):
            p = probs[iv, ih]
            vh += p * np.outer(v, h)
            v_mean += p * v
            h_mean += p * h
    return vh, v_mean, h_mean


def brute_visible_marginal(rbm: RbmParams) -> np.ndarray:
    """P(v) for every visible config, by joint enumeration."""
    _, _, _, probs = brute_joint_table(rbm)
    return probs.sum(axis=1)


def random_rbm(rng, n_v, n_h, scale=1.0, mask=None) -> RbmParams:
    return RbmParams(n_v, n_h,
                     rng.normal(0, scale, (n_v, n_h)),
                     rng.normal(0, scale, n_v),
                     rng.normal(0, scale, n_h), mask)


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def config_codes(bits: np.ndarray) -> np.ndarray:
    """Integer code of each row of a binary matrix (LSB = column 0)."""
    n = bits.shape[1]
    return (bits.astype(np.int64) * (1 << np.arange(n))).sum(axis=1)


@pytest.fixture
def rng():
    return np.random.default_rng(20240809)
