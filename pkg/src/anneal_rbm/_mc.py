"""Numba kernel for annealed Metropolis sweeps on embedded Ising problems.

State rows are independent replicas (one per annealing cycle), each a
dense vector of +-1 spins over all copies' qubits. A sweep applies, in a
fixed order, one Metropolis attempt per qubit and then one whole-chain
flip attempt per chain. Chain flips leave the chain-binding energy
unchanged, so they are accepted on the problem part alone; they are the
classical stand-in for the collective tunneling that lets bound chains
rearrange while stiff.

Per-sweep inverse temperatures come in two ladders evaluated from the
same schedule: `beta_p` (problem part, saturating at 1/t_eff, the
effective-temperature target) and `beta_c` (chain bonds, rising to the
50/t_eff cap as s -> 1, which stiffens and heals chains late in the
anneal). Sweeps where s >= 1 are frozen: no flips at all.

All randomness is a counter-based splitmix64 stream keyed by
(seed, replica, sweep, site, move-kind), so results are independent of
loop order and thread count.
"""

import math

import numpy as np
from numba import njit

U64 = np.uint64
_GOLD = U64(0x9E3779B97F4A7C15)
_MIX1 = U64(0xBF58476D1CE4E5B9)
_MIX2 = U64(0x94D049BB133111EB)
_C3 = U64(0xD6E8FEB86659FD93)
_C4 = U64(0xA0761D6478BD642F)


@njit(cache=True, inline="always")
def _uniform(seed, a, b, c, d):
    z = seed + U64(a) * _GOLD + U64(b) * _MIX1 + U64(c) * _C3 + U64(d) * _C4
    z = (z ^ (z >> U64(30))) * _MIX1
    z = (z ^ (z >> U64(27))) * _MIX2
    z = z ^ (z >> U64(31))
    # second finalization round to decorrelate the linear counter input
    z = (z + _GOLD) ^ (z >> U64(29))
    z = (z * _MIX2) ^ (z >> U64(32))
    return (z >> U64(11)) * 1.1102230246251565e-16  # 2**-53


# Uphill moves beyond this cost are rejected without drawing a uniform:
# accept probability < 2**-53, below the RNG's resolution. Skipping the
# draw is safe because the stream is counter-based, not sequential.
_REJECT_CUT = 40.0


@njit(cache=True)
def run_anneal(state, row_set, nbr_idx, nbr_val, fld, chain_idx, chain_val,
               clusters, beta_p, beta_c, frozen, seed):
    """In-place annealing of every replica row through the sweep program."""
    rows, n_q = state.shape
    n_sweeps = beta_p.size
    n_cl = clusters.shape[0]
    deg = nbr_idx.shape[1]
    cdeg = chain_idx.shape[1]
    clen = clusters.shape[1]
    for r in range(rows):
        st = row_set[r]
        xr = state[r]
        nv = nbr_val[st]
        fl = fld[st]
        cv = chain_val[st]
        for sw in range(n_sweeps):
            if frozen[sw]:
                continue
            bp = beta_p[sw]
            bc = beta_c[sw]
            for q in range(n_q):
                loc = fl[q]
                for d in range(deg):
                    nb = nbr_idx[q, d]
                    if nb < 0:
                        break
                    loc += nv[q, d] * xr[nb]
                bond = 0.0
                for d in range(cdeg):
                    nb = chain_idx[q, d]
                    if nb < 0:
                        break
                    bond += cv[q, d] * xr[nb]
                d_e = 2.0 * xr[q] * (bp * loc - bc * bond)
                if d_e <= 0.0:
                    xr[q] = -xr[q]
                elif d_e < _REJECT_CUT and \
                        _uniform(seed, r, sw, q, 0) < math.exp(-d_e):
                    xr[q] = -xr[q]
            for c in range(n_cl):
                acc = 0.0
                for t in range(clen):
                    q = clusters[c, t]
                    loc = fl[q]
                    for d in range(deg):
                        nb = nbr_idx[q, d]
                        if nb < 0:
                            break
                        loc += nv[q, d] * xr[nb]
                    acc += xr[q] * loc
                d_e = 2.0 * bp * acc
                ok = d_e <= 0.0
                if not ok and d_e < _REJECT_CUT:
                    ok = _uniform(seed, r, sw, c, 1) < math.exp(-d_e)
                if ok:
                    for t in range(clen):
                        q = clusters[c, t]
                        xr[q] = -xr[q]
    return state
