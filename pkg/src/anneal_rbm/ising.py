"""Lowering an RBM to a logical Ising problem over spins in {-1, +1}.

Spins are indexed globally: 0..n_v-1 are visible positions, n_v..n_v+n_h-1
hidden positions. The stored parameters follow the rescaled mapping

    J_ij = alpha * w_ij / 4
    A_i  = alpha * (a_i / 2 + sum_j w_ij / 4)
    B_j  = alpha * (b_j / 2 + sum_i w_ij / 4)

and the energy functional evaluated here is

    H(s) = -( sum_(i,j) J_ij s_i s_j + sum_i A_i s_i + sum_j B_j s_j )

with the overall minus sign absorbed once, so that lower H always means
lower RBM energy: for any two configurations, H(S) - H(S') equals
alpha * (E(S) - E(S')) exactly. Constant offsets are dropped since they
cancel in Boltzmann ratios. With this convention the Boltzmann law of the
lowered problem at temperature alpha coincides with the RBM law at T = 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation
from .rbm import RbmParams

SpinConfig = np.ndarray  # vector of -1/+1, visible block then hidden block


@dataclass(frozen=True)
class IsingProblem:
    """Couplings over visible-hidden spin pairs plus per-spin fields."""

    n_v: int
    n_h: int
    couplings: dict  # (i, j) -> J_ij with i < n_v <= j
    fields: np.ndarray  # length n_v + n_h; A on visible slots, B on hidden
    alpha: float

    @property
    def n_spins(self) -> int:
        return self.n_v + self.n_h

    def __post_init__(self):
        if self.alpha <= 0:
            raise ContractViolation("alpha must be > 0")
        fields = np.asarray(self.fields, dtype=float)
        if fields.shape != (self.n_spins,):
            raise ContractViolation("fields length mismatch")
        if not np.isfinite(fields).all():
            raise ContractViolation("fields must be finite")
        for (i, j), val in self.couplings.items():
            if not (0 <= i < self.n_v <= j < self.n_spins):
                raise ContractViolation(f"coupling ({i},{j}) is not visible-hidden")
            if not np.isfinite(val):
                raise ContractViolation("couplings must be finite")
        object.__setattr__(self, "fields", fields)

    def coupling_matrix(self) -> np.ndarray:
        """Dense (n_v, n_h) matrix of J values (zeros off the support)."""
        mat = np.zeros((self.n_v, self.n_h))
        for (i, j), val in self.couplings.items():
            mat[i, j - self.n_v] = val
        return mat


def to_ising(rbm: RbmParams, alpha: float) -> IsingProblem:
    """Rescaled lowering of an RBM; coupling support equals the mask support."""
    if alpha <= 0:
        raise ContractViolation("alpha must be > 0")
    couplings = {}
    for i, j in zip(*np.nonzero(rbm.mask)):
        couplings[(int(i), int(j) + rbm.n_v)] = alpha * rbm.w[i, j] / 4.0
    a_field = alpha * (rbm.a / 2.0 + rbm.w.sum(axis=1) / 4.0)
    b_field = alpha * (rbm.b / 2.0 + rbm.w.sum(axis=0) / 4.0)
    return IsingProblem(rbm.n_v, rbm.n_h, couplings,
                        np.concatenate([a_field, b_field]), alpha)


def binary_to_spin(u: np.ndarray) -> np.ndarray:
    """{0,1} -> {-1,+1} elementwise: s = 2u - 1."""
    u = np.asarray(u)
    if not np.isin(u, (0, 1)).all():
        raise ContractViolation("binary values must be 0 or 1")
    return (2 * u.astype(np.int8) - 1).astype(np.int8)


def spin_to_binary(s: np.ndarray) -> np.ndarray:
    """{-1,+1} -> {0,1} elementwise: u = (s + 1) / 2."""
    s = np.asarray(s)
    if not np.isin(s, (-1, 1)).all():
        raise ContractViolation("spin values must be -1 or +1")
    return ((s + 1) // 2).astype(np.uint8)


def config_to_spins(v: np.ndarray, h: np.ndarray) -> SpinConfig:
    """Concatenate a binary (v, h) pair into one global spin vector."""
    return binary_to_spin(np.concatenate([np.asarray(v), np.asarray(h)]))


def ising_energy(problem: IsingProblem, s: SpinConfig) -> float:
    """H(s) under the module's sign convention (see module docstring)."""
    s = np.asarray(s, dtype=float)
    if s.shape != (problem.n_spins,):
        raise ContractViolation("spin vector length mismatch")
    pair = sum(val * s[i] * s[j] for (i, j), val in problem.couplings.items())
    return float(-(pair + problem.fields @ s))


def save_ising(problem: IsingProblem, path) -> None:
    """Line-oriented text: 'i j J' per coupling, 'i h' per field."""
    with open(path, "w") as fh:
        fh.write(f"# ising n_v={problem.n_v} n_h={problem.n_h} "
                 f"alpha={problem.alpha:.17g}\n")
        for (i, j), val in sorted(problem.couplings.items()):
            fh.write(f"{i} {j} {val:.17g}\n")
        for i, val in enumerate(problem.fields):
            fh.write(f"{i} {val:.17g}\n")


def load_ising(path) -> IsingProblem:
    n_v = n_h = None
    alpha = 1.0
    couplings = {}
    field_entries = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for tok in line[1:].split():
                    if "=" in tok:
                        key, val = tok.split("=")
                        if key == "n_v":
                            n_v = int(val)
                        elif key == "n_h":
                            n_h = int(val)
                        elif key == "alpha":
                            alpha = float(val)
                continue
            toks = line.split()
            if len(toks) == 3:
                couplings[(int(toks[0]), int(toks[1]))] = float(toks[2])
            elif len(toks) == 2:
                field_entries[int(toks[0])] = float(toks[1])
            else:
                raise ContractViolation(f"bad ising line: {line!r}")
    if n_v is None or n_h is None:
        raise ContractViolation("missing size header in ising file")
    fields = np.zeros(n_v + n_h)
    for i, val in field_entries.items():
        fields[i] = val
    return IsingProblem(n_v, n_h, couplings, fields, alpha)
