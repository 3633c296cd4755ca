"""Chimera-style hardware graph, 4-qubit chain embedding of an RBM, and
chain-break resolution.

The hardware model is a grid of unit cells, each a complete bipartite
K_{4,4} over two shores; shore-0 qubits couple to the vertically adjacent
cell, shore-1 qubits horizontally. A 16+16 RBM occupies a 4x4 block of
cells: visible unit i is a vertical chain of the four shore-0 qubits in
cell column i//4 / wire i%4, hidden unit j a horizontal chain of shore-1
qubits in cell row j//4 / wire j%4, so each visible/hidden chain pair
meets in exactly one cell through one intra-cell coupler. One copy uses
all 128 qubits of its block; a fault anywhere on used qubits disables the
block.

Energy bookkeeping of the lowered problem keeps the problem part and the
chain-binding part separate:

    E_phys(x) = -( sum C_pq x_p x_q + sum f_q x_q )  +  J_C * sum_chain-edges x_p x_q

The problem part inherits the logical sign convention (ising.py), so
logical weights split across physical edges without sign changes; the
chain term is additive with J_C <= 0 binding ferromagnetically, matching
annealer-manual units where the strongest coupling is -1. For unanimous
chains, E_phys equals the logical energy plus the constant J_C term.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import ContractViolation, EmbeddingError
from .ising import IsingProblem

CHAIN_LEN = 4
BLOCK_CELLS = 4  # block side, in unit cells


@dataclass(frozen=True)
class ChimeraGraph:
    """Grid of K_{4,4} unit cells with an optional set of faulty qubits."""

    rows: int = 16
    cols: int = 16
    faulty: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "faulty", frozenset(int(q) for q in self.faulty))
        if any(q < 0 or q >= self.n_qubits for q in self.faulty):
            raise ContractViolation("faulty qubit id out of range")

    @property
    def n_qubits(self) -> int:
        return self.rows * self.cols * 8

    def qubit_id(self, i: int, j: int, u: int, k: int) -> int:
        """Linear id of qubit (cell row i, cell col j, shore u, wire k)."""
        return ((i * self.cols) + j) * 8 + u * 4 + k

    def has_edge(self, q1: int, q2: int) -> bool:
        i1, j1, u1, k1 = self.coords(q1)
        i2, j2, u2, k2 = self.coords(q2)
        if (i1, j1) == (i2, j2):
            return u1 != u2  # intra-cell K_{4,4}
        if u1 == u2 == 0 and j1 == j2 and abs(i1 - i2) == 1 and k1 == k2:
            return True  # vertical inter-cell
        if u1 == u2 == 1 and i1 == i2 and abs(j1 - j2) == 1 and k1 == k2:
            return True  # horizontal inter-cell
        return False

    def coords(self, q: int):
        cell, rem = divmod(q, 8)
        i, j = divmod(cell, self.cols)
        return i, j, rem // 4, rem % 4


def load_faulty_fixture() -> frozenset:
    """Faulty-qubit ids shipped with the package (newline-separated list)."""
    text = (resources.files("anneal_rbm") / "data" / "faulty_2000q.txt").read_text()
    return frozenset(int(line) for line in text.splitlines()
                     if line.strip() and not line.startswith("#"))


def default_graph(with_faults: bool = True) -> ChimeraGraph:
    """The 2048-qubit (16x16 cells) chip model, with the shipped fault set."""
    faults = load_faulty_fixture() if with_faults else frozenset()
    return ChimeraGraph(rows=16, cols=16, faulty=faults)


@dataclass(frozen=True)
class Embedding:
    """Chain map for every logical unit, replicated over disjoint copies.

    Logical ids are global spin ids (0..n_v-1 visible, then hidden).
    `copies[c][unit]` lists the physical qubit ids of that unit's chain,
    `intra_edges[c][unit]` the chain-internal couplers, and
    `inter_edges[c][(i, j)]` the physical couplers available to carry the
    logical coupling (i, j).
    """

    n_v: int
    n_h: int
    chain_coupling: float
    copies: list
    intra_edges: list
    inter_edges: list

    def __post_init__(self):
        if self.chain_coupling > 0:
            raise ContractViolation("chain coupling J_C must be <= 0")

    @property
    def n_units(self) -> int:
        return self.n_v + self.n_h

    @property
    def n_copies(self) -> int:
        return len(self.copies)

    @property
    def chains(self) -> dict:
        return self.copies[0]


def identity_embedding(n_v: int, n_h: int) -> Embedding:
    """One physical qubit per logical unit; no chains to bind or break."""
    chains = {u: [u] for u in range(n_v + n_h)}
    inter = {(i, n_v + j): [(i, n_v + j)] for i in range(n_v) for j in range(n_h)}
    return Embedding(n_v, n_h, 0.0, [chains], [{u: [] for u in chains}], [inter])


def _block_chains(g: ChimeraGraph, bi: int, bj: int, n_v: int, n_h: int) -> dict:
    chains = {}
    for i in range(n_v):
        chains[i] = [g.qubit_id(bi + r, bj + i // 4, 0, i % 4) for r in range(CHAIN_LEN)]
    for j in range(n_h):
        chains[n_v + j] = [g.qubit_id(bi + j // 4, bj + c, 1, j % 4)
                           for c in range(CHAIN_LEN)]
    return chains


def embed_rbm(g: ChimeraGraph, n_v: int, n_h: int, j_c: float) -> Embedding:
    """Place as many disjoint 4-qubit-chain copies as the fault map allows.

    Designed for the 16+16 layout (whole blocks of 128 qubits); any sizes
    up to 16 units per layer reuse the same block geometry with unused
    chains left idle, so faults on unused qubits do not block a copy.
    """
    if not (1 <= n_v <= 4 * CHAIN_LEN and 1 <= n_h <= 4 * CHAIN_LEN):
        raise EmbeddingError(f"layout supports up to 16+16 units, got {n_v}+{n_h}")
    if g.rows < BLOCK_CELLS or g.cols < BLOCK_CELLS:
        raise EmbeddingError(
            f"graph of {g.rows}x{g.cols} cells cannot host one "
            f"{BLOCK_CELLS}x{BLOCK_CELLS}-cell copy")
    copies, intra_all, inter_all = [], [], []
    blocking = {}
    for bi in range(0, g.rows - BLOCK_CELLS + 1, BLOCK_CELLS):
        for bj in range(0, g.cols - BLOCK_CELLS + 1, BLOCK_CELLS):
            chains = _block_chains(g, bi, bj, n_v, n_h)
            used = {q for qs in chains.values() for q in qs}
            faults = sorted(used & g.faulty)
            if faults:
                blocking[(bi // 4, bj // 4)] = faults
                continue
            intra = {u: [(qs[t], qs[t + 1]) for t in range(len(qs) - 1)]
                     for u, qs in chains.items()}
            inter = {}
            for i in range(n_v):
                for j in range(n_v, n_v + n_h):
                    edges = [(q1, q2) for q1 in chains[i] for q2 in chains[j]
                             if g.has_edge(q1, q2)]
                    inter[(i, j)] = edges
            copies.append(chains)
            intra_all.append(intra)
            inter_all.append(inter)
    if not copies:
        detail = "; ".join(f"block {pos}: faulty qubits {f}"
                           for pos, f in sorted(blocking.items()))
        raise EmbeddingError(f"no fault-free placement exists ({detail})")
    return Embedding(n_v, n_h, j_c, copies, intra_all, inter_all)


@dataclass(frozen=True)
class PhysicalProblem:
    """A logical Ising problem lowered onto embedded hardware qubits.

    Qubits are re-indexed densely over the union of all copies.
    `copy_chains[c][unit]` lists dense indices. Problem couplings/fields
    use the logical sign convention; chain edges carry `chain_coupling`
    additively (see module docstring).
    """

    n_v: int
    n_h: int
    alpha: float
    qubit_ids: np.ndarray          # dense index -> original hardware id
    problem_couplings: dict        # (p, q) dense -> value
    fields: np.ndarray             # dense, length n_qubits
    chain_edges: list              # [(p, q), ...] dense
    chain_coupling: float
    copy_chains: list              # per copy: {unit: [dense qubit, ...]}

    @property
    def n_qubits(self) -> int:
        return self.qubit_ids.size

    @property
    def n_copies(self) -> int:
        return len(self.copy_chains)

    def energy(self, x: np.ndarray) -> float:
        """Composite physical energy of one dense spin vector."""
        x = np.asarray(x, dtype=float)
        prob = sum(val * x[p] * x[q] for (p, q), val in self.problem_couplings.items())
        prob += self.fields @ x
        chain = sum(x[p] * x[q] for p, q in self.chain_edges)
        return float(-prob + self.chain_coupling * chain)


def lower_problem(problem: IsingProblem, emb: Embedding) -> PhysicalProblem:
    """Split logical couplings/fields uniformly over the embedded hardware.

    Each logical coupling is divided equally among the physical edges
    between the two chains; each logical field equally among the chain's
    qubits; chain-internal edges get J_C. Replicated across all copies.
    """
    if problem.n_v != emb.n_v or problem.n_h != emb.n_h:
        raise ContractViolation("problem size does not match embedding")
    all_qubits = sorted({q for chains in emb.copies for qs in chains.values()
                         for q in qs})
    dense = {q: idx for idx, q in enumerate(all_qubits)}
    fields = np.zeros(len(all_qubits))
    couplings: dict = {}
    chain_edges = []
    copy_chains = []
    for c, chains in enumerate(emb.copies):
        copy_chains.append({u: [dense[q] for q in qs] for u, qs in chains.items()})
        for u, qs in chains.items():
            share = problem.fields[u] / len(qs)
            for q in qs:
                fields[dense[q]] += share
        for u, edges in emb.intra_edges[c].items():
            for q1, q2 in edges:
                chain_edges.append((dense[q1], dense[q2]))
        for (i, j), val in problem.couplings.items():
            edges = emb.inter_edges[c].get((i, j), [])
            if not edges:
                raise EmbeddingError(
                    f"no physical edge carries logical coupling ({i},{j})")
            share = val / len(edges)
            for q1, q2 in edges:
                key = (dense[q1], dense[q2]) if dense[q1] < dense[q2] else (dense[q2], dense[q1])
                couplings[key] = couplings.get(key, 0.0) + share
    return PhysicalProblem(
        n_v=problem.n_v, n_h=problem.n_h, alpha=problem.alpha,
        qubit_ids=np.array(all_qubits, dtype=np.int64),
        problem_couplings=couplings, fields=fields,
        chain_edges=chain_edges, chain_coupling=emb.chain_coupling,
        copy_chains=copy_chains)


@dataclass(frozen=True)
class PhysicalSample:
    """Raw spins of one copy, aligned with `qubit_ids`."""

    qubit_ids: np.ndarray
    spins: np.ndarray

    def spin_of(self, qubit: int) -> int:
        pos = np.searchsorted(self.qubit_ids, qubit)
        return int(self.spins[pos])


def resolve_chain_matrix(chain_spins: np.ndarray, policy: str,
                         rng: np.random.Generator):
    """Vectorized chain resolution.

    `chain_spins` has shape (n_samples, n_units, chain_len). Returns
    (logical spins (n_samples, n_units) int8, break counts (n_samples,),
    keep mask (n_samples,) under 'discard', all-true under 'majority-vote').
    """
    if policy not in ("majority-vote", "discard"):
        raise ContractViolation(f"unknown chain policy {policy!r}")
    sums = chain_spins.sum(axis=2)
    chain_len = chain_spins.shape[2]
    broken = np.abs(sums) != chain_len
    counts = broken.sum(axis=1)
    logical = np.sign(sums).astype(np.int8)
    ties = logical == 0
    if ties.any():
        coins = rng.random(int(ties.sum()))
        logical[ties] = np.where(coins < 0.5, 1, -1).astype(np.int8)
    keep = (counts == 0) if policy == "discard" else np.ones(len(counts), dtype=bool)
    return logical, counts, keep


def resolve_chains(sample: PhysicalSample, emb: Embedding, policy: str,
                   rng: np.random.Generator, copy: int = 0):
    """Resolve one copy's sample to a logical spin vector.

    Under 'majority-vote', 3-1 splits take the majority and 2-2 ties a
    fair coin from `rng`; under 'discard' any break returns None. The
    second element of the returned pair is the break count either way.
    """
    chains = emb.copies[copy]
    mat = np.empty((1, emb.n_units, len(chains[0])), dtype=np.int8)
    for u in range(emb.n_units):
        for t, q in enumerate(chains[u]):
            mat[0, u, t] = sample.spin_of(q)
    logical, counts, keep = resolve_chain_matrix(mat, policy, rng)
    if not keep[0]:
        return None, int(counts[0])
    return logical[0], int(counts[0])


def save_embedding(emb: Embedding, path) -> None:
    """Text export: 'logical_id: q1 q2 q3 q4 [copy k]' per chain."""
    with open(path, "w") as fh:
        fh.write(f"# embedding n_v={emb.n_v} n_h={emb.n_h} "
                 f"j_c={emb.chain_coupling:.17g} copies={emb.n_copies}\n")
        for c, chains in enumerate(emb.copies):
            for u in sorted(chains):
                qs = " ".join(str(q) for q in chains[u])
                fh.write(f"{u}: {qs} [copy {c}]\n")
