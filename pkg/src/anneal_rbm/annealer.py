"""Annealer emulator: schedule types and forward/reverse sampling.

The emulator's contract is the effective-temperature hypothesis: given a
physical problem and a schedule, returned samples approximate the
Boltzmann law of the problem energy at dimensionless temperature `t_eff`.
The transverse-field dynamics of real hardware are not simulated; their
delocalizing effect is emulated by inverse-temperature ladders along the
schedule. The problem part follows

    beta_p(s) = min(sqrt(s / (1 - s + 1e-3)), 1) / t_eff

rising from ~0 and saturating at the freeze-out target 1/t_eff, so with
growing sweep budgets the sample law converges to Boltzmann at t_eff.
Chain bonds are programmed in hardware units and stiffen with the full
envelope growth, beta_c(s) = 50 s^2 / t_eff: chains hold together through
a pause at s = 0.2, and breaks freeze out and heal toward s = 1, as the
strong fixed J_C makes them do on hardware. At s = 1 spin flips are
forbidden outright. Whole-chain Metropolis moves keep logical mixing
alive while chains are stiff; for 1-qubit chains they are skipped.

Reverse mode starts every replica from a caller-supplied classical
configuration (all chain qubits unanimous), relaxes through the dip and
pause, and re-anneals, performing a bounded local search around the
start.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._mc import run_anneal
from .chimera import PhysicalProblem, resolve_chain_matrix
from .errors import ContractViolation

SCHEDULE_EPS = 1e-3
PROBLEM_BETA_CAP = 1.0   # times 1/t_eff: the effective-temperature target
CHAIN_BETA_CAP = 50.0    # times 1/t_eff: cap of the late-anneal stiffening
# Steepness of the problem beta(s) ladder: rises like
# (s/(1-s+eps))**gamma and saturates at the cap. Calibrated so a pause at
# s = 0.2 relaxes partially (local search) while forward anneals still
# equilibrate; not a user-facing knob.
BETA_GAMMA = 0.5
# Chain bonds are programmed in hardware units and feel the full envelope
# growth: their ladder rises as cap * s**2, so chains are already stiff at
# a paused s = 0.2 (logical moves then go through whole-chain flips) and
# breaks freeze out and heal towards s = 1.
CHAIN_BETA_EXP = 2.0


@dataclass(frozen=True)
class AnnealSchedule:
    """Piecewise-linear s(t); times in microseconds, s in [0, 1]."""

    points: tuple  # ((t, s), ...)
    mode: str  # 'forward' or 'reverse'

    def __post_init__(self):
        pts = tuple((float(t), float(s)) for t, s in self.points)
        if len(pts) < 2:
            raise ContractViolation("schedule needs at least two breakpoints")
        times = [t for t, _ in pts]
        svals = [s for _, s in pts]
        if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
            raise ContractViolation("breakpoint times must strictly increase")
        if any(s < 0 or s > 1 for s in svals):
            raise ContractViolation("s must stay in [0, 1]")
        if self.mode == "forward":
            if svals[0] != 0.0 or svals[-1] != 1.0:
                raise ContractViolation("forward schedule must run s: 0 -> 1")
        elif self.mode == "reverse":
            if svals[0] != 1.0 or svals[-1] != 1.0:
                raise ContractViolation("reverse schedule must start and end at s = 1")
            if any(s <= 0.0 for s in svals[1:-1]):
                raise ContractViolation("reverse schedule interior needs s > 0")
        else:
            raise ContractViolation(f"unknown schedule mode {self.mode!r}")
        object.__setattr__(self, "points", pts)

    @property
    def duration(self) -> float:
        return self.points[-1][0] - self.points[0][0]

    def s_at(self, t) -> np.ndarray:
        times = np.array([p[0] for p in self.points])
        svals = np.array([p[1] for p in self.points])
        return np.interp(t, times, svals)


def make_schedule(kind: str, *params) -> AnnealSchedule:
    """forward(t_total) or reverse(t_down, t_pause, t_up, s_pause)."""
    if kind == "forward":
        (t_total,) = params
        if t_total <= 0:
            raise ContractViolation("annealing time must be positive")
        return AnnealSchedule(((0.0, 0.0), (float(t_total), 1.0)), "forward")
    if kind == "reverse":
        t_down, t_pause, t_up, s_pause = params
        if min(t_down, t_pause, t_up) <= 0:
            raise ContractViolation("durations must be positive")
        if not 0.0 < s_pause < 1.0:
            raise ContractViolation("s_pause must lie strictly inside (0, 1)")
        pts = ((0.0, 1.0), (t_down, s_pause),
               (t_down + t_pause, s_pause), (t_down + t_pause + t_up, 1.0))
        return AnnealSchedule(pts, "reverse")
    raise ContractViolation(f"unknown schedule kind {kind!r}")


def default_forward_schedule() -> AnnealSchedule:
    return make_schedule("forward", 2.0)


def default_reverse_schedule() -> AnnealSchedule:
    return make_schedule("reverse", 1.0, 18.0, 1.0, 0.2)


@dataclass(frozen=True)
class EmulatorConfig:
    """Knobs of the emulator, not of the logical problem.

    `t_eff` is the effective dimensionless temperature of the sampled
    Boltzmann law in physical-problem units. `sweeps_per_microsecond`
    converts schedule time to Metropolis sweeps (calibrated for the
    fidelity acceptance tests; physical time has no intrinsic sweep
    equivalent). Noise SDs perturb programmed couplings/fields once per
    cycle, modeling per-cycle hardware parameter noise.
    """

    t_eff: float = 1.0
    sweeps_per_microsecond: float = 10.0
    field_noise_sd: float = 0.0
    coupling_noise_sd: float = 0.0

    def __post_init__(self):
        if self.t_eff <= 0:
            raise ContractViolation("t_eff must be > 0")
        if self.sweeps_per_microsecond < 1:
            raise ContractViolation("sweep rate must be >= 1 per microsecond")
        if self.field_noise_sd < 0 or self.coupling_noise_sd < 0:
            raise ContractViolation("noise SDs must be >= 0")


@dataclass(frozen=True)
class SampleBatch:
    """Logical binary samples plus per-sample provenance diagnostics."""

    v: np.ndarray            # (n, n_v) uint8
    h: np.ndarray            # (n, n_h) uint8
    copy_ids: np.ndarray     # (n,) which embedded copy produced the sample
    break_counts: np.ndarray  # (n,) broken chains in that copy's raw sample
    schedule: AnnealSchedule
    cycles: int

    def __len__(self) -> int:
        return self.v.shape[0]

    @property
    def break_rate(self) -> float:
        """Fraction of (sample, chain) slots that came back non-unanimous."""
        n_units = self.v.shape[1] + self.h.shape[1]
        total = self.break_counts.size * n_units
        return float(self.break_counts.sum() / total) if total else 0.0

    def to_csv(self, path, header: str | None = None) -> None:
        n_v, n_h = self.v.shape[1], self.h.shape[1]
        cols = ["copy", "breaks"] + [f"v{i}" for i in range(n_v)] + \
               [f"h{j}" for j in range(n_h)]
        with open(path, "w") as fh:
            if header:
                fh.write(f"# {header}\n")
            fh.write(",".join(cols) + "\n")
            for idx in range(len(self)):
                row = [str(int(self.copy_ids[idx])), str(int(self.break_counts[idx]))]
                row += [str(int(x)) for x in self.v[idx]]
                row += [str(int(x)) for x in self.h[idx]]
                fh.write(",".join(row) + "\n")


def _sweep_program(sched: AnnealSchedule, cfg: EmulatorConfig):
    n_sweeps = max(1, int(round(sched.duration * cfg.sweeps_per_microsecond)))
    t0 = sched.points[0][0]
    t_mid = t0 + (np.arange(n_sweeps) + 0.5) * (sched.duration / n_sweeps)
    s = sched.s_at(t_mid)
    ratio = (s / (1.0 - s + SCHEDULE_EPS)) ** BETA_GAMMA
    beta_p = np.minimum(ratio, PROBLEM_BETA_CAP) / cfg.t_eff
    beta_c = CHAIN_BETA_CAP * s ** CHAIN_BETA_EXP / cfg.t_eff
    frozen = s >= 1.0 - 1e-12
    return beta_p, beta_c, frozen


def _kernel_arrays(phys: PhysicalProblem, n_sets: int, cfg: EmulatorConfig,
                   rng: np.random.Generator):
    """Adjacency in padded-list form, with optional per-set noise."""
    n_q = phys.n_qubits
    edges = sorted(phys.problem_couplings.items())
    chain_edges = phys.chain_edges
    adj: list = [[] for _ in range(n_q)]
    for e_idx, ((p, q), _) in enumerate(edges):
        adj[p].append((q, e_idx))
        adj[q].append((p, e_idx))
    deg = max((len(x) for x in adj), default=0)
    nbr_idx = np.full((n_q, max(deg, 1)), -1, dtype=np.int32)
    nbr_edge = np.zeros((n_q, max(deg, 1)), dtype=np.int64)
    for q, lst in enumerate(adj):
        for d, (nb, e_idx) in enumerate(lst):
            nbr_idx[q, d] = nb
            nbr_edge[q, d] = e_idx
    cadj: list = [[] for _ in range(n_q)]
    for e_idx, (p, q) in enumerate(chain_edges):
        cadj[p].append((q, e_idx))
        cadj[q].append((p, e_idx))
    cdeg = max((len(x) for x in cadj), default=0)
    chain_idx = np.full((n_q, max(cdeg, 1)), -1, dtype=np.int32)
    chain_edge = np.zeros((n_q, max(cdeg, 1)), dtype=np.int64)
    for q, lst in enumerate(cadj):
        for d, (nb, e_idx) in enumerate(lst):
            chain_idx[q, d] = nb
            chain_edge[q, d] = e_idx

    base_vals = np.array([val for _, val in edges], dtype=float)
    base_fld = phys.fields.astype(float)
    base_chain = np.full(max(len(chain_edges), 1), phys.chain_coupling, dtype=float)
    nbr_val = np.zeros((n_sets, n_q, nbr_idx.shape[1]))
    fld = np.zeros((n_sets, n_q))
    chain_val = np.zeros((n_sets, n_q, chain_idx.shape[1]))
    for st in range(n_sets):
        vals = base_vals
        flds = base_fld
        chains = base_chain
        if cfg.coupling_noise_sd > 0:
            vals = vals + rng.normal(0, cfg.coupling_noise_sd, vals.shape)
            chains = chains + rng.normal(0, cfg.coupling_noise_sd, chains.shape)
        if cfg.field_noise_sd > 0:
            flds = flds + rng.normal(0, cfg.field_noise_sd, flds.shape)
        if len(edges):
            nbr_val[st] = np.where(nbr_idx >= 0, vals[nbr_edge], 0.0)
        fld[st] = flds
        chain_val[st] = np.where(chain_idx >= 0, chains[chain_edge], 0.0)

    chain_len = len(next(iter(phys.copy_chains[0].values())))
    if chain_len > 1:
        clusters = np.array(
            [chains[u] for chains in phys.copy_chains
             for u in range(phys.n_v + phys.n_h)], dtype=np.int32)
    else:
        clusters = np.zeros((0, 1), dtype=np.int32)
    return nbr_idx, nbr_val, fld, chain_idx, chain_val, clusters


def _resolve_batch(phys: PhysicalProblem, state: np.ndarray, sched, cycles,
                   policy: str, rng: np.random.Generator) -> SampleBatch:
    """Chain-resolve every (cycle, copy) pair, ordered cycle-major."""
    n_units = phys.n_v + phys.n_h
    rows = state.shape[0]
    n_copies = phys.n_copies
    logical = np.empty((rows, n_copies, n_units), dtype=np.int8)
    counts = np.empty((rows, n_copies), dtype=np.int64)
    keep = np.empty((rows, n_copies), dtype=bool)
    for c, chains in enumerate(phys.copy_chains):
        idx = np.array([chains[u] for u in range(n_units)], dtype=np.intp)
        lg, ct, kp = resolve_chain_matrix(state[:, idx], policy, rng)
        logical[:, c] = lg
        counts[:, c] = ct
        keep[:, c] = kp
    flat_keep = keep.reshape(-1)
    bits = ((logical.reshape(-1, n_units)[flat_keep] + 1) // 2).astype(np.uint8)
    copy_ids = np.tile(np.arange(n_copies, dtype=np.int16), rows)[flat_keep]
    return SampleBatch(
        v=bits[:, :phys.n_v], h=bits[:, phys.n_v:],
        copy_ids=copy_ids,
        break_counts=counts.reshape(-1)[flat_keep].astype(np.int32),
        schedule=sched, cycles=cycles)


def _run(phys, state, sched, cfg, rng, n_sets, row_set):
    beta_p, beta_c, frozen = _sweep_program(sched, cfg)
    nbr_idx, nbr_val, fld, chain_idx, chain_val, clusters = \
        _kernel_arrays(phys, n_sets, cfg, rng)
    seed = np.uint64(rng.integers(0, 2**63, dtype=np.int64))
    run_anneal(state, row_set, nbr_idx, nbr_val, fld, chain_idx, chain_val,
               clusters, beta_p, beta_c, frozen, seed)
    return state


def forward_sample(phys: PhysicalProblem, sched: AnnealSchedule, cycles: int,
                   cfg: EmulatorConfig, rng: np.random.Generator,
                   policy: str = "majority-vote") -> SampleBatch:
    """Anneal `cycles` replicas from uniform random spins.

    Each cycle yields one sample per embedded copy; with slow schedules
    and many sweeps the batch law approaches the Boltzmann law of the
    problem at `cfg.t_eff`.
    """
    if sched.mode != "forward":
        raise ContractViolation("forward_sample needs a forward schedule")
    if cycles < 1:
        raise ContractViolation("cycles must be >= 1")
    noisy = cfg.field_noise_sd > 0 or cfg.coupling_noise_sd > 0
    n_sets = cycles if noisy else 1
    row_set = (np.arange(cycles, dtype=np.int32) if noisy
               else np.zeros(cycles, dtype=np.int32))
    state = (rng.integers(0, 2, (cycles, phys.n_qubits)) * 2 - 1).astype(np.int8)
    _run(phys, state, sched, cfg, rng, n_sets, row_set)
    return _resolve_batch(phys, state, sched, cycles, policy, rng)


def reverse_sample(phys: PhysicalProblem, starts, sched: AnnealSchedule,
                   cycles: int, cfg: EmulatorConfig, rng: np.random.Generator,
                   policy: str = "majority-vote") -> SampleBatch:
    """Anneal `cycles` replicas each initialized from a classical start.

    `starts` is a sequence of logical spin vectors (+-1, visible block
    then hidden); cycles take starts round-robin and set every chain
    qubit to the unit's spin. The dip-pause-reanneal schedule relaxes
    the state locally around the start.
    """
    if sched.mode != "reverse":
        raise ContractViolation("reverse_sample needs a reverse schedule")
    starts = np.atleast_2d(np.asarray(starts, dtype=np.int8))
    if starts.shape[0] == 0:
        raise ContractViolation("starts must be nonempty")
    n_units = phys.n_v + phys.n_h
    if starts.shape[1] != n_units:
        raise ContractViolation("start dimension mismatch")
    if not np.isin(starts, (-1, 1)).all():
        raise ContractViolation("starts must be spin vectors over {-1, +1}")
    if cycles < 1:
        raise ContractViolation("cycles must be >= 1")
    noisy = cfg.field_noise_sd > 0 or cfg.coupling_noise_sd > 0
    n_sets = cycles if noisy else 1
    row_set = (np.arange(cycles, dtype=np.int32) if noisy
               else np.zeros(cycles, dtype=np.int32))
    state = np.empty((cycles, phys.n_qubits), dtype=np.int8)
    unit_of = np.empty(phys.n_qubits, dtype=np.intp)
    for chains in phys.copy_chains:
        for u in range(n_units):
            unit_of[chains[u]] = u
    for r in range(cycles):
        state[r] = starts[r % starts.shape[0]][unit_of]
    _run(phys, state, sched, cfg, rng, n_sets, row_set)
    return _resolve_batch(phys, state, sched, cycles, policy, rng)
