"""Training loop with pluggable negative-statistics estimators.

Each epoch performs a full-batch update

    w  += eta * (<v h>_data - <v h>_model)
    a  += eta * (<v>_data - <v>_model)
    b  += eta * (<h>_data - <h>_model)

where the data side always uses exact hidden conditionals and the model
side comes from one of: classical alternating Gibbs chains started at the
data vectors (CD-n_g), forward-annealing emulation, reverse-annealing
emulation initialized from data elements, or exact enumeration (small
instances, used for sanity checks).

Randomness is split deterministically from the master seed:
SeedSequence(seed, spawn_key=(0,)) draws the initial parameters,
(1, epoch) drives epoch `epoch`'s sampler, and (2,) drives evaluation.
Identical configs therefore reproduce identical histories bit for bit.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .annealer import (EmulatorConfig, SampleBatch, default_forward_schedule,
                       default_reverse_schedule, forward_sample, reverse_sample)
from .chimera import Embedding, lower_problem
from .errors import ContractViolation
from .ising import binary_to_spin, to_ising
from .rbm import (PairStatistics, RbmParams, conditional, energy_batch,
                  exact_model_statistics, gibbs_chain_batch,
                  positive_statistics)

STREAM_INIT = 0
STREAM_EPOCH = 1
STREAM_EVAL = 2

METHODS = ("classical", "forward", "reverse", "exact")


def stream(seed: int, *key: int) -> np.random.Generator:
    """The documented master-seed splitting scheme."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


@dataclass(frozen=True)
class InitSpec:
    """Truncated-Gaussian initializer for all weights and biases."""

    mu: float = 0.0
    sigma: float = 2.0
    trunc: float = 3.0  # I_W = [-trunc, +trunc], symmetric about 0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ContractViolation("sigma must be > 0")
        if self.trunc <= 0:
            raise ContractViolation("truncation interval must have positive width")


@dataclass(frozen=True)
class TrainConfig:
    n_v: int = 16
    n_h: int = 16
    epochs: int = 1000
    eta: float = 0.15
    alpha: float = 0.32
    method: str = "classical"
    n_g: int = 200                  # classical Gibbs steps per chain
    cycles: int = 150               # annealing cycles per epoch
    init: InitSpec = field(default_factory=InitSpec)
    seed: int = 0
    t_eff: float | None = None      # defaults to alpha: ideal calibration
    sweeps_per_microsecond: float = 10.0
    field_noise_sd: float = 0.0
    coupling_noise_sd: float = 0.0
    forward_anneal_us: float = 2.0
    reverse_steps_us: tuple = (1.0, 18.0, 1.0)
    s_pause: float = 0.2
    chain_policy: str = "majority-vote"
    ll_every: int = 10
    recon_every: int = 100
    recon_trials: int = 20
    recon_n_g: int = 500
    checkpoint_every: int = 100

    def __post_init__(self):
        if self.eta <= 0:
            raise ContractViolation("eta must be > 0")
        if self.epochs < 0:
            raise ContractViolation("epochs must be >= 0")
        if self.method not in METHODS:
            raise ContractViolation(f"method must be one of {METHODS}")
        if self.alpha <= 0:
            raise ContractViolation("alpha must be > 0")

    def emulator_config(self) -> EmulatorConfig:
        return EmulatorConfig(
            t_eff=self.alpha if self.t_eff is None else self.t_eff,
            sweeps_per_microsecond=self.sweeps_per_microsecond,
            field_noise_sd=self.field_noise_sd,
            coupling_noise_sd=self.coupling_noise_sd)


def init_rbm(n_v: int, n_h: int, init: InitSpec, seed_or_rng, mask=None) -> RbmParams:
    """Draw every weight and bias i.i.d. from the truncated Gaussian.

    Rejection sampling keeps the distribution exact; deterministic for a
    fixed seed.
    """
    rng = (seed_or_rng if isinstance(seed_or_rng, np.random.Generator)
           else stream(int(seed_or_rng), STREAM_INIT))
    total = n_v * n_h + n_v + n_h

    def draw(count):
        out = np.empty(count)
        filled = 0
        while filled < count:
            cand = rng.normal(init.mu, init.sigma, count - filled)
            good = cand[np.abs(cand) <= init.trunc]
            out[filled:filled + good.size] = good
            filled += good.size
        return out

    flat = draw(total)
    w = flat[:n_v * n_h].reshape(n_v, n_h)
    a = flat[n_v * n_h:n_v * n_h + n_v]
    b = flat[n_v * n_h + n_v:]
    return RbmParams(n_v, n_h, w, a, b, mask)


def update_step(rbm: RbmParams, pos: PairStatistics, neg: PairStatistics,
                eta: float) -> RbmParams:
    """One steepest-ascent step; masked weights are never written."""
    if pos.vh.shape != (rbm.n_v, rbm.n_h) or neg.vh.shape != pos.vh.shape:
        raise ContractViolation("statistics shape mismatch")
    w = rbm.w + eta * (pos.vh - neg.vh) * rbm.mask
    a = rbm.a + eta * (pos.v_mean - neg.v_mean)
    b = rbm.b + eta * (pos.h_mean - neg.h_mean)
    return rbm.replace_params(w, a, b)


def _stats_from_batch(batch: SampleBatch) -> PairStatistics:
    v = batch.v.astype(float)
    h = batch.h.astype(float)
    return PairStatistics(vh=v.T @ h / len(batch), v_mean=v.mean(axis=0),
                          h_mean=h.mean(axis=0))


def _reverse_starts(rbm: RbmParams, dataset: np.ndarray, cycles: int,
                    rng: np.random.Generator) -> np.ndarray:
    """Start configs per cycle: visible = dataset element (round-robin
    groups), hidden = one exact-conditional Gibbs draw at T = 1."""
    n_d = dataset.shape[0]
    starts = np.empty((cycles, rbm.n_v + rbm.n_h), dtype=np.int8)
    for c in range(cycles):
        r = dataset[c % n_d]
        p_h = conditional(rbm, "hidden", r.astype(float))
        h = (rng.random(rbm.n_h) < p_h).astype(np.uint8)
        starts[c] = binary_to_spin(np.concatenate([r.astype(np.uint8), h]))
    return starts


def negative_statistics(rbm: RbmParams, method: str, rng: np.random.Generator,
                        dataset=None, n_g: int = 200, cycles: int = 150,
                        embedding: Embedding | None = None,
                        alpha: float = 1.0,
                        emulator: EmulatorConfig | None = None,
                        forward_schedule=None, reverse_schedule=None,
                        chain_policy: str = "majority-vote") -> PairStatistics:
    """Estimate the model-side statistics with the chosen estimator."""
    stats, _ = negative_statistics_with_batch(
        rbm, method, rng, dataset=dataset, n_g=n_g, cycles=cycles,
        embedding=embedding, alpha=alpha, emulator=emulator,
        forward_schedule=forward_schedule, reverse_schedule=reverse_schedule,
        chain_policy=chain_policy)
    return stats


def negative_statistics_with_batch(rbm, method, rng, dataset=None, n_g=200,
                                   cycles=150, embedding=None, alpha=1.0,
                                   emulator=None, forward_schedule=None,
                                   reverse_schedule=None,
                                   chain_policy="majority-vote"):
    """As `negative_statistics` but also returns the sample batch (or the
    final Gibbs states) so callers can record sampler diagnostics."""
    if method == "exact":
        return exact_model_statistics(rbm), None
    if method == "classical":
        if dataset is None or len(dataset) == 0:
            raise ContractViolation("classical estimator needs the dataset")
        v, h = gibbs_chain_batch(rbm, np.asarray(dataset, dtype=np.uint8), n_g, rng)
        vf, hf = v.astype(float), h.astype(float)
        stats = PairStatistics(vh=vf.T @ hf / len(vf), v_mean=vf.mean(axis=0),
                               h_mean=hf.mean(axis=0))
        return stats, (v, h)
    if method in ("forward", "reverse"):
        if embedding is None:
            raise ContractViolation(f"{method} estimator needs an embedding")
        emulator = emulator or EmulatorConfig(t_eff=alpha)
        phys = lower_problem(to_ising(rbm, alpha), embedding)
        if method == "forward":
            sched = forward_schedule or default_forward_schedule()
            batch = forward_sample(phys, sched, cycles, emulator, rng,
                                   policy=chain_policy)
        else:
            if dataset is None or len(dataset) == 0:
                raise ContractViolation("reverse estimator needs the dataset")
            sched = reverse_schedule or default_reverse_schedule()
            starts = _reverse_starts(rbm, np.asarray(dataset), cycles, rng)
            batch = reverse_sample(phys, starts, sched, cycles, emulator, rng,
                                   policy=chain_policy)
        return _stats_from_batch(batch), batch
    raise ContractViolation(f"unknown method {method!r}")


@dataclass
class TrainHistory:
    """Per-epoch metric records plus periodic parameter snapshots."""

    records: list = field(default_factory=list)
    checkpoints: dict = field(default_factory=dict)
    final: RbmParams | None = None

    CSV_COLUMNS = ("epoch", "ll_av", "reconstruction", "delta_prob",
                   "break_rate", "min_sample_energy", "delta_bottom",
                   "mean_sample_energy", "weights_md5")

    def to_csv(self, path, header: str | None = None) -> None:
        with open(path, "w") as fh:
            if header:
                fh.write(f"# {header}\n")
            fh.write(",".join(self.CSV_COLUMNS) + "\n")
            for rec in self.records:
                row = []
                for col in self.CSV_COLUMNS:
                    val = rec.get(col)
                    if val is None:
                        row.append("")
                    elif isinstance(val, float):
                        row.append(f"{val:.17g}")
                    else:
                        row.append(str(val))
                fh.write(",".join(row) + "\n")

    def column(self, name):
        return [rec.get(name) for rec in self.records]


def _params_md5(rbm: RbmParams) -> str:
    digest = hashlib.md5()
    digest.update(rbm.w.tobytes())
    digest.update(rbm.a.tobytes())
    digest.update(rbm.b.tobytes())
    return digest.hexdigest()


def train(config: TrainConfig, dataset: np.ndarray,
          embedding: Embedding | None = None,
          mask=None, progress=None) -> TrainHistory:
    """Full training run; returns metrics history and checkpoints.

    `dataset` rows are binary visible vectors. Quantum methods require
    `embedding`. Metrics are evaluated at epoch 0, every `ll_every`
    epochs and at the final epoch; reconstruction on its own cadence.
    """
    from .metrics import delta_probability, log_likelihood_av, reconstruction_score

    dataset = np.asarray(dataset, dtype=np.uint8)
    if dataset.ndim != 2 or dataset.shape[1] != config.n_v:
        raise ContractViolation("dataset vectors must have length n_v")
    rbm = init_rbm(config.n_v, config.n_h, config.init, config.seed, mask)
    history = TrainHistory()
    emulator = config.emulator_config()
    fwd_sched = None
    rev_sched = None
    if config.method == "forward":
        from .annealer import make_schedule
        fwd_sched = make_schedule("forward", config.forward_anneal_us)
    elif config.method == "reverse":
        from .annealer import make_schedule
        down, pause, up = config.reverse_steps_us
        rev_sched = make_schedule("reverse", down, pause, up, config.s_pause)

    def evaluate(epoch: int, batch) -> None:
        rec = {"epoch": epoch, "weights_md5": _params_md5(rbm)}
        rec["ll_av"] = log_likelihood_av(rbm, dataset)
        total, _, bottom = delta_probability(rbm, dataset)
        rec["delta_prob"] = total
        rec["delta_bottom"] = bottom
        if isinstance(batch, SampleBatch):
            rec["break_rate"] = batch.break_rate
            energies = energy_batch(rbm, batch.v.astype(float),
                                    batch.h.astype(float))
            rec["min_sample_energy"] = float(energies.min())
            rec["mean_sample_energy"] = float(energies.mean())
        elif batch is not None:  # classical: (v, h) final Gibbs states
            v, h = batch
            energies = energy_batch(rbm, v.astype(float), h.astype(float))
            rec["min_sample_energy"] = float(energies.min())
            rec["mean_sample_energy"] = float(energies.mean())
        if config.recon_every and (epoch % config.recon_every == 0
                                   or epoch == config.epochs) and epoch > 0:
            from .bas import clamp_mask
            m = int(round(np.sqrt(config.n_v)))
            if m * m == config.n_v:
                rec["reconstruction"] = reconstruction_score(
                    rbm, dataset, clamp_mask(m), config.recon_n_g,
                    config.recon_trials, stream(config.seed, STREAM_EVAL, epoch))
        history.records.append(rec)

    evaluate(0, None)
    history.checkpoints[0] = rbm
    for epoch in range(1, config.epochs + 1):
        rng = stream(config.seed, STREAM_EPOCH, epoch)
        pos = positive_statistics(rbm, dataset)
        neg, batch = negative_statistics_with_batch(
            rbm, config.method, rng, dataset=dataset, n_g=config.n_g,
            cycles=config.cycles, embedding=embedding, alpha=config.alpha,
            emulator=emulator, forward_schedule=fwd_sched,
            reverse_schedule=rev_sched, chain_policy=config.chain_policy)
        rbm = update_step(rbm, pos, neg, config.eta)
        if (epoch % config.ll_every == 0) or epoch == config.epochs:
            evaluate(epoch, batch)
        if config.checkpoint_every and (epoch % config.checkpoint_every == 0
                                        or epoch == config.epochs):
            history.checkpoints[epoch] = rbm
        if progress is not None:
            progress(epoch, rbm)
    history.final = rbm
    return history
