"""Figures of merit: average log-likelihood, reconstruction score, the
probability of the dataset configurations, and sample-energy histograms.

All likelihood-type quantities are exact: the partition function is
computed by enumerating the smaller layer (tractable at 16+16), never
approximated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .annealer import SampleBatch
from .errors import ContractViolation
from .rbm import (RbmParams, bit_configs, energy_batch, exact_log_partition,
                  free_energy, gibbs_chain_batch)


def log_likelihood_av(rbm: RbmParams, dataset: np.ndarray) -> float:
    """Mean over the dataset of ln P(v) = -F(v) - ln Z, exact."""
    dataset = np.atleast_2d(np.asarray(dataset, dtype=float))
    ln_z = exact_log_partition(rbm)
    return float(np.mean(-free_energy(rbm, dataset)) - ln_z)


def delta_probability(rbm: RbmParams, dataset: np.ndarray):
    """Model probability mass sitting exactly on the dataset images.

    Returns (total, per_image, bottom_half) where per_image[k] =
    exp(-F(r_k))/Z and bottom_half sums the floor(N/2) smallest entries
    (the 15 less probable images for BAS-4).
    """
    dataset = np.atleast_2d(np.asarray(dataset, dtype=float))
    ln_z = exact_log_partition(rbm)
    per_image = np.exp(-free_energy(rbm, dataset) - ln_z)
    bottom = float(np.sort(per_image)[: dataset.shape[0] // 2].sum())
    return float(per_image.sum()), per_image, bottom


def reconstruction_score(rbm: RbmParams, dataset: np.ndarray, mask_idx,
                         n_g: int, trials: int,
                         rng: np.random.Generator) -> float:
    """Clamped-Gibbs reconstruction accuracy of the free pixels.

    Per image and trial: clamp `mask_idx` pixels to their true values,
    initialize the remaining pixels uniformly at random, run `n_g`
    clamped visible updates, and score the fraction of free pixels that
    match the truth. Averaged over free pixels, trials and images.
    """
    if n_g < 1:
        raise ContractViolation("n_g must be >= 1")
    dataset = np.atleast_2d(np.asarray(dataset, dtype=np.uint8))
    mask_idx = np.asarray(mask_idx, dtype=np.intp)
    free_idx = np.setdiff1d(np.arange(rbm.n_v), mask_idx)
    if free_idx.size == 0:
        raise ContractViolation("clamp mask covers every pixel")
    v0 = np.repeat(dataset, trials, axis=0)
    truth = v0[:, free_idx].copy()
    v0 = v0.copy()
    v0[:, free_idx] = rng.integers(0, 2, (v0.shape[0], free_idx.size))
    v, _ = gibbs_chain_batch(rbm, v0, n_g, rng, clamp_idx=mask_idx)
    return float((v[:, free_idx] == truth).mean())


def reconstruction_score_exact(rbm: RbmParams, dataset: np.ndarray,
                               mask_idx) -> float:
    """Exact expectation of the clamped-Gibbs score at equilibrium.

    Enumerates the free pixels and computes the per-pixel match
    probability under P(free | clamped), the stationary law of the
    clamped chain. Tractable when few pixels are free.
    """
    dataset = np.atleast_2d(np.asarray(dataset, dtype=np.uint8))
    mask_idx = np.asarray(mask_idx, dtype=np.intp)
    free_idx = np.setdiff1d(np.arange(rbm.n_v), mask_idx)
    if free_idx.size == 0:
        raise ContractViolation("clamp mask covers every pixel")
    if free_idx.size > 20:
        raise ContractViolation("too many free pixels to enumerate")
    patterns = bit_configs(free_idx.size)  # (2^k, k)
    scores = []
    for img in dataset:
        v = np.repeat(img[None, :].astype(float), patterns.shape[0], axis=0)
        v[:, free_idx] = patterns
        log_w = -free_energy(rbm, v)
        log_w -= log_w.max()
        p = np.exp(log_w)
        p /= p.sum()
        match = (patterns == img[free_idx].astype(float)).mean(axis=1)
        scores.append(float(p @ match))
    return float(np.mean(scores))


@dataclass(frozen=True)
class EnergyHistogram:
    """Sampled-energy histogram with the exact Boltzmann overlay."""

    edges: np.ndarray
    counts: np.ndarray
    overlay: np.ndarray | None  # exact per-bin probability mass, or None
    min_energy: float
    mean_energy: float


def energy_histogram(rbm: RbmParams, batch: SampleBatch, bins: int = 40,
                     overlay: bool = True) -> EnergyHistogram:
    """Histogram of joint energies over a sample batch.

    When the instance is enumerable the exact T = 1 Boltzmann energy law
    is computed over the same bins for comparison plots.
    """
    if len(batch) == 0:
        raise ContractViolation("batch must be nonempty")
    energies = energy_batch(rbm, batch.v.astype(float), batch.h.astype(float))
    lo, hi = float(energies.min()), float(energies.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    counts, edges = np.histogram(energies, bins=bins, range=(lo, hi))
    overlay_mass = None
    if overlay and min(rbm.n_v, rbm.n_h) <= 20 and rbm.n_v + rbm.n_h <= 26:
        overlay_mass = _exact_energy_law(rbm, edges)
    return EnergyHistogram(edges=edges, counts=counts, overlay=overlay_mass,
                           min_energy=float(energies.min()),
                           mean_energy=float(energies.mean()))


def _exact_energy_law(rbm: RbmParams, edges: np.ndarray) -> np.ndarray:
    """Exact Boltzmann probability mass per histogram bin (joint states)."""
    ln_z = exact_log_partition(rbm)
    mass = np.zeros(edges.size - 1)
    vs = bit_configs(rbm.n_v)
    for h in bit_configs(rbm.n_h):
        e = -(vs @ (rbm.w @ h)) - vs @ rbm.a - rbm.b @ h
        p = np.exp(-e - ln_z)
        inside = (e >= edges[0]) & (e <= edges[-1])
        idx = np.minimum(np.digitize(e[inside], edges) - 1, mass.size - 1)
        np.add.at(mass, idx, p[inside])
    return mass


def metrics_csv(path, rows: list, header: str | None = None) -> None:
    """Write a simple metrics table (list of dicts, shared keys)."""
    if not rows:
        raise ContractViolation("no metric rows to write")
    cols = list(rows[0].keys())
    with open(path, "w") as fh:
        if header:
            fh.write(f"# {header}\n")
        fh.write(",".join(cols) + "\n")
        for row in rows:
            out = []
            for col in cols:
                val = row.get(col)
                out.append("" if val is None else
                           (f"{val:.17g}" if isinstance(val, float) else str(val)))
            fh.write(",".join(out) + "\n")


def per_image_band_csv(path, epochs: list, bands: np.ndarray,
                       header: str | None = None) -> None:
    """Per-image probability trajectories: one row per epoch, one column
    per dataset image (feeds band-style plots)."""
    with open(path, "w") as fh:
        if header:
            fh.write(f"# {header}\n")
        n_img = bands.shape[1]
        fh.write("epoch," + ",".join(f"p_image_{k}" for k in range(n_img)) + "\n")
        for ep, row in zip(epochs, bands):
            fh.write(str(ep) + "," + ",".join(f"{p:.17g}" for p in row) + "\n")
