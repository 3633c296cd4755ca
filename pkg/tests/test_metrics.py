import numpy as np
import pytest
from conftest import (all_bits, brute_joint_table, brute_log_partition,
                      random_rbm)

from anneal_rbm.annealer import SampleBatch, default_forward_schedule
from anneal_rbm.bas import clamp_mask, generate_bas
from anneal_rbm.errors import ContractViolation
from anneal_rbm.metrics import (delta_probability, energy_histogram,
                                log_likelihood_av, reconstruction_score,
                                reconstruction_score_exact)
from anneal_rbm.rbm import RbmParams


class TestLogLikelihood:
    def test_zero_model_on_bas4(self):
        ds = generate_bas(4).images
        ll = log_likelihood_av(RbmParams.zeros(16, 16), ds)
        assert ll == pytest.approx(-16 * np.log(2), abs=1e-9)

    def test_peaked_model_near_zero(self):
        ds = generate_bas(2)
        img = ds.images[2]
        a = np.where(img == 1, 30.0, -30.0)
        rbm = RbmParams(4, 1, np.zeros((4, 1)), a, np.zeros(1))
        ll = log_likelihood_av(rbm, img[None, :])
        assert ll == pytest.approx(0.0, abs=1e-6)

    def test_matches_enumeration(self, rng):
        rbm = random_rbm(rng, 4, 4)
        data = rng.integers(0, 2, (6, 4))
        _, _, _, probs = brute_joint_table(rbm)
        marg = probs.sum(axis=1)
        codes = (data * (1 << np.arange(4))).sum(axis=1)
        expected = float(np.mean(np.log(marg[codes])))
        assert log_likelihood_av(rbm, data) == pytest.approx(expected, abs=1e-10)

    def test_invariant_under_hidden_permutation(self, rng):
        rbm = random_rbm(rng, 4, 4)
        data = rng.integers(0, 2, (6, 4))
        perm = rng.permutation(4)
        permuted = RbmParams(4, 4, rbm.w[:, perm], rbm.a, rbm.b[perm])
        assert log_likelihood_av(rbm, data) == pytest.approx(
            log_likelihood_av(permuted, data), abs=1e-12)


class TestDeltaProbability:
    def test_uniform_model_bas4(self):
        ds = generate_bas(4).images
        total, per_image, bottom = delta_probability(RbmParams.zeros(16, 16), ds)
        assert total == pytest.approx(30 / 65536, rel=1e-12)
        assert per_image.sum() == pytest.approx(total)
        assert bottom == pytest.approx(15 / 65536, rel=1e-12)

    def test_matches_enumeration_on_bas2(self, rng):
        ds = generate_bas(2).images
        rbm = random_rbm(rng, 4, 4)
        _, _, _, probs = brute_joint_table(rbm)
        marg = probs.sum(axis=1)
        codes = (ds * (1 << np.arange(4))).sum(axis=1)
        total, per_image, bottom = delta_probability(rbm, ds)
        assert total == pytest.approx(float(marg[codes].sum()), rel=1e-10)
        assert np.allclose(per_image, marg[codes], rtol=1e-10)
        assert bottom == pytest.approx(float(np.sort(marg[codes])[:3].sum()),
                                       rel=1e-10)

    def test_total_in_unit_interval(self, rng):
        ds = generate_bas(4).images
        total, _, _ = delta_probability(random_rbm(rng, 16, 16, scale=0.5), ds)
        assert 0.0 < total < 1.0

    def test_lowering_an_image_energy_raises_its_share(self, rng):
        # metamorphic: boost one image's visible bias alignment
        ds = generate_bas(4).images
        rbm = random_rbm(rng, 16, 16, scale=0.3)
        total0, per0, _ = delta_probability(rbm, ds)
        img = ds[0]
        a = rbm.a + 0.5 * (2 * img.astype(float) - 1)
        boosted = rbm.replace_params(rbm.w, a, rbm.b)
        total1, per1, _ = delta_probability(boosted, ds)
        assert per1[0] > per0[0]


class TestReconstruction:
    def test_pinned_model_reconstructs_its_image(self, rng):
        ds = generate_bas(4)
        img = ds.images[3]
        a = np.where(img == 1, 30.0, -30.0)
        rbm = RbmParams(16, 1, np.zeros((16, 1)), a, np.zeros(1))
        score = reconstruction_score(rbm, img[None, :], clamp_mask(4), 20, 50,
                                     np.random.default_rng(0))
        assert score >= 0.99

    def test_zero_model_is_coin_flip(self):
        ds = generate_bas(4).images
        rbm = RbmParams.zeros(16, 16)
        score = reconstruction_score(rbm, ds, clamp_mask(4), 5, 100,
                                     np.random.default_rng(1))
        assert score == pytest.approx(0.5, abs=0.02)

    def test_exact_oracle_agrees_with_sampler(self, rng):
        # moderate weights: clamped chain equilibrates well within n_g=500
        rbm = random_rbm(rng, 16, 8, scale=0.4)
        ds = generate_bas(4).images
        exact = reconstruction_score_exact(rbm, ds, clamp_mask(4))
        sampled = reconstruction_score(rbm, ds, clamp_mask(4), 500, 60,
                                       np.random.default_rng(2))
        assert sampled == pytest.approx(exact, abs=0.02)

    def test_full_mask_rejected(self, rng):
        rbm = random_rbm(rng, 4, 2)
        with pytest.raises(ContractViolation):
            reconstruction_score(rbm, generate_bas(2).images,
                                 np.arange(4), 5, 5, rng)


def _batch_from_bits(v, h):
    return SampleBatch(v=v.astype(np.uint8), h=h.astype(np.uint8),
                       copy_ids=np.zeros(len(v), dtype=np.int16),
                       break_counts=np.zeros(len(v), dtype=np.int32),
                       schedule=default_forward_schedule(), cycles=len(v))


class TestEnergyHistogram:
    def test_single_config_single_bin(self):
        rbm = RbmParams.zeros(3, 3)
        batch = _batch_from_bits(np.zeros((5, 3)), np.zeros((5, 3)))
        hist = energy_histogram(rbm, batch, bins=7)
        assert hist.counts.sum() == 5
        assert hist.min_energy == 0.0

    def test_exact_sampler_matches_overlay(self, rng):
        # draw exact Boltzmann samples by enumeration, compare per-bin mass
        rbm = random_rbm(rng, 3, 3)
        vs, hs, energies, probs = brute_joint_table(rbm)
        flat = probs.reshape(-1)
        idx = rng.choice(flat.size, size=200_000, p=flat)
        iv, ih = np.unravel_index(idx, probs.shape)
        batch = _batch_from_bits(vs[iv], hs[ih])
        hist = energy_histogram(rbm, batch, bins=12)
        emp = hist.counts / hist.counts.sum()
        # overlay mass restricted to the sampled range, renormalized
        overlay = hist.overlay / hist.overlay.sum()
        assert np.abs(emp - overlay).max() <= 0.01

    def test_empty_batch_rejected(self, rng):
        rbm = random_rbm(rng, 2, 2)
        batch = _batch_from_bits(np.zeros((0, 2)), np.zeros((0, 2)))
        with pytest.raises(ContractViolation):
            energy_histogram(rbm, batch)

    def test_min_energy_reported(self, rng):
        rbm = random_rbm(rng, 3, 3)
        v = rng.integers(0, 2, (50, 3))
        h = rng.integers(0, 2, (50, 3))
        batch = _batch_from_bits(v, h)
        hist = energy_histogram(rbm, batch)
        from anneal_rbm.rbm import energy_batch
        assert hist.min_energy == pytest.approx(
            energy_batch(rbm, v.astype(float), h.astype(float)).min())
