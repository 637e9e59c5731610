import numpy as np
import pytest

from polarsim.bp import DecoderWeights, decode
from polarsim.channel import apply_channel, ebn0_to_sigma2
from polarsim.crc import CrcSpec, crc_check
from polarsim.equalizer import align, delay_target, fir_apply, lms_train, unit_impulse
from polarsim.polar import bpsk_modulate, construct_code, encode, place_message
from polarsim.training import (EqTrainConfig, TrainConfig, gen_blocks,
                               online_label_recovery_step, sgd_step,
                               train_decoder, train_equalizer_blind)


class TestSgd:
    def test_hand_value(self):
        assert sgd_step(np.array([1.0]), np.array([0.5]), 0.03).tolist() == [0.985]

    def test_zero_gradient(self):
        theta = np.array([2.0, -1.0])
        assert np.array_equal(sgd_step(theta, np.zeros(2), 0.1), theta)

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ValueError):
            sgd_step(np.zeros(3), np.zeros(4), 0.1)


class TestConfig:
    def test_rejects_unknown_loss(self):
        with pytest.raises(ValueError):
            TrainConfig(loss_kind="mse")

    def test_rejects_nonpositive_eta(self):
        with pytest.raises(ValueError):
            TrainConfig(eta=0.0)

    def test_rejects_bad_validation_ratio(self):
        with pytest.raises(ValueError):
            TrainConfig(validation_ratio=1.0)


class TestGenBlocks:
    def test_shapes_and_crc_validity(self, code_64, crc6, rng):
        llr, u, snr = gen_blocks(code_64, crc6, 40, 0.0, 5.0, rng)
        assert llr.shape == (40, 64)
        assert u.shape == (40, 64)
        assert snr.shape == (40,)
        assert not u[:, code_64.frozen_set].any()
        for row in u:
            assert crc_check(row[code_64.info_set], crc6)

    def test_needs_crc_spec_when_code_reserves_bits(self, code_64, rng):
        with pytest.raises(ValueError):
            gen_blocks(code_64, None, 4, 0.0, 5.0, rng)

    def test_high_snr_llr_sign_matches_codeword(self, code_16_8, rng):
        llr, u, _ = gen_blocks(code_16_8, None, 20, 14.0, 14.0, rng)
        c = encode(code_16_8, u)
        assert ((llr < 0) == c.astype(bool)).mean() > 0.999


class TestTrainDecoder:
    def test_validation_improves_and_is_reproducible(self, rng):
        code = construct_code(16, 8, 0, 2.0)
        cfg = TrainConfig(loss_kind="frozen_synd", eta=0.05, batch=512,
                          epochs=6, codewords_per_snr=400, snr_points=6,
                          seed=7, microbatch=256, patience=10)
        w1, rep1 = train_decoder(code, None, cfg)
        w2, rep2 = train_decoder(code, None, cfg)
        assert rep1.val_loss == rep2.val_loss
        assert rep1.val_bler == rep2.val_bler
        assert np.array_equal(w1.alpha, w2.alpha)
        assert min(rep1.val_loss) < rep1.val_loss[0]
        assert rep1.best_epoch == int(np.argmin(rep1.val_loss))

    def test_crc_loss_requires_spec(self):
        code = construct_code(16, 8, 0, 2.0)
        with pytest.raises(ValueError):
            train_decoder(code, None, TrainConfig(loss_kind="crc_synd", epochs=1,
                                                  codewords_per_snr=10))

    def test_bce_supervised_runs(self, rng):
        code = construct_code(16, 8, 0, 2.0)
        cfg = TrainConfig(loss_kind="bce", eta=0.05, batch=256, epochs=2,
                          codewords_per_snr=100, seed=3, microbatch=128)
        w, rep = train_decoder(code, None, cfg)
        assert len(rep.val_loss) == 2
        assert w.alpha.shape == (4, 16)

    def test_per_iteration_mode_shapes(self):
        code = construct_code(8, 4, 0, 2.0)
        cfg = TrainConfig(loss_kind="frozen_synd", eta=0.05, batch=128, epochs=1,
                          codewords_per_snr=50, seed=0, microbatch=64,
                          weights_mode="per_iteration", iters=3)
        w, _ = train_decoder(code, None, cfg)
        assert w.mode == "per_iteration"
        assert w.alpha.shape == (3, 3, 8)


class TestTrainEqualizerBlind:
    def test_identity_channel_stays_near_impulse(self, code_16_8, rng):
        sigma2 = ebn0_to_sigma2(6.0, code_16_8.rate)
        llr, u, _ = gen_blocks(code_16_8, None, 60, 6.0, 6.0, rng)
        y = llr * sigma2 / 2.0  # received = noisy bipolar signal, identity channel
        f0 = unit_impulse(5, 0)
        cfg = EqTrainConfig(loss_kind="frozen_synd", eta=0.01, epochs=40, iters=5)
        f, rep = train_equalizer_blind(code_16_8, None, y, sigma2, 5, 0,
                                       cfg, init=f0)
        assert np.abs(f - f0).max() < 0.05
        assert rep.val_loss[-1] <= rep.val_loss[0] + 1e-6

    def test_learns_to_unwind_a_simple_channel(self, code_16_8, rng):
        taps = np.array([0.8, 0.6])
        sigma2 = ebn0_to_sigma2(5.0, code_16_8.rate)
        u = place_message(code_16_8,
                          rng.integers(0, 2, (150, 8)).astype(np.uint8))
        x = bpsk_modulate(encode(code_16_8, u))
        y = apply_channel(x, taps, sigma2, rng)
        cfg = EqTrainConfig(loss_kind="frozen_synd", eta=0.02, epochs=120, iters=5)
        f, rep = train_equalizer_blind(code_16_8, None, y, sigma2, 5, 0, cfg,
                                       init=unit_impulse(5, 0))
        assert rep.val_loss[0] > 0.0
        assert min(rep.val_loss) < rep.val_loss[0] * 0.9

    def test_bce_needs_truth(self, code_16_8, rng):
        with pytest.raises(ValueError):
            train_equalizer_blind(code_16_8, None, np.zeros((3, 16)), 0.5, 5, 0,
                                  EqTrainConfig(loss_kind="bce"))


class TestOnlineLabelRecovery:
    def test_correct_decode_equals_supervised_update(self, code_16_8, rng):
        sigma2 = ebn0_to_sigma2(12.0, code_16_8.rate)
        u = place_message(code_16_8, rng.integers(0, 2, 8).astype(np.uint8))
        x = bpsk_modulate(encode(code_16_8, u))
        y = apply_channel(x, np.array([1.0]), sigma2, rng)
        f0 = unit_impulse(5, 0)
        f_olr = online_label_recovery_step(f0, y, code_16_8, None, 0.01, sigma2, 0)
        f_sup = lms_train(f0, y, delay_target(x, 0), 0.01)
        assert np.array_equal(f_olr, f_sup)

    def test_high_snr_olr_tracks_supervised_lms(self, code_16_8, rng):
        # OLR at 8 dB should be no worse than supervised LMS run 0.2 dB lower
        taps = np.array([0.9, 0.4, 0.15])
        taps = taps / np.linalg.norm(taps)
        delay = 1
        info = code_16_8.info_set

        def ber_of(f, sigma2):
            rng_m = np.random.default_rng(404)
            u = place_message(code_16_8,
                              rng_m.integers(0, 2, (4000, 8)).astype(np.uint8))
            x = bpsk_modulate(encode(code_16_8, u))
            y = apply_channel(x, taps, sigma2, rng_m)
            llr = 2.0 * align(fir_apply(y, f), delay) / sigma2
            u_hat, _ = decode(llr, code_16_8, None, iters=5, collect_soft=False)
            return float((u_hat[:, info] != u[:, info]).mean())

        rng_a = np.random.default_rng(405)
        u = place_message(code_16_8, rng_a.integers(0, 2, (80, 8)).astype(np.uint8))
        x = bpsk_modulate(encode(code_16_8, u))
        s2_hi = ebn0_to_sigma2(8.0, code_16_8.rate)
        s2_lo = ebn0_to_sigma2(7.8, code_16_8.rate)
        noise = rng_a.normal(0, 1.0, x.shape)
        y_hi = apply_channel(x, taps, 0.0) + np.sqrt(s2_hi) * noise
        y_lo = apply_channel(x, taps, 0.0) + np.sqrt(s2_lo) * noise
        f_olr = unit_impulse(5, delay)
        f_sup = unit_impulse(5, delay)
        for _ in range(3):
            for yb in y_hi:
                f_olr = online_label_recovery_step(f_olr, yb, code_16_8, None,
                                                   0.02, s2_hi, delay)
            for yb, xb in zip(y_lo, x):
                f_sup = lms_train(f_sup, yb, delay_target(xb, delay), 0.02)
        assert ber_of(f_olr, s2_hi) <= ber_of(f_sup, s2_lo) + 5e-4

    def test_wrong_decode_biases_update(self, code_16_8, rng):
        sigma2 = ebn0_to_sigma2(-2.0, code_16_8.rate)
        for _ in range(20):
            u = place_message(code_16_8, rng.integers(0, 2, 8).astype(np.uint8))
            x = bpsk_modulate(encode(code_16_8, u))
            y = apply_channel(x, np.array([1.0]), sigma2, rng)
            llr = 2.0 * y / sigma2
            u_hat, _ = decode(llr, code_16_8, None, iters=5)
            if (u_hat != u).any():
                f0 = unit_impulse(5, 0)
                f_olr = online_label_recovery_step(f0, y, code_16_8, None, 0.01,
                                                   sigma2, 0)
                f_sup = lms_train(f0, y, delay_target(x, 0), 0.01)
                assert not np.array_equal(f_olr, f_sup)
                return
        pytest.fail("no decode failure found at -2 dB")
