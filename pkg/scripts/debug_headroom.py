"""How much equalizer headroom exists beyond MMSE-LMS on specific channels?"""
import sys
import numpy as np
from polarsim import bp, crc, polar
from polarsim.channel import apply_channel, ebn0_to_sigma2, gen_channel, llr_from_signal
from polarsim.equalizer import align, delay_target, fir_apply, scan_delay, unit_impulse, wiener_filter
from polarsim.harness import EqExperimentConfig, _cma_aligned, _simulate_blocks
from polarsim.polar import frozen_parity_matrix, bpsk_modulate, encode, place_message
from polarsim.training import EqTrainConfig, train_equalizer_blind

code = polar.construct_code(64, 26, 6, 2.0)
spec = crc.CrcSpec.from_string("1100001")
info = code.info_set[:26]
hfroz = frozen_parity_matrix(code)
W = bp.DecoderWeights.load("/tmp/calib_w_crc_synd_64.json")
cfg = EqExperimentConfig()
snr = 12.0
sigma2 = ebn0_to_sigma2(snr, code.rate)

for cs in (5, 0, 3, 1):
    taps_ch = gen_channel([1.5, 2.0, 2.7], 2.0, 1.0, np.random.default_rng(cs))
    rng = np.random.default_rng(300 + cs)
    u_a, x_a, y_a = _simulate_blocks(code, spec, 100, taps_ch, sigma2, rng)
    u_m, x_m, y_m = _simulate_blocks(code, spec, 1500, taps_ch, sigma2, rng)
    def ber_of(f, d):
        x_hat = align(fir_apply(y_m, f), d)
        u_hat, _ = bp.decode(llr_from_signal(x_hat, sigma2), code, W, iters=5, collect_soft=False)
        return float((u_hat[:, info] != u_m[:, info]).mean())
    # genie: LS per delay fit on a huge clean pilot, best by TRUE measurement BER
    rng_g = np.random.default_rng(999)
    u_g, x_g, y_g = _simulate_blocks(code, spec, 400, taps_ch, sigma2, rng_g)
    best = (1.0, None, None)
    for d in range(7):
        w = np.concatenate([np.stack([np.concatenate([np.zeros(l), yb[:64-l]]) for l in range(5)], 1) for yb in y_g])
        dd = np.concatenate([delay_target(xb, d) for xb in x_g])
        f = np.linalg.solve(w.T @ w + 1e-9 * np.eye(5), w.T @ dd)
        b = ber_of(f, d)
        if b < best[0]: best = (b, d, f)
    genie_ber, genie_d, genie_f = best
    print(f"ch{cs}: genie d={genie_d} ber {genie_ber:.5f}", flush=True)
    f0, d0 = _cma_aligned(code, W, cfg, y_a, sigma2, hfroz)
    print(f"   cma d={d0} ber {ber_of(f0, d0):.5f}")
    for tag, eta, ep in (("eta.03/200", 0.03, 200), ("eta.005/600", 0.005, 600)):
        eq_cfg = EqTrainConfig(loss_kind="frozen_synd", eta=eta, epochs=ep,
                               patience=10**9, iters=5)
        f2, rep = train_equalizer_blind(code, W, y_a, sigma2, 5, d0, eq_cfg,
                                        crc_spec=spec, init=f0)
        print(f"   refine {tag}: ber {ber_of(f2, d0):.5f} loss {rep.val_loss[0]:.4f}->{min(rep.val_loss):.4f}")
    # what does the syndrome loss think of the genie filter?
    from polarsim.harness import _frozen_score
    print(f"   frozen-score: cma {_frozen_score(code, W, cfg, y_a, sigma2, hfroz, d0, f0):.4f} "
          f"genie@its-d {_frozen_score(code, W, cfg, y_a, sigma2, hfroz, genie_d, genie_f):.4f}")
print("DONE")
