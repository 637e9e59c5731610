"""Blind init pipeline test: CMA-align -> OLR polish -> syndrome refinement."""
import sys
import numpy as np
from polarsim import bp, crc, polar
from polarsim.channel import ebn0_to_sigma2, gen_channel, llr_from_signal
from polarsim.equalizer import align, fir_apply, scan_delay, delay_target, lms_train
from polarsim.harness import EqExperimentConfig, _cma_aligned, _frozen_score, _simulate_blocks
from polarsim.polar import frozen_parity_matrix
from polarsim.training import EqTrainConfig, online_label_recovery_step, train_equalizer_blind

code = polar.construct_code(64, 26, 6, 2.0)
spec = crc.CrcSpec.from_string("1100001")
info = code.info_set[:26]
hfroz = frozen_parity_matrix(code)
W = bp.DecoderWeights.load("/tmp/calib_w_crc_synd_64.json")
cfg = EqExperimentConfig()
snr = float(sys.argv[1]) if len(sys.argv) > 1 else 12.0
sigma2 = ebn0_to_sigma2(snr, code.rate)

tot = {"mmse": 0, "cma": 0, "olr_polish": 0, "refined": 0, "blocks": 0}
for cs in range(10):
    taps_ch = gen_channel([1.5, 2.0, 2.7], 2.0, 1.0, np.random.default_rng(cs))
    rng = np.random.default_rng(300 + cs)
    u_a, x_a, y_a = _simulate_blocks(code, spec, 100, taps_ch, sigma2, rng)
    u_m, x_m, y_m = _simulate_blocks(code, spec, 1500, taps_ch, sigma2, rng)

    def ber_of(f, d):
        x_hat = align(fir_apply(y_m, f), d)
        u_hat, _ = bp.decode(llr_from_signal(x_hat, sigma2), code, W, iters=5, collect_soft=False)
        return float((u_hat[:, info] != u_m[:, info]).mean())

    d_s, _ = scan_delay(y_a, x_a, 5)
    from polarsim.equalizer import unit_impulse
    f_m = unit_impulse(5, min(d_s, 4))
    for _ in range(4):
        for yb, xb in zip(y_a, x_a):
            f_m = lms_train(f_m, yb, delay_target(xb, d_s), 0.02)

    f0, d0 = _cma_aligned(code, W, cfg, y_a, sigma2, hfroz)
    # OLR polish with frozen-score guard
    f_p = f0.copy()
    for _ in range(3):
        for yb in y_a:
            f_p = online_label_recovery_step(f_p, yb, code, W, 0.02, sigma2, d0)
    s0 = _frozen_score(code, W, cfg, y_a, sigma2, hfroz, d0, f0)
    sp = _frozen_score(code, W, cfg, y_a, sigma2, hfroz, d0, f_p)
    f1 = f_p if sp <= s0 else f0
    # syndrome refinement
    eq_cfg = EqTrainConfig(loss_kind="frozen_synd", eta=cfg.eta_blind,
                           epochs=cfg.blind_epochs, iters=5)
    f2, _ = train_equalizer_blind(code, W, y_a, sigma2, 5, d0, eq_cfg,
                                  crc_spec=spec, init=f1)
    s2 = _frozen_score(code, W, cfg, y_a, sigma2, hfroz, d0, f2)
    f3 = f2 if s2 <= min(s0, sp) else f1
    n = 1500 * 26
    tot["mmse"] += ber_of(f_m, d_s) * n
    tot["cma"] += ber_of(f0, d0) * n
    tot["olr_polish"] += ber_of(f1, d0) * n
    tot["refined"] += ber_of(f3, d0) * n
    tot["blocks"] += n
    print(f"ch{cs}: mmse {ber_of(f_m, d_s):.5f} cma {ber_of(f0, d0):.5f} "
          f"olr+ {ber_of(f1, d0):.5f} refined {ber_of(f3, d0):.5f}", flush=True)
print({k: round(v / tot["blocks"], 6) for k, v in tot.items() if k != "blocks"})
print("DONE")
