"""Aggregate check of the upgraded blind pipeline vs mmse at 12 dB, 10 channels."""
import numpy as np
from polarsim import bp, crc, polar
from polarsim.channel import ebn0_to_sigma2, gen_channel, llr_from_signal
from polarsim.equalizer import align, fir_apply
from polarsim.harness import EqExperimentConfig, _adapt_method, _simulate_blocks
from polarsim.polar import frozen_parity_matrix

code = polar.construct_code(64, 26, 6, 2.0)
spec = crc.CrcSpec.from_string("1100001")
info = code.info_set[:26]
hfroz = frozen_parity_matrix(code)
W = bp.DecoderWeights.load("/tmp/calib_w_crc_synd_64.json")
cfg = EqExperimentConfig()
sigma2 = ebn0_to_sigma2(12.0, code.rate)
tots = {}
for cs in range(10):
    taps_ch = gen_channel([1.5, 2.0, 2.7], 2.0, 1.0, np.random.default_rng(cs))
    rng = np.random.default_rng(300 + cs)
    u_a, x_a, y_a = _simulate_blocks(code, spec, 100, taps_ch, sigma2, rng)
    u_m, x_m, y_m = _simulate_blocks(code, spec, 1500, taps_ch, sigma2, rng)
    def ber_of(fd):
        f, d = fd
        x_hat = align(fir_apply(y_m, f), d)
        u_hat, _ = bp.decode(llr_from_signal(x_hat, sigma2), code, W, iters=5, collect_soft=False)
        return float((u_hat[:, info] != u_m[:, info]).mean())
    row = {}
    for m in ("mmse_ts", "cma", "blind_synd_froz", "blind_synd_crc"):
        fd = _adapt_method(m, code, spec, W, cfg, sigma2, u_a, x_a, y_a, hfroz)
        row[m] = ber_of(fd)
        tots[m] = tots.get(m, 0.0) + row[m]
    print(f"ch{cs}: " + "  ".join(f"{m} {v:.5f}" for m, v in row.items()), flush=True)
print("MEAN: " + "  ".join(f"{m} {v/10:.5f}" for m, v in tots.items()))
print("DONE")
