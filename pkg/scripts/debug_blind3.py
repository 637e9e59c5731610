"""Test the delay-screening blind protocol across several channels."""
import sys
import numpy as np
from polarsim import bp, crc, polar
from polarsim.channel import ebn0_to_sigma2, gen_channel, llr_from_signal
from polarsim.equalizer import align, fir_apply, scan_delay
from polarsim.harness import EqExperimentConfig, _adapt_method, _simulate_blocks
from polarsim.polar import frozen_parity_matrix

code = polar.construct_code(64, 26, 6, 2.0)
spec = crc.CrcSpec.from_string("1100001")
info = code.info_set[:26]
hfroz = frozen_parity_matrix(code)
snr = float(sys.argv[1]); methods = sys.argv[2].split(",")
wpath = sys.argv[3] if len(sys.argv) > 3 else None
weights = bp.DecoderWeights.load(wpath) if wpath else None
sigma2 = ebn0_to_sigma2(snr, code.rate)
cfg = EqExperimentConfig()

for cs in range(6):
    taps_ch = gen_channel([1.5, 2.0, 2.7], 2.0, 1.0, np.random.default_rng(cs))
    rng = np.random.default_rng(100 + cs)
    u_a, x_a, y_a = _simulate_blocks(code, spec, 100, taps_ch, sigma2, rng)
    u_m, x_m, y_m = _simulate_blocks(code, spec, 1500, taps_ch, sigma2, rng)
    def bler_of(f, d):
        x_hat = align(fir_apply(y_m, f), d)
        u_hat, _ = bp.decode(llr_from_signal(x_hat, sigma2), code, weights, iters=5, collect_soft=False)
        return float((u_hat[:, info] != u_m[:, info]).any(axis=1).mean())
    row = [f"ch{cs} {np.round(taps_ch,2)}"]
    for m in methods:
        f, d = _adapt_method(m, code, spec, weights, cfg, sigma2, u_a, x_a, y_a, hfroz)
        row.append(f"{m}: d={d} bler={bler_of(f, d):.4f}")
    print("  ".join(row), flush=True)
print("DONE")
