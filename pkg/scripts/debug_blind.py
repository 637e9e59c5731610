"""Single-channel deep dive on blind equalizer training dynamics."""

import sys
import time

import numpy as np

from polarsim import bp, crc, polar, training
from polarsim.channel import apply_channel, ebn0_to_sigma2, gen_channel, llr_from_signal
from polarsim.equalizer import align, default_delay, delay_target, fir_apply, lms_train, scan_delay, unit_impulse, wiener_filter
from polarsim.harness import _simulate_blocks
from polarsim.training import EqTrainConfig, gen_blocks, train_equalizer_blind

code = polar.construct_code(64, 26, 6, 2.0)
spec = crc.CrcSpec.from_string("1100001")
info = code.info_set[:26]
rng = np.random.default_rng(7)
snr = float(sys.argv[1]) if len(sys.argv) > 1 else 8.0
chan_seed = int(sys.argv[2]) if len(sys.argv) > 2 else 0
sigma2 = ebn0_to_sigma2(snr, code.rate)
taps_ch = gen_channel([1.5, 2.0, 2.7], 2.0, 1.0, np.random.default_rng(chan_seed))
print("channel:", np.round(taps_ch, 3), "snr", snr, "sigma2", round(sigma2, 3))

M = 100
u_a, x_a, y_a = _simulate_blocks(code, spec, M, taps_ch, sigma2, rng)
u_m, x_m, y_m = _simulate_blocks(code, spec, 3000, taps_ch, sigma2, rng)

def bler_of(f, d):
    x_hat = align(fir_apply(y_m, f), d)
    llr = llr_from_signal(x_hat, sigma2)
    u_hat, _ = bp.decode(llr, code, None, iters=5, collect_soft=False)
    return float((u_hat[:, info] != u_m[:, info]).any(axis=1).mean())

# references
d_scan, f_ls = scan_delay(y_a, x_a, 5)
print(f"LS scan: delay {d_scan}, bler {bler_of(f_ls, d_scan):.4f}")
for d in range(5):
    _, f = scan_delay(y_a, x_a, 5, delays=[d])
    print(f"  LS delay {d}: bler {bler_of(f, d):.4f}")

f = unit_impulse(5, min(d_scan, 4))
for p in range(8):
    for yb, xb in zip(y_a, x_a):
        f = lms_train(f, yb, delay_target(xb, d_scan), 0.02)
    if p in (1, 3, 7):
        print(f"  lms pass {p+1}: bler {bler_of(f, d_scan):.4f}")

for kind in ("frozen_synd", "crc_synd", "bce"):
    for delay in (2, 3):
        for eta, epochs in ((0.03, 150), (0.1, 300), (0.3, 400)):
            t0 = time.perf_counter()
            cfg = EqTrainConfig(loss_kind=kind, eta=eta, epochs=epochs,
                                patience=10**9, iters=5)
            fb, rep = train_equalizer_blind(code, None, y_a, sigma2, 5, delay, cfg,
                                            crc_spec=spec,
                                            u_true=u_a if kind == "bce" else None,
                                            init=unit_impulse(5))
            print(f"{kind:12s} d={delay} eta={eta:4} ep={epochs}: "
                  f"loss {rep.val_loss[0]:.4f}->{min(rep.val_loss):.4f} "
                  f"bler {bler_of(fb, delay):.4f}  ({time.perf_counter()-t0:.0f}s)",
                  flush=True)
print("DONE")
