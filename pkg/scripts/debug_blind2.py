"""Is the LS filter a low-loss point? Which delays work? Easier channels?"""
import sys, time
import numpy as np
from polarsim import bp, crc, polar
from polarsim.channel import ebn0_to_sigma2, gen_channel, llr_from_signal
from polarsim.equalizer import align, fir_apply, scan_delay, unit_impulse
from polarsim.harness import _simulate_blocks
from polarsim.losses import frozen_syndrome_loss, crc_syndrome_loss
from polarsim.polar import frozen_parity_matrix
from polarsim.crc import crc_parity_matrix
from polarsim.training import EqTrainConfig, train_equalizer_blind

code = polar.construct_code(64, 26, 6, 2.0)
spec = crc.CrcSpec.from_string("1100001")
info = code.info_set[:26]
hfroz = frozen_parity_matrix(code)
hcrc = crc_parity_matrix(26, spec)
snr = float(sys.argv[1]); chan_seed = int(sys.argv[2])
sigma2 = ebn0_to_sigma2(snr, code.rate)
taps_ch = gen_channel([1.5, 2.0, 2.7], 2.0, 1.0, np.random.default_rng(chan_seed))
print("channel:", np.round(taps_ch, 3))
rng = np.random.default_rng(100 + chan_seed)
u_a, x_a, y_a = _simulate_blocks(code, spec, 100, taps_ch, sigma2, rng)
u_m, x_m, y_m = _simulate_blocks(code, spec, 2000, taps_ch, sigma2, rng)

def metrics(f, d):
    x_hat = align(fir_apply(y_m, f), d)
    llr = llr_from_signal(x_hat, sigma2)
    u_hat, outs = bp.decode(llr, code, None, iters=5)
    bler = float((u_hat[:, info] != u_m[:, info]).any(axis=1).mean())
    return bler, frozen_syndrome_loss(outs, hfroz), crc_syndrome_loss(outs, hcrc)

print("delay | LS bler | frozloss | crcloss")
best = (1.1, None, None)
for d in range(7):
    _, f = scan_delay(y_a, x_a, 5, delays=[d])
    b, lf, lc = metrics(f, d)
    print(f"  {d}   | {b:7.4f} | {lf:7.4f} | {lc:7.4f}")
    if b < best[0]: best = (b, d, f)
b, d_star, f_star = best
print(f"best LS delay {d_star} bler {b:.4f}")

cfg = EqTrainConfig(loss_kind="frozen_synd", eta=0.03, epochs=300, patience=10**9, iters=5)
fb, rep = train_equalizer_blind(code, None, y_a, sigma2, 5, d_star, cfg, crc_spec=spec,
                                init=unit_impulse(5))
bb, lfb, lcb = metrics(fb, d_star)
print(f"blind@d{d_star} from center: loss {rep.val_loss[0]:.4f}->{min(rep.val_loss):.4f} bler {bb:.4f} frozloss {lfb:.4f}")
fb2, rep2 = train_equalizer_blind(code, None, y_a, sigma2, 5, d_star, cfg, crc_spec=spec,
                                 init=f_star)
bb2, lfb2, _ = metrics(fb2, d_star)
print(f"blind@d{d_star} from LS init: loss {rep2.val_loss[0]:.4f}->{min(rep2.val_loss):.4f} bler {bb2:.4f} frozloss {lfb2:.4f}")
print("DONE")
