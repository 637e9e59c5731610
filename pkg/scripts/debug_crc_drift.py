import numpy as np
from polarsim import bp, crc, polar
from polarsim.channel import ebn0_to_sigma2, gen_channel, llr_from_signal
from polarsim.equalizer import align, fir_apply
from polarsim.harness import EqExperimentConfig, _cma_aligned, _simulate_blocks
from polarsim.losses import crc_syndrome_loss, frozen_syndrome_loss
from polarsim.polar import frozen_parity_matrix
from polarsim.crc import crc_parity_matrix
from polarsim.training import EqTrainConfig, train_equalizer_blind

code = polar.construct_code(64, 26, 6, 2.0)
spec = crc.CrcSpec.from_string("1100001")
info = code.info_set[:26]
hfroz = frozen_parity_matrix(code); hcrc = crc_parity_matrix(26, spec)
snr, cs = 8.0, 5
sigma2 = ebn0_to_sigma2(snr, code.rate)
taps_ch = gen_channel([1.5, 2.0, 2.7], 2.0, 1.0, np.random.default_rng(cs))
rng = np.random.default_rng(100 + cs)
u_a, x_a, y_a = _simulate_blocks(code, spec, 100, taps_ch, sigma2, rng)
u_m, x_m, y_m = _simulate_blocks(code, spec, 1500, taps_ch, sigma2, rng)
cfg = EqExperimentConfig()
f0, d0 = _cma_aligned(code, None, cfg, y_a, sigma2, hfroz)
print("cma init d:", d0, "taps:", np.round(f0, 3))

def probe(f, d, tag):
    x_hat = align(fir_apply(y_m, f), d)
    llr = llr_from_signal(x_hat, sigma2)
    u_hat, outs = bp.decode(llr, code, None, iters=5)
    bler = float((u_hat[:, info] != u_m[:, info]).any(axis=1).mean())
    print(f"{tag}: bler {bler:.4f} crcloss {crc_syndrome_loss(outs, hcrc):.4f} "
          f"frozloss {frozen_syndrome_loss(outs, hfroz):.4f} |f| {np.linalg.norm(f):.3f}")

probe(f0, d0, "init ")
for epochs in (25, 50, 100, 200):
    cfgt = EqTrainConfig(loss_kind="crc_synd", eta=0.03, epochs=epochs,
                         patience=10**9, iters=5)
    f, rep = train_equalizer_blind(code, None, y_a, sigma2, 5, d0, cfgt,
                                   crc_spec=spec, init=f0)
    probe(f, d0, f"ep{epochs:3d} (train loss {rep.val_loss[0]:.4f}->{min(rep.val_loss):.4f})")
