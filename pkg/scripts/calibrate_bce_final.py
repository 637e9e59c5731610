"""Does final-iteration-only BCE train better in 10 epochs than multi-iteration?"""
import numpy as np
from polarsim import bp, crc, polar, training, diffbp
from polarsim.harness import wilson_interval

# final-iteration BCE variant
orig = diffbp.bce_loss_graph
def bce_final(u, msg_nodes):
    return orig(u, msg_nodes[-1:])
diffbp.bce_loss_graph = bce_final

code = polar.construct_code(64, 26, 6, 2.0)
spec = crc.CrcSpec.from_string("1100001")
cfg = training.TrainConfig(loss_kind="bce", eta=0.03, batch=3600, epochs=10,
                           validation_ratio=0.2, patience=10, seed=0, iters=5,
                           codewords_per_snr=75000, microbatch=600)
w, rep = training.train_decoder(code, spec, cfg)
print("bce-final val_bler:", [round(v, 5) for v in rep.val_bler], flush=True)
w.save("/tmp/calib_w_bce_final_64.json", iters=5)

info = code.info_set[:26]
for test_seed in (1000, 2000, 3000):
    rng = np.random.default_rng(test_seed)
    llr, u, _ = training.gen_blocks(code, spec, 10_000, 4.0, 4.0, rng)
    u_hat, _ = bp.decode(llr, code, w, iters=5, collect_soft=False)
    errs = int((u_hat[:, info] != u[:, info]).any(axis=1).sum())
    u_hat0, _ = bp.decode(llr, code, None, iters=5, collect_soft=False)
    errs0 = int((u_hat0[:, info] != u[:, info]).any(axis=1).sum())
    iv = wilson_interval(errs, 10_000); iv0 = wilson_interval(errs0, 10_000)
    print(f"seed {test_seed}: bce-final {errs/1e4:.4f} {iv} plain {errs0/1e4:.4f} "
          f"sep {iv0[0]-iv[1]:+.4f}", flush=True)
print("DONE")
