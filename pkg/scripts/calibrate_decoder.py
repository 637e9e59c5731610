"""Calibration: criterion-4 style decoder training at Table-II scale.

Trains BCE / frozen / CRC syndrome decoders for 10 epochs and measures
paired-seed BLER/BER at 4 dB with 10^4 blocks, plus full 0-5 dB curves at
reduced depth.  Writes JSON results for inspection.
"""

import json
import sys
import time

import numpy as np

from polarsim import bp, crc, polar, training
from polarsim.harness import wilson_interval

N = int(sys.argv[1]) if len(sys.argv) > 1 else 64
K = 26 if N == 64 else 58
CW_PER_SNR = int(sys.argv[2]) if len(sys.argv) > 2 else 75000
SEED = int(sys.argv[3]) if len(sys.argv) > 3 else 0

code = polar.construct_code(N, K, 6, 2.0)
spec = crc.CrcSpec.from_string("1100001")
out = {"N": N, "cw_per_snr": CW_PER_SNR, "seed": SEED, "runs": {}}

for kind in ("crc_synd", "frozen_synd", "bce"):
    t0 = time.perf_counter()
    cfg = training.TrainConfig(loss_kind=kind, eta=0.03, batch=3600, epochs=10,
                               validation_ratio=0.2, patience=10, seed=SEED,
                               iters=5, codewords_per_snr=CW_PER_SNR,
                               microbatch=600)
    w, rep = training.train_decoder(code, spec, cfg)
    out["runs"][kind] = {
        "val_loss": rep.val_loss, "val_bler": rep.val_bler,
        "best_epoch": rep.best_epoch, "train_s": time.perf_counter() - t0,
    }
    w.save(f"/tmp/calib_w_{kind}_{N}.json", iters=5)
    print(f"[{time.strftime('%H:%M:%S')}] {kind} N={N}: {out['runs'][kind]['train_s']:.0f}s "
          f"val_bler {rep.val_bler}", flush=True)

# paired test at 4 dB
rng = np.random.default_rng(SEED + 1000)
test_blocks = 10_000
llr, u, _ = training.gen_blocks(code, spec, test_blocks, 4.0, 4.0, rng)
info = code.info_set[: code.K]
weights = {k: bp.DecoderWeights.load(f"/tmp/calib_w_{k}_{N}.json")
           for k in ("crc_synd", "frozen_synd", "bce")}
weights["plain"] = None
out["test_4db"] = {}
for name, w in weights.items():
    u_hat, _ = bp.decode(llr, code, w, iters=5, collect_soft=False)
    errs = u_hat[:, info] != u[:, info]
    blk = int(errs.any(axis=1).sum())
    out["test_4db"][name] = {
        "bler": blk / test_blocks,
        "ber": float(errs.mean()),
        "blk_errors": blk,
        "wilson": wilson_interval(blk, test_blocks),
    }
    print(name, out["test_4db"][name], flush=True)

with open(f"/tmp/calib_decoder_{N}.json", "w") as fh:
    json.dump(out, fh, indent=1)
print("DONE", flush=True)
