"""Near-acceptance-scale TI + BF calibration with the final protocol."""
import json, time
import numpy as np
from polarsim import bp, crc, polar
from polarsim.harness import EqExperimentConfig, run_blind_eq_experiment

code = polar.construct_code(64, 26, 6, 2.0)
spec = crc.CrcSpec.from_string("1100001")
W = bp.DecoderWeights.load("/tmp/calib_w_crc_synd_64.json")

def show(tag, results):
    print(f"== {tag}")
    for m, res in results.items():
        print(f"{m:16s} bler " + " ".join(f"{p.bler:9.3e}" for p in res.points))
        print(f"{'':16s} ber  " + " ".join(f"{p.ber:9.3e}" for p in res.points))
        print(f"{'':16s} mse  " + " ".join(f"{p.mse_mean:9.3f}" for p in res.points))
    with open(f"/tmp/calib_final_{tag}.json", "w") as fh:
        json.dump({m: {"snr": [p.snr_db for p in res.points],
                       "bler": [p.bler for p in res.points],
                       "ber": [p.ber for p in res.points],
                       "mse": [p.mse_mean for p in res.points]}
                   for m, res in results.items()}, fh, indent=1)

t0 = time.perf_counter()
cfg = EqExperimentConfig(meas_blocks=600, meas_chunk=300)
ti = run_blind_eq_experiment("time_invariant", 10, 150,
                             ["no_eq", "mmse_ts", "cma", "blind_synd_froz",
                              "blind_synd_crc", "blind_bce"],
                             [4.0, 6.0, 8.0, 10.0, 12.0, 14.0],
                             code, W, spec, cfg, seed=501)
show("ti", ti)
print(f"TI wall {time.perf_counter()-t0:.0f}s", flush=True)

t0 = time.perf_counter()
cfg_bf = EqExperimentConfig(meas_blocks=400, meas_chunk=200)
bf = run_blind_eq_experiment("block_fading", 12, 100,
                             ["mmse_ts", "mmse_olr", "cma", "blind_synd_froz",
                              "blind_synd_crc"],
                             [7.0, 10.0, 13.0, 16.0, 19.0],
                             code, W, spec, cfg_bf, seed=701)
show("bf100", bf)
print(f"BF wall {time.perf_counter()-t0:.0f}s", flush=True)

t0 = time.perf_counter()
bf1 = run_blind_eq_experiment("block_fading", 12, 1,
                              ["mmse_ts", "mmse_no_ts", "mmse_olr", "cma"],
                              [7.0, 10.0, 13.0, 16.0, 19.0],
                              code, W, spec, cfg_bf, seed=703)
show("bf1", bf1)
print(f"BF1 wall {time.perf_counter()-t0:.0f}s", flush=True)
print("DONE")
