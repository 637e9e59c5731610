"""Calibration: blind-equalizer experiment orderings (criteria 6-8 shapes).

Small-scale first: a handful of channels over a few SNRs, printing BLER/MSE
per method so the SNR grid, training epochs, and step sizes can be tuned.
"""

import json
import sys
import time

import numpy as np

from polarsim import bp, crc, polar
from polarsim.harness import EqExperimentConfig, run_blind_eq_experiment

scenario = sys.argv[1] if len(sys.argv) > 1 else "time_invariant"
n_channels = int(sys.argv[2]) if len(sys.argv) > 2 else 6
adapt = int(sys.argv[3]) if len(sys.argv) > 3 else 100
seed = int(sys.argv[4]) if len(sys.argv) > 4 else 0
snrs = [float(s) for s in sys.argv[5].split(",")] if len(sys.argv) > 5 else [2.0, 4.0, 6.0, 8.0, 10.0]
methods = (sys.argv[6].split(",") if len(sys.argv) > 6 else
           ["no_eq", "mmse_ts", "mmse_no_ts", "mmse_olr", "cma",
            "blind_synd_froz", "blind_synd_crc", "blind_bce"])
wpath = sys.argv[7] if len(sys.argv) > 7 else "/tmp/calib_w_crc_synd_64.json"

code = polar.construct_code(64, 26, 6, 2.0)
spec = crc.CrcSpec.from_string("1100001")
try:
    weights = bp.DecoderWeights.load(wpath)
    print(f"using trained weights {wpath}")
except FileNotFoundError:
    weights = None
    print("using unit weights")

cfg = EqExperimentConfig(meas_blocks=400, meas_chunk=200)
t0 = time.perf_counter()
results = run_blind_eq_experiment(scenario, n_channels, adapt, methods, snrs,
                                  code, weights, spec, cfg, seed=seed)
print(f"wall {time.perf_counter() - t0:.0f}s")
table = {}
for m, res in results.items():
    table[m] = {"bler": [p.bler for p in res.points],
                "ber": [p.ber for p in res.points],
                "mse": [p.mse_mean for p in res.points]}
    print(f"{m:16s} bler " + " ".join(f"{p.bler:9.3e}" for p in res.points))
    print(f"{'':16s} ber  " + " ".join(f"{p.ber:9.3e}" for p in res.points))
    print(f"{'':16s} mse  " + " ".join(f"{p.mse_mean:9.3f}" for p in res.points))
with open(f"/tmp/calib_eq_{scenario}_{adapt}.json", "w") as fh:
    json.dump({"snrs": snrs, "table": table}, fh, indent=1)
print("DONE")
