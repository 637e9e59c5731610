"""Config file handling: JSON with one block per subsystem, defaults below.

Defaults reproduce the experiment settings: (64, 26, 6) code, CRC polynomial
x^6 + x^5 + 1, 5 BP iterations, 3-tap distance-profile channel, 5-tap
equalizer, SGD at 0.03 with batch 3600 and validation ratio 0.2.
"""

from __future__ import annotations

import copy
import json

__all__ = ["DEFAULTS", "load_config", "merge"]

DEFAULTS = {
    "code": {"N": 64, "K": 26, "C": 6, "design_snr_db": 2.0},
    "crc": {"poly": "1100001"},
    "decoder": {"iters": 5, "weights_mode": "shared", "weights_file": None},
    "channel": {"L": 3, "d": [1.5, 2.0, 2.7], "gamma": 2.0, "sigma_h2": 1.0,
                "seed": None},
    "equalizer": {"F": 5, "eta_lms": 0.02, "eta_cma": 0.01, "eta_blind": 0.03,
                  "lms_passes": 8, "cma_passes": 2, "olr_passes": 1,
                  "blind_epochs": 200},
    "training": {"loss_kind": "crc_synd", "eta": 0.03, "batch": 3600,
                 "epochs": 10, "validation_ratio": 0.2, "patience": 5,
                 "codewords_per_snr": 75_000, "snr_lo": 0.0, "snr_hi": 5.0,
                 "snr_points": 6, "microbatch": 600},
    "sweep": {"snr_list": [0.0, 1.0, 2.0, 3.0, 4.0, 5.0],
              "min_block_errors": 200, "max_blocks": 200_000, "chunk": 2000,
              "scenario": "time_invariant", "n_channels": 10,
              "adapt_blocks": 100, "meas_blocks": 400,
              "methods": ["no_eq", "mmse_ts", "cma", "blind_synd_crc"]},
}


def merge(base: dict, override: dict) -> dict:
    """Recursive dict merge; override wins, unknown keys rejected."""
    out = copy.deepcopy(base)
    for key, val in override.items():
        if key not in base:
            raise KeyError(f"unknown config key: {key!r}")
        if isinstance(base[key], dict) and isinstance(val, dict):
            out[key] = merge(base[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def load_config(path=None) -> dict:
    """Defaults merged with the JSON file at ``path`` (if given)."""
    if path is None:
        return copy.deepcopy(DEFAULTS)
    with open(path) as fh:
        user = json.load(fh)
    return merge(DEFAULTS, user)
