"""Monte Carlo experiment driver: decoder sweeps, blind-equalizer experiments,
and machine-readable result emission.

Seed discipline: every random draw flows from one master seed through
``numpy.random.SeedSequence`` substreams keyed by (purpose, channel, SNR,
chunk).  Method comparisons reuse the same substreams, so two methods at the
same point see identical noise and channels (paired seeds), and results do
not depend on the thread count.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bp import DecoderWeights, decode
from .channel import ebn0_to_sigma2, gen_channel, apply_channel, llr_from_signal
from .crc import CrcSpec
from .equalizer import (align, cma_train, default_delay, delay_target, fir_apply,
                        lms_train, scan_delay, unit_impulse)
from .losses import frozen_syndrome_loss, mse, soft_syndrome
from .polar import PolarCode, bpsk_modulate, encode, frozen_parity_matrix, place_message
from .training import EqTrainConfig, gen_blocks, online_label_recovery_step, train_equalizer_blind

__all__ = ["StopRule", "SweepPoint", "SweepResult", "wilson_interval",
           "run_decoder_sweep", "run_blind_eq_experiment", "emit_results",
           "parse_results", "EQ_METHODS"]

EQ_METHODS = ("no_eq", "mmse_ts", "mmse_no_ts", "mmse_olr", "cma",
              "blind_synd_froz", "blind_synd_crc", "blind_bce")


@dataclass(frozen=True)
class StopRule:
    """Per-SNR stopping: run until min_block_errors or the block cap."""

    min_block_errors: int = 200
    max_blocks: int = 200_000


@dataclass
class SweepPoint:
    snr_db: float
    bits: int = 0
    blocks: int = 0
    bit_errors: int = 0
    block_errors: int = 0
    mse_sum: float = 0.0
    mse_blocks: int = 0
    cap_hit: bool = False

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits if self.bits else math.nan

    @property
    def bler(self) -> float:
        return self.block_errors / self.blocks if self.blocks else math.nan

    @property
    def mse_mean(self) -> float:
        return self.mse_sum / self.mse_blocks if self.mse_blocks else math.nan

    @property
    def bler_interval(self):
        return wilson_interval(self.block_errors, self.blocks)

    @property
    def ber_interval(self):
        return wilson_interval(self.bit_errors, self.bits)


@dataclass
class SweepResult:
    method: str
    points: list
    meta: dict = field(default_factory=dict)

    def point(self, snr_db: float) -> SweepPoint:
        for p in self.points:
            if abs(p.snr_db - snr_db) < 1e-9:
                return p
        raise KeyError(f"no point at {snr_db} dB")


def wilson_interval(k: int, n: int, z: float = 1.96):
    """95% Wilson score interval for k successes in n trials."""
    if n == 0:
        return (0.0, 1.0)
    p = k / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return (max(center - half, 0.0), min(center + half, 1.0))


def _stream(master_seed: int, *key) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((int(master_seed),) + tuple(int(k) for k in key)))


def _count_errors(point: SweepPoint, code: PolarCode, u_hat, u):
    info = code.info_set[: code.K]
    errs = u_hat[:, info] != u[:, info]
    point.bits += errs.size
    point.blocks += errs.shape[0]
    point.bit_errors += int(errs.sum())
    point.block_errors += int(errs.any(axis=1).sum())


def run_decoder_sweep(code: PolarCode, weights: DecoderWeights | None,
                      snr_list, stop: StopRule, crc_spec: CrcSpec | None = None,
                      iters: int = 5, seed: int = 0, chunk: int = 2000,
                      threads: int = 1, method: str = "bp") -> SweepResult:
    """AWGN Monte Carlo of the encode-BPSK-decode pipeline over a list of Eb/N0 points.

    BER counts the K payload bits only (CRC bits are overhead); a block error
    is any payload-bit error.  Identical seeds give identical noise across
    decoders under comparison.
    """
    t0 = time.perf_counter()
    points = []
    for si, snr in enumerate(snr_list):
        point = SweepPoint(snr_db=float(snr))

        def run_chunk(ci, snr=snr, si=si):
            rng = _stream(seed, 0xD, si, ci)
            n = min(chunk, stop.max_blocks)
            llr, u, _ = gen_blocks(code, crc_spec, n, snr, snr, rng)
            u_hat, _ = decode(llr, code, weights, iters=iters, collect_soft=False)
            return u_hat, u

        ci = 0
        while point.block_errors < stop.min_block_errors and point.blocks < stop.max_blocks:
            n_jobs = max(1, threads)
            if threads > 1:
                with ThreadPoolExecutor(max_workers=threads) as ex:
                    results = list(ex.map(run_chunk, range(ci, ci + n_jobs)))
            else:
                results = [run_chunk(ci)]
            for u_hat, u in results:
                _count_errors(point, code, u_hat, u)
            ci += n_jobs
        point.cap_hit = point.block_errors < stop.min_block_errors
        points.append(point)
    meta = {"kind": "decoder_sweep", "method": method, "seed": int(seed),
            "code": code.to_dict(), "iters": iters,
            "stop": {"min_block_errors": stop.min_block_errors,
                     "max_blocks": stop.max_blocks},
            "wall_clock": time.perf_counter() - t0}
    return SweepResult(method=method, points=points, meta=meta)


@dataclass
class EqExperimentConfig:
    """Channel/equalizer settings for the blind-equalization experiments
    (defaults follow the fading-channel simulation table).

    Blind methods never observe the channel, the transmitted blocks, or any
    pilot.  Filter initialization and decision delay come from a blind
    two-stage protocol: a constant-modulus pre-equalizer, whose inherent
    sign/delay ambiguity is resolved by scoring candidate alignments with
    the frozen-bit syndrome loss of the decoded output, followed by
    syndrome-loss (or BCE, for the supervised baseline) refinement of the
    filter taps through the frozen decoder.
    """

    distances: tuple = (1.5, 2.0, 2.7)
    gamma: float = 2.0
    sigma_h2: float = 1.0
    num_taps: int = 5
    iters: int = 5
    eta_lms: float = 0.02
    eta_cma: float = 0.01
    eta_blind: float = 0.03
    lms_passes: int = 8
    cma_passes: int = 2
    olr_passes: int = 1
    blind_epochs: int = 200
    blind_refine_delays: int = 2
    # "fixed": classic LMS against the training sequence at the default
    # decision delay (the textbook baseline the comparisons are against);
    # "scan": pick the delay per channel by pilot least squares.
    mmse_delay_mode: str = "fixed"
    meas_blocks: int = 400
    meas_chunk: int = 200


def _simulate_blocks(code, crc_spec, n, taps, sigma2, rng):
    payload = rng.integers(0, 2, size=(n, code.K)).astype(np.uint8)
    if crc_spec is not None and code.C > 0:
        from .crc import crc_parity_matrix
        h_info = crc_parity_matrix(code.K, crc_spec)[:, : code.K]
        checks = (payload @ h_info.T.astype(np.int64)) % 2
        payload = np.concatenate([payload, checks.astype(np.uint8)], axis=1)
    u = place_message(code, payload)
    x = bpsk_modulate(encode(code, u))
    y = apply_channel(x, taps, sigma2, rng)
    return u, x, y


def _alignment_score(code, weights, iters, x_hat_aligned, sigma2, h_froz):
    """Blind structural-validity score of an aligned equalizer output: the
    frozen-bit syndrome loss of the decoder's final-iteration soft codeword.

    Final iteration only: after T sweeps BP has filled in the erased block
    tail, so scores stay comparable across candidate decision delays.
    """
    llr = llr_from_signal(x_hat_aligned, sigma2)
    _, outs = decode(llr, code, weights, iters=iters)
    return frozen_syndrome_loss(outs.froz[-1], h_froz)


def _raw_sync_score(x_hat_aligned, sigma2, h_froz):
    """Code-aided sync metric without decoding gain: the fraction of
    violated frozen-bit parity rows on the raw channel LLRs."""
    llr = llr_from_signal(x_hat_aligned, sigma2)
    return float(np.mean(soft_syndrome(llr, h_froz) < 0.0))


def _resolve_sign_delay(f, code, weights, iters, y_blocks, sigma2, h_froz, max_delay):
    """Blind sign/delay resolution for CMA: score candidate alignments with
    the frozen-bit syndrome score of the decoded output (code structure
    only, no ground truth).  Returns ranked (score, sign, delay) tuples."""
    ranked = []
    for sign in (1.0, -1.0):
        x_hat = fir_apply(y_blocks, sign * f)
        for d in range(max_delay + 1):
            score = _alignment_score(code, weights, iters, align(x_hat, d),
                                     sigma2, h_froz)
            ranked.append((score, sign, d))
    ranked.sort(key=lambda t: t[0])
    return ranked


def _adapt_method(method, code, crc_spec, weights, cfg: EqExperimentConfig,
                  sigma2, u_adapt, x_adapt, y_adapt, h_froz, cache=None):
    """Fit one equalizer by the requested method; returns (filter, delay).

    Only the received blocks (plus, for the supervised baselines, the
    transmitted ones) are visible here -- never the channel taps.  ``cache``
    (one dict per channel/SNR cell) lets methods that share blind pipeline
    stages (cma / blind_*) reuse them.
    """
    if cache is None:
        cache = {}
    F = cfg.num_taps
    L = len(cfg.distances)
    delay = default_delay(F, L)
    if method == "no_eq":
        return unit_impulse(F, 0), 0
    if method == "mmse_no_ts":
        d0 = min(delay, F - 1)
        return unit_impulse(F, d0), d0
    if method == "mmse_ts":
        if cfg.mmse_delay_mode == "scan":
            d_star, _ = scan_delay(y_adapt, x_adapt, F)
        else:
            d_star = delay
        f = unit_impulse(F, min(d_star, F - 1))
        for _ in range(cfg.lms_passes):
            for yb, xb in zip(y_adapt, x_adapt):
                f = lms_train(f, yb, delay_target(xb, d_star), cfg.eta_lms)
        return f, d_star
    if method == "mmse_olr":
        f = unit_impulse(F, min(delay, F - 1))
        for _ in range(cfg.olr_passes):
            for yb in y_adapt:
                f = online_label_recovery_step(f, yb, code, weights, cfg.eta_lms,
                                               sigma2, delay, iters=cfg.iters)
        return f, delay
    if method == "cma":
        # constant-modulus taps; the inherent sign/delay ambiguity is
        # resolved by classical code-aided sync on the raw LLRs (no
        # decoding gain -- the decoder-aided alignment belongs to the
        # joint-optimization pipeline)
        f_taps = _cma_taps(cfg, y_adapt, cache)
        best = None
        for sign in (1.0, -1.0):
            x_hat = fir_apply(y_adapt, sign * f_taps)
            for d in range(F + len(cfg.distances) - 1):
                s = _raw_sync_score(align(x_hat, d), sigma2, h_froz)
                if best is None or s < best[0]:
                    best = (s, sign, d)
        return best[1] * f_taps, best[2]
    if method in ("blind_synd_froz", "blind_synd_crc", "blind_bce"):
        kind = {"blind_synd_froz": "frozen_synd", "blind_synd_crc": "crc_synd",
                "blind_bce": "bce"}[method]
        return _blind_fit(kind, code, crc_spec, weights, cfg, sigma2,
                          u_adapt, y_adapt, h_froz, cache)
    raise ValueError(f"unknown method {method!r}")


def _cma_taps(cfg, y_adapt, cache):
    if "cma_taps" not in cache:
        f = unit_impulse(cfg.num_taps)
        for _ in range(cfg.cma_passes):
            for yb in y_adapt:
                f = cma_train(f, yb, cfg.eta_cma)
        cache["cma_taps"] = f
    return cache["cma_taps"]


def _cma_aligned_cached(code, weights, cfg, y_adapt, sigma2, h_froz, cache):
    if "cma_aligned" not in cache:
        cache["cma_aligned"] = _cma_aligned(code, weights, cfg, y_adapt,
                                            sigma2, h_froz,
                                            _cma_taps(cfg, y_adapt, cache))
    return cache["cma_aligned"]


def _blind_fit(kind, code, crc_spec, weights, cfg, sigma2, u_adapt, y_adapt,
               h_froz, cache):
    """Blind equalizer pipeline: CMA pre-equalization, syndrome-scored
    alignment, loss refinement at the top candidate delays, and blind model
    selection of every stage by the frozen-syndrome score."""
    F = cfg.num_taps

    def score(f, d):
        return _alignment_score(code, weights, cfg.iters,
                                align(fir_apply(y_adapt, f), d), sigma2, h_froz)

    def refine(loss_kind, init, d):
        eq_cfg = EqTrainConfig(loss_kind=loss_kind, eta=cfg.eta_blind,
                               epochs=cfg.blind_epochs, iters=cfg.iters)
        f, _ = train_equalizer_blind(code, weights, y_adapt, sigma2, F, d,
                                     eq_cfg, crc_spec=crc_spec,
                                     u_true=u_adapt if loss_kind == "bce" else None,
                                     init=init)
        return f

    (f0, d0), ranked = _cma_aligned_cached(code, weights, cfg, y_adapt,
                                           sigma2, h_froz, cache)
    if kind == "bce":
        best = (score(f0, d0), f0, d0)
        f_r = refine("bce", f0, d0)
        s_r = score(f_r, d0)
        return (f_r, d0) if s_r < best[0] else (f0, d0)
    if "froz_stage" not in cache:
        delays = [d0]
        for _, _sign, d_c in ranked[1:]:
            if d_c not in delays:
                delays.append(d_c)
            if len(delays) == cfg.blind_refine_delays:
                break
        best = (score(f0, d0), f0, d0)
        for d in delays:
            f_r = refine("frozen_synd", f0, d)
            s_r = score(f_r, d)
            if s_r < best[0]:
                best = (s_r, f_r, d)
        cache["froz_stage"] = best
    best = cache["froz_stage"]
    if kind == "crc_synd":
        # CRC stage on top of the structurally-validated filter, accepted
        # only if the frozen-syndrome score strictly improves
        f_c = refine("crc_synd", best[1], best[2])
        s_c = score(f_c, best[2])
        if s_c < best[0] * (1.0 - 1e-3):
            best = (s_c, f_c, best[2])
    return best[1], best[2]


def _cma_aligned(code, weights, cfg, y_adapt, sigma2, h_froz, f):
    """Decoder-aided sign/delay resolution of constant-modulus taps.

    Returns ((filter, best delay), ranked candidate list).
    """
    F = cfg.num_taps
    L = len(cfg.distances)
    ranked = _resolve_sign_delay(f, code, weights, cfg.iters, y_adapt,
                                 sigma2, h_froz, max_delay=F + L - 2)
    _, sign, d = ranked[0]
    return (sign * f, d), ranked


def run_blind_eq_experiment(scenario: str, n_channels: int, n_adapt_blocks: int,
                            methods, snr_list, code: PolarCode,
                            weights: DecoderWeights | None,
                            crc_spec: CrcSpec | None = None,
                            cfg: EqExperimentConfig | None = None,
                            seed: int = 0) -> dict:
    """Fig. 8-10 style experiment: per random channel, adapt each equalizer
    from the same received blocks, then measure BER/BLER/MSE on fresh paired
    blocks through the frozen decode pipeline.  Aggregates over channels.

    scenario "time_invariant" vs "block_fading" differ only in how
    n_adapt_blocks is interpreted by the caller (abundant vs limited); the
    per-channel protocol is identical.
    """
    if scenario not in ("time_invariant", "block_fading"):
        raise ValueError(f"unknown scenario {scenario!r}")
    cfg = cfg or EqExperimentConfig()
    for m in methods:
        if m not in EQ_METHODS:
            raise ValueError(f"unknown method {m!r}")
    t0 = time.perf_counter()
    h_froz = frozen_parity_matrix(code)
    results = {m: SweepResult(method=m, points=[SweepPoint(snr_db=float(s)) for s in snr_list])
               for m in methods}
    for ci in range(n_channels):
        taps_ch = gen_channel(cfg.distances, cfg.gamma, cfg.sigma_h2,
                              _stream(seed, 0xC, ci))
        for si, snr in enumerate(snr_list):
            sigma2 = ebn0_to_sigma2(float(snr), code.rate)
            u_a, x_a, y_a = _simulate_blocks(code, crc_spec, n_adapt_blocks,
                                             taps_ch, sigma2,
                                             _stream(seed, 0xA, ci, si))
            fitted = {}
            cell_cache = {}
            for m in methods:
                fitted[m] = _adapt_method(m, code, crc_spec, weights, cfg,
                                          sigma2, u_a, x_a, y_a, h_froz,
                                          cache=cell_cache)
            done = 0
            chunk_i = 0
            while done < cfg.meas_blocks:
                n = min(cfg.meas_chunk, cfg.meas_blocks - done)
                u_m, x_m, y_m = _simulate_blocks(code, crc_spec, n, taps_ch, sigma2,
                                                 _stream(seed, 0xE, ci, si, chunk_i))
                for m in methods:
                    f, d = fitted[m]
                    x_hat = align(fir_apply(y_m, f), d)
                    llr = llr_from_signal(x_hat, sigma2)
                    u_hat, _ = decode(llr, code, weights, iters=cfg.iters,
                                      collect_soft=False)
                    point = results[m].points[si]
                    _count_errors(point, code, u_hat, u_m)
                    valid = code.N - d
                    point.mse_sum += float(np.mean(
                        (x_m[:, :valid] - x_hat[:, :valid]) ** 2)) * n
                    point.mse_blocks += n
                done += n
                chunk_i += 1
    wall = time.perf_counter() - t0
    for m in methods:
        results[m].meta = {"kind": "blind_eq", "scenario": scenario,
                           "method": m, "seed": int(seed),
                           "n_channels": n_channels,
                           "adapt_blocks": n_adapt_blocks,
                           "code": code.to_dict(),
                           "channel": {"d": list(cfg.distances), "gamma": cfg.gamma,
                                       "sigma_h2": cfg.sigma_h2, "F": cfg.num_taps},
                           "wall_clock": wall}
    return results


def emit_results(results, path) -> list:
    """Write a CSV (spec header), a JSON metadata sidecar, and per-curve
    gnuplot two-column files.  ``results`` is one SweepResult or a list.
    Returns the written paths.  Byte-deterministic for a fixed input.
    """
    if isinstance(results, SweepResult):
        results = [results]
    elif isinstance(results, dict):
        results = [results[k] for k in sorted(results)]
    path = str(path)
    written = [path]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "snr_db", "bits", "blocks", "bit_errors",
                    "block_errors", "ber", "bler", "mse_mean", "seed"])
        for res in results:
            for p in res.points:
                w.writerow([res.method, repr(p.snr_db), p.bits, p.blocks,
                            p.bit_errors, p.block_errors, repr(p.ber),
                            repr(p.bler), repr(p.mse_mean),
                            res.meta.get("seed", 0)])
    meta_path = path + ".meta.json"
    with open(meta_path, "w") as fh:
        json.dump({res.method: res.meta for res in results}, fh, indent=2,
                  sort_keys=True)
        fh.write("\n")
    written.append(meta_path)
    stem, _ = os.path.splitext(path)
    for res in results:
        for metric in ("ber", "bler"):
            dat = f"{stem}.{res.method}.{metric}.dat"
            with open(dat, "w") as fh:
                for p in res.points:
                    fh.write(f"{p.snr_db!r} {getattr(p, metric)!r}\n")
            written.append(dat)
    return written


def parse_results(path) -> list:
    """Read back an emitted CSV as a list of typed row dicts (round-trip)."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append({
                "method": row["method"],
                "snr_db": float(row["snr_db"]),
                "bits": int(row["bits"]),
                "blocks": int(row["blocks"]),
                "bit_errors": int(row["bit_errors"]),
                "block_errors": int(row["block_errors"]),
                "ber": float(row["ber"]),
                "bler": float(row["bler"]),
                "mse_mean": float(row["mse_mean"]),
                "seed": int(row["seed"]),
            })
    return rows
