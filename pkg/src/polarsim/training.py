"""Training procedures: unsupervised/supervised decoder training, the
syndrome-enabled blind equalizer, and the online-label-recovery baseline.

The unsupervised paths are pure by construction: the syndrome-loss graphs
receive only channel LLRs, the non-frozen index set, and a parity-check
matrix.  Transmitted messages exist only on the data-generation and
validation-measurement side.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from . import diffbp
from .bp import DecoderWeights, decode
from .channel import ebn0_to_sigma2, llr_from_signal
from .crc import CrcSpec, crc_parity_matrix
from .equalizer import align, delay_target, fir_apply, lms_train, unit_impulse
from .losses import bce_loss, crc_syndrome_loss, frozen_syndrome_loss
from .polar import PolarCode, bpsk_modulate, encode, frozen_parity_matrix, place_message

__all__ = ["TrainConfig", "TrainReport", "EqTrainConfig", "sgd_step", "gen_blocks",
           "train_decoder", "train_equalizer_blind", "online_label_recovery_step"]

LOSS_KINDS = ("bce", "frozen_synd", "crc_synd")


@dataclass
class TrainConfig:
    """Hyperparameters for decoder training (defaults follow the experiment setup)."""

    loss_kind: str = "crc_synd"
    eta: float = 0.03
    batch: int = 3600
    epochs: int = 10
    validation_ratio: float = 0.2
    patience: int = 5
    seed: int = 0
    iters: int = 5
    codewords_per_snr: int = 12500
    snr_lo: float = 0.0
    snr_hi: float = 5.0
    snr_points: int = 6
    weights_mode: str = "shared"
    microbatch: int = 600

    def __post_init__(self):
        if self.loss_kind not in LOSS_KINDS:
            raise ValueError(f"loss_kind must be one of {LOSS_KINDS}")
        if self.eta <= 0:
            raise ValueError("learning rate must be positive")
        if not 0.0 <= self.validation_ratio < 1.0:
            raise ValueError("validation_ratio must be in [0, 1)")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class TrainReport:
    """Per-epoch validation traces plus run metadata."""

    val_loss: list = field(default_factory=list)
    val_bler: list = field(default_factory=list)
    best_epoch: int = -1
    wall_clock: float = 0.0
    config: dict = field(default_factory=dict)


def sgd_step(theta: np.ndarray, grad: np.ndarray, eta: float) -> np.ndarray:
    """Plain gradient-descent update theta - eta * grad."""
    theta = np.asarray(theta, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if theta.shape != grad.shape:
        raise ValueError(f"shape mismatch {theta.shape} vs {grad.shape}")
    return theta - eta * grad


def gen_blocks(code: PolarCode, crc_spec: CrcSpec | None, n_blocks: int,
               snr_lo: float, snr_hi: float, rng: np.random.Generator):
    """Random AWGN transmissions: returns (llr, u, snr_db) arrays.

    Per block: K random payload bits, CRC appended when a spec is given,
    polar-encoded, BPSK, AWGN at an Eb/N0 drawn uniformly from the range.
    """
    payload = rng.integers(0, 2, size=(n_blocks, code.K)).astype(np.uint8)
    if crc_spec is not None and code.C > 0:
        h_info = crc_parity_matrix(code.K, crc_spec)[:, : code.K]
        checks = (payload @ h_info.T.astype(np.int64)) % 2
        payload = np.concatenate([payload, checks.astype(np.uint8)], axis=1)
    elif code.C > 0:
        raise ValueError("code reserves CRC positions but no CrcSpec given")
    u = place_message(code, payload)
    x = bpsk_modulate(encode(code, u))
    snr_db = rng.uniform(snr_lo, snr_hi, size=n_blocks)
    sigma2 = ebn0_to_sigma2(snr_db, code.rate)
    noise = rng.normal(0.0, 1.0, size=x.shape) * np.sqrt(sigma2)[:, None]
    llr = 2.0 * (x + noise) / sigma2[:, None]
    return llr, u, snr_db


def _loss_graph_for(kind: str, tape, llr, code, alpha, beta, iters, h_froz, h_crc, u):
    froz, crc, msg = diffbp.decode_on_tape(tape, llr, code, alpha=alpha,
                                           beta=beta, iters=iters)
    if kind == "frozen_synd":
        return diffbp.frozen_loss_graph(froz, h_froz)
    if kind == "crc_synd":
        return diffbp.crc_loss_graph(crc, h_crc)
    return diffbp.bce_loss_graph(u, msg)


def _validation_metrics(kind, llr, u, code, weights, iters, h_froz, h_crc,
                        chunk: int = 8192):
    losses, blers, sizes = [], [], []
    info = code.info_set[: code.K]
    for lo in range(0, llr.shape[0], chunk):
        llr_c, u_c = llr[lo : lo + chunk], u[lo : lo + chunk]
        u_hat, outs = decode(llr_c, code, weights, iters=iters)
        if kind == "frozen_synd":
            loss = frozen_syndrome_loss(outs, h_froz)
        elif kind == "crc_synd":
            loss = crc_syndrome_loss(outs, h_crc)
        else:
            loss = bce_loss(u_c, outs.msg[-1])
        losses.append(loss)
        blers.append(float(np.mean((u_hat[:, info] != u_c[:, info]).any(axis=1))))
        sizes.append(llr_c.shape[0])
    w = np.asarray(sizes, dtype=np.float64)
    w /= w.sum()
    return float(np.dot(w, losses)), float(np.dot(w, blers))


def train_decoder(code: PolarCode, crc_spec: CrcSpec | None, cfg: TrainConfig):
    """Algorithm-1 style decoder training; returns (DecoderWeights, TrainReport).

    Weights start at 1, one SGD step per mini-batch on the configured loss,
    validation split held out, best-validation weights returned, early stop
    after ``patience`` epochs without improvement.
    """
    t0 = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)
    h_froz = frozen_parity_matrix(code)
    h_crc = crc_parity_matrix(code.K, crc_spec) if crc_spec is not None else None
    if cfg.loss_kind == "crc_synd" and h_crc is None:
        raise ValueError("crc_synd training needs a CrcSpec")
    total = cfg.codewords_per_snr * cfg.snr_points
    llr, u, _ = gen_blocks(code, crc_spec, total, cfg.snr_lo, cfg.snr_hi, rng)
    n_val = int(round(total * cfg.validation_ratio))
    llr_val, u_val = llr[:n_val], u[:n_val]
    llr_tr, u_tr = llr[n_val:], u[n_val:]

    if cfg.weights_mode == "shared":
        alpha = np.ones((code.n, code.N))
        beta = np.ones((code.n, code.N))
    else:
        alpha = np.ones((cfg.iters, code.n, code.N))
        beta = np.ones((cfg.iters, code.n, code.N))
    weights = DecoderWeights(alpha, beta, cfg.weights_mode)

    report = TrainReport(config=cfg.to_dict())
    best_loss = np.inf
    best = weights.copy()
    stall = 0
    n_tr = llr_tr.shape[0]
    for epoch in range(cfg.epochs):
        order = rng.permutation(n_tr)
        for lo in range(0, n_tr, cfg.batch):
            sel = order[lo : lo + cfg.batch]
            ga, gb = _batch_gradients(cfg, code, weights, llr_tr[sel], u_tr[sel],
                                      h_froz, h_crc)
            weights.alpha = sgd_step(weights.alpha, ga, cfg.eta)
            weights.beta = sgd_step(weights.beta, gb, cfg.eta)
        val_loss, val_bler = _validation_metrics(cfg.loss_kind, llr_val, u_val,
                                                 code, weights, cfg.iters,
                                                 h_froz, h_crc)
        report.val_loss.append(val_loss)
        report.val_bler.append(val_bler)
        if val_loss < best_loss:
            best_loss = val_loss
            best = weights.copy()
            report.best_epoch = epoch
            stall = 0
        else:
            stall += 1
            if stall >= cfg.patience:
                break
    report.wall_clock = time.perf_counter() - t0
    return best, report


def _batch_gradients(cfg, code, weights, llr, u, h_froz, h_crc):
    """Gradient of the batch-mean loss, accumulated over microbatches."""
    total = llr.shape[0]
    ga = np.zeros_like(weights.alpha)
    gb = np.zeros_like(weights.beta)
    for lo in range(0, total, cfg.microbatch):
        llr_mb = llr[lo : lo + cfg.microbatch]
        u_mb = u[lo : lo + cfg.microbatch]
        tape = ad.Tape()
        if cfg.weights_mode == "shared":
            a_var = tape.param(weights.alpha)
            b_var = tape.param(weights.beta)
            a_arg, b_arg = a_var, b_var
        else:
            a_vars = [tape.param(weights.alpha[t]) for t in range(cfg.iters)]
            b_vars = [tape.param(weights.beta[t]) for t in range(cfg.iters)]
            a_arg, b_arg = a_vars, b_vars
        loss = _loss_graph_for(cfg.loss_kind, tape, llr_mb, code, a_arg, b_arg,
                               cfg.iters, h_froz, h_crc, u_mb)
        grads = tape.backward(loss)
        w = llr_mb.shape[0] / total
        if cfg.weights_mode == "shared":
            ga += w * grads[a_var]
            gb += w * grads[b_var]
        else:
            ga += w * np.stack([grads[v] for v in a_vars])
            gb += w * np.stack([grads[v] for v in b_vars])
    return ga, gb


@dataclass
class EqTrainConfig:
    """Hyperparameters for blind equalizer training."""

    loss_kind: str = "crc_synd"
    eta: float = 0.03
    epochs: int = 150
    patience: int = 15
    min_rel_improvement: float = 1e-4
    iters: int = 5

    def __post_init__(self):
        if self.loss_kind not in LOSS_KINDS:
            raise ValueError(f"loss_kind must be one of {LOSS_KINDS}")


def train_equalizer_blind(code: PolarCode, weights: DecoderWeights | None,
                          y_blocks: np.ndarray, sigma2: float, num_taps: int,
                          delay: int, cfg: EqTrainConfig,
                          crc_spec: CrcSpec | None = None,
                          u_true: np.ndarray | None = None,
                          init: np.ndarray | None = None):
    """Algorithm-2 style blind equalizer training; returns (taps, TrainReport).

    Each epoch treats all M received blocks as one mini-batch: filter, align,
    LLR, T decoder iterations (decoder weights frozen as constants), syndrome
    loss, one SGD step on the taps.  ``u_true`` is only consulted by the
    supervised BCE baseline.
    """
    t0 = time.perf_counter()
    y_blocks = np.atleast_2d(np.asarray(y_blocks, dtype=np.float64))
    h_froz = frozen_parity_matrix(code)
    h_crc = crc_parity_matrix(code.K, crc_spec) if crc_spec is not None else None
    if cfg.loss_kind == "crc_synd" and h_crc is None:
        raise ValueError("crc_synd training needs a CrcSpec")
    if cfg.loss_kind == "bce" and u_true is None:
        raise ValueError("bce training needs the true messages")
    taps = unit_impulse(num_taps) if init is None else np.asarray(init, dtype=np.float64).copy()
    report = TrainReport(config={"loss_kind": cfg.loss_kind, "eta": cfg.eta,
                                 "epochs": cfg.epochs, "delay": delay,
                                 "num_taps": num_taps, "blocks": int(y_blocks.shape[0])})
    best_loss = np.inf
    best_taps = taps.copy()
    stall = 0
    for epoch in range(cfg.epochs):
        tape = ad.Tape()
        h_var = tape.param(taps)
        froz, crc, msg = diffbp.equalizer_chain_graph(tape, y_blocks, h_var, code,
                                                      weights, cfg.iters, sigma2, delay)
        if cfg.loss_kind == "frozen_synd":
            loss = diffbp.frozen_loss_graph(froz, h_froz)
        elif cfg.loss_kind == "crc_synd":
            loss = diffbp.crc_loss_graph(crc, h_crc)
        else:
            loss = diffbp.bce_loss_graph(u_true, msg)
        grads = tape.backward(loss)
        loss_val = float(loss.data)
        report.val_loss.append(loss_val)
        if loss_val < best_loss * (1.0 - cfg.min_rel_improvement):
            stall = 0
        else:
            stall += 1
        if loss_val < best_loss:
            best_loss = loss_val
            best_taps = taps.copy()
            report.best_epoch = epoch
        taps = sgd_step(taps, grads[h_var], cfg.eta)
        if stall >= cfg.patience:
            break
    report.wall_clock = time.perf_counter() - t0
    return best_taps, report


def online_label_recovery_step(f: np.ndarray, y: np.ndarray, code: PolarCode,
                               weights: DecoderWeights | None, eta: float,
                               sigma2: float, delay: int, iters: int = 5) -> np.ndarray:
    """One online-label-recovery update of the equalizer on one received block.

    Equalize, decode, re-encode the hard message, and run an LMS pass with
    the re-encoded codeword as the training target.  Deliberately no check
    that the decode was correct: a wrong decode produces a wrong target.
    """
    x_hat = fir_apply(y, f)
    llr = llr_from_signal(align(x_hat, delay), sigma2)
    u_hat, _ = decode(llr, code, weights, iters=iters, collect_soft=False)
    payload = u_hat[code.info_set]
    u_re = place_message(code, payload)
    x_re = bpsk_modulate(encode(code, u_re))
    return lms_train(f, y, delay_target(x_re, delay), eta)
