"""Loss functions and metrics: soft syndrome, syndrome losses, BCE, MSE.

sign(0) := +1 throughout, matching the decoder's hard-decision rule.
All losses average over any leading batch/iteration axes.
"""

from __future__ import annotations

import numpy as np

__all__ = ["sgn", "soft_syndrome", "syndrome_loss", "frozen_syndrome_loss",
           "crc_syndrome_loss", "bce_loss", "mse"]

_SIGMOID_CLAMP = 1e-12


def sgn(x):
    """Sign with sign(0) = +1."""
    return np.where(np.asarray(x, dtype=np.float64) >= 0.0, 1.0, -1.0)


def _row_supports(H: np.ndarray):
    H = np.asarray(H)
    supports = [np.flatnonzero(row) for row in H]
    for i, sup in enumerate(supports):
        if sup.size == 0:
            raise ValueError(f"parity-check row {i} is empty")
    return supports


def soft_syndrome(s, H) -> np.ndarray:
    """Differentiable syndrome surrogate, one entry per parity-check row.

    Entry i is min_{j in M(i)} |s_j| times the product of sign(s_j) over the
    row support M(i) -- the min-sum check-node rule applied to the rows of H.
    Leading axes of ``s`` are treated as batch axes.
    """
    s = np.asarray(s, dtype=np.float64)
    H = np.asarray(H)
    if s.shape[-1] != H.shape[1]:
        raise ValueError(f"H has {H.shape[1]} columns but s has length {s.shape[-1]}")
    out = np.empty(s.shape[:-1] + (H.shape[0],))
    for i, sup in enumerate(_row_supports(H)):
        vals = s[..., sup]
        out[..., i] = np.abs(vals).min(axis=-1) * sgn(vals).prod(axis=-1)
    return out


def syndrome_loss(s, H) -> float:
    """Hinge penalty mean_i max(1 - softsynd(s, H)_i, 0), averaged over batch axes."""
    return float(np.mean(np.maximum(1.0 - soft_syndrome(s, H), 0.0)))


def frozen_syndrome_loss(outs, H_froz) -> float:
    """Multi-iteration frozen-bit syndrome loss: the per-iteration syndrome
    losses of the codeword-side soft outputs, averaged over iterations."""
    froz = np.asarray(outs.froz if hasattr(outs, "froz") else outs, dtype=np.float64)
    if froz.size == 0:
        raise ValueError("no recorded soft outputs")
    return syndrome_loss(froz, H_froz)


def crc_syndrome_loss(outs, H_crc) -> float:
    """Multi-iteration CRC syndrome loss over the message-side soft outputs
    at the non-frozen indices (ascending index order)."""
    crc = np.asarray(outs.crc if hasattr(outs, "crc") else outs, dtype=np.float64)
    if crc.size == 0:
        raise ValueError("no recorded soft outputs")
    return syndrome_loss(crc, H_crc)


def bce_loss(u, s) -> float:
    """Binary cross-entropy of soft LLR-domain outputs against known bits.

    P(bit = 1) = sigmoid(-s), consistent with the "s >= 0 decodes to 0"
    rule; sigmoid outputs are clamped away from {0, 1} before the log.
    """
    u = np.atleast_1d(np.asarray(u, dtype=np.float64))
    s = np.atleast_1d(np.asarray(s, dtype=np.float64))
    if u.shape != s.shape:
        raise ValueError(f"shape mismatch {u.shape} vs {s.shape}")
    p1 = np.clip(_sigmoid(-s), _SIGMOID_CLAMP, 1.0 - _SIGMOID_CLAMP)
    return float(-np.mean(u * np.log(p1) + (1.0 - u) * np.log(1.0 - p1)))


def mse(x, x_hat) -> float:
    """Mean squared elementwise difference."""
    x = np.asarray(x, dtype=np.float64)
    x_hat = np.asarray(x_hat, dtype=np.float64)
    if x.shape != x_hat.shape:
        raise ValueError(f"shape mismatch {x.shape} vs {x_hat.shape}")
    return float(np.mean((x - x_hat) ** 2))


def _sigmoid(z):
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out
