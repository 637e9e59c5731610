"""FIR equalization with LMS and CMA adapters.

Decision-delay convention used by the whole receive chain: a filter trained
at delay d produces x_hat[i] that estimates x[i - d].  Decoding consumes the
advanced sequence align(x_hat, d), whose last d samples are unknown and are
handed to the decoder as zero-LLR erasures.
"""

from __future__ import annotations

import numpy as np

from .channel import causal_conv

__all__ = ["unit_impulse", "fir_apply", "default_delay", "align", "delay_target",
           "lms_train", "cma_train", "wiener_filter", "scan_delay"]


def unit_impulse(num_taps: int, tap: int | None = None) -> np.ndarray:
    """Unit-impulse filter; the impulse sits at the center tap by default."""
    if num_taps < 1:
        raise ValueError("need at least one tap")
    coeffs = np.zeros(num_taps)
    coeffs[num_taps // 2 if tap is None else tap] = 1.0
    return coeffs


def fir_apply(y, f) -> np.ndarray:
    """Causal FIR filtering with zero history, output length = input length."""
    return causal_conv(y, f)


def default_delay(num_taps: int, channel_len: int) -> int:
    return max((num_taps + channel_len) // 2 - 1, 0)


def align(x_hat, delay: int) -> np.ndarray:
    """Advance a delay-d equalizer output so index i estimates x[i].

    The tail ``delay`` samples have no estimate and come back as exact
    zeros (erasures under the 2x/sigma^2 LLR map).
    """
    x_hat = np.asarray(x_hat, dtype=np.float64)
    if delay == 0:
        return x_hat.copy()
    out = np.zeros_like(x_hat)
    out[..., :-delay] = x_hat[..., delay:]
    return out


def delay_target(x, delay: int) -> np.ndarray:
    """Training target for a delay-d equalizer: x delayed by d, zero-headed."""
    x = np.asarray(x, dtype=np.float64)
    if delay == 0:
        return x.copy()
    out = np.zeros_like(x)
    out[..., delay:] = x[..., : x.shape[-1] - delay]
    return out


def _windows(y, num_taps):
    """Per-sample regression windows [y_i, y_{i-1}, ..., y_{i-F+1}], zero-padded."""
    y = np.asarray(y, dtype=np.float64)
    n = y.size
    w = np.zeros((n, num_taps))
    for l in range(min(num_taps, n)):
        w[l:, l] = y[: n - l]
    return w


def lms_train(f, y, d, eta: float) -> np.ndarray:
    """One LMS pass over a block: f <- f + eta * e_i * window(i), e_i = d_i - f.window(i)."""
    y = np.asarray(y, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    if y.shape != d.shape:
        raise ValueError("received block and training target differ in length")
    f = np.asarray(f, dtype=np.float64).copy()
    for win, di in zip(_windows(y, f.size), d):
        err = di - f @ win
        f += eta * err * win
    return f


def cma_train(f, y, eta: float, r2: float = 1.0) -> np.ndarray:
    """One constant-modulus pass: f <- f - eta * (x_hat^2 - R2) * x_hat * window.

    R2 defaults to 1 (BPSK Godard constant E|x|^4 / E|x|^2).
    """
    y = np.asarray(y, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64).copy()
    for win in _windows(y, f.size):
        x_hat = f @ win
        f -= eta * (x_hat * x_hat - r2) * x_hat * win
    return f


def wiener_filter(y, d, num_taps: int, ridge: float = 1e-9) -> np.ndarray:
    """Least-squares (normal equations) filter for target d, used by the delay scan."""
    w = _windows(y, num_taps)
    a = w.T @ w + ridge * np.eye(num_taps)
    return np.linalg.solve(a, w.T @ np.asarray(d, dtype=np.float64))


def scan_delay(y, x, num_taps: int, delays=None):
    """Pick the decision delay whose least-squares filter has minimum pilot MSE.

    Returns (delay, filter).  ``y``/``x`` may be (M, N) stacks of pilot
    blocks; windows never cross block boundaries.
    """
    y2 = np.atleast_2d(np.asarray(y, dtype=np.float64))
    x2 = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if delays is None:
        delays = range(num_taps)
    w = np.concatenate([_windows(row, num_taps) for row in y2])
    best = None
    for delay in delays:
        d = np.concatenate([delay_target(row, delay) for row in x2])
        a = w.T @ w + 1e-9 * np.eye(num_taps)
        f = np.linalg.solve(a, w.T @ d)
        resid = float(np.mean((d - w @ f) ** 2))
        if best is None or resid < best[0]:
            best = (resid, int(delay), f)
    return best[1], best[2]
