"""Reverse-mode differentiation tape for the unrolled decoder/equalizer chain.

Define-by-run: operations append array-valued nodes to a Tape in creation
order, which is already a topological order, so the backward pass is a single
reversed walk.  Subgradient conventions are fixed package-wide:

* sign(.) is treated as a locally constant factor (zero derivative through
  the sign itself);
* min / argmin routes the gradient to the argmin input, ties to the lowest
  index (for the two-argument min-sum, ties go to the first argument);
* the hinge max(1 - x, 0) has derivative 0 at the kink x = 1;
* constants (channel LLR scaling, frozen priors, parity-check matrices)
  carry no gradient.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .losses import sgn

__all__ = ["Tape", "Var", "backward", "add", "mul", "scale", "minsum",
           "gather_cols", "gather_rc", "assemble_cols", "shift_cols",
           "fir_causal", "soft_syndrome_rows", "mean_all", "hinge_mean",
           "bce_mean", "mean_of", "grad_check", "GradCheckReport"]


class Var:
    """A node on the tape: forward value plus an accumulated gradient slot."""

    __slots__ = ("data", "grad", "tape", "_parents", "_backward", "is_param")

    def __init__(self, data, tape, parents=(), backward=None, is_param=False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.tape = tape
        self._parents = parents
        self._backward = backward
        self.is_param = is_param

    @property
    def shape(self):
        return self.data.shape

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def _accumulate(self, g):
        g = _unbroadcast(g, self.data.shape)
        if self.grad is None:
            # own the buffer: g may alias an upstream gradient
            self.grad = np.array(g)
        else:
            self.grad += g


class Tape:
    """Ordered record of operations with explicit parameter slots."""

    def __init__(self):
        self.nodes: list[Var] = []
        self.params: list[Var] = []
        self._spent = False

    def param(self, data) -> Var:
        v = Var(data, self, is_param=True)
        self.nodes.append(v)
        self.params.append(v)
        return v

    def _record(self, data, parents, backward_fn) -> Var:
        v = Var(data, self, parents=parents, backward=backward_fn)
        self.nodes.append(v)
        return v

    def backward(self, loss: Var) -> dict:
        """Backpropagate from a scalar loss; returns {param Var: gradient}.

        Every parameter slot gets a gradient buffer, exactly zero when no
        path reaches it.  A tape supports one backward pass.
        """
        if self._spent:
            raise RuntimeError("tape already consumed by a backward pass")
        if loss.tape is not self:
            raise ValueError("loss does not belong to this tape")
        if loss.data.shape != ():
            raise ValueError("loss must be a scalar slot")
        self._spent = True
        loss.grad = np.ones(())
        for node in reversed(self.nodes):
            if node.grad is None or node._backward is None:
                continue
            node._backward(node.grad)
        out = {}
        for p in self.params:
            if p.grad is None:
                p.grad = np.zeros_like(p.data)
            out[p] = p.grad
        return out


def backward(tape: Tape, loss: Var) -> dict:
    return tape.backward(loss)


def _unbroadcast(grad, shape):
    """Reduce a broadcasted gradient back to the original operand shape."""
    g = np.asarray(grad)
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, d in enumerate(shape) if d == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def _tape_of(*args) -> Tape:
    for a in args:
        if isinstance(a, Var):
            return a.tape
    raise TypeError("expected at least one tape Var")


def _data(a):
    return a.data if isinstance(a, Var) else np.asarray(a, dtype=np.float64)


def add(a, b) -> Var:
    tape = _tape_of(a, b)
    out_data = _data(a) + _data(b)

    def back(g):
        if isinstance(a, Var):
            a._accumulate(g)
        if isinstance(b, Var):
            b._accumulate(g)

    return tape._record(out_data, (a, b), back)


def mul(a, b) -> Var:
    tape = _tape_of(a, b)
    da, db = _data(a), _data(b)

    def back(g):
        if isinstance(a, Var):
            a._accumulate(g * db)
        if isinstance(b, Var):
            b._accumulate(g * da)

    return tape._record(da * db, (a, b), back)


def scale(a: Var, k: float) -> Var:
    def back(g):
        a._accumulate(g * k)

    return a.tape._record(a.data * k, (a,), back)


def minsum(a, b) -> Var:
    """Elementwise sign(a) sign(b) min(|a|, |b|); gradient routed to the
    argmin magnitude (ties to the first argument), signs held constant."""
    tape = _tape_of(a, b)
    da, db = _data(a), _data(b)
    sa, sb = sgn(da), sgn(db)
    a_wins = np.abs(da) <= np.abs(db)
    out_data = sa * sb * np.where(a_wins, np.abs(da), np.abs(db))

    def back(g):
        if isinstance(a, Var):
            a._accumulate(np.where(a_wins, sb, 0.0) * g)
        if isinstance(b, Var):
            b._accumulate(np.where(a_wins, 0.0, sa) * g)

    return tape._record(out_data, (a, b), back)


def gather_cols(x: Var, idx) -> Var:
    """Select columns (last axis) by an integer index array."""
    idx = np.asarray(idx)

    def back(g):
        full = np.zeros_like(x.data)
        full[..., idx] = g
        x._accumulate(full)

    return x.tape._record(x.data[..., idx], (x,), back)


def gather_rc(w: Var, row: int, cols) -> Var:
    """Select one row of a 2-D parameter matrix at the given columns."""
    cols = np.asarray(cols)

    def back(g):
        full = np.zeros_like(w.data)
        full[row, cols] = g
        w._accumulate(full)

    return w.tape._record(w.data[row, cols], (w,), back)


def assemble_cols(top: Var, bot: Var, idx_top, idx_bot, width: int) -> Var:
    """Interleave two column blocks into a full-width array along the last axis."""
    idx_top = np.asarray(idx_top)
    idx_bot = np.asarray(idx_bot)
    dt, dbm = _data(top), _data(bot)
    out = np.zeros(dt.shape[:-1] + (width,))
    out[..., idx_top] = dt
    out[..., idx_bot] = dbm

    def back(g):
        if isinstance(top, Var):
            top._accumulate(g[..., idx_top])
        if isinstance(bot, Var):
            bot._accumulate(g[..., idx_bot])

    return _tape_of(top, bot)._record(out, (top, bot), back)


def shift_cols(x: Var, delay: int) -> Var:
    """Advance the last axis by ``delay``: out[..., i] = x[..., i + delay],
    zero-filled past the end (the erased block tail)."""
    if delay < 0:
        raise ValueError("delay must be nonnegative")
    n = x.data.shape[-1]
    out = np.zeros_like(x.data)
    if delay < n:
        out[..., : n - delay] = x.data[..., delay:]

    def back(g):
        full = np.zeros_like(x.data)
        if delay < n:
            full[..., delay:] = g[..., : n - delay]
        x._accumulate(full)

    return x.tape._record(out, (x,), back)


def fir_causal(y: np.ndarray, h: Var) -> Var:
    """Causal FIR filter of constant input blocks by a parameter tap vector.

    ``y`` has shape (..., N); tap l multiplies y delayed by l samples with
    zero history, matching equalizer.fir_apply.
    """
    y = np.asarray(y, dtype=np.float64)
    taps = h.data
    n = y.shape[-1]
    stack = np.zeros((taps.size,) + y.shape)
    stack[0] = y
    for l in range(1, taps.size):
        if l < n:
            stack[l, ..., l:] = y[..., : n - l]
    out = np.tensordot(taps, stack, axes=(0, 0))

    def back(g):
        h._accumulate(np.array([np.sum(g * stack[l]) for l in range(taps.size)]))

    return h.tape._record(out, (h,), back)


def _padded_supports(H):
    """Row supports of a binary matrix padded to a rectangle, plus a mask."""
    H = np.asarray(H)
    sups = [np.flatnonzero(row) for row in H]
    for i, sup in enumerate(sups):
        if sup.size == 0:
            raise ValueError(f"parity-check row {i} is empty")
    width = max(sup.size for sup in sups)
    pad = np.zeros((H.shape[0], width), dtype=np.int64)
    mask = np.zeros((H.shape[0], width), dtype=bool)
    for i, sup in enumerate(sups):
        pad[i, : sup.size] = sup
        mask[i, : sup.size] = True
    return pad, mask


def soft_syndrome_rows(s: Var, H) -> Var:
    """Tape version of losses.soft_syndrome; one output column per row of H.

    The gradient of row i flows only to the argmin-|s_j| position of its
    support (lowest index on ties), scaled by the constant sign pattern.
    """
    H = np.asarray(H)
    pad, mask = _padded_supports(H)
    data = s.data
    flat = data.reshape(-1, data.shape[-1])
    absv = np.abs(flat)[:, pad]                      # (B, rows, width)
    if not mask.all():
        absv[:, ~mask] = np.inf
    k = absv.argmin(axis=-1)                         # (B, rows)
    minabs = np.take_along_axis(absv, k[..., None], axis=-1)[..., 0]
    # sign product per row = parity of negative entries on the row support
    neg_parity = ((flat < 0.0).astype(np.float64) @ H.T.astype(np.float64)) % 2
    prod = 1.0 - 2.0 * neg_parity
    cols = np.take_along_axis(np.broadcast_to(pad, absv.shape[:1] + pad.shape),
                              k[..., None], axis=-1)[..., 0]
    minsign = sgn(np.take_along_axis(flat, cols, axis=-1))
    out = (minabs * prod).reshape(data.shape[:-1] + (pad.shape[0],))

    def back(g):
        contrib = g.reshape(-1, pad.shape[0]) * prod * minsign
        full = np.zeros_like(flat)
        rows_b = np.broadcast_to(np.arange(flat.shape[0])[:, None], cols.shape)
        np.add.at(full, (rows_b, cols), contrib)
        s._accumulate(full.reshape(data.shape))

    return s.tape._record(out, (s,), back)


def mean_all(x: Var) -> Var:
    """Scalar mean over all elements."""
    def back(g):
        x._accumulate(np.full_like(x.data, float(g) / x.data.size))

    return x.tape._record(np.mean(x.data), (x,), back)


def hinge_mean(x: Var) -> Var:
    """Scalar mean of max(1 - x, 0) over all elements; zero slope at the kink."""
    active = x.data < 1.0
    out = np.mean(np.maximum(1.0 - x.data, 0.0))

    def back(g):
        x._accumulate(np.where(active, -1.0, 0.0) * (float(g) / x.data.size))

    return x.tape._record(out, (x,), back)


def bce_mean(u, s: Var) -> Var:
    """Scalar binary cross-entropy of LLR-domain outputs vs known bits,
    averaged over all elements; P(bit=1) = sigmoid(-s)."""
    u = np.asarray(u, dtype=np.float64)
    p1 = _sigmoid(-s.data)
    pc = np.clip(p1, 1e-12, 1.0 - 1e-12)
    out = -np.mean(u * np.log(pc) + (1.0 - u) * np.log(1.0 - pc))

    def back(g):
        s._accumulate((u - p1) * (float(g) / s.data.size))

    return s.tape._record(out, (s,), back)


def mean_of(vs: list) -> Var:
    """Mean of equal-shape scalar Vars (the multi-iteration loss average)."""
    acc = vs[0]
    for v in vs[1:]:
        acc = add(acc, v)
    return scale(acc, 1.0 / len(vs))


def _sigmoid(z):
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class GradCheckReport:
    """Per-coordinate comparison of analytic vs central-difference gradients."""

    indices: np.ndarray
    analytic: np.ndarray
    numeric: np.ndarray
    rel_err: np.ndarray
    kink: np.ndarray

    @property
    def max_rel_err(self) -> float:
        ok = ~self.kink
        return float(self.rel_err[ok].max()) if ok.any() else 0.0

    @property
    def kink_fraction(self) -> float:
        return float(self.kink.mean()) if self.kink.size else 0.0


def grad_check(fn, theta0, step: float = 1e-4, indices=None) -> GradCheckReport:
    """Compare fn's analytic gradient against central finite differences.

    ``fn(theta) -> (value, grad)`` must evaluate the scalar objective and its
    full gradient (via a fresh tape) at a parameter vector.  Coordinates where
    the three forward values are not locally smooth (second difference large
    relative to the step) are flagged as kinks and excluded from
    ``max_rel_err``.
    """
    theta0 = np.asarray(theta0, dtype=np.float64).ravel()
    if indices is None:
        indices = np.arange(theta0.size)
    indices = np.asarray(indices)
    f0, g0 = fn(theta0)
    g0 = np.asarray(g0).ravel()
    analytic = g0[indices]
    numeric = np.empty(indices.size)
    kink = np.zeros(indices.size, dtype=bool)
    for k, i in enumerate(indices):
        tp = theta0.copy()
        tp[i] += step
        tm = theta0.copy()
        tm[i] -= step
        fp, _ = fn(tp)
        fm, _ = fn(tm)
        numeric[k] = (fp - fm) / (2.0 * step)
        # A slope jump J at distance d from theta0 biases the central
        # difference by J (step - d) / (2 step) and shows up in the second
        # difference as J (step - d), so thresholding the second difference
        # at (step * tol * scale) keeps any undetected kink's bias below
        # tol/2 * scale.  The constant term guards against float cancellation.
        second = abs(fp + fm - 2.0 * f0)
        scale_k = max(abs(analytic[k]), abs(numeric[k]), 1.0)
        kink[k] = second > step * 5e-4 * scale_k + 1e-12 * max(abs(f0), 1.0)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-12)
    rel = np.abs(analytic - numeric) / denom
    rel[np.isclose(analytic, 0.0, atol=1e-12) & np.isclose(numeric, 0.0, atol=1e-12)] = 0.0
    return GradCheckReport(indices=indices, analytic=analytic, numeric=numeric,
                           rel_err=rel, kink=kink)
