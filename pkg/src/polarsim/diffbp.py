"""Differentiable decoder forward pass and loss graphs on the autodiff tape.

Mirrors bp.py exactly (same wiring tables, same update formulas, same float
operation order), but records tape nodes so losses can be backpropagated to
the scaling weights or, through the equalizer chain, to the filter taps.
Each butterfly stage is one fused tape node with a hand-coded backward pass;
the min-sum routing and sign-as-constant conventions live in the fused
backward exactly as in the scalar ops of autodiff.py.

Operands that are plain arrays stay constant: passing the weights as arrays
instead of tape parameters is what freezes the decoder in the equalizer
training loop.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import Tape, Var
from .bp import FROZEN_LLR, build_graph
from .losses import sgn
from .polar import PolarCode

__all__ = ["decode_on_tape", "frozen_loss_graph", "crc_loss_graph",
           "bce_loss_graph", "equalizer_chain_graph"]


def _is_var(x):
    return isinstance(x, Var)


def _data(x):
    return x.data if _is_var(x) else x


def _tape_among(*args):
    for a in args:
        if _is_var(a):
            return a.tape
    return None


def _l_stage(l_next, r_cur, wa, s, graph):
    """One fused L-sweep stage; returns the new column-s L messages."""
    tr, br, tl, bl = graph.tr[s], graph.br[s], graph.tl[s], graph.bl[s]
    ln, rc = _data(l_next), _data(r_cur)
    wad = _data(wa) if wa is not None else None
    lt, lb = ln[:, tr], ln[:, br]
    rt = rc[:, tl]
    x1 = lb + rc[:, bl]
    s_lt, s_x1, s_rt = sgn(lt), sgn(x1), sgn(rt)
    a1 = np.abs(lt) <= np.abs(x1)
    g1 = s_lt * s_x1 * np.where(a1, np.abs(lt), np.abs(x1))
    a2 = np.abs(rt) <= np.abs(lt)
    g2 = s_rt * s_lt * np.where(a2, np.abs(rt), np.abs(lt))
    if wad is None:
        top, bot = g1, g2 + lb
    else:
        top = wad[s, tl] * g1
        bot = wad[s, bl] * g2 + lb
    out = np.empty_like(ln)
    out[:, tl] = top
    out[:, bl] = bot
    tape = _tape_among(l_next, r_cur, wa)
    if tape is None:
        return out

    def back(gout):
        gtop, gbot = gout[:, tl], gout[:, bl]
        if wad is None:
            dg1, dg2 = gtop, gbot
        else:
            dg1 = gtop * wad[s, tl]
            dg2 = gbot * wad[s, bl]
        if _is_var(wa):
            gw = np.zeros_like(wad)
            gw[s, tl] = (gtop * g1).sum(axis=0)
            gw[s, bl] = (gbot * g2).sum(axis=0)
            wa._accumulate(gw)
        d_x1 = np.where(a1, 0.0, s_lt) * dg1
        if _is_var(l_next):
            d_lt = np.where(a1, s_x1, 0.0) * dg1 + np.where(a2, 0.0, s_rt) * dg2
            gl = np.zeros_like(ln)
            gl[:, tr] = d_lt
            gl[:, br] = d_x1 + gbot
            l_next._accumulate(gl)
        if _is_var(r_cur):
            gr = np.zeros_like(rc)
            gr[:, tl] = np.where(a2, s_lt, 0.0) * dg2
            gr[:, bl] = d_x1
            r_cur._accumulate(gr)

    return tape._record(out, (l_next, r_cur, wa), back)


def _r_stage(l_next, r_cur, wb, s, graph):
    """One fused R-sweep stage; returns the new column-(s+1) R messages."""
    tr, br, tl, bl = graph.tr[s], graph.br[s], graph.tl[s], graph.bl[s]
    ln, rc = _data(l_next), _data(r_cur)
    wbd = _data(wb) if wb is not None else None
    lt, lb = ln[:, tr], ln[:, br]
    rt, rb = rc[:, tl], rc[:, bl]
    x1 = lb + rb
    s_rt, s_x1, s_lt = sgn(rt), sgn(x1), sgn(lt)
    a1 = np.abs(rt) <= np.abs(x1)
    g1 = s_rt * s_x1 * np.where(a1, np.abs(rt), np.abs(x1))
    a2 = np.abs(rt) <= np.abs(lt)
    g2 = s_rt * s_lt * np.where(a2, np.abs(rt), np.abs(lt))
    if wbd is None:
        top, bot = g1, g2 + rb
    else:
        top = wbd[s, tr] * g1
        bot = wbd[s, br] * g2 + rb
    out = np.empty_like(rc)
    out[:, tr] = top
    out[:, br] = bot
    tape = _tape_among(l_next, r_cur, wb)
    if tape is None:
        return out

    def back(gout):
        gtop, gbot = gout[:, tr], gout[:, br]
        if wbd is None:
            dg1, dg2 = gtop, gbot
        else:
            dg1 = gtop * wbd[s, tr]
            dg2 = gbot * wbd[s, br]
        if _is_var(wb):
            gw = np.zeros_like(wbd)
            gw[s, tr] = (gtop * g1).sum(axis=0)
            gw[s, br] = (gbot * g2).sum(axis=0)
            wb._accumulate(gw)
        d_x1 = np.where(a1, 0.0, s_rt) * dg1
        if _is_var(l_next):
            gl = np.zeros_like(ln)
            gl[:, tr] = np.where(a2, 0.0, s_rt) * dg2
            gl[:, br] = d_x1
            l_next._accumulate(gl)
        if _is_var(r_cur):
            d_rt = np.where(a1, s_x1, 0.0) * dg1 + np.where(a2, s_lt, 0.0) * dg2
            gr = np.zeros_like(rc)
            gr[:, tl] = d_rt
            gr[:, bl] = d_x1 + gbot
            r_cur._accumulate(gr)

    return tape._record(out, (l_next, r_cur, wb), back)


def _add_nodes(a, b):
    if _is_var(a) or _is_var(b):
        return ad.add(a, b)
    return a + b


def _gather_nodes(x, idx):
    if _is_var(x):
        return ad.gather_cols(x, idx)
    return x[..., idx]


def decode_on_tape(tape: Tape, llr, code: PolarCode, alpha=None, beta=None,
                   iters: int = 5, large: float = FROZEN_LLR):
    """Unrolled weighted BP; returns per-iteration (froz, crc, msg) node lists.

    ``llr`` is a (B, N) array or tape Var; ``alpha``/``beta`` are (n, N)
    arrays, tape Vars, or per-iteration lists of those; None means unit
    weights.  froz = codeword-side L+R, msg = message-side L+R, crc = msg
    restricted to the non-frozen set (ascending index order).
    """
    graph = build_graph(code.N)
    n = graph.n
    llr_data = _data(llr)
    if llr_data.ndim != 2 or llr_data.shape[1] != code.N:
        raise ValueError(f"llr must be (B, {code.N})")
    b = llr_data.shape[0]
    r0 = np.zeros((b, code.N))
    r0[:, code.frozen_set] = large
    l_cols = [np.zeros((b, code.N)) for _ in range(n)] + [llr]
    r_cols = [r0] + [np.zeros((b, code.N)) for _ in range(n)]
    froz, crc, msg = [], [], []
    for t in range(iters):
        wa = _weights_at(alpha, t)
        wb = _weights_at(beta, t)
        for s in range(n - 1, -1, -1):
            l_cols[s] = _l_stage(l_cols[s + 1], r_cols[s], wa, s, graph)
        for s in range(n):
            r_cols[s + 1] = _r_stage(l_cols[s + 1], r_cols[s], wb, s, graph)
        froz.append(_add_nodes(l_cols[n], r_cols[n]))
        m = _add_nodes(l_cols[0], r_cols[0])
        msg.append(m)
        crc.append(_gather_nodes(m, code.info_set))
    return froz, crc, msg


def _weights_at(w, t):
    if w is None:
        return None
    if isinstance(w, (list, tuple)):
        return w[t]
    return w


def frozen_loss_graph(froz_nodes, h_froz) -> Var:
    """Multi-iteration frozen-bit syndrome loss as a scalar tape node."""
    return ad.mean_of([ad.hinge_mean(ad.soft_syndrome_rows(f, h_froz))
                       for f in froz_nodes])


def crc_loss_graph(crc_nodes, h_crc) -> Var:
    """Multi-iteration CRC syndrome loss as a scalar tape node."""
    return ad.mean_of([ad.hinge_mean(ad.soft_syndrome_rows(c, h_crc))
                       for c in crc_nodes])


def bce_loss_graph(u, msg_nodes) -> Var:
    """Supervised BCE against the true message bits, on the final-iteration
    output (the decision the decoder actually emits)."""
    u = np.asarray(u, dtype=np.float64)
    return ad.bce_mean(u, msg_nodes[-1])


def equalizer_chain_graph(tape: Tape, y_blocks, h_taps: Var, code: PolarCode,
                          weights, iters: int, sigma2: float, delay: int,
                          large: float = FROZEN_LLR):
    """Forward graph of Algorithm-2's receive chain: filter, align, LLR, decode.

    ``y_blocks`` is a constant (M, N) batch of received blocks; ``h_taps``
    the filter parameter node.  ``weights`` (DecoderWeights or None) enters
    as constants, so its gradient path stays empty.  Returns the decoder's
    per-iteration (froz, crc, msg) node lists.
    """
    xhat = ad.fir_causal(np.atleast_2d(np.asarray(y_blocks, dtype=np.float64)), h_taps)
    aligned = ad.shift_cols(xhat, delay) if delay else xhat
    llr = ad.scale(aligned, 2.0 / sigma2)
    alpha = beta = None
    if weights is not None:
        alpha = weights.alpha if weights.mode == "shared" else list(weights.alpha)
        beta = weights.beta if weights.mode == "shared" else list(weights.beta)
    return decode_on_tape(tape, llr, code, alpha=alpha, beta=beta,
                          iters=iters, large=large)
