"""(Weighted) min-sum belief propagation on the polar factor graph.

Factor-graph layout (frozen convention, see also polar.py):

* Columns 0..n of N nodes each; column 0 is the message side (natural u
  order), column n is the codeword side (natural transmit order).
* Stage s connects columns s and s+1 through N/2 butterflies.  On the
  column-(s+1) side a butterfly pairs nodes (m, m + N/2^{s+1}); on the
  column-s side the same pair is used except at stage 0, where the pairing
  goes through the bit-reversal permutation (that is where B lives in
  G = (F^T)^{(x)n} B).  The butterfly constraint is
  top_left (+) bottom = top_right, bottom passes through.
* One iteration = full L sweep over stages n-1..0, then full R sweep over
  stages 0..n-1, stages sequential, butterflies within a stage in parallel.
* Weighted updates multiply only the min-sum term by the weight:

      L[s][tl] = alpha[s][tl] * g(L[s+1][tr], L[s+1][br] + R[s][bl])
      L[s][bl] = alpha[s][bl] * g(R[s][tl],   L[s+1][tr]) + L[s+1][br]
      R[s+1][tr] = beta[s][tr] * g(R[s][tl], L[s+1][br] + R[s][bl])
      R[s+1][br] = beta[s][br] * g(R[s][tl], L[s+1][tr]) + R[s][bl]

  with g(x, y) = sign(x) sign(y) min(|x|, |y|) and sign(0) := +1.
  With all weights equal to 1 this is exactly plain min-sum BP.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .polar import PolarCode, bit_reversal_permutation

__all__ = ["FROZEN_LLR", "PolarGraph", "DecoderWeights", "BpState", "SoftOutputs",
           "minsum_g", "init_messages", "bp_iterate", "hard_decision", "decode"]

# Finite surrogate for the +inf frozen-bit prior.
FROZEN_LLR = 30.0


def minsum_g(x, y):
    """Min-sum check update sign(x) sign(y) min(|x|, |y|), with sign(0) = +1."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    sx = np.where(x >= 0.0, 1.0, -1.0)
    sy = np.where(y >= 0.0, 1.0, -1.0)
    return sx * sy * np.minimum(np.abs(x), np.abs(y))


@dataclass(frozen=True)
class PolarGraph:
    """Precomputed butterfly index tables, one row per stage."""

    N: int
    n: int
    # per stage s: column-(s+1) top/bottom indices and column-s top/bottom indices
    tr: tuple
    br: tuple
    tl: tuple
    bl: tuple


@lru_cache(maxsize=None)
def build_graph(N: int) -> PolarGraph:
    n = int(N).bit_length() - 1
    if N < 2 or (1 << n) != N:
        raise ValueError(f"N must be a power of 2, got {N}")
    rev = bit_reversal_permutation(n)
    tr, br, tl, bl = [], [], [], []
    m = np.arange(N)
    for s in range(n):
        half = N >> (s + 1)
        top = m[(m & half) == 0]
        bot = top + half
        tr.append(top)
        br.append(bot)
        if s == 0:
            tl.append(rev[top])
            bl.append(rev[bot])
        else:
            tl.append(top)
            bl.append(bot)
    return PolarGraph(N=N, n=n,
                      tr=tuple(tr), br=tuple(br), tl=tuple(tl), bl=tuple(bl))


@dataclass
class DecoderWeights:
    """Trainable min-sum scaling weights.

    mode "shared": alpha/beta have shape (n, N), reused every iteration
    (RNN-style).  mode "per_iteration": shape (T, n, N).  Row s of alpha
    scales L messages written into column s; row s of beta scales R messages
    written into column s+1.  Serialized row-major.
    """

    alpha: np.ndarray
    beta: np.ndarray
    mode: str = "shared"

    @classmethod
    def ones(cls, code: PolarCode, mode: str = "shared", iters: int = 1) -> "DecoderWeights":
        shape = (code.n, code.N) if mode == "shared" else (iters, code.n, code.N)
        return cls(alpha=np.ones(shape), beta=np.ones(shape), mode=mode)

    def for_iteration(self, t: int):
        if self.mode == "shared":
            return self.alpha, self.beta
        return self.alpha[t], self.beta[t]

    def copy(self) -> "DecoderWeights":
        return DecoderWeights(self.alpha.copy(), self.beta.copy(), self.mode)

    def save(self, path, iters: int) -> None:
        n, N = self.alpha.shape[-2:]
        payload = {
            "N": int(N),
            "T": int(iters),
            "mode": self.mode,
            "alpha": [float(v) for v in self.alpha.ravel()],
            "beta": [float(v) for v in self.beta.ravel()],
        }
        with open(path, "w") as fh:
            json.dump(payload, fh)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "DecoderWeights":
        with open(path) as fh:
            d = json.load(fh)
        N = d["N"]
        n = int(N).bit_length() - 1
        shape = (n, N) if d["mode"] == "shared" else (d["T"], n, N)
        return cls(alpha=np.array(d["alpha"]).reshape(shape),
                   beta=np.array(d["beta"]).reshape(shape),
                   mode=d["mode"])


@dataclass
class BpState:
    """Left/right message matrices over the (n+1) x N node grid, batched.

    L and R have shape (n+1, B, N).  R[0] holds the frozen-bit priors and
    L[n] the channel LLRs; both stay fixed across iterations.
    """

    L: np.ndarray
    R: np.ndarray
    t: int
    code: PolarCode
    graph: PolarGraph = field(repr=False)


@dataclass
class SoftOutputs:
    """Per-iteration soft outputs, stacked along the leading iteration axis.

    froz: (T, ..., N) codeword-side estimates L[n] + R[n].
    crc:  (T, ..., K+C) message-side estimates at the non-frozen indices,
          ascending index order.
    msg:  (T, ..., N) full message-side estimates L[0] + R[0] (used by the
          supervised BCE baseline).
    """

    froz: np.ndarray
    crc: np.ndarray
    msg: np.ndarray


def init_messages(llr, code: PolarCode, large: float = FROZEN_LLR) -> BpState:
    """Fresh message state: channel LLRs on column n, priors on column 0, zeros elsewhere."""
    llr = np.atleast_2d(np.asarray(llr, dtype=np.float64))
    if llr.shape[1] != code.N:
        raise ValueError(f"llr length {llr.shape[1]} != N={code.N}")
    b = llr.shape[0]
    n = code.n
    L = np.zeros((n + 1, b, code.N))
    R = np.zeros((n + 1, b, code.N))
    L[n] = llr
    R[0, :, code.frozen_set] = large
    return BpState(L=L, R=R, t=0, code=code, graph=build_graph(code.N))


def _minsum_pair(x, ax, y, ay):
    """minsum_g given precomputed magnitudes; one np.where per sign."""
    sx = np.where(x >= 0.0, 1.0, -1.0)
    sy = np.where(y >= 0.0, 1.0, -1.0)
    return sx * sy * np.where(ax <= ay, ax, ay)


def bp_iterate(state: BpState, weights: DecoderWeights | None = None) -> BpState:
    """One full iteration (L sweep then R sweep), in place; returns the state."""
    L, R, g = state.L, state.R, state.graph
    n = g.n
    if weights is None:
        wa = wb = None
    else:
        wa, wb = weights.for_iteration(state.t)
    for s in range(n - 1, -1, -1):
        tr, br, tl, bl = g.tr[s], g.br[s], g.tl[s], g.bl[s]
        lt, lb = L[s + 1][:, tr], L[s + 1][:, br]
        rt = R[s][:, tl]
        x1 = lb + R[s][:, bl]
        alt = np.abs(lt)
        top = _minsum_pair(lt, alt, x1, np.abs(x1))
        bot = _minsum_pair(rt, np.abs(rt), lt, alt)
        if wa is not None:
            top = wa[s][tl] * top
            bot = wa[s][bl] * bot
        L[s][:, tl] = top
        L[s][:, bl] = bot + lb
    for s in range(n):
        tr, br, tl, bl = g.tr[s], g.br[s], g.tl[s], g.bl[s]
        lt, lb = L[s + 1][:, tr], L[s + 1][:, br]
        rt, rb = R[s][:, tl], R[s][:, bl]
        x1 = lb + rb
        art = np.abs(rt)
        top = _minsum_pair(rt, art, x1, np.abs(x1))
        bot = _minsum_pair(rt, art, lt, np.abs(lt))
        if wb is not None:
            top = wb[s][tr] * top
            bot = wb[s][br] * bot
        R[s + 1][:, tr] = top
        R[s + 1][:, br] = bot + rb
    state.t += 1
    return state


def hard_decision(state: BpState, code: PolarCode) -> np.ndarray:
    """Message-side hard decision: bit j is 0 iff L[0][j] + R[0][j] >= 0."""
    s = state.L[0] + state.R[0]
    u = (s < 0.0).astype(np.uint8)
    return u[0] if u.shape[0] == 1 else u


def decode(llr, code: PolarCode, weights: DecoderWeights | None = None,
           iters: int = 5, large: float = FROZEN_LLR, collect_soft: bool = True):
    """Run T iterations of (weighted) BP and collect per-iteration soft outputs.

    Accepts a single length-N LLR vector or a (B, N) batch; returns the
    message-side hard decision after the final iteration and a SoftOutputs
    record (leading axis = iteration), or None when collect_soft is off
    (Monte Carlo hot path).
    """
    if iters < 1:
        raise ValueError("need at least one iteration")
    single = np.asarray(llr).ndim == 1
    state = init_messages(llr, code, large=large)
    froz, crc, msg = [], [], []
    for _ in range(iters):
        bp_iterate(state, weights)
        if collect_soft:
            froz.append(state.L[state.code.n] + state.R[state.code.n])
            m = state.L[0] + state.R[0]
            msg.append(m)
            crc.append(m[:, code.info_set])
    u = ((state.L[0] + state.R[0]) < 0.0).astype(np.uint8)
    if not collect_soft:
        return (u[0] if single else u), None
    froz = np.stack(froz)
    crc = np.stack(crc)
    msg = np.stack(msg)
    if single:
        froz, crc, msg, u = froz[:, 0], crc[:, 0], msg[:, 0], u[0]
    outs = SoftOutputs(froz=froz, crc=crc, msg=msg)
    return u, outs
