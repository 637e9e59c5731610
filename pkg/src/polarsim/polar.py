"""Polar code construction, GF(2) encoding, and the frozen-bit parity-check matrix.

Conventions (frozen for the whole package):

* Column vectors over GF(2).  The generator matrix is ``G = (F^T)^{(x)n} B``
  with kernel ``F = [[1,0],[1,1]]`` and ``B`` the bit-reversal permutation,
  i.e. Arikan's ``x = u (B F^{(x)n})`` written column-wise.  ``G`` is
  self-inverse: ``G G u = u`` over GF(2).
* Index 0 is the first transmitted bit.  Message index ``j`` corresponds to
  node ``j`` on the message side of the factor graph (see ``bp.py``).
* The frozen-bit parity-check matrix is made of the rows of ``G`` indexed by
  the frozen set: ``u = G c`` implies ``G|_frozen c = 0`` for valid codewords.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PolarCode",
    "bit_reversal_permutation",
    "bhattacharyya_params",
    "construct_code",
    "generator_matrix",
    "frozen_parity_matrix",
    "encode",
    "bpsk_modulate",
    "place_message",
]


def bit_reversal_permutation(n: int) -> np.ndarray:
    """Return the length-2^n array mapping index j to its n-bit reversal."""
    size = 1 << n
    rev = np.zeros(size, dtype=np.int64)
    for j in range(size):
        b = 0
        v = j
        for _ in range(n):
            b = (b << 1) | (v & 1)
            v >>= 1
        rev[j] = b
    return rev


def generator_matrix(N: int) -> np.ndarray:
    """Dense N x N generator matrix (F^T)^{(x)n} B over GF(2), dtype uint8."""
    n = _log2_exact(N)
    ft = np.array([[1, 1], [0, 1]], dtype=np.uint8)
    g = np.array([[1]], dtype=np.uint8)
    for _ in range(n):
        g = np.kron(g, ft)
    rev = bit_reversal_permutation(n)
    return np.ascontiguousarray(g[:, rev])


def bhattacharyya_params(N: int, design_snr_db: float) -> np.ndarray:
    """Bhattacharyya parameters of the N synthesized channels.

    Starts from z0 = exp(-Es/N0) at the design SNR and applies the standard
    split z -> {2z - z^2, z^2}, where the squared (upgraded) branch lands on
    the odd index.  Smaller is more reliable.
    """
    n = _log2_exact(N)
    es_n0 = 10.0 ** (design_snr_db / 10.0)
    z = np.array([np.exp(-es_n0)], dtype=np.float64)
    for _ in range(n):
        nxt = np.empty(2 * z.size, dtype=np.float64)
        nxt[0::2] = 2.0 * z - z * z
        nxt[1::2] = z * z
        z = nxt
    return z


@dataclass(frozen=True)
class PolarCode:
    """Immutable polar code descriptor.

    ``info_set`` holds the K + C non-frozen message indices in ascending
    order (K payload bits first, then C CRC bits, both in ascending-index
    order); ``frozen_set`` is its complement.
    """

    N: int
    K: int
    C: int
    design_snr_db: float
    info_set: np.ndarray
    frozen_set: np.ndarray
    gen_matrix: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return _log2_exact(self.N)

    @property
    def rate(self) -> float:
        return self.K / self.N

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "K": self.K,
            "C": self.C,
            "design_snr_db": self.design_snr_db,
            "info_set": [int(j) for j in self.info_set],
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "PolarCode":
        with open(path) as fh:
            d = json.load(fh)
        code = construct_code(d["N"], d["K"], d["C"], d["design_snr_db"])
        if [int(j) for j in code.info_set] != d["info_set"]:
            raise ValueError("stored info_set does not match reconstruction")
        return code


def construct_code(N: int, K: int, C: int = 0, design_snr_db: float = 2.0) -> PolarCode:
    """Construct an (N, K, C) polar code; the K + C most reliable indices are non-frozen.

    Deterministic for fixed inputs (ties broken by lowest index).
    """
    _log2_exact(N)
    if K < 0 or C < 0 or K + C > N:
        raise ValueError(f"need 0 <= K + C <= N, got K={K}, C={C}, N={N}")
    z = bhattacharyya_params(N, design_snr_db)
    order = np.argsort(z, kind="stable")
    info = np.sort(order[: K + C])
    frozen = np.sort(order[K + C :])
    return PolarCode(
        N=N,
        K=K,
        C=C,
        design_snr_db=design_snr_db,
        info_set=info.astype(np.int64),
        frozen_set=frozen.astype(np.int64),
        gen_matrix=generator_matrix(N),
    )


def frozen_parity_matrix(code: PolarCode) -> np.ndarray:
    """(N-K-C) x N parity-check matrix: the rows of G indexed by the frozen set."""
    return np.ascontiguousarray(code.gen_matrix[code.frozen_set, :])


def encode(code: PolarCode, u: np.ndarray) -> np.ndarray:
    """Codeword c = G u over GF(2); u must be all-zero on the frozen set.

    Accepts a single length-N message or a (B, N) batch.
    """
    u = np.asarray(u)
    if u.shape[-1] != code.N:
        raise ValueError(f"message length {u.shape[-1]} != N={code.N}")
    if np.any(u[..., code.frozen_set] != 0):
        raise ValueError("nonzero bit at a frozen position")
    c = (u.astype(np.int64) @ code.gen_matrix.T.astype(np.int64)) % 2
    return c.astype(np.uint8)


def place_message(code: PolarCode, payload: np.ndarray) -> np.ndarray:
    """Scatter K + C payload bits into a length-N message with zeros on the frozen set."""
    payload = np.asarray(payload, dtype=np.uint8)
    if payload.shape[-1] != code.K + code.C:
        raise ValueError(f"payload length {payload.shape[-1]} != K+C={code.K + code.C}")
    u = np.zeros(payload.shape[:-1] + (code.N,), dtype=np.uint8)
    u[..., code.info_set] = payload
    return u


def bpsk_modulate(c: np.ndarray) -> np.ndarray:
    """Bipolar mapping x = 1 - 2c; bit 0 -> +1, bit 1 -> -1."""
    return 1.0 - 2.0 * np.asarray(c, dtype=np.float64)


def _log2_exact(N: int) -> int:
    n = int(N).bit_length() - 1
    if N < 2 or (1 << n) != N:
        raise ValueError(f"N must be a power of 2 with N >= 2, got {N}")
    return n
