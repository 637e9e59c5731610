"""CRC encoding/checking and the CRC parity-check matrix over GF(2).

Register conventions: non-reflected, zero initial register, no final XOR.
Bit 0 of a message is the highest-degree coefficient (first transmitted).
The generator polynomial is given most-significant term first, e.g.
x^6 + x^5 + 1 -> "1100001".
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["CrcSpec", "parse_poly", "crc_remainder", "crc_encode", "crc_check",
           "crc_parity_matrix"]


def parse_poly(text: str) -> np.ndarray:
    """Parse a generator polynomial from a binary or hex coefficient string.

    Accepts "1100001", "0b1100001", or "0x61" (leading zeros of a hex string
    are stripped; the leading coefficient must be 1).
    """
    text = text.strip().lower()
    if text.startswith("0x"):
        value = int(text, 16)
        bits = bin(value)[2:]
    elif text.startswith("0b"):
        bits = text[2:]
    else:
        bits = text
    if not bits or set(bits) - {"0", "1"}:
        raise ValueError(f"not a polynomial coefficient string: {text!r}")
    coeffs = np.array([int(b) for b in bits], dtype=np.uint8)
    if coeffs[0] != 1:
        raise ValueError("leading coefficient of the generator polynomial must be 1")
    return coeffs


@dataclass(frozen=True)
class CrcSpec:
    """Generator polynomial (MSB-first coefficients) and derived check length."""

    poly: np.ndarray

    def __post_init__(self):
        poly = np.asarray(self.poly, dtype=np.uint8)
        object.__setattr__(self, "poly", poly)
        if poly.ndim != 1 or poly.size < 2:
            raise ValueError("polynomial must have degree >= 1")
        if poly[0] != 1 or poly[-1] != 1:
            raise ValueError("leading and trailing polynomial coefficients must be 1")

    @property
    def C(self) -> int:
        return self.poly.size - 1

    @classmethod
    def from_string(cls, text: str) -> "CrcSpec":
        return cls(parse_poly(text))


def crc_remainder(bits: np.ndarray, spec: CrcSpec) -> np.ndarray:
    """Remainder of the bit polynomial modulo the generator, length C."""
    reg = np.asarray(bits, dtype=np.uint8).copy()
    c = spec.C
    if reg.size < c:
        reg = np.concatenate([np.zeros(c - reg.size, dtype=np.uint8), reg])
    poly = spec.poly
    for i in range(reg.size - c):
        if reg[i]:
            reg[i : i + c + 1] ^= poly
    return reg[reg.size - c :].copy()


def crc_encode(m: np.ndarray, spec: CrcSpec) -> np.ndarray:
    """Append the C remainder bits of m(x) * x^C to the message."""
    m = np.asarray(m, dtype=np.uint8)
    if m.ndim != 1:
        raise ValueError("expected a 1-D message")
    padded = np.concatenate([m, np.zeros(spec.C, dtype=np.uint8)])
    return np.concatenate([m, crc_remainder(padded, spec)])


def crc_check(w: np.ndarray, spec: CrcSpec) -> bool:
    """True iff the polynomial remainder of the K+C word is zero."""
    w = np.asarray(w, dtype=np.uint8)
    if w.ndim != 1 or w.size < spec.C:
        raise ValueError("word shorter than the check length")
    return not crc_remainder(w, spec).any()


def crc_parity_matrix(K: int, spec: CrcSpec) -> np.ndarray:
    """C x (K+C) matrix H with H [m || crc(m)] = 0 over GF(2) for every m.

    Built by linearity: column j (j < K) is the check of the j-th unit
    message; the last C columns are the identity.
    """
    if K < 0:
        raise ValueError("K must be nonnegative")
    c = spec.C
    h = np.zeros((c, K + c), dtype=np.uint8)
    for j in range(K):
        unit = np.zeros(K, dtype=np.uint8)
        unit[j] = 1
        h[:, j] = crc_encode(unit, spec)[K:]
    h[:, K:] = np.eye(c, dtype=np.uint8)
    return h
