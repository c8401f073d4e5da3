"""Exact arithmetic over Z_q: centered representatives, norms, bit maps,
and the powers-of-two gadget matrix.

Residues are stored canonically in [0, q) as int64 numpy arrays.  The
centered representative of x, the unique integer in (-q/2, q/2] congruent
to x, is taken only at norm/decoding boundaries.  All operations are pure;
values are never mutated in place.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

# A dot product of residues must not overflow int64.  For q above this
# threshold matmul splits one factor into 16-bit digits.
_DIRECT_MATMUL_Q = 1 << 20
_MAX_Q = 1 << 31


class SizeGuardError(Exception):
    """An enumeration or state-space guard was exceeded."""


@dataclass(frozen=True)
class ModRing:
    """The ring Z_q.  q >= 2; prime in all claw-free uses."""

    q: int

    def __post_init__(self):
        if not (2 <= self.q <= _MAX_Q):
            raise ValueError(f"modulus must be in [2, 2^31], got {self.q}")

    @property
    def coord_bits(self) -> int:
        """Bits per coordinate in the binary encoding: ceil(log2 q)."""
        return max(1, int(math.ceil(math.log2(self.q))))

    def reduce(self, a) -> np.ndarray:
        return np.mod(np.asarray(a, dtype=np.int64), self.q)

    def centered(self, a) -> np.ndarray:
        """Unique representative in (-q/2, q/2] of each entry."""
        r = self.reduce(a)
        return np.where(r > self.q // 2, r - self.q, r)

    def abs(self, a) -> np.ndarray:
        return np.abs(self.centered(a))

    def norm(self, v) -> float:
        """Euclidean norm of the centered representatives."""
        c = self.centered(v).astype(float)
        return float(np.sqrt(np.sum(c * c)))

    def uniform(self, rng: np.random.Generator, shape) -> np.ndarray:
        return rng.integers(0, self.q, size=shape, dtype=np.int64)

    def matmul(self, a, b) -> np.ndarray:
        """a @ b reduced mod q, exact for any q <= 2^31."""
        a = self.reduce(a)
        b = self.reduce(b)
        if self.q <= _DIRECT_MATMUL_Q:
            return np.mod(a @ b, self.q)
        # split b into 16-bit digits so partial products stay below 2^47
        lo = b & 0xFFFF
        hi = b >> 16
        return np.mod(np.mod(a @ lo, self.q) + (np.mod(a @ hi, self.q) << 16), self.q)


def bit_encode(ring: ModRing, x) -> np.ndarray:
    """Per-coordinate little-endian bit expansion of residues in [0, q).

    Coordinate i of x occupies bits [i*k, (i+1)*k) of the output, with
    k = ceil(log2 q).  Injective on Z_q^n.
    """
    x = ring.reduce(np.atleast_1d(x))
    k = ring.coord_bits
    shifts = np.arange(k, dtype=np.int64)
    return ((x[:, None] >> shifts) & 1).reshape(-1)


def bit_decode(ring: ModRing, bits) -> np.ndarray:
    """Inverse of bit_encode.  Raises ValueError off the encoding's range."""
    bits = np.asarray(bits, dtype=np.int64)
    k = ring.coord_bits
    if bits.ndim != 1 or bits.size % k != 0:
        raise ValueError(f"bit string length {bits.size} is not a multiple of {k}")
    if np.any((bits != 0) & (bits != 1)):
        raise ValueError("bit string has entries outside {0,1}")
    vals = bits.reshape(-1, k) @ (1 << np.arange(k, dtype=np.int64))
    if np.any(vals >= ring.q):
        raise ValueError("bit pattern decodes to a value >= q")
    return vals


def gadget_matrix(ring: ModRing, n: int) -> np.ndarray:
    """Block-diagonal (n*k, n) matrix with per-coordinate columns (1,2,4,...)."""
    k = ring.coord_bits
    g = ring.reduce(1 << np.arange(k, dtype=np.int64))
    G = np.zeros((n * k, n), dtype=np.int64)
    for i in range(n):
        G[i * k : (i + 1) * k, i] = g
    return G


def mat_to_json(ring: ModRing, m) -> dict:
    m = ring.reduce(np.atleast_2d(m))
    return {
        "q": ring.q,
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "data": [int(v) for v in m.reshape(-1)],
    }


def vec_to_json(ring: ModRing, v) -> dict:
    v = ring.reduce(np.atleast_1d(v))
    return mat_to_json(ring, v[:, None])


def mat_from_json(obj: dict) -> tuple[ModRing, np.ndarray]:
    ring = ModRing(int(obj["q"]))
    rows, cols = int(obj["rows"]), int(obj["cols"])
    data = np.asarray(obj["data"], dtype=np.int64)
    if data.size != rows * cols:
        raise ValueError("matrix data length does not match declared shape")
    m = data.reshape(rows, cols)
    if np.any((m < 0) | (m >= ring.q)):
        raise ValueError("matrix entries outside [0, q)")
    return ring, m


def vec_from_json(obj: dict) -> tuple[ModRing, np.ndarray]:
    ring, m = mat_from_json(obj)
    if m.shape[1] != 1:
        raise ValueError("vector serialization must have cols == 1")
    return ring, m[:, 0]


def canonical_json(obj) -> str:
    """Stable single-line encoding used for transcripts and wire messages."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))
