"""Gadget-based trapdoors for noisy linear systems over Z_q, and the
low-rank-plus-noise (lossy) matrix sampler.

A trapdoor key is a matrix A = [Abar; G - R*Abar] (rows stacked), with
Abar uniform, R ternary, and G the powers-of-two gadget.  Multiplying a
sample y = A*s + e on the left by [R | I] cancels Abar and leaves
G*s + [R | I]*e, which is decoded blockwise in the gadget lattice.

Blockwise decoding is Babai's nearest-plane against the scaled inverse
transpose of the bidiagonal basis (2 on the diagonal, -1 below, last
column the binary expansion of q) of the gadget's perp lattice.  When the
caller supplies a noise bound, a decode is accepted only if the residual
y - A*s has centered norm within the bound; if the nearest-plane answer
fails that check, nearby block codewords are tried in order of syndrome
distance before reporting failure.  A returned answer always satisfies
y = A*s + e exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gaussians import TruncGaussian
from .modq import ModRing, SizeGuardError, gadget_matrix, mat_from_json, mat_to_json

# Full codeword enumeration per block is used for the decode fallback only
# when q is small enough to tabulate.
_ENUM_Q = 4096
_FALLBACK_LIST = 6
_FALLBACK_PAIR_MAX_N = 8


class DecodeFailure(Exception):
    """Inversion could not produce (s, e) within the requested noise bound."""


@dataclass(frozen=True)
class TrapdoorKey:
    ring: ModRing
    A: np.ndarray  # (m, n) residues
    R: np.ndarray  # (w, m - w) entries in {-1, 0, 1}
    mbar: int

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def w(self) -> int:
        return self.n * self.ring.coord_bits

    def validate(self):
        G = gadget_matrix(self.ring, self.n)
        top = self.A[: self.mbar]
        bottom = self.A[self.mbar :]
        expect = self.ring.reduce(G - self.R @ top)
        if not np.array_equal(bottom, expect):
            raise ValueError("trapdoor block identity A = [Abar; G - R*Abar] violated")
        if np.any(np.abs(self.R) > 1):
            raise ValueError("R entries must lie in {-1, 0, 1}")


def gen_trap(ring: ModRing, n: int, m: int, rng: np.random.Generator) -> TrapdoorKey:
    """Sample (A, trapdoor) with A statistically close to uniform."""
    if ring.q < 3:
        raise ValueError("gadget decoding needs q >= 3")
    w = n * ring.coord_bits
    if m < w + n:
        raise ValueError(f"m = {m} too small: need m >= w + n = {w + n}")
    mbar = m - w
    Abar = ring.uniform(rng, (mbar, n))
    R = rng.integers(-1, 2, size=(w, mbar), dtype=np.int64)
    A = np.vstack([Abar, ring.reduce(gadget_matrix(ring, n) - R @ Abar)])
    return TrapdoorKey(ring=ring, A=A, R=R, mbar=mbar)


# -- gadget-lattice decode structures, cached per modulus ------------------

_DECODE_CACHE: dict[int, dict] = {}


def _perp_basis(q: int, k: int) -> np.ndarray:
    S = np.zeros((k, k), dtype=np.int64)
    for j in range(k - 1):
        S[j, j] = 2
        S[j + 1, j] = -1
    S[:, k - 1] = [(q >> i) & 1 for i in range(k)]
    return S


def _decode_data(ring: ModRing) -> dict:
    q = ring.q
    data = _DECODE_CACHE.get(q)
    if data is not None:
        return data
    k = ring.coord_bits
    S = _perp_basis(q, k)
    # basis of the primal gadget lattice {t*g mod q} + q*Z^k
    D = np.rint(q * np.linalg.inv(S.T.astype(float))).astype(np.int64)
    # Gram-Schmidt for nearest-plane
    Df = D.astype(float)
    Q = np.zeros_like(Df)
    for j in range(k):
        v = Df[:, j].copy()
        for i in range(j):
            v -= (Df[:, j] @ Q[:, i] / (Q[:, i] @ Q[:, i])) * Q[:, i]
        Q[:, j] = v
    data = {"k": k, "D": D, "Q": Q, "Qnorm2": (Q * Q).sum(axis=0)}
    if q <= _ENUM_Q:
        g = ring.reduce(1 << np.arange(k, dtype=np.int64))
        data["codebook"] = ring.reduce(np.outer(np.arange(q, dtype=np.int64), g))
    _DECODE_CACHE[q] = data
    return data


def _block_decode_primary(ring: ModRing, data: dict, c: np.ndarray) -> np.ndarray:
    """Nearest-plane decode of every k-sized block at once; the first
    coordinate of each recovered lattice point, mod q, is the block value."""
    k = data["k"]
    D, Q, n2 = data["D"].astype(float), data["Q"], data["Qnorm2"]
    targets = ring.centered(c).reshape(-1, k).astype(float)
    t = targets.copy()
    for j in range(k - 1, -1, -1):
        coeff = np.rint(t @ Q[:, j] / n2[j])
        t -= coeff[:, None] * D[:, j][None, :]
    return np.rint(targets[:, 0] - t[:, 0]).astype(np.int64) % ring.q


def invert(key: TrapdoorKey, y, max_norm: float | None = None):
    """Recover (s, e) with y = A*s + e exactly.

    If max_norm is given, the centered norm of e must not exceed it; a
    decode whose residual violates the bound raises DecodeFailure after
    the fallback search is exhausted.  With max_norm=None the nearest-plane
    answer is returned unchecked.
    """
    ring = key.ring
    y = ring.reduce(np.asarray(y, dtype=np.int64))
    if y.shape != (key.m,):
        raise ValueError(f"sample must have shape ({key.m},)")
    data = _decode_data(ring)
    c = ring.reduce(key.R @ y[: key.mbar] + y[key.mbar :])
    s = _block_decode_primary(ring, data, c)
    e = ring.centered(y - ring.matmul(key.A, s))
    if max_norm is None or math.sqrt(float((e * e).sum())) <= max_norm:
        return s, e
    if "codebook" not in data:
        raise DecodeFailure("residual norm exceeds bound (no enumeration at this q)")
    s = _fallback_search(key, data, c, y, s, max_norm)
    if s is None:
        raise DecodeFailure("no candidate within the noise bound")
    e = ring.centered(y - ring.matmul(key.A, s))
    return s, e


def _fallback_search(key, data, c, y, s_primary, max_norm):
    # The nearest-plane answer rarely misses by more than a block or two,
    # so repairs are searched incrementally: per block, the top few
    # codewords by syndrome distance, residuals updated by column deltas
    # rather than full products.  Pairs are only tried at small n; deeper
    # misses are reported as failures.
    ring = key.ring
    k = data["k"]
    n = key.n
    tbl = data["codebook"]
    e0 = ring.centered(y - ring.matmul(key.A, s_primary)).astype(np.int64)
    # per-block ranked alternatives and their residual delta vectors
    owners: list[int] = []
    values: list[int] = []
    rows: list[np.ndarray] = []
    per_block: list[list[int]] = [[] for _ in range(n)]
    blocks = ring.centered(c).reshape(n, k)
    for j in range(n):
        d = ring.centered(blocks[j][None, :] - tbl)
        order = np.argsort((d * d).sum(axis=1), kind="stable")[:_FALLBACK_LIST]
        for t in order:
            t = int(t)
            if t == s_primary[j]:
                continue
            per_block[j].append(len(owners))
            owners.append(j)
            values.append(t)
            rows.append((s_primary[j] - t) * key.A[:, j])
    if not rows:
        return None
    deltas = np.stack(rows)  # (n_cand, m)

    def fits(e):
        e = ring.centered(e).astype(float)
        return math.sqrt(float((e * e).sum())) <= max_norm

    # single-block repairs, all candidates in one sweep
    repaired = ring.centered(e0[None, :] + deltas).astype(float)
    norms = np.sqrt((repaired * repaired).sum(axis=1))
    hits = np.flatnonzero(norms <= max_norm)
    if hits.size:
        i = int(hits[0])
        s = s_primary.copy()
        s[owners[i]] = values[i]
        return s
    if n > _FALLBACK_PAIR_MAX_N:
        return None
    for i in range(n):
        for j in range(i + 1, n):
            for ci in per_block[i]:
                partial = e0 + deltas[ci]
                for cj in per_block[j]:
                    if fits(partial + deltas[cj]):
                        s = s_primary.copy()
                        s[i], s[j] = values[ci], values[cj]
                        return s
    return None


def exhaustive_invert(ring: ModRing, A: np.ndarray, y, max_norm: float):
    """Trapdoor-free inversion by full search over s in Z_q^n.

    Only for micro shapes where q^n is tiny (the gadget construction needs
    m >= w + n, which micro profiles deliberately violate).  Fails unless a
    unique s gives a residual within max_norm.
    """
    n = A.shape[1]
    if ring.q**n > 1_000_000:
        raise SizeGuardError(f"exhaustive inversion infeasible: q^n = {ring.q ** n}")
    y = ring.reduce(np.asarray(y, dtype=np.int64))
    grid = np.indices((ring.q,) * n).reshape(n, -1).T  # (q^n, n)
    resid = ring.centered(y[None, :] - ring.reduce(grid @ A.T))
    norms2 = (resid.astype(float) ** 2).sum(axis=1)
    i = int(np.argmin(norms2))
    if math.sqrt(norms2[i]) > max_norm:
        raise DecodeFailure("no candidate within the noise bound")
    if int((norms2 == norms2[i]).sum()) > 1:
        raise DecodeFailure("ambiguous decode: tied minimal residuals")
    return grid[i].astype(np.int64), resid[i]


def measure_decode_radius(
    key: TrapdoorKey, rng: np.random.Generator, trials: int = 200
) -> float:
    """Largest probed noise norm below which every inversion succeeded.

    The theorem's constant is unspecified, so the usable radius is
    reported empirically: noise is drawn at a sweep of widths, each trial
    records (norm, success), and the report is the largest norm whose
    entire prefix succeeded."""
    from .gaussians import TruncGaussian

    ring = key.ring
    results = []
    widths = np.linspace(0.5, max(1.0, ring.q / 4), num=max(4, trials // 10))
    for width in widths:
        noise = TruncGaussian(ring, float(width))
        for _ in range(max(1, trials // len(widths))):
            e = ring.centered(noise.sample_vec(rng, key.m))
            nrm = math.sqrt(float((e * e).sum()))
            s = ring.uniform(rng, key.n)
            y = ring.reduce(ring.matmul(key.A, s) + e)
            try:
                s2, _ = invert(key, y, max_norm=nrm + 1e-9)
                results.append((nrm, np.array_equal(s2, s)))
            except DecodeFailure:
                results.append((nrm, False))
    results.sort()
    radius = 0.0
    for nrm, ok in results:
        if not ok:
            break
        radius = nrm
    return radius


# -- serialization ---------------------------------------------------------


def trapdoor_to_json(key: TrapdoorKey) -> dict:
    return {
        "A": mat_to_json(key.ring, key.A),
        "R": {
            "rows": int(key.R.shape[0]),
            "cols": int(key.R.shape[1]),
            "data": [int(v) for v in key.R.reshape(-1)],
        },
        "layout": {"mbar": key.mbar},
    }


def trapdoor_from_json(obj: dict) -> TrapdoorKey:
    ring, A = mat_from_json(obj["A"])
    r = obj["R"]
    R = np.asarray(r["data"], dtype=np.int64).reshape(r["rows"], r["cols"])
    key = TrapdoorKey(ring=ring, A=A, R=R, mbar=int(obj["layout"]["mbar"]))
    key.validate()
    return key


# -- lossy mode -------------------------------------------------------------


@dataclass(frozen=True)
class LossyMatrix:
    ring: ModRing
    A_tilde: np.ndarray  # (m, n)
    B: np.ndarray  # (m, ell)
    C: np.ndarray  # (ell, n)
    F: np.ndarray  # (m, n) noise
    ell: int


def lossy_sample(
    ring: ModRing, n: int, m: int, ell: int, chi: TruncGaussian, rng: np.random.Generator
) -> LossyMatrix:
    """Low-rank-plus-noise matrix B*C + F with F entries i.i.d. chi."""
    if ell < 1:
        raise ValueError("ell must be >= 1")
    B = ring.uniform(rng, (m, ell))
    C = ring.uniform(rng, (ell, n))
    F = chi.sample_vec(rng, m * n).reshape(m, n)
    A_tilde = ring.reduce(ring.matmul(B, C) + F)
    return LossyMatrix(ring=ring, A_tilde=A_tilde, B=B, C=C, F=F, ell=ell)


def lossy_shift_bound(m: int, n: int, B_L: float, B_V: float) -> float:
    """sqrt(2) * (1 - exp(-2*pi*m*n*B_L/B_V))^(1/2): statistical distance
    cost of dropping the F*s term from a lossy sample with binary s."""
    if B_V <= 0:
        raise ValueError("B_V must be positive")
    return math.sqrt(2.0) * math.sqrt(1.0 - math.exp(-2.0 * math.pi * m * n * B_L / B_V))


__all__ = [
    "DecodeFailure",
    "TrapdoorKey",
    "LossyMatrix",
    "gen_trap",
    "invert",
    "exhaustive_invert",
    "measure_decode_radius",
    "lossy_sample",
    "lossy_shift_bound",
    "trapdoor_to_json",
    "trapdoor_from_json",
]
