"""The lattice-based claw-free function family.

A key is (A, u = A*s + e) for a binary secret s and narrow noise e; the
two functions map a point x to the Gaussian density of width B_P centered
at A*x (branch 0) or A*x + A*s (branch 1).  Matched pairs are exactly
x1 = x0 - s, the verifier inverts images with the lattice trapdoor, and a
public check tests support membership from (A, u) alone.

The equation side: for a claw (x0, x1) and a bit vector d of length
w = n*ceil(log2 q), the parity d.(J(x0) xor J(x1)) equals dhat.s where
J is the per-coordinate bit encoding and dhat = secret_mask(b, x, d) is
computable from either endpoint alone.  The "good" sets are the d whose
mask is nonzero on the half of the secret opposite the revealed endpoint;
equation answers are only credited on good d.  The statistical side of
the hardcore-bit argument (moderate matrices, parity balance of C*s) is
implemented with exact counting so small instances can be checked against
brute force.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gaussians import TruncGaussian
from .modq import ModRing, SizeGuardError, bit_encode, mat_from_json, mat_to_json, vec_from_json, vec_to_json
from .profiles import ParameterProfile
from .trapdoor import (
    DecodeFailure,
    TrapdoorKey,
    exhaustive_invert,
    gen_trap,
    invert,
    trapdoor_from_json,
    trapdoor_to_json,
)


@dataclass(frozen=True)
class PublicKey:
    profile: ParameterProfile
    A: np.ndarray  # (m, n)
    u: np.ndarray  # (m,)

    @property
    def ring(self) -> ModRing:
        return ModRing(self.profile.q)

    def noise_dist(self) -> TruncGaussian:
        return self.profile.noise_dist()


@dataclass(frozen=True)
class KeyPair:
    """Public key plus the inversion trapdoor.

    The secret bits and the key noise are recovered at generation time and
    cached here: inversion of branch 1 needs s itself, not just the
    lattice trapdoor.  gadget is None for micro shapes (m < w + n), where
    inversion is a full search instead.
    """

    public: PublicKey
    gadget: TrapdoorKey | None
    s_bits: np.ndarray  # (n,) in {0,1}
    e: np.ndarray  # (m,) centered representatives

    @property
    def profile(self) -> ParameterProfile:
        return self.public.profile

    @property
    def ring(self) -> ModRing:
        return self.public.ring


class KeyGenFailure(Exception):
    """Key generation exhausted its retry budget."""


def _sample_noise_bound(profile: ParameterProfile) -> float:
    # covers the support of either branch density shifted by the key noise
    return (profile.B_P + profile.B_V) * math.sqrt(profile.m)


def invert_sample(key: KeyPair, y) -> tuple[np.ndarray, np.ndarray]:
    """Decode y = A*s0 + e0 into (s0, e0) within the branch-support bound."""
    bound = _sample_noise_bound(key.profile)
    if key.gadget is not None:
        return invert(key.gadget, y, max_norm=bound)
    return exhaustive_invert(key.ring, key.public.A, y, max_norm=bound)


def _min_claw_distance(ring: ModRing, A: np.ndarray) -> float:
    # smallest image distance between distinct points; only evaluated for
    # micro shapes where q^n is tiny
    n = A.shape[1]
    grid = np.indices((ring.q,) * n).reshape(n, -1).T[1:]  # all nonzero deltas
    img = ring.centered(ring.reduce(grid @ A.T)).astype(float)
    return float(np.sqrt((img * img).sum(axis=1)).min())


def gen(profile: ParameterProfile, rng: np.random.Generator, max_retries: int = 64) -> KeyPair:
    """Sample a key pair and verify the trapdoor inverts its own image."""
    ring = profile.ring()
    noise = profile.noise_dist(profile.B_V)
    for _ in range(max_retries):
        if profile.uses_gadget:
            gadget = gen_trap(ring, profile.n, profile.m, rng)
            A = gadget.A
        else:
            gadget = None
            A = ring.uniform(rng, (profile.m, profile.n))
            # at micro scale a constant fraction of A are geometrically
            # degenerate (colliding branch supports); those draws are not
            # valid keys, so reject and redraw
            if _min_claw_distance(ring, A) <= 2 * profile.B_P * math.sqrt(profile.m):
                continue
        s_bits = rng.integers(0, 2, size=profile.n, dtype=np.int64)
        e = ring.centered(noise.sample_vec(rng, profile.m))
        u = ring.reduce(ring.matmul(A, s_bits) + e)
        key = KeyPair(PublicKey(profile, A, u), gadget, s_bits, e)
        try:
            s0, e0 = invert_sample(key, u)
        except DecodeFailure:
            continue
        if np.array_equal(s0, ring.reduce(s_bits)) and np.array_equal(e0, e):
            return key
    raise KeyGenFailure(f"no invertible key in {max_retries} draws for {profile.name}")


# -- densities and the public check ----------------------------------------


def density_secret(key: KeyPair, b: int, x, y) -> float:
    """Branch density with the exact secret shift b * A*s (verifier-side;
    exposed for oracles, never sent to provers)."""
    ring = key.ring
    shift = ring.reduce(ring.matmul(key.public.A, x) + b * ring.matmul(key.public.A, key.s_bits))
    return key.public.noise_dist().density_vec(ring.reduce(np.asarray(y) - shift))


def density_public(pub: PublicKey, b: int, x, y) -> float:
    """Branch density with the public shift b * u; equals density_secret on
    branch 0 and is the density the sampling procedure actually prepares."""
    ring = pub.ring
    shift = ring.reduce(ring.matmul(pub.A, x) + b * np.asarray(pub.u))
    return pub.noise_dist().density_vec(ring.reduce(np.asarray(y) - shift))


def chk(pub: PublicKey, b: int, x, y) -> int:
    """Public support check: 1 iff the centered norm of y - A*x - b*u is
    within B_P * sqrt(m)."""
    if b not in (0, 1):
        raise ValueError("branch bit must be 0 or 1")
    ring = pub.ring
    resid = ring.centered(np.asarray(y) - ring.matmul(pub.A, x) - b * np.asarray(pub.u))
    return int(math.sqrt(float((resid.astype(float) ** 2).sum())) <= pub.profile.B_P * math.sqrt(pub.profile.m))


def inv(key: KeyPair, b: int, y) -> np.ndarray:
    """Invert branch b: decode y = A*s0 + e0 and return s0 - b*s."""
    if b not in (0, 1):
        raise ValueError("branch bit must be 0 or 1")
    s0, _ = invert_sample(key, y)
    return key.ring.reduce(s0 - b * key.s_bits)


def claw_partner(key: KeyPair, b: int, x) -> np.ndarray:
    """The other endpoint of the claw through (b, x): x -+ s."""
    sign = -1 if b == 0 else 1
    return key.ring.reduce(np.asarray(x) + sign * key.s_bits)


def claw_from_image(key: KeyPair, y) -> tuple[np.ndarray, np.ndarray]:
    """(x0, x1) for an image y, via one trapdoor decode."""
    s0, _ = invert_sample(key, y)
    ring = key.ring
    return ring.reduce(s0), ring.reduce(s0 - key.s_bits)


# -- the equation side -------------------------------------------------------


def claw_equation_bit(ring: ModRing, x0, x1, d) -> int:
    """d . (J(x0) xor J(x1)) mod 2."""
    diff = bit_encode(ring, x0) ^ bit_encode(ring, x1)
    return int(np.asarray(d, dtype=np.int64) @ diff) & 1


def secret_mask(ring: ModRing, b: int, x, d) -> np.ndarray:
    """Collapse an equation vector d onto the secret: the n-bit mask dhat
    with d . (J(x) xor J(x - (-1)^b * s)) = dhat . s for every binary s.

    Coordinate i is the parity of block i of d against block i of
    J(x) xor J(x - (-1)^b * 1).
    """
    x = ring.reduce(np.atleast_1d(x))
    d = np.asarray(d, dtype=np.int64)
    k = ring.coord_bits
    if d.shape != (x.size * k,):
        raise ValueError(f"equation vector must have length {x.size * k}")
    step = ring.reduce(x - (-1) ** b)
    diff = (bit_encode(ring, x) ^ bit_encode(ring, step)).reshape(-1, k)
    return (diff * d.reshape(-1, k)).sum(axis=1) & 1


def half_range(n: int, b: int) -> slice:
    """Secret coordinates paired with branch b: the first ceil(n/2) for
    b = 0, the rest for b = 1 (odd n splits are a free choice)."""
    cut = (n + 1) // 2
    return slice(0, cut) if b == 0 else slice(cut, n)


def in_good_set(ring: ModRing, b: int, x, d) -> bool:
    """Whether d's secret mask has a nonzero coordinate in branch b's half.

    Checkable from (b, x) alone; a uniform d fails with probability about
    2^(-n/2)."""
    mask = secret_mask(ring, b, x, d)
    return bool(mask[half_range(mask.size, b)].any())


def in_claw_good_set(key: KeyPair, b: int, x, d) -> bool:
    """Membership in the intersection good set, computed from one claw
    endpoint and the secret; symmetric in the endpoint used."""
    x0 = np.asarray(x) if b == 0 else claw_partner(key, 1, x)
    x1 = claw_partner(key, 0, x0)
    ring = key.ring
    return in_good_set(ring, 0, x0, d) and in_good_set(ring, 1, x1, d)


def image_good_set(key: KeyPair, y):
    """Predicate on equation vectors for an image y: membership in the
    intersection good set of y's claw, via one trapdoor decode."""
    x0, x1 = claw_from_image(key, y)
    ring = key.ring

    def member(d) -> bool:
        return in_good_set(ring, 0, x0, d) and in_good_set(ring, 1, x1, d)

    return member


def classify_hardcore(key: KeyPair, b: int, x, d, c: int) -> str:
    """Place a candidate tuple: 'correct' if c is the claw parity along a
    good d, 'flipped' if it is the complement, 'excluded' otherwise."""
    if not in_claw_good_set(key, b, x, d):
        return "excluded"
    x0 = np.asarray(x) if b == 0 else claw_partner(key, 1, x)
    x1 = claw_partner(key, 0, x0)
    truth = claw_equation_bit(key.ring, x0, x1, d)
    return "correct" if int(c) & 1 == truth else "flipped"


def wilson_interval(successes: float, trials: int, z: float = 2.5758) -> tuple[float, float]:
    """Wilson score interval (default 99%)."""
    if trials == 0:
        return (0.0, 1.0)
    p = successes / trials
    z2 = z * z
    center = (p + z2 / (2 * trials)) / (1 + z2 / trials)
    half = z * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials)) / (1 + z2 / trials)
    return (max(0.0, center - half), min(1.0, center + half))


@dataclass(frozen=True)
class HardcoreGameResult:
    trials: int
    p_correct: float
    p_flipped: float
    p_excluded: float
    advantage: float
    ci_low: float
    ci_high: float


def hardcore_game(
    profile: ParameterProfile, adversary, trials: int, rng: np.random.Generator
) -> HardcoreGameResult:
    """Estimate |P[correct] - P[flipped]| for an adversary (A, u) -> (b, x, d, c).

    Each trial uses a fresh key.  The interval is a Wilson interval on the
    score (correct -> 1, flipped -> 0, excluded -> 1/2), a diagnostic proxy
    for the advantage rather than a simultaneous bound on both proportions.
    """
    counts = {"correct": 0, "flipped": 0, "excluded": 0}
    for i in range(trials):
        key = gen(profile, rng)
        b, x, d, c = adversary(key.public.A, key.public.u, rng)
        counts[classify_hardcore(key, b, x, d, c)] += 1
    p_c = counts["correct"] / trials
    p_f = counts["flipped"] / trials
    score = counts["correct"] + 0.5 * counts["excluded"]
    lo, hi = wilson_interval(score, trials)
    return HardcoreGameResult(
        trials=trials,
        p_correct=p_c,
        p_flipped=p_f,
        p_excluded=counts["excluded"] / trials,
        advantage=abs(p_c - p_f),
        ci_low=max(0.0, 2 * lo - 1, 1 - 2 * hi),
        ci_high=max(abs(2 * hi - 1), abs(2 * lo - 1)),
    )


# -- moderate matrices and parity balance -----------------------------------

_SPAN_GUARD = 1_000_000


def is_moderate_vector(ring: ModRing, v) -> bool:
    """At least n/4 entries with centered magnitude in (q/8, 3q/8]."""
    a = ring.abs(v)
    hits = int(((8 * a > ring.q) & (8 * a <= 3 * ring.q)).sum())
    return 4 * hits >= a.size


def moderate_check(ring: ModRing, C) -> bool:
    """Whether every nonzero vector in the row span of C is moderate.

    The zero matrix spans nothing nonzero and is reported not moderate.
    Enumeration is guarded at q^ell combinations."""
    C = ring.reduce(np.atleast_2d(C))
    ell, n = C.shape
    if ring.q**ell > _SPAN_GUARD:
        raise SizeGuardError(f"row-span enumeration q^ell = {ring.q ** ell} too large")
    coeffs = np.indices((ring.q,) * ell).reshape(ell, -1).T  # (q^ell, ell)
    span = ring.reduce(coeffs @ C)
    nonzero = span[np.any(span != 0, axis=1)]
    if nonzero.shape[0] == 0:
        return False
    a = np.abs(np.where(span > ring.q // 2, span - ring.q, span))
    hits = ((8 * a > ring.q) & (8 * a <= 3 * ring.q)).sum(axis=1)
    ok = 4 * hits >= n
    return bool(ok[np.any(span != 0, axis=1)].all())


def parity_joint_counts(ring: ModRing, C, dhat) -> np.ndarray:
    """Exact counts over s in {0,1}^n of (C*s mod q, dhat.s mod 2).

    Returned array has shape (q,)*ell + (2,).  The count is a coordinate
    recursion (each secret bit either contributes its column or not),
    which evaluates the same sum as enumerating all 2^n secrets."""
    C = ring.reduce(np.atleast_2d(C))
    dhat = np.asarray(dhat, dtype=np.int64)
    ell, n = C.shape
    if dhat.shape != (n,):
        raise ValueError("mask length must match the number of columns")
    if ring.q**ell * 2 > _SPAN_GUARD:
        raise SizeGuardError("joint state space too large")
    dtype = np.int64 if n <= 62 else np.float64
    state = np.zeros((ring.q,) * ell + (2,), dtype=dtype)
    state[(0,) * ell + (0,)] = 1
    for i in range(n):
        shifted = state
        for j in range(ell):
            shifted = np.roll(shifted, int(C[j, i]), axis=j)
        if dhat[i] & 1:
            shifted = np.roll(shifted, 1, axis=ell)
        state = state + shifted
    return state


def parity_tv_many(ring: ModRing, C, dhats) -> np.ndarray:
    """parity_tv against uniform for a batch of masks over one matrix.

    Same recursion as parity_joint_counts with the masks stacked on a
    leading axis; the per-coordinate ring shift is shared, only the parity
    toggle differs per mask."""
    C = ring.reduce(np.atleast_2d(C))
    dhats = np.asarray(dhats, dtype=np.int64)
    ell, n = C.shape
    if dhats.ndim != 2 or dhats.shape[1] != n:
        raise ValueError("mask batch must have shape (count, n)")
    if ring.q**ell * 2 > _SPAN_GUARD:
        raise SizeGuardError("joint state space too large")
    batch = dhats.shape[0]
    dtype = np.int64 if n <= 62 else np.float64
    state = np.zeros((batch,) + (ring.q,) * ell + (2,), dtype=dtype)
    state[(slice(None),) + (0,) * ell + (0,)] = 1
    toggle = (dhats & 1).astype(bool).T  # (n, batch)
    for i in range(n):
        shifted = state
        for j in range(ell):
            shifted = np.roll(shifted, int(C[j, i]), axis=1 + j)
        flipped = np.roll(shifted, 1, axis=ell + 1)
        sel = toggle[i].reshape((batch,) + (1,) * (ell + 1))
        state = state + np.where(sel, flipped, shifted)
    probs = state.reshape(batch, -1).astype(float)
    probs /= probs.sum(axis=1, keepdims=True)
    return 0.5 * np.abs(probs - 1.0 / (2 * ring.q**ell)).sum(axis=1)


def parity_tv(ring: ModRing, C, dhat, v=None) -> float:
    """TV distance of (C*s, dhat.s) from uniform over Z_q^ell x {0,1} for a
    uniform binary secret s; with v given, the distance of the conditional
    parity given C*s = v from a fair bit."""
    counts = parity_joint_counts(ring, C, dhat).astype(float)
    total = counts.sum()
    if v is None:
        probs = counts / total
        uni = 1.0 / counts.size
        return float(0.5 * np.abs(probs - uni).sum())
    v = tuple(int(t) % ring.q for t in np.atleast_1d(v))
    pair = counts[v]
    if pair.sum() == 0:
        raise ValueError(f"conditioning event C*s = {v} has probability zero")
    cond = pair / pair.sum()
    return float(0.5 * np.abs(cond - 0.5).sum())


def moderate_fraction_bound(q: int, ell: int, n: int) -> float:
    """1 - q^ell * 2^(-n/8), the guaranteed fraction of moderate matrices."""
    return 1.0 - q**ell * 2.0 ** (-n / 8.0)


def parity_tv_bound(q: int, ell: int, n: int) -> float:
    """q^(ell/2) * 2^(-n/40), the parity-balance bound for moderate C."""
    return q ** (ell / 2.0) * 2.0 ** (-n / 40.0)


# -- serialization -----------------------------------------------------------


def public_key_to_json(pub: PublicKey) -> dict:
    return {
        "A": mat_to_json(pub.ring, pub.A),
        "u": vec_to_json(pub.ring, pub.u),
        "profile": pub.profile.as_dict(),
    }


def public_key_from_json(obj: dict, profile: ParameterProfile) -> PublicKey:
    ring, A = mat_from_json(obj["A"])
    ring_u, u = vec_from_json(obj["u"])
    if ring.q != profile.q or ring_u.q != profile.q:
        raise ValueError("key modulus does not match profile")
    if A.shape != (profile.m, profile.n) or u.shape != (profile.m,):
        raise ValueError("key shape does not match profile")
    return PublicKey(profile, A, u)


def keypair_to_json(key: KeyPair) -> dict:
    return {
        "public": public_key_to_json(key.public),
        "trapdoor": None if key.gadget is None else trapdoor_to_json(key.gadget),
        "s": [int(v) for v in key.s_bits],
        "e": [int(v) for v in key.e],
    }


def keypair_from_json(obj: dict, profile: ParameterProfile) -> KeyPair:
    pub = public_key_from_json(obj["public"], profile)
    gadget = None if obj["trapdoor"] is None else trapdoor_from_json(obj["trapdoor"])
    s_bits = np.asarray(obj["s"], dtype=np.int64)
    e = np.asarray(obj["e"], dtype=np.int64)
    return KeyPair(pub, gadget, s_bits, e)
