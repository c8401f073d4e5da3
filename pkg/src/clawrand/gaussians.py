"""Truncated discrete Gaussians over Z_q and Z_q^m.

The width-B distribution on Z_q puts weight exp(-pi*|x|^2/B^2) on every
residue whose centered representative has absolute value at most B, and
zero elsewhere; |.| is the centered absolute value.  The m-dimensional
variant is the i.i.d. product, so its support is the box of residue
vectors with every coordinate in the width-B band.

Densities and distances are computed by exact summation; there is no tail
approximation anywhere.  Sampling is exact inverse-CDF over the enumerated
support, with an exact rejection sampler (two-sided geometric proposal)
for widths too large to enumerate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .modq import ModRing, SizeGuardError

# Largest support table we will enumerate, and largest q^m domain for
# exhaustive vector-distance sums.  Sampling switches to rejection beyond
# width 1e4 regardless, keeping draws cheap for wide distributions.
_MAX_SUPPORT = 5_000_000
_MAX_DOMAIN = 10_000_000
_MAX_CDF_WIDTH = 10_000


@dataclass(frozen=True)
class TruncGaussian:
    """Width-B truncated discrete Gaussian on Z_q."""

    ring: ModRing
    B: float
    _table: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.B <= 0:
            raise ValueError("width parameter must be positive")

    # -- support table ---------------------------------------------------

    def _ensure_table(self):
        if self._table:
            return
        q = self.ring.q
        L = min(int(math.floor(self.B)), q // 2)
        if 2 * L + 1 > _MAX_SUPPORT:
            raise SizeGuardError(
                f"support of size {2 * L + 1} exceeds enumeration guard; "
                "only sampling is available at this width"
            )
        support_c = np.arange(-L, L + 1, dtype=np.int64)
        if q % 2 == 0 and self.B >= q // 2:
            # (-q/2, q/2] keeps +q/2 but not -q/2
            support_c = support_c[support_c != -(q // 2)]
        weights = np.exp(-math.pi * support_c.astype(float) ** 2 / self.B**2)
        tau = float(weights.sum())
        dens = np.zeros(q)
        dens[np.mod(support_c, q)] = weights / tau
        self._table["support_centered"] = support_c
        self._table["density"] = dens
        self._table["cdf"] = np.cumsum(weights / tau)
        self._table["tau"] = tau

    @property
    def normalizer(self) -> float:
        """tau: the sum of the unnormalized weights over the support."""
        self._ensure_table()
        return self._table["tau"]

    def support(self) -> np.ndarray:
        """Residues of the support, as centered representatives."""
        self._ensure_table()
        return self._table["support_centered"].copy()

    # -- densities -------------------------------------------------------

    def density(self, x) -> float:
        """Probability of residue x."""
        self._ensure_table()
        x = int(np.mod(x, self.ring.q))
        return float(self._table["density"][x])

    def density_table(self) -> np.ndarray:
        """Length-q array of probabilities indexed by residue."""
        self._ensure_table()
        return self._table["density"].copy()

    def density_vec(self, v) -> float:
        """Product density of a residue vector."""
        self._ensure_table()
        v = np.mod(np.asarray(v, dtype=np.int64), self.ring.q)
        return float(np.prod(self._table["density"][v]))

    def entropy_bits(self) -> float:
        self._ensure_table()
        p = self._table["density"]
        p = p[p > 0]
        return float(-(p * np.log2(p)).sum())

    # -- sampling --------------------------------------------------------

    def sample_vec(self, rng: np.random.Generator, m: int) -> np.ndarray:
        """m i.i.d. coordinates, as residues in [0, q)."""
        if self.B > _MAX_CDF_WIDTH and self.B < self.ring.q / 2:
            out = np.array([self._sample_rejection(rng) for _ in range(m)])
            return np.mod(out, self.ring.q)
        self._ensure_table()
        u = rng.random(m)
        idx = np.searchsorted(self._table["cdf"], u)
        return np.mod(self._table["support_centered"][idx], self.ring.q)

    def sample(self, rng: np.random.Generator) -> int:
        return int(self.sample_vec(rng, 1)[0])

    def _sample_rejection(self, rng: np.random.Generator) -> int:
        # Exact sampler for huge widths: two-sided geometric proposal with
        # the standard Gaussian acceptance ratio, then truncation to the
        # width-B band.  Requires B < q/2 so the band does not wrap.
        if self.B >= self.ring.q / 2:
            raise SizeGuardError("rejection sampler requires B < q/2")
        sigma2 = self.B**2 / (2 * math.pi)
        t = math.floor(math.sqrt(sigma2)) + 1
        p_geo = 1.0 - math.exp(-1.0 / t)
        L = int(math.floor(self.B))
        while True:
            g = int(rng.geometric(p_geo)) - 1
            sign = 1 if rng.random() < 0.5 else -1
            if g == 0 and sign == -1:
                continue
            y = sign * g
            accept = math.exp(-((abs(y) - sigma2 / t) ** 2) / (2 * sigma2))
            if rng.random() < accept and abs(y) <= L:
                return y


# -- distances -----------------------------------------------------------


def enumerate_product_density(dist: TruncGaussian, m: int) -> np.ndarray:
    """Flat array of the product density over all of Z_q^m, index mixed-radix
    with the first coordinate most significant.  Guarded at q^m <= 1e7."""
    q = dist.ring.q
    if q**m > _MAX_DOMAIN:
        raise SizeGuardError(f"domain size q^m = {q**m} exceeds {_MAX_DOMAIN}")
    d = dist.density_table()
    out = np.array([1.0])
    for _ in range(m):
        out = np.multiply.outer(out, d).reshape(-1)
    return out


def hellinger_sq(dist: TruncGaussian, e) -> float:
    """Squared Hellinger distance between the m-fold product and its shift
    by the residue vector e, by exact summation over Z_q^m."""
    e = np.atleast_1d(np.asarray(e, dtype=np.int64))
    m = e.size
    q = dist.ring.q
    if q**m > _MAX_DOMAIN:
        raise SizeGuardError(f"domain size q^m = {q**m} exceeds {_MAX_DOMAIN}")
    d = dist.density_table()
    bc = np.array([1.0])
    xs = np.arange(q)
    for i in range(m):
        shifted = d[np.mod(xs - e[i], q)]
        bc = np.multiply.outer(bc, np.sqrt(d[xs] * shifted)).reshape(-1)
    return float(1.0 - bc.sum())


def tv_distance(f1, f2) -> float:
    """Total variation distance between two densities on the same domain."""
    f1 = np.asarray(f1, dtype=float)
    f2 = np.asarray(f2, dtype=float)
    if f1.shape != f2.shape:
        raise ValueError(f"domain mismatch: {f1.shape} vs {f2.shape}")
    return float(0.5 * np.abs(f1 - f2).sum())


def shifted_hellinger_bound(m: int, e_norm: float, B: float) -> float:
    """1 - exp(-2*pi*sqrt(m)*||e||/B): upper bound on H^2(D, D+e) valid in
    the small-shift regime (every coordinate shift within the width)."""
    return 1.0 - math.exp(-2.0 * math.pi * math.sqrt(m) * e_norm / B)


def shifted_tv_bound(m: int, e_norm: float, B: float) -> float:
    """sqrt(2*(1 - exp(-2*pi*sqrt(m)*||e||/B))): the matching TV bound."""
    return math.sqrt(2.0 * shifted_hellinger_bound(m, e_norm, B))
