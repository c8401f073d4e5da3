"""The gadget trapdoor: sampling a matrix that looks uniform but decodes
noisy linear samples.

A = [Abar; G - R*Abar] hides the powers-of-two gadget G behind a uniform
block; whoever knows the ternary R can collapse A*s + e to G*s + small
noise and read s off blockwise with nearest-plane decoding.
"""

import math

import numpy as np

from clawrand.gaussians import TruncGaussian
from clawrand.modq import ModRing, gadget_matrix
from clawrand.trapdoor import DecodeFailure, gen_trap, invert, measure_decode_radius

ring = ModRing(61)
rng = np.random.default_rng(1)
key = gen_trap(ring, n=8, m=56, rng=rng)
print(f"sampled trapdoor key: A is {key.A.shape}, R is {key.R.shape}, q = {ring.q}")

RI = np.hstack([key.R, np.eye(key.w, dtype=np.int64)])
print("[R | I] @ A == gadget:", np.array_equal(ring.matmul(RI, key.A), gadget_matrix(ring, 8)))

noise = TruncGaussian(ring, 2.0)
bound = 2.0 * math.sqrt(56)
ok = 0
for _ in range(2000):
    s = ring.uniform(rng, 8)
    e = ring.centered(noise.sample_vec(rng, 56))
    y = ring.reduce(ring.matmul(key.A, s) + e)
    s2, e2 = invert(key, y, max_norm=bound)
    ok += int(np.array_equal(s2, s) and np.array_equal(e2, e))
print(f"round-trip on 2000 noisy samples: {ok}/2000 exact recoveries")

fails = 0
for _ in range(200):
    try:
        invert(key, ring.uniform(rng, 56), max_norm=bound)
    except DecodeFailure:
        fails += 1
print(f"uniform garbage flagged: {fails}/200")

radius = measure_decode_radius(key, rng, trials=100)
print(f"measured usable noise radius for this key: {radius:.1f} "
      f"(width-2 samples have typical norm {2 * math.sqrt(56) * 0.4:.1f})")
