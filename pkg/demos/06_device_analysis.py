"""Device-side analysis: overlap, principal angles, and the entropy-rate
curve.

A simplified device is graded by how unbiased its equation measurement is
against its preimage basis inside the good subspace (the overlap).  The
per-round entropy rate is zero until the test score clears (1+omega)/2
and grows quadratically after; tail bounds say how sharply empirical
scores concentrate.
"""

import numpy as np

from clawrand.devices import (
    azuma_bound,
    bad_subspace,
    fan_bound,
    honest_qubit_device,
    jordan_angles,
    lambda_curve,
    overlap,
    post_measurement,
    branch_weight,
    rate_bound,
)
from clawrand.profiles import get_profile

dev = honest_qubit_device()
print(f"honest qubit device: overlap = {overlap(dev)} (the unbiased optimum is 1/2)")
print("post-measurement branch weights:")
for v in (0, 1, 2):
    print(f"  preimage outcome {v}: {branch_weight(post_measurement(dev, (1, v))):.3f}")

P = np.array([[1, 0], [0, 0]], dtype=complex)
M = np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex)
dec = jordan_angles(P, M)
print(f"\nprincipal angles between the computational and Hadamard projectors: "
      f"{[round(float(t), 4) for t in dec.angles()]} (pi/4 = 0.7854)")
K = bad_subspace(P, M, omega=0.75)
print(f"bad subspace at omega=3/4 has rank {int(round(np.trace(K).real))} "
      "(fully unbiased blocks are all good)")

print("\nentropy-rate curve at omega = 3/4:")
for t in (0.85, 0.875, 0.9, 0.95, 1.0):
    print(f"  score {t:.3f}: lambda = {lambda_curve(0.75, t):.5f} bits/round")

prof = get_profile("desk-protocol")
r = rate_bound(prof.omega, prof.gamma, prof.kappa, prof.eta, prof.p_test, eps=1e-4)
print(f"\naccumulation rate at the desk-protocol knobs: {r:.5f} bits/round")
print("(up to the analysis' unstated constants; negative at desk scale, where the")
print(" guarantee is vacuous even though the devices themselves emit fair bits)")

print("\ntail bounds for n = 1000 audited rounds:")
print(f"  azuma(t=0.05): {azuma_bound(0.05, 1000):.3e}")
print(f"  bennett-style fan(t=0.05, v=0.1): {fan_bound(0.05, 0.1, 1000):.3e}")
