"""Deterministic random-stream derivation.

A run is keyed by one 64-bit master seed.  Every independent consumer
(verifier, prover, session, analysis task) derives its own substream by
hashing the master seed together with string labels, so parallel sessions
and transported runs reproduce bit-for-bit.
"""

from __future__ import annotations

import hashlib

import numpy as np


def substream(master_seed: int, *labels) -> np.random.Generator:
    """Generator seeded by SHA-256(master || labels), truncated to 128 bits."""
    h = hashlib.sha256()
    h.update(int(master_seed).to_bytes(8, "little", signed=False))
    for lab in labels:
        h.update(b"\x1f")
        h.update(str(lab).encode("utf-8"))
    seed = int.from_bytes(h.digest()[:16], "little")
    return np.random.Generator(np.random.PCG64(seed))
