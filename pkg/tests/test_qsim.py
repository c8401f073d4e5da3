import math

import numpy as np
import pytest
import scipy.stats

from clawrand.clawfree import claw_equation_bit, claw_from_image, density_public, gen, inv
from clawrand.modq import SizeGuardError
from clawrand.profiles import get_profile
from clawrand.qsim import (
    IdealProver,
    SimulatedProver,
    equation_violation_bound,
    measure_equation,
    measure_image,
    measure_preimage,
    prepare_sampling_state,
    _index_grid,
)
from clawrand.rngstream import substream


@pytest.fixture(scope="module")
def micro_key():
    return gen(get_profile("micro"), substream(200, "qsim-key"))


@pytest.fixture(scope="module")
def micro_state(micro_key):
    return prepare_sampling_state(micro_key.public)


def test_prepared_norm_and_born_rule(micro_key, micro_state):
    st = micro_state
    assert st.norm() == pytest.approx(1.0, abs=1e-10)
    prof = micro_key.profile
    q, n, m = prof.q, prof.n, prof.m
    xs = _index_grid(q, n)
    ys = _index_grid(q, m)
    for b in (0, 1):
        for xi in range(q**n):
            for yi in range(0, q**m, 7):
                want = density_public(micro_key.public, b, xs[xi], ys[yi]) / (2 * q**n)
                assert st.amps[b, xi, yi] ** 2 == pytest.approx(want, abs=1e-12)


def test_image_marginal_matches_density_sum(micro_key, micro_state):
    prof = micro_key.profile
    q, n, m = prof.q, prof.n, prof.m
    marg = (micro_state.amps**2).sum(axis=(0, 1))
    xs = _index_grid(q, n)
    ys = _index_grid(q, m)
    for yi in range(q**m):
        want = sum(
            density_public(micro_key.public, b, x, ys[yi]) for b in (0, 1) for x in xs
        ) / (2 * q**n)
        assert marg[yi] == pytest.approx(want, abs=1e-12)


def test_image_measurement_frequencies_chisquare(micro_key, micro_state):
    rng = substream(13, "born-y")
    prof = micro_key.profile
    probs = (micro_state.amps**2).sum(axis=(0, 1))
    shots = 10_000
    counts = np.zeros(prof.q**prof.m, dtype=np.int64)
    for _ in range(shots):
        col = measure_image(micro_state, rng)
        idx = 0
        for v in col.y:
            idx = idx * prof.q + int(v)
        counts[idx] += 1
    keep = probs > 0
    assert not counts[~keep].any()
    assert scipy.stats.chisquare(counts[keep], probs[keep] * shots).pvalue > 0.001


def test_collapse_is_exact_claw(micro_key, micro_state):
    rng = substream(1, "collapse")
    for _ in range(50):
        col = measure_image(micro_state, rng)
        x0, x1 = claw_from_image(micro_key, col.y)
        support = {(b, xi) for b, xi in zip(*np.nonzero(np.abs(col.amps) > 1e-12))}
        xs = _index_grid(micro_key.profile.q, micro_key.profile.n)
        want = {(0, _rank(xs, x0)), (1, _rank(xs, x1))}
        assert support == want
        vals = [col.amps[b, xi] for b, xi in sorted(support)]
        assert vals[0] == pytest.approx(vals[1], abs=1e-10)
        assert sum(v**2 for v in vals) == pytest.approx(1.0, abs=1e-10)


def _rank(xs, x):
    return int(np.flatnonzero((xs == x).all(axis=1))[0])


def test_never_samples_outside_support(micro_key, micro_state):
    rng = substream(2, "supp")
    for _ in range(200):
        col = measure_image(micro_state, rng)
        total = sum(
            density_public(micro_key.public, b, x, col.y)
            for b in (0, 1)
            for x in _index_grid(micro_key.profile.q, micro_key.profile.n)
        )
        assert total > 0


def test_preimage_measurement(micro_key, micro_state):
    rng = substream(3, "pre")
    bs = []
    for _ in range(3000):
        col = measure_image(micro_state, rng)
        b, x = measure_preimage(col, rng)
        assert np.array_equal(inv(micro_key, b, col.y), x)
        bs.append(b)
    counts = np.bincount(bs, minlength=2)
    assert scipy.stats.chisquare(counts).pvalue > 0.001


def test_equation_measurement_exact_and_uniform(micro_key, micro_state):
    rng = substream(4, "eq")
    ds = []
    for _ in range(3000):
        col = measure_image(micro_state, rng)
        u, d = measure_equation(col, rng)
        x0, x1 = claw_from_image(micro_key, col.y)
        assert u == claw_equation_bit(micro_key.ring, x0, x1, d)
        ds.append(int((d * (1 << np.arange(d.size))).sum()))
    counts = np.bincount(ds, minlength=2 ** micro_key.profile.w)
    assert scipy.stats.chisquare(counts).pvalue > 0.001


def test_single_preimage_branch_hadamard_algebra(micro_key):
    # a lone branch |b>|J(x)> Hadamards to the full uniform superposition
    # with sign (-1)^(u*b + d.J(x)); direct state computation, since the
    # outcome distribution alone carries no u-d correlation
    from clawrand.modq import bit_encode
    from clawrand.qsim import _fwht

    prof = micro_key.profile
    state = prepare_sampling_state(micro_key.public)
    rng = substream(5, "single")
    col = measure_image(state, rng)
    col.amps[1, :] = 0.0
    col.amps /= np.sqrt((col.amps**2).sum())
    keep = np.flatnonzero(np.abs(col.amps[0]) > 1e-12)
    assert keep.size == 1
    x = _index_grid(prof.q, prof.n)[keep[0]]
    jbits = bit_encode(micro_key.ring, x)
    w = prof.w
    psi = np.zeros(2 ** (w + 1))
    psi[int(jbits @ (1 << np.arange(w)))] = 1.0  # b = 0 branch
    out = _fwht(psi) / math.sqrt(psi.size)
    for t in range(out.size):
        u, dint = t >> w, t & ((1 << w) - 1)
        d = (dint >> np.arange(w)) & 1
        sign = (-1) ** ((u * 0 + int(d @ jbits)) % 2)
        assert out[t] == pytest.approx(sign / math.sqrt(out.size), abs=1e-12)
    # and the measured distribution is uniform: u carries no information
    us = [measure_equation(col, rng)[0] for _ in range(400)]
    assert 0.3 < np.mean(us) < 0.7


def test_noisy_profile_violation_rate_within_bound():
    prof = get_profile("micro-noisy")
    key = gen(prof, substream(6, "noisy"))
    state = prepare_sampling_state(key.public)
    assert state.norm() == pytest.approx(1.0, abs=1e-10)
    bound = equation_violation_bound(key)
    rng = substream(7, "noisy-shots")
    shots = 4000
    viol = 0
    skipped = 0
    for _ in range(shots):
        col = measure_image(state, rng)
        u, d = measure_equation(col, rng)
        try:
            x0, x1 = claw_from_image(key, col.y)
        except Exception:
            skipped += 1
            continue
        viol += int(u != claw_equation_bit(key.ring, x0, x1, d))
    rate = viol / (shots - skipped)
    sigma = math.sqrt(max(rate * (1 - rate), 1e-6) / (shots - skipped))
    # logged, checked only against the exact trace-distance bound plus noise
    assert rate <= bound + 5 * sigma


def test_micro3_gadget_profile_end_to_end():
    # the q=3 micro shape is the smallest one that still fits the gadget
    # trapdoor (m = w + n exactly); dimension 2 * 3^4 = 162
    prof = get_profile("micro3")
    assert prof.uses_gadget
    key = gen(prof, substream(14, "m3"))
    assert key.gadget is not None
    state = prepare_sampling_state(key.public)
    assert state.amps.size == 162
    assert state.norm() == pytest.approx(1.0, abs=1e-10)
    rng = substream(14, "m3-shots")
    for _ in range(300):
        col = measure_image(state, rng)
        u, d = measure_equation(col, rng)
        x0, x1 = claw_from_image(key, col.y)
        assert u == claw_equation_bit(key.ring, x0, x1, d)
    ys = _index_grid(3, 3)
    for b in (0, 1):
        for x in range(3):
            for y in ys:
                from clawrand.clawfree import chk

                assert chk(key.public, b, [x], y) == int(
                    density_public(key.public, b, [x], y) > 0
                )


def test_state_guard():
    prof = get_profile("desk-small")
    key = gen(prof, substream(8, "guard"))
    with pytest.raises(SizeGuardError):
        prepare_sampling_state(key.public)


def test_ideal_prover_matches_simulation_statistics(micro_key):
    prof = micro_key.profile
    q, n, m = prof.q, prof.n, prof.m
    state = prepare_sampling_state(micro_key.public)
    rng = substream(9, "cross")
    shots = 6000
    sim_counts = {}
    for _ in range(shots):
        col = measure_image(state, rng)
        b, x = measure_preimage(col, rng)
        k = (b, tuple(int(v) for v in x), tuple(int(v) for v in col.y))
        sim_counts[k] = sim_counts.get(k, 0) + 1
    ideal = IdealProver(substream(10, "ideal"))
    ideal.new_key(micro_key)
    ideal_counts = {}
    for _ in range(shots):
        y = ideal.next_sample()
        _, b, x = ideal.answer(1)
        k = (b, tuple(int(v) for v in x), tuple(int(v) for v in y))
        ideal_counts[k] = ideal_counts.get(k, 0) + 1
    keys = set(sim_counts) | set(ideal_counts)
    tv = 0.5 * sum(
        abs(sim_counts.get(k, 0) - ideal_counts.get(k, 0)) / shots for k in keys
    )
    assert tv < 0.05


def test_ideal_prover_equations_always_verify(micro_key):
    ideal = IdealProver(substream(11, "ideal-eq"))
    ideal.new_key(micro_key)
    for _ in range(300):
        y = ideal.next_sample()
        _, u, d = ideal.answer(0)
        x0, x1 = claw_from_image(micro_key, y)
        assert u == claw_equation_bit(micro_key.ring, x0, x1, d)


def test_simulated_prover_adapter(micro_key):
    prover = SimulatedProver(substream(12, "adapter"))
    prover.new_key(micro_key.public)
    y = prover.next_sample()
    kind, b, x = prover.answer(1)
    assert kind == "pre"
    assert np.array_equal(inv(micro_key, b, y), x)
