"""Verifier engines for the two interactive protocols, prover adapters,
transcripts, and acceptance decisions.

Protocol 1 (expansion): each round the prover commits an image y; the
verifier inverts it, secretly marks the round as a test (probability
p_test) or a generation round, and sends challenge 0 (equation) or 1
(preimage; always 1 on generation rounds).  Equation answers are graded
against the claw parity when d is in the good set and by a fair coin when
it is not; preimage answers are graded by the public support check.  Keys
are refreshed after every test round.  The run is accepted when the test
passes reach (1 - gamma) * p_test * N.

Protocol 2 (simplified): no keys and no images; the prover reports its
own pass bit e (plus a subspace bit k when probed with T = 1) on
challenge 0 and a label v in {0,1,2} on challenge 1.  Only T = 1 test
rounds are scored, against the threshold
(1 - gamma/kappa - eta) * kappa * p_test * N.

Prover adapters are duck-typed: new_key(key), next_sample() and
answer(c, t) for Protocol 1; round2(c, t) for Protocol 2.  Adapters with
wants_trapdoor = True receive the full key pair (simulation privilege);
everyone else sees the public part only.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from . import qsim
from .clawfree import (
    KeyPair,
    chk,
    claw_equation_bit,
    claw_from_image,
    gen,
    in_good_set,
    wilson_interval,
)
from .devices import SimplifiedDevice
from .extract import bits_to_hex, empirical_min_entropy
from .modq import SizeGuardError, canonical_json
from .profiles import ParameterProfile
from .trapdoor import DecodeFailure

_RESAMPLE_CAP = 16


@dataclass
class RoundRecord:
    index: int
    round_type: str  # "test" | "gen"
    challenge: int
    t: int | None
    key_epoch: int
    y: list | None
    answer: dict
    w: int
    o: int  # test rounds: W; generation rounds: the recorded bit, or 2 if invalid
    resamples: int = 0

    def as_dict(self) -> dict:
        return {
            "i": self.index,
            "type": self.round_type,
            "c": self.challenge,
            "t": self.t,
            "epoch": self.key_epoch,
            "y": self.y,
            "answer": self.answer,
            "w": self.w,
            "o": self.o,
            "resamples": self.resamples,
        }


@dataclass
class Transcript:
    mode: str
    profile: dict
    n_rounds: int
    records: list[RoundRecord] = field(default_factory=list)
    epochs: list[str] = field(default_factory=list)  # public-key digests
    accepted: bool = False
    threshold: float = 0.0
    test_passes: int = 0
    test_count: int = 0
    output_bits: list[int] = field(default_factory=list)
    gen_outputs: list[int] = field(default_factory=list)  # with 2 for invalid rounds
    budget: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def summary(self) -> dict:
        per_challenge = {}
        for c in (0, 1):
            tested = [r for r in self.records if r.round_type == "test" and r.challenge == c]
            per_challenge[str(c)] = {
                "rounds": len(tested),
                "pass_rate": (sum(r.w for r in tested) / len(tested)) if tested else None,
            }
        bits = np.array(self.output_bits, dtype=np.int64)
        return {
            "mode": self.mode,
            "profile": self.profile["name"],
            "rounds": self.n_rounds,
            "accepted": self.accepted,
            "test_passes": self.test_passes,
            "test_rounds": self.test_count,
            "threshold": self.threshold,
            "per_challenge": per_challenge,
            "output_bits": len(self.output_bits),
            "output_min_entropy_per_bit": (
                empirical_min_entropy(bits) if bits.size else None
            ),
            "budget": self.budget,
            "notes": self.notes,
        }

    def to_jsonl(self) -> str:
        head = {
            "fmt": 1,
            "mode": self.mode,
            "profile": self.profile,
            "n_rounds": self.n_rounds,
            "epochs": self.epochs,
        }
        lines = [canonical_json(head)]
        lines += [canonical_json(r.as_dict()) for r in self.records]
        lines.append(
            canonical_json(
                {
                    "final": {
                        "accepted": self.accepted,
                        "threshold": self.threshold,
                        "test_passes": self.test_passes,
                        "test_rounds": self.test_count,
                        "output_hex": bits_to_hex(np.array(self.output_bits, dtype=np.int64)),
                        "budget": self.budget,
                        "notes": self.notes,
                    }
                }
            )
        )
        return "\n".join(lines) + "\n"


def _h2(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


class _Budget:
    """Idealized count of verifier random bits consumed, to exhibit the
    expansion ratio qualitatively."""

    def __init__(self, profile: ParameterProfile):
        self.profile = profile
        self.bits = 0.0
        p = profile
        key_noise = p.noise_dist(p.B_V).entropy_bits()
        if p.uses_gadget:
            mbar = p.m - p.w
            self.key_cost = (
                mbar * p.n * math.log2(p.q) + p.w * mbar * math.log2(3) + p.n + p.m * key_noise
            )
        else:
            self.key_cost = p.m * p.n * math.log2(p.q) + p.n + p.m * key_noise

    def key(self):
        self.bits += self.key_cost

    def draw(self, entropy: float):
        self.bits += entropy

    def as_dict(self, output_bits: int) -> dict:
        return {
            "verifier_bits": round(self.bits, 2),
            "output_bits": output_bits,
            "expansion_ratio": (output_bits / self.bits) if self.bits else None,
        }


def _key_digest(key: KeyPair) -> str:
    from .clawfree import public_key_to_json

    blob = canonical_json(public_key_to_json(key.public))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _give_key(prover, key: KeyPair):
    prover.new_key(key if getattr(prover, "wants_trapdoor", False) else key.public)


def _request_sample(key: KeyPair, prover):
    """Ask for an image until it inverts, up to the resample cap."""
    y = None
    for attempt in range(_RESAMPLE_CAP + 1):
        try:
            y = np.asarray(prover.next_sample(), dtype=np.int64)
        except SessionAbort:
            raise
        except Exception as exc:
            raise MalformedAnswer(f"prover raised {type(exc).__name__}: {exc}") from exc
        if y.shape != (key.profile.m,):
            raise MalformedAnswer(f"sample shape {y.shape}")
        try:
            x0, x1 = claw_from_image(key, y)
            return y, x0, x1, attempt
        except (DecodeFailure, SizeGuardError):
            continue
    return y, None, None, _RESAMPLE_CAP


class SessionAbort(Exception):
    """Unrecoverable session failure (e.g. transport loss): aborts the run
    rather than scoring rounds."""


class MalformedAnswer(Exception):
    pass


def _validated_answer(key: KeyPair, prover, c: int):
    try:
        ans = prover.answer(c)
    except SessionAbort:
        raise
    except Exception as exc:  # a misbehaving prover scores 0, never crashes the run
        raise MalformedAnswer(f"prover raised {type(exc).__name__}: {exc}") from exc
    prof = key.profile
    if not isinstance(ans, tuple) or len(ans) != 3:
        raise MalformedAnswer(f"bad answer arity: {ans!r}")
    kind, a, b = ans
    if c == 0:
        if kind != "eq":
            raise MalformedAnswer(f"expected equation answer, got {kind!r}")
        u = int(a)
        d = np.asarray(b, dtype=np.int64)
        if u not in (0, 1) or d.shape != (prof.w,) or np.any((d != 0) & (d != 1)):
            raise MalformedAnswer("equation answer out of domain")
        return u, d
    if kind != "pre":
        raise MalformedAnswer(f"expected preimage answer, got {kind!r}")
    bbit = int(a)
    x = np.asarray(b, dtype=np.int64)
    if bbit not in (0, 1) or x.shape != (prof.n,) or np.any((x < 0) | (x >= prof.q)):
        raise MalformedAnswer("preimage answer out of domain")
    return bbit, x


def _score_equation(key: KeyPair, x0, x1, u, d, rng) -> int:
    ring = key.ring
    if not (in_good_set(ring, 0, x0, d) and in_good_set(ring, 1, x1, d)):
        return int(rng.integers(0, 2))
    return int(u == claw_equation_bit(ring, x0, x1, d))


def run_protocol1(
    profile: ParameterProfile,
    prover,
    rng: np.random.Generator,
    n_rounds: int | None = None,
) -> Transcript:
    N = profile.N if n_rounds is None else n_rounds
    budget = _Budget(profile)
    tr = Transcript(mode="protocol1", profile=profile.as_dict(), n_rounds=N)

    key = gen(profile, rng)
    budget.key()
    tr.epochs.append(_key_digest(key))
    _give_key(prover, key)
    epoch = 0

    for i in range(N):
        try:
            y, x0, x1, resamples = _request_sample(key, prover)
        except MalformedAnswer as exc:
            y, x0, x1, resamples = None, None, None, 0
            note = str(exc)
        else:
            note = None
        inv_failed = x0 is None

        is_test = bool(rng.random() < profile.p_test)
        budget.draw(_h2(profile.p_test))
        if is_test:
            c = int(rng.integers(0, 2))
            budget.draw(1.0)
        else:
            c = 1

        answer_rec: dict
        w = 0
        if note is not None:
            answer_rec = {"malformed": note}
        else:
            try:
                if c == 0:
                    u, d = _validated_answer(key, prover, 0)
                    answer_rec = {"u": u, "d": [int(t) for t in d]}
                    if not inv_failed:
                        good = in_good_set(key.ring, 0, x0, d) and in_good_set(
                            key.ring, 1, x1, d
                        )
                        if good:
                            w = int(u == claw_equation_bit(key.ring, x0, x1, d))
                        else:
                            w = int(rng.integers(0, 2))
                            budget.draw(1.0)
                else:
                    bbit, x = _validated_answer(key, prover, 1)
                    answer_rec = {"b": bbit, "x": [int(t) for t in x]}
                    w = chk(key.public, bbit, x, y) if not inv_failed else 0
            except MalformedAnswer as exc:
                answer_rec = {"malformed": str(exc)}
                w = 0

        if is_test:
            o = w
        else:
            o = answer_rec.get("b", 2) if w == 1 else 2
        tr.records.append(
            RoundRecord(
                index=i,
                round_type="test" if is_test else "gen",
                challenge=c,
                t=None,
                key_epoch=epoch,
                y=None if y is None else [int(v) for v in y],
                answer=answer_rec,
                w=w,
                o=o,
                resamples=resamples,
            )
        )
        # transport adapters flush round framing here; local provers have no hook
        end_round = getattr(prover, "end_round", None)
        if end_round is not None:
            end_round(i, refresh=is_test)
        if is_test:
            key = gen(profile, rng)
            budget.key()
            tr.epochs.append(_key_digest(key))
            _give_key(prover, key)
            epoch += 1

    _finalize_protocol1(tr, profile)
    tr.budget = budget.as_dict(len(tr.output_bits))
    return tr


def _finalize_protocol1(tr: Transcript, profile: ParameterProfile):
    tests = [r for r in tr.records if r.round_type == "test"]
    gens = [r for r in tr.records if r.round_type == "gen"]
    tr.test_count = len(tests)
    tr.test_passes = sum(r.w for r in tests)
    tr.threshold = (1 - profile.gamma) * profile.p_test * tr.n_rounds
    tr.accepted = tr.test_passes >= tr.threshold - 1e-9
    tr.gen_outputs = [r.o for r in gens]
    tr.output_bits = [r.o for r in gens if r.w == 1]


def protocol1_verdict(records: list[RoundRecord], profile: ParameterProfile, n_rounds: int) -> bool:
    """Acceptance recomputed from the records alone."""
    passes = sum(r.w for r in records if r.round_type == "test")
    return passes >= (1 - profile.gamma) * profile.p_test * n_rounds - 1e-9


def run_protocol2(
    profile: ParameterProfile,
    prover,
    rng: np.random.Generator,
    n_rounds: int | None = None,
) -> Transcript:
    N = profile.N if n_rounds is None else n_rounds
    budget = _Budget(profile)
    budget.key_cost = 0.0  # no keys in the simplified protocol
    tr = Transcript(mode="protocol2", profile=profile.as_dict(), n_rounds=N)

    for i in range(N):
        is_test = bool(rng.random() < profile.p_test)
        budget.draw(_h2(profile.p_test))
        if is_test:
            c = int(rng.integers(0, 2))
            t = int(rng.random() < profile.kappa)
            budget.draw(1.0 + _h2(profile.kappa))
        else:
            c, t = 1, 0

        w = 0
        answer_rec: dict
        try:
            ans = prover.round2(c, t)
            if c == 0:
                e, k = (int(ans[0]), None if ans[1] is None else int(ans[1]))
                if e not in (0, 1) or (t == 1 and k not in (0, 1)):
                    raise MalformedAnswer("bad simplified equation report")
                answer_rec = {"e": e, "k": k}
                w = e if t == 0 else e * (1 - k)
                o = w
            else:
                v = int(ans)
                if v not in (0, 1, 2):
                    raise MalformedAnswer("bad preimage label")
                answer_rec = {"v": v}
                w = int(v in (0, 1))
                o = v
        except SessionAbort:
            raise
        except Exception as exc:
            answer_rec = {"malformed": f"{type(exc).__name__}: {exc}"}
            w, o = 0, 2

        tr.records.append(
            RoundRecord(
                index=i,
                round_type="test" if is_test else "gen",
                challenge=c,
                t=t if is_test else 0,
                key_epoch=0,
                y=None,
                answer=answer_rec,
                w=w,
                o=o if not is_test else w,
            )
        )

    scored = [r for r in tr.records if r.round_type == "test" and r.t == 1]
    tr.test_count = len(scored)
    tr.test_passes = sum(r.w for r in scored)
    tr.threshold = (
        (1 - profile.gamma / profile.kappa - profile.eta)
        * profile.kappa
        * profile.p_test
        * N
    )
    if not scored:
        tr.accepted = False
        tr.notes.append("no probed test rounds occurred; rejecting degenerate run")
    else:
        tr.accepted = tr.test_passes >= tr.threshold - 1e-9
    gens = [r for r in tr.records if r.round_type == "gen"]
    tr.gen_outputs = [r.o for r in gens]
    tr.output_bits = [r.o for r in gens if r.o in (0, 1)]
    tr.budget = budget.as_dict(len(tr.output_bits))
    return tr


# -- single-round test ---------------------------------------------------------


@dataclass(frozen=True)
class SingleRoundReport:
    trials: int
    successes: int
    rate: float
    ci_low: float
    ci_high: float
    eq_rate: float
    pre_rate: float


def single_round_test(
    profile: ParameterProfile, prover, trials: int, rng: np.random.Generator
) -> SingleRoundReport:
    """Fresh key per trial; image, then preimage or equation challenge with
    probability 1/2 each."""
    wins = 0
    eq = [0, 0]
    pre = [0, 0]
    for _ in range(trials):
        key = gen(profile, rng)
        _give_key(prover, key)
        try:
            y, x0, x1, _ = _request_sample(key, prover)
        except MalformedAnswer:
            y, x0, x1 = None, None, None
        c = int(rng.integers(0, 2))
        w = 0
        try:
            if c == 0:
                u, d = _validated_answer(key, prover, 0)
                if x0 is not None:
                    w = _score_equation(key, x0, x1, u, d, rng)
            else:
                bbit, x = _validated_answer(key, prover, 1)
                w = chk(key.public, bbit, x, y) if x0 is not None else 0
        except MalformedAnswer:
            w = 0
        if c == 0:
            eq[w] += 1
        else:
            pre[w] += 1
        wins += w
    lo, hi = wilson_interval(wins, trials)
    return SingleRoundReport(
        trials=trials,
        successes=wins,
        rate=wins / trials,
        ci_low=lo,
        ci_high=hi,
        eq_rate=eq[1] / max(1, eq[0] + eq[1]),
        pre_rate=pre[1] / max(1, pre[0] + pre[1]),
    )


# -- classical baseline provers -------------------------------------------------


class CommittedPreimageProver:
    """Samples an honest branch-0 image and always answers the preimage
    challenge correctly; equation answers are uniform guesses."""

    wants_trapdoor = False

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.pub = None
        self._x = None

    def new_key(self, pub):
        self.pub = pub

    def next_sample(self):
        prof = self.pub.profile
        ring = self.pub.ring
        self._x = ring.uniform(self.rng, prof.n)
        e0 = self.pub.noise_dist().sample_vec(self.rng, prof.m)
        return ring.reduce(ring.matmul(self.pub.A, self._x) + e0)

    def answer(self, c, t=None):
        if c == 1:
            return ("pre", 0, self._x)
        u = int(self.rng.integers(0, 2))
        d = self.rng.integers(0, 2, size=self.pub.profile.w, dtype=np.int64)
        return ("eq", u, d)


class RandomNoiseProver:
    """Uniform garbage everywhere."""

    wants_trapdoor = False

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.pub = None

    def new_key(self, pub):
        self.pub = pub

    def next_sample(self):
        return self.pub.ring.uniform(self.rng, self.pub.profile.m)

    def answer(self, c, t=None):
        prof = self.pub.profile
        if c == 1:
            return ("pre", int(self.rng.integers(0, 2)), self.pub.ring.uniform(self.rng, prof.n))
        return (
            "eq",
            int(self.rng.integers(0, 2)),
            self.rng.integers(0, 2, size=prof.w, dtype=np.int64),
        )


class ReplayProver:
    """Commits once per key epoch and replays the same image, preimage and
    guessed equation for every round of the epoch.  Demonstrates why the
    verifier must refresh keys: without refreshes a single lucky equation
    guess would keep winning, while the output bit never varies."""

    wants_trapdoor = False

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.pub = None
        self._y = None
        self._x = None
        self._d = None
        self._u = None

    def new_key(self, pub):
        self.pub = pub
        prof = pub.profile
        ring = pub.ring
        self._x = ring.uniform(self.rng, prof.n)
        e0 = pub.noise_dist().sample_vec(self.rng, prof.m)
        self._y = ring.reduce(ring.matmul(pub.A, self._x) + e0)
        self._d = self.rng.integers(0, 2, size=prof.w, dtype=np.int64)
        self._u = int(self.rng.integers(0, 2))

    def next_sample(self):
        return self._y

    def answer(self, c, t=None):
        if c == 1:
            return ("pre", 0, self._x)
        return ("eq", self._u, self._d)


def classical_provers() -> dict:
    """Catalog of baseline adapters, keyed by CLI name."""
    return {
        "classical-committed": CommittedPreimageProver,
        "classical-random": RandomNoiseProver,
        "classical-replay": ReplayProver,
    }


def prover_catalog() -> dict:
    cat = dict(classical_provers())
    cat["ideal"] = qsim.IdealProver
    cat["qsim-micro"] = qsim.SimulatedProver
    return cat


# -- simplified-protocol provers -------------------------------------------------


class BornDeviceProver:
    """Simplified-protocol adapter that measures a SimplifiedDevice by the
    Born rule, memorylessly from its declared state each round."""

    def __init__(self, dev: SimplifiedDevice, rng: np.random.Generator):
        dev.validate()
        self.dev = dev
        self.rng = rng
        wts = dev.image_weights()
        self._yprob = wts / wts.sum()

    def _pick(self, probs) -> int:
        probs = np.maximum(np.real(np.asarray(probs)), 0.0)
        return int(self.rng.choice(probs.size, p=probs / probs.sum()))

    def round2(self, c: int, t: int):
        dev = self.dev
        y = self._pick(self._yprob)
        phi = dev.phi[y] / np.real(np.trace(dev.phi[y]))
        if c == 0:
            p1 = float(np.real(np.trace(dev.M1(y) @ phi)))
            e = self._pick([1 - p1, p1])
            if t == 0:
                return (e, None)
            Me = dev.M1(y) if e else dev.M0[y]
            post = Me @ phi @ Me
            wt = float(np.real(np.trace(post)))
            if wt <= 0:
                return (e, 0)
            pk1 = float(np.real(np.trace(dev.K1(y) @ post))) / wt
            return (e, self._pick([1 - pk1, pk1]))
        probs = [
            float(np.real(np.trace(dev.Pi0[y] @ phi))),
            float(np.real(np.trace(dev.Pi1[y] @ phi))),
            float(np.real(np.trace(dev.Pi2(y) @ phi))),
        ]
        return self._pick(probs)


class ConstantSimplifiedProver:
    """Always reports a valid equation in the good subspace and the same
    preimage label; sails through the simplified protocol while emitting a
    constant output, which is exactly why unconstrained provers prove
    nothing there."""

    def __init__(self, rng=None):
        pass

    def round2(self, c: int, t: int):
        return (1, 0) if c == 0 else 0
