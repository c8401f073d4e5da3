"""Newline-delimited JSON wire protocol for running the interactive
protocols across a TCP socket or a stdio pipe.

Message types: hello, key, sample, challenge, answer_eq, answer_pre,
decision, final.  Vectors and matrices use the same JSON schema as the
in-process serializers.  Decisions carry flow control only (resample and
refresh flags); per-round grades stay on the verifier until the final
message, matching the in-protocol information flow.  The trapdoor never
crosses the wire, so trapdoor-privileged provers cannot run on the client
side.
"""

from __future__ import annotations

import logging
import socket

import numpy as np

from .clawfree import PublicKey, public_key_from_json, public_key_to_json
from .modq import canonical_json
from .profiles import ParameterProfile, get_profile
from .protocol import SessionAbort, Transcript, prover_catalog, run_protocol1, run_protocol2
from .rngstream import substream

log = logging.getLogger("clawrand.wire")


class WireError(SessionAbort):
    """Transport or framing failure: aborts the session instead of being
    scored as a bad answer."""


class LineChannel:
    """One JSON object per line over a pair of byte streams."""

    def __init__(self, reader, writer):
        self.reader = reader
        self.writer = writer

    @classmethod
    def from_socket(cls, sock: socket.socket) -> "LineChannel":
        return cls(sock.makefile("rb"), sock.makefile("wb"))

    def send(self, obj: dict):
        try:
            self.writer.write((canonical_json(obj) + "\n").encode("utf-8"))
            self.writer.flush()
        except OSError as exc:
            raise WireError(f"send failed: {exc}") from exc

    def recv(self, *expected_types: str) -> dict:
        try:
            line = self.reader.readline()
        except OSError as exc:
            raise WireError(f"receive failed: {exc}") from exc
        if not line:
            raise WireError("connection closed")
        import json

        try:
            obj = json.loads(line.decode("utf-8"))
        except json.JSONDecodeError as exc:
            raise WireError(f"bad message framing: {exc}") from exc
        if expected_types and obj.get("type") not in expected_types:
            raise WireError(f"expected {expected_types}, got {obj.get('type')!r}")
        return obj

    def close(self):
        # makefile wrappers keep the socket alive until both are closed
        for stream in (self.writer, self.reader):
            try:
                stream.close()
            except Exception:
                pass


class RemoteProver:
    """Server-side adapter presenting a connected client as a Protocol 1
    prover."""

    wants_trapdoor = False

    def __init__(self, chan: LineChannel):
        self.chan = chan
        self._epoch = -1
        self._mid_round = False

    def new_key(self, pub: PublicKey):
        self._epoch += 1
        self.chan.send({"type": "key", "epoch": self._epoch, **public_key_to_json(pub)})

    def next_sample(self):
        if self._mid_round:
            self.chan.send({"type": "decision", "resample": True, "refresh": False})
        self._mid_round = True
        msg = self.chan.recv("sample")
        return np.asarray(msg["y"], dtype=np.int64)

    def answer(self, c: int, t=None):
        self.chan.send({"type": "challenge", "c": int(c), "t": t})
        msg = self.chan.recv("answer_eq", "answer_pre")
        if msg["type"] == "answer_eq":
            return ("eq", int(msg["u"]), np.asarray(msg["d"], dtype=np.int64))
        return ("pre", int(msg["b"]), np.asarray(msg["x"], dtype=np.int64))

    def end_round(self, index: int, refresh: bool):
        self._mid_round = False
        self.chan.send(
            {"type": "decision", "round": int(index), "resample": False, "refresh": bool(refresh)}
        )


class RemoteProver2:
    """Server-side adapter for the simplified protocol."""

    def __init__(self, chan: LineChannel):
        self.chan = chan

    def round2(self, c: int, t: int):
        self.chan.send({"type": "challenge", "c": int(c), "t": int(t)})
        msg = self.chan.recv("answer_eq", "answer_pre")
        if msg["type"] == "answer_eq":
            return (int(msg["e"]), None if msg.get("k") is None else int(msg["k"]))
        return int(msg["v"])


def serve_session(
    chan: LineChannel,
    profile: ParameterProfile,
    mode: str,
    seed: int,
    n_rounds: int | None = None,
) -> Transcript:
    """Run the verifier side over an established channel."""
    hello = chan.recv("hello")
    if hello.get("role") != "prover":
        raise WireError(f"expected a prover, got role {hello.get('role')!r}")
    log.info("prover %r connected; running %s on %s", hello.get("prover"), mode, profile.name)
    chan.send(
        {
            "type": "hello",
            "role": "verifier",
            "fmt": 1,
            "mode": mode,
            "profile": profile.as_dict(),
            "rounds": n_rounds if n_rounds is not None else profile.N,
        }
    )
    rng = substream(seed, "verifier", mode)
    if mode == "protocol1":
        tr = run_protocol1(profile, RemoteProver(chan), rng, n_rounds=n_rounds)
    elif mode == "protocol2":
        tr = run_protocol2(profile, RemoteProver2(chan), rng, n_rounds=n_rounds)
    else:
        raise WireError(f"mode {mode!r} is not servable")
    chan.send(
        {
            "type": "final",
            "accepted": tr.accepted,
            "test_passes": tr.test_passes,
            "test_rounds": tr.test_count,
        }
    )
    return tr


def connect_session(chan: LineChannel, prover_kind: str, seed: int) -> dict:
    """Run a local prover against a remote verifier; returns the final
    message."""
    chan.send({"type": "hello", "role": "prover", "prover": prover_kind})
    hello = chan.recv("hello")
    profile = get_profile(hello["profile"]["name"])
    mode = hello["mode"]
    rounds = int(hello["rounds"])
    if mode == "protocol2":
        return _client_loop2(chan, prover_kind, seed)

    catalog = prover_catalog()
    if prover_kind not in catalog:
        raise WireError(f"unknown prover kind {prover_kind!r}")
    prover = catalog[prover_kind](substream(seed, "prover", prover_kind))
    if getattr(prover, "wants_trapdoor", False):
        raise WireError(f"prover {prover_kind!r} needs the trapdoor and cannot run remotely")

    rounds_done = 0
    while True:
        msg = chan.recv()
        kind = msg["type"]
        if kind == "key":
            prover.new_key(public_key_from_json(msg, profile))
            if rounds_done < rounds:
                chan.send({"type": "sample", "y": [int(v) for v in prover.next_sample()]})
        elif kind == "challenge":
            tag, a, b = prover.answer(int(msg["c"]))
            if tag == "eq":
                chan.send({"type": "answer_eq", "u": int(a), "d": [int(v) for v in b]})
            else:
                chan.send({"type": "answer_pre", "b": int(a), "x": [int(v) for v in b]})
        elif kind == "decision":
            if msg.get("resample"):
                chan.send({"type": "sample", "y": [int(v) for v in prover.next_sample()]})
                continue
            rounds_done += 1
            if not msg.get("refresh") and rounds_done < rounds:
                chan.send({"type": "sample", "y": [int(v) for v in prover.next_sample()]})
        elif kind == "final":
            return msg
        else:
            raise WireError(f"unexpected message {kind!r}")


def _client_loop2(chan: LineChannel, prover_kind: str, seed: int) -> dict:
    from .devices import honest_qubit_device
    from .protocol import BornDeviceProver, ConstantSimplifiedProver

    if prover_kind == "device-honest":
        prover = BornDeviceProver(honest_qubit_device(), substream(seed, "prover", prover_kind))
    elif prover_kind == "device-constant":
        prover = ConstantSimplifiedProver()
    else:
        raise WireError(f"prover {prover_kind!r} cannot play the simplified protocol")
    while True:
        msg = chan.recv()
        if msg["type"] == "final":
            return msg
        if msg["type"] != "challenge":
            raise WireError(f"unexpected message {msg['type']!r}")
        c, t = int(msg["c"]), int(msg["t"] or 0)
        ans = prover.round2(c, t)
        if c == 0:
            e, k = ans
            chan.send({"type": "answer_eq", "e": int(e), "k": None if k is None else int(k)})
        else:
            chan.send({"type": "answer_pre", "v": int(ans)})


def serve_tcp(
    host: str,
    port: int,
    profile: ParameterProfile,
    mode: str,
    seed: int,
    n_rounds: int | None = None,
    ready_callback=None,
) -> Transcript:
    """Listen for one prover connection and run a session."""
    with socket.create_server((host, port)) as srv:
        if ready_callback is not None:
            ready_callback(srv.getsockname()[1])
        conn, _ = srv.accept()
        with conn:
            chan = LineChannel.from_socket(conn)
            tr = serve_session(chan, profile, mode, seed, n_rounds)
            chan.close()
            return tr


def connect_tcp(host: str, port: int, prover_kind: str, seed: int) -> dict:
    with socket.create_connection((host, port)) as sock:
        chan = LineChannel.from_socket(sock)
        final = connect_session(chan, prover_kind, seed)
        chan.close()
        return final
