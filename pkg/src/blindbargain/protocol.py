"""Five-step settlement protocol over TCP.

The victim listens, garbles, and serves labels; the attacker connects,
checks the circuit, evaluates, and returns the output labels:

  1. victim proposes the profile (q, p_bar, k, k_theta, t_e); the
     attacker acks it or aborts,
  2. victim builds the circuit from the profile, garbles it, and sends
     the garbled tables with output commitments,
  3. victim sends its own input labels directly and serves the
     attacker's through oblivious transfer, so neither report nor
     random word crosses the wire in the clear,
  4. attacker independently rebuilds the circuit from the agreed
     profile and compares digests before evaluating; a mismatch aborts,
  5. attacker sends the output labels back; the victim verifies them
     against its commitments, decodes, and acks the plaintext result,
     which the attacker cross-checks against its own extraction.

Every message is length-prefixed; ABORT is legal in any state and
carries the stage tag of the failed check.  Transcripts record only
direction, type, length, and a payload digest, never the remote party's
plaintext report.  Check failures raise NegotiationAbort, transport
problems raise TransportFailure; both carry the transcript so the CLI
can persist it.
"""

from __future__ import annotations

import hashlib
import random
import secrets
import socket
import struct
import threading
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .circuit import (
    Circuit,
    build_mechanism_circuit,
    circuit_digest,
    decode_outcome,
)
from .garbling import (
    LABEL_BYTES,
    LabelDecodeError,
    WireLabel,
    decode_and_prove,
    deserialize_garbled,
    evaluate,
    garble,
    select_labels,
    serialize_garbled,
)
from .losses import MoneyLike, as_money
from .mechanism import MechanismOutcome, MechanismParams, ScaledParams
from .ot import OtProtocolError, OtReceiver, OtSender

MSG_HELLO = 1
MSG_PI_ACK = 2
MSG_CIRCUIT = 3
MSG_GARBLER_INPUT_LABELS = 4
MSG_OT_MSG1 = 5
MSG_OT_MSG2 = 6
MSG_OT_MSG3 = 7
MSG_OUTPUT_LABELS = 8
MSG_RESULT_ACK = 9
MSG_ABORT = 10

MSG_NAMES = {
    MSG_HELLO: "HELLO",
    MSG_PI_ACK: "PI_ACK",
    MSG_CIRCUIT: "CIRCUIT",
    MSG_GARBLER_INPUT_LABELS: "GARBLER_INPUT_LABELS",
    MSG_OT_MSG1: "OT_MSG1",
    MSG_OT_MSG2: "OT_MSG2",
    MSG_OT_MSG3: "OT_MSG3",
    MSG_OUTPUT_LABELS: "OUTPUT_LABELS",
    MSG_RESULT_ACK: "RESULT_ACK",
    MSG_ABORT: "ABORT",
}

MAX_FRAME = 1 << 26
DEFAULT_TIMEOUT = 10.0

_PI_STRUCT = struct.Struct("<QQQQIIQQ")
_RESULT_STRUCT = struct.Struct("<QBB")


class NegotiationAbort(Exception):
    """A protocol check failed; ``stage`` names the failed step."""

    def __init__(self, stage: str, detail: str = "", transcript=None):
        super().__init__(f"negotiation aborted at {stage}" + (f": {detail}" if detail else ""))
        self.stage = stage
        self.detail = detail
        self.transcript = transcript


class TransportFailure(Exception):
    """The channel died or misbehaved below the protocol layer."""

    def __init__(self, detail: str, transcript=None):
        super().__init__(detail)
        self.transcript = transcript


class _StepTimeout(Exception):
    """Internal: the per-step read timer fired; becomes a staged abort."""


@dataclass(frozen=True)
class PiProfile:
    """The public strategy profile both parties must agree on."""

    q: Fraction
    p_bar: Fraction
    k: int
    k_theta: int
    t_e: Fraction

    def __init__(self, q: MoneyLike, p_bar: MoneyLike, k: int, k_theta: int, t_e: MoneyLike):
        object.__setattr__(self, "q", as_money(q))
        object.__setattr__(self, "p_bar", as_money(p_bar))
        object.__setattr__(self, "k", int(k))
        object.__setattr__(self, "k_theta", int(k_theta))
        object.__setattr__(self, "t_e", as_money(t_e))
        self.params()  # validates q, p_bar, widths

    def params(self) -> MechanismParams:
        return MechanismParams(self.q, self.p_bar, self.k_theta, self.k)

    def to_bytes(self) -> bytes:
        return _PI_STRUCT.pack(
            self.q.numerator,
            self.q.denominator,
            self.p_bar.numerator,
            self.p_bar.denominator,
            self.k,
            self.k_theta,
            self.t_e.numerator,
            self.t_e.denominator,
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "PiProfile":
        if len(data) != _PI_STRUCT.size:
            raise ValueError("malformed profile payload")
        qn, qd, pn, pd, k, kt, tn, td = _PI_STRUCT.unpack(data)
        if qd == 0 or pd == 0 or td == 0:
            raise ValueError("zero denominator in profile")
        return cls(Fraction(qn, qd), Fraction(pn, pd), k, kt, Fraction(tn, td))


@dataclass(frozen=True)
class NegotiationConfig:
    """One party's view of a session: role, profile, and private report."""

    role: str
    pi: PiProfile
    theta_hat: int
    address: tuple[str, int] = ("127.0.0.1", 0)
    timeout: float = DEFAULT_TIMEOUT

    def __post_init__(self):
        if self.role not in ("victim", "attacker"):
            raise ValueError("role must be victim or attacker")
        if not 0 <= self.theta_hat < (1 << self.pi.k_theta):
            raise ValueError(f"report does not fit in {self.pi.k_theta} bits")


@dataclass(frozen=True)
class TranscriptRecord:
    direction: str
    msg_type: str
    length: int
    payload_sha256: str
    timestamp: float


@dataclass
class SessionTranscript:
    """Append-only audit log of framed messages; no remote plaintext."""

    records: list[TranscriptRecord] = field(default_factory=list)

    def append(self, direction: str, msg_type: int, payload: bytes) -> None:
        self.records.append(
            TranscriptRecord(
                direction,
                MSG_NAMES.get(msg_type, f"TYPE{msg_type}"),
                len(payload),
                hashlib.sha256(payload).hexdigest(),
                time.time(),
            )
        )

    def shape(self) -> list[tuple[str, str, int]]:
        """(direction, type, length) triples: the privacy-visible surface."""
        return [(r.direction, r.msg_type, r.length) for r in self.records]

    def payload_digests(self) -> list[str]:
        return [r.payload_sha256 for r in self.records]


def persist_transcript(transcript: SessionTranscript, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in transcript.records:
            fh.write(
                f"{r.direction}\t{r.msg_type}\t{r.length}\t{r.payload_sha256}\t{r.timestamp!r}\n"
            )


def load_transcript(path) -> SessionTranscript:
    transcript = SessionTranscript()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            direction, msg_type, length, digest, ts = line.split("\t")
            transcript.records.append(
                TranscriptRecord(direction, msg_type, int(length), digest, float(ts))
            )
    return transcript


class SessionRandomness:
    """A party's private randomness; seed it only in tests.

    Seeded mode derives every draw from one PRNG so runs replay
    exactly; unseeded mode uses the system entropy source.
    """

    def __init__(self, seed: bytes | None = None):
        self._rng = random.Random(seed) if seed is not None else None

    def word(self, bits: int) -> int:
        if self._rng is not None:
            return self._rng.getrandbits(bits)
        return secrets.randbits(bits)

    def seed_bytes(self, n: int = 32) -> bytes:
        if self._rng is not None:
            return self._rng.randbytes(n)
        return secrets.token_bytes(n)

    def bit_source(self) -> Callable[[int], int]:
        return self.word


@dataclass(frozen=True)
class NegotiationResult:
    """What one party walks away with, plus its own secret draws."""

    outcome: MechanismOutcome
    transcript: SessionTranscript
    own_words: tuple[int, int]
    theta_hat: int

    @property
    def r_f(self) -> Fraction:
        return self.outcome.r_f


class _Channel:
    """Framed messages over one socket, recording a transcript."""

    def __init__(self, sock: socket.socket, transcript: SessionTranscript):
        self.sock = sock
        self.transcript = transcript

    def send(self, msg_type: int, payload: bytes = b"") -> None:
        frame = struct.pack("<IB", len(payload) + 1, msg_type) + payload
        try:
            self.sock.sendall(frame)
        except OSError as exc:
            raise TransportFailure(f"send failed: {exc}", self.transcript) from exc
        self.transcript.append("sent", msg_type, payload)

    def _read_exact(self, n: int) -> bytes:
        buf = bytearray()
        while len(buf) < n:
            try:
                chunk = self.sock.recv(n - len(buf))
            except socket.timeout as exc:
                raise _StepTimeout() from exc
            except OSError as exc:
                raise TransportFailure(f"recv failed: {exc}", self.transcript) from exc
            if not chunk:
                raise TransportFailure("peer closed the connection", self.transcript)
            buf.extend(chunk)
        return bytes(buf)

    def recv(self, expected: set[int], stage: str) -> tuple[int, bytes]:
        """Read one frame; only ``expected`` types (and ABORT) are legal.

        A step timeout is a protocol-level abort with a stage tag, not a
        transport failure: the channel is still up, the peer stalled.
        """
        try:
            (length,) = struct.unpack("<I", self._read_exact(4))
            if not 1 <= length <= MAX_FRAME:
                raise TransportFailure(
                    f"invalid frame length {length}", self.transcript
                )
            body = self._read_exact(length)
        except _StepTimeout:
            self.abort(f"timeout:{stage}")
        msg_type, payload = body[0], body[1:]
        self.transcript.append("received", msg_type, payload)
        if msg_type == MSG_ABORT:
            raise NegotiationAbort(
                "peer-abort", payload.decode("utf-8", "replace"), self.transcript
            )
        if msg_type not in expected:
            self.abort(stage, f"unexpected message type {msg_type}")
        return msg_type, payload

    def abort(self, stage: str, detail: str = "") -> None:
        try:
            self.send(MSG_ABORT, stage.encode("utf-8"))
        except TransportFailure:
            pass
        raise NegotiationAbort(stage, detail, self.transcript)


def _range_bits(value: int, length: int) -> list[int]:
    return [(value >> i) & 1 for i in range(length)]


def _parse_labels(payload: bytes, count: int, channel: _Channel, stage: str):
    if len(payload) != count * LABEL_BYTES:
        channel.abort(stage, f"expected {count} labels")
    return [
        WireLabel(payload[i * LABEL_BYTES : (i + 1) * LABEL_BYTES])
        for i in range(count)
    ]


class VictimSession:
    """Garbler side: proposes the profile, serves labels, verifies output.

    The step methods exist so tests can subclass a malicious variant;
    the honest flow is ``run``.
    """

    def __init__(
        self,
        config: NegotiationConfig,
        channel: _Channel,
        randomness: SessionRandomness,
    ):
        self.config = config
        self.channel = channel
        self.randomness = randomness
        self.pi = config.pi
        self.params = self.pi.params()
        self.scaled = ScaledParams.from_params(self.params)

    def run(self) -> NegotiationResult:
        self._agree_profile()
        circuit, material = self._build_and_garble()
        self.channel.send(MSG_CIRCUIT, serialize_garbled(material.garbled))
        s0, s1 = self._send_own_labels(circuit, material)
        self._serve_ot(circuit, material)
        outcome = self._receive_output(circuit, material)
        return NegotiationResult(
            outcome, self.channel.transcript, (s0, s1), self.config.theta_hat
        )

    def _agree_profile(self) -> None:
        self.channel.send(MSG_HELLO, self.pi.to_bytes())
        self.channel.recv({MSG_PI_ACK}, "pi-agreement")

    def _build_and_garble(self):
        circuit = build_mechanism_circuit(self.params, self.scaled)
        material = garble(circuit, self.randomness.seed_bytes())
        return circuit, material

    def _send_own_labels(self, circuit: Circuit, material):
        k, kt = self.pi.k, self.pi.k_theta
        s0, s1 = self.randomness.word(k), self.randomness.word(k)
        bits = (
            _range_bits(s0, k)
            + _range_bits(s1, k)
            + _range_bits(self.config.theta_hat, kt)
        )
        labels = select_labels(material.input_labels[: len(bits)], bits)
        self.channel.send(
            MSG_GARBLER_INPUT_LABELS, b"".join(l.bits for l in labels)
        )
        return s0, s1

    def _serve_ot(self, circuit: Circuit, material) -> None:
        n_victim = sum(r.length for r in circuit.inputs.victim_ranges())
        sender = OtSender(
            material.input_labels[n_victim:], self.randomness.bit_source()
        )
        self.channel.send(MSG_OT_MSG1, sender.public_message())
        _, blinded = self.channel.recv({MSG_OT_MSG2}, "ot")
        try:
            ciphertexts = sender.respond(blinded)
        except OtProtocolError as exc:
            self.channel.abort("ot", str(exc))
        self.channel.send(MSG_OT_MSG3, ciphertexts)

    def _receive_output(self, circuit: Circuit, material) -> MechanismOutcome:
        _, payload = self.channel.recv({MSG_OUTPUT_LABELS}, "output-verify")
        labels = _parse_labels(
            payload, len(material.garbled.output_decode), self.channel, "output-verify"
        )
        try:
            bits, _ = decode_and_prove(material.garbled, labels)
        except LabelDecodeError as exc:
            self.channel.abort("output-verify", str(exc))
        outcome = decode_outcome(circuit, bits)
        self.channel.send(
            MSG_RESULT_ACK,
            _RESULT_STRUCT.pack(int(outcome.r_f), outcome.alpha, outcome.sigma),
        )
        return outcome


class AttackerSession:
    """Evaluator side: checks the circuit against the agreed profile,
    fetches its labels by OT, evaluates, and returns the output labels."""

    def __init__(
        self,
        config: NegotiationConfig,
        channel: _Channel,
        randomness: SessionRandomness,
    ):
        self.config = config
        self.channel = channel
        self.randomness = randomness

    def run(self) -> NegotiationResult:
        pi = self._agree_profile()
        params = pi.params()
        gc, circuit = self._receive_and_check_circuit(params)
        victim_labels = self._receive_victim_labels(circuit)
        own_labels, s0, s1 = self._run_ot(circuit)
        outcome, proof = self._evaluate(gc, circuit, victim_labels + own_labels)
        self.channel.send(MSG_OUTPUT_LABELS, b"".join(l.bits for l in proof))
        self._check_result_ack(outcome)
        return NegotiationResult(
            outcome, self.channel.transcript, (s0, s1), self.config.theta_hat
        )

    def _agree_profile(self) -> PiProfile:
        _, payload = self.channel.recv({MSG_HELLO}, "pi-agreement")
        try:
            proposed = PiProfile.from_bytes(payload)
        except ValueError as exc:
            self.channel.abort("pi-agreement", str(exc))
        if proposed != self.config.pi:
            self.channel.abort("pi-agreement", "profile does not match configuration")
        self.channel.send(MSG_PI_ACK)
        return proposed

    def _receive_and_check_circuit(self, params: MechanismParams):
        _, payload = self.channel.recv({MSG_CIRCUIT}, "circuit-check")
        try:
            gc = deserialize_garbled(payload)
        except ValueError as exc:
            self.channel.abort("circuit-check", str(exc))
        # rebuild from the agreed profile; the digest pins the garbled
        # tables to exactly that circuit
        circuit = build_mechanism_circuit(params, ScaledParams.from_params(params))
        if circuit_digest(circuit) != gc.base_circuit_digest:
            self.channel.abort("circuit-check", "digest does not match the profile")
        if len(gc.tables) != circuit.and_count:
            self.channel.abort("circuit-check", "table count does not match")
        if len(gc.output_decode) != len(circuit.output_wires()):
            self.channel.abort("circuit-check", "output commitment count mismatch")
        return gc, circuit

    def _receive_victim_labels(self, circuit: Circuit):
        n_victim = sum(r.length for r in circuit.inputs.victim_ranges())
        _, payload = self.channel.recv({MSG_GARBLER_INPUT_LABELS}, "victim-labels")
        return _parse_labels(payload, n_victim, self.channel, "victim-labels")

    def _run_ot(self, circuit: Circuit):
        k, kt = self.config.pi.k, self.config.pi.k_theta
        s0, s1 = self.randomness.word(k), self.randomness.word(k)
        bits = (
            _range_bits(s0, k)
            + _range_bits(s1, k)
            + _range_bits(self.config.theta_hat, kt)
        )
        receiver = OtReceiver(bits, self.randomness.bit_source())
        _, sender_public = self.channel.recv({MSG_OT_MSG1}, "ot")
        try:
            blinded = receiver.blind(sender_public)
        except OtProtocolError as exc:
            self.channel.abort("ot", str(exc))
        self.channel.send(MSG_OT_MSG2, blinded)
        _, ciphertexts = self.channel.recv({MSG_OT_MSG3}, "ot")
        try:
            labels = receiver.unwrap(ciphertexts)
        except OtProtocolError as exc:
            self.channel.abort("ot", str(exc))
        return labels, s0, s1

    def _evaluate(self, gc, circuit: Circuit, labels):
        try:
            output_labels = evaluate(gc, circuit, labels)
            bits, proof = decode_and_prove(gc, output_labels)
        except (LabelDecodeError, ValueError) as exc:
            self.channel.abort("extract", str(exc))
        return decode_outcome(circuit, bits), proof

    def _check_result_ack(self, outcome: MechanismOutcome) -> None:
        _, payload = self.channel.recv({MSG_RESULT_ACK}, "result")
        if len(payload) != _RESULT_STRUCT.size:
            self.channel.abort("result", "malformed result payload")
        r_f, alpha, sigma = _RESULT_STRUCT.unpack(payload)
        if (r_f, alpha, sigma) != (int(outcome.r_f), outcome.alpha, outcome.sigma):
            self.channel.abort("result", "peer decoded a different outcome")


def _configured_socket(sock: socket.socket, timeout: float) -> socket.socket:
    sock.settimeout(timeout)
    sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
    return sock


def run_victim(
    config: NegotiationConfig,
    seed: bytes | None = None,
    listener: socket.socket | None = None,
    session_cls: type[VictimSession] = VictimSession,
) -> NegotiationResult:
    """Listen for one attacker connection and settle; returns the result.

    ``listener`` lets callers pre-bind (port 0 in tests); otherwise the
    configured address is bound here.  ``session_cls`` is a test hook
    for malicious-garbler variants.
    """
    transcript = SessionTranscript()
    own_listener = listener is None
    if own_listener:
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            listener.bind(config.address)
            listener.listen(1)
        except OSError as exc:
            listener.close()
            raise TransportFailure(f"cannot listen: {exc}", transcript) from exc
    listener.settimeout(config.timeout)
    try:
        try:
            conn, _ = listener.accept()
        except socket.timeout as exc:
            raise TransportFailure("no peer connected", transcript) from exc
        except OSError as exc:
            raise TransportFailure(f"accept failed: {exc}", transcript) from exc
        with conn:
            channel = _Channel(_configured_socket(conn, config.timeout), transcript)
            session = session_cls(config, channel, SessionRandomness(seed))
            return session.run()
    finally:
        if own_listener:
            listener.close()


def run_attacker(
    config: NegotiationConfig,
    seed: bytes | None = None,
    session_cls: type[AttackerSession] = AttackerSession,
) -> NegotiationResult:
    """Connect to the victim and settle; returns the result."""
    transcript = SessionTranscript()
    try:
        sock = socket.create_connection(config.address, timeout=config.timeout)
    except OSError as exc:
        raise TransportFailure(f"cannot connect: {exc}", transcript) from exc
    with sock:
        channel = _Channel(_configured_socket(sock, config.timeout), transcript)
        session = session_cls(config, channel, SessionRandomness(seed))
        return session.run()


def loopback_exchange(
    pi: PiProfile,
    theta_v: int,
    theta_a: int,
    victim_seed: bytes | None = None,
    attacker_seed: bytes | None = None,
    timeout: float = DEFAULT_TIMEOUT,
    victim_session_cls: type[VictimSession] = VictimSession,
    attacker_session_cls: type[AttackerSession] = AttackerSession,
    victim_pi: PiProfile | None = None,
):
    """Run both roles on loopback threads without raising.

    Returns (victim side, attacker side) where each is either a
    NegotiationResult or the exception that ended that side.
    ``victim_pi`` lets tests hand the garbler a divergent profile.
    """
    listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    listener.bind(("127.0.0.1", 0))
    listener.listen(1)
    address = listener.getsockname()
    victim_cfg = NegotiationConfig(
        "victim", victim_pi or pi, theta_v, address, timeout
    )
    attacker_cfg = NegotiationConfig("attacker", pi, theta_a, address, timeout)
    box: dict[str, object] = {}

    def victim_main():
        try:
            box["victim"] = run_victim(
                victim_cfg, victim_seed, listener, victim_session_cls
            )
        except Exception as exc:
            box["victim"] = exc

    thread = threading.Thread(target=victim_main, daemon=True)
    thread.start()
    try:
        try:
            box["attacker"] = run_attacker(
                attacker_cfg, attacker_seed, attacker_session_cls
            )
        except Exception as exc:
            box["attacker"] = exc
        thread.join(timeout=timeout + 5)
    finally:
        listener.close()
    if thread.is_alive():
        raise TransportFailure("victim thread did not finish")
    return box["victim"], box["attacker"]


def loopback_run(
    pi: PiProfile,
    theta_v: int,
    theta_a: int,
    victim_seed: bytes | None = None,
    attacker_seed: bytes | None = None,
    timeout: float = DEFAULT_TIMEOUT,
) -> tuple[NegotiationResult, NegotiationResult]:
    """Run both roles against each other on loopback threads.

    Returns (victim result, attacker result); an exception on either
    side is re-raised in the caller, victim's first.
    """
    victim, attacker = loopback_exchange(
        pi, theta_v, theta_a, victim_seed, attacker_seed, timeout
    )
    if isinstance(victim, Exception):
        raise victim
    if isinstance(attacker, Exception):
        raise attacker
    return victim, attacker
