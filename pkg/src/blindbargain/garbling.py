"""Semi-honest garbled evaluation of settlement circuits.

Point-and-permute with free XOR: every wire carries a pair of 128-bit
labels differing by a global offset whose low bit is 1, so the two
labels on a wire always disagree in their color bit.  XOR gates cost
nothing (labels XOR through), NOT gates cost nothing (the pass-through
label decodes to the complemented bit), and each AND gate ships four
ciphertext rows ordered by the color bits of its input labels.

Row keys come from a fixed-key block cipher in a Davies-Meyer shape,
tweaked by the gate's position so identical label pairs on different
gates never share a pad.  All label material is derived from one seed,
which makes garbling reproducible for tests while the seed itself never
leaves the garbler.

The decode table publishes a hash commitment per output label.  Either
side can map a revealed label to its bit and reject a label that was
never issued, which is the output-validity check the settlement
protocol runs before accepting a result.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from typing import Sequence

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from .circuit import Circuit, GateKind, circuit_digest

LABEL_BYTES = 16
MAGIC = b"BGC1"
_MASK = (1 << 128) - 1
_FIXED_KEY = bytes(LABEL_BYTES)


class DigestMismatch(ValueError):
    """The circuit in hand is not the one this garbling was built for."""


class LabelDecodeError(ValueError):
    """An output label matches neither commitment: tampering or corruption."""


@dataclass(frozen=True)
class WireLabel:
    bits: bytes

    def __post_init__(self) -> None:
        if len(self.bits) != LABEL_BYTES:
            raise ValueError("labels are 128-bit blocks")

    def __xor__(self, other: "WireLabel") -> "WireLabel":
        return WireLabel(bytes(a ^ b for a, b in zip(self.bits, other.bits)))

    @property
    def color(self) -> int:
        return self.bits[-1] & 1


@dataclass(frozen=True)
class GarbledCircuit:
    """The public part: digest binding, AND tables, output commitments."""

    base_circuit_digest: bytes
    tables: tuple[tuple[bytes, bytes, bytes, bytes], ...]
    output_decode: tuple[tuple[bytes, bytes], ...]


@dataclass(frozen=True)
class GarbledMaterial:
    """Everything the garbler holds; only ``garbled`` may be shared."""

    garbled: GarbledCircuit
    input_labels: tuple[tuple[WireLabel, WireLabel], ...]
    output_labels: tuple[tuple[WireLabel, WireLabel], ...]
    delta: WireLabel


def _new_encryptor():
    # ECB on independent single blocks; one instance per call keeps
    # garble/evaluate safe to run on separate threads.
    return Cipher(algorithms.AES(_FIXED_KEY), modes.ECB()).encryptor()


def _double(v: int) -> int:
    # carry-less doubling in GF(2^128), x^128 + x^7 + x^2 + x + 1
    v <<= 1
    if v >> 128:
        v = (v & _MASK) ^ 0x87
    return v


def _row_key(enc, a: WireLabel, b: WireLabel, tweak: int) -> int:
    w = (
        _double(int.from_bytes(a.bits, "big"))
        ^ _double(_double(int.from_bytes(b.bits, "big")))
        ^ tweak
    )
    block = w.to_bytes(LABEL_BYTES, "big")
    return int.from_bytes(enc.update(block), "big") ^ w


def _seed_label(seed: bytes, tag: bytes, index: int) -> WireLabel:
    digest = hashlib.sha256(seed + tag + index.to_bytes(8, "little")).digest()
    return WireLabel(digest[:LABEL_BYTES])


def _commit(label: WireLabel) -> bytes:
    return hashlib.sha256(label.bits).digest()


def garble(circuit: Circuit, seed: bytes) -> GarbledMaterial:
    """Derive all wire labels from ``seed`` and encrypt the AND tables.

    Same seed, same circuit: byte-identical output, which the tests use
    to pin determinism.  Production callers draw the seed fresh.
    """
    delta = _seed_label(seed, b"delta", 0)
    delta = WireLabel(delta.bits[:-1] + bytes([delta.bits[-1] | 1]))
    zero_of: list[WireLabel | None] = [None] * circuit.wire_count
    n_in = circuit.inputs.total_bits
    for wire in range(n_in):
        zero_of[wire] = _seed_label(seed, b"input", wire)
    enc = _new_encryptor()
    tables = []
    for position, gate in enumerate(circuit.gates):
        if gate.kind is GateKind.XOR:
            zero_of[gate.out] = zero_of[gate.in_a] ^ zero_of[gate.in_b]
        elif gate.kind is GateKind.NOT:
            # pass-through label flips meaning, no table row needed
            zero_of[gate.out] = zero_of[gate.in_a] ^ delta
        else:
            out0 = _seed_label(seed, b"gate", position)
            zero_of[gate.out] = out0
            rows: list[bytes | None] = [None] * 4
            for va in (0, 1):
                for vb in (0, 1):
                    a = zero_of[gate.in_a] ^ delta if va else zero_of[gate.in_a]
                    b = zero_of[gate.in_b] ^ delta if vb else zero_of[gate.in_b]
                    out = out0 ^ delta if va and vb else out0
                    pad = _row_key(enc, a, b, position)
                    ct = pad ^ int.from_bytes(out.bits, "big")
                    rows[(a.color << 1) | b.color] = ct.to_bytes(LABEL_BYTES, "big")
            tables.append(tuple(rows))
    input_pairs = tuple(
        (zero_of[w], zero_of[w] ^ delta) for w in range(n_in)
    )
    output_pairs = tuple(
        (zero_of[w], zero_of[w] ^ delta) for w in circuit.output_wires()
    )
    decode = tuple((_commit(p[0]), _commit(p[1])) for p in output_pairs)
    gc = GarbledCircuit(circuit_digest(circuit), tuple(tables), decode)
    return GarbledMaterial(gc, input_pairs, output_pairs, delta)


def evaluate(
    gc: GarbledCircuit, circuit: Circuit, input_labels: Sequence[WireLabel]
) -> tuple[WireLabel, ...]:
    """Walk the gates under encryption; returns the output-wire labels.

    The digest check runs before any table is touched, so a circuit
    that does not match what this garbling was built for is rejected
    outright.
    """
    if circuit_digest(circuit) != gc.base_circuit_digest:
        raise DigestMismatch("circuit digest does not match the garbling")
    n_in = circuit.inputs.total_bits
    if len(input_labels) != n_in:
        raise ValueError(f"expected {n_in} input labels, got {len(input_labels)}")
    if len(gc.tables) != circuit.and_count:
        raise ValueError("garbled table count does not match the circuit")
    labels: list[WireLabel | None] = [None] * circuit.wire_count
    for wire, label in enumerate(input_labels):
        labels[wire] = label
    enc = _new_encryptor()
    and_index = 0
    for position, gate in enumerate(circuit.gates):
        if gate.kind is GateKind.XOR:
            labels[gate.out] = labels[gate.in_a] ^ labels[gate.in_b]
        elif gate.kind is GateKind.NOT:
            labels[gate.out] = labels[gate.in_a]
        else:
            a, b = labels[gate.in_a], labels[gate.in_b]
            row = gc.tables[and_index][(a.color << 1) | b.color]
            and_index += 1
            pad = _row_key(enc, a, b, position)
            out = pad ^ int.from_bytes(row, "big")
            labels[gate.out] = WireLabel(out.to_bytes(LABEL_BYTES, "big"))
    return tuple(labels[w] for w in circuit.output_wires())


def decode_and_prove(
    gc: GarbledCircuit, output_labels: Sequence[WireLabel]
) -> tuple[tuple[int, ...], tuple[WireLabel, ...]]:
    """Map output labels to bits via the commitments.

    Returns the bits together with the labels themselves; the labels
    are the proof the other side checks against the same commitments.
    Raises LabelDecodeError on any label that was never issued.
    """
    if len(output_labels) != len(gc.output_decode):
        raise ValueError(
            f"expected {len(gc.output_decode)} output labels, got {len(output_labels)}"
        )
    bits = []
    for position, (label, pair) in enumerate(zip(output_labels, gc.output_decode)):
        commitment = _commit(label)
        if commitment == pair[0]:
            bits.append(0)
        elif commitment == pair[1]:
            bits.append(1)
        else:
            raise LabelDecodeError(f"output label {position} matches no commitment")
    return tuple(bits), tuple(output_labels)


def select_labels(
    pairs: Sequence[tuple[WireLabel, WireLabel]], bits: Sequence[int]
) -> list[WireLabel]:
    """Pick one label per pair by bit; the garbler's own-input encoding."""
    if len(pairs) != len(bits):
        raise ValueError("one choice bit per label pair")
    return [pair[bit & 1] for pair, bit in zip(pairs, bits)]


def serialize_garbled(gc: GarbledCircuit) -> bytes:
    parts = [
        struct.pack(
            "<4s32sII", MAGIC, gc.base_circuit_digest, len(gc.tables),
            len(gc.output_decode),
        )
    ]
    for rows in gc.tables:
        parts.extend(rows)
    for c0, c1 in gc.output_decode:
        parts.append(c0)
        parts.append(c1)
    return b"".join(parts)


def deserialize_garbled(data: bytes) -> GarbledCircuit:
    head = struct.Struct("<4s32sII")
    if len(data) < head.size:
        raise ValueError("garbled blob too short")
    magic, digest, n_tables, n_out = head.unpack_from(data, 0)
    if magic != MAGIC:
        raise ValueError("bad garbled-circuit magic")
    expected = head.size + n_tables * 4 * LABEL_BYTES + n_out * 64
    if len(data) != expected:
        raise ValueError(f"garbled blob length {len(data)} != expected {expected}")
    off = head.size
    tables = []
    for _ in range(n_tables):
        rows = tuple(
            data[off + i * LABEL_BYTES : off + (i + 1) * LABEL_BYTES] for i in range(4)
        )
        tables.append(rows)
        off += 4 * LABEL_BYTES
    decode = []
    for _ in range(n_out):
        decode.append((data[off : off + 32], data[off + 32 : off + 64]))
        off += 64
    return GarbledCircuit(digest, tuple(tables), tuple(decode))
