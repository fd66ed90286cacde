"""Boolean-circuit form of the fixed-point settlement rules.

``build_mechanism_circuit`` lowers the integer semantics of
``outcome_fixed`` to a flat list of XOR/AND/NOT gates over six input
ranges: each party contributes two k-bit random words and one k_theta-bit
report.  The circuit XORs the word shares, compares them against
hard-wired scaled constants, multiplies with shift-and-add, and selects
the branch with two-input muxes.  Construction is a pure function of the
parameters: identical params yield a byte-identical serialization, which
is what lets the evaluating side rebuild the circuit independently and
compare digests instead of trusting the builder.

Gate structure never depends on the *values* of the hard-wired
constants, only on bit widths, so the AND-gate count is a function of
(k_theta, k) alone.  Constants enter as wires tied to const-0/const-1
and nothing is folded away.

Right-shifts cost zero gates: they are bit reindexing.  The product
r2 * inv_q_scale can exceed the output width in branches that are never
selected; a dedicated overflow wire ORs the truncated high bits under
the selecting condition so tests can assert it never fires.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from enum import IntEnum
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .mechanism import (
    DEFAULT_MAX_WIDTH,
    MechanismOutcome,
    MechanismParams,
    ScaledParams,
    product_widths,
)

MAGIC = b"BCIR"
FORMAT_VERSION = 1
NOT_SENTINEL = 0xFFFFFFFF


class GateKind(IntEnum):
    XOR = 0
    AND = 1
    NOT = 2


@dataclass(frozen=True)
class Gate:
    """One two-input (or NOT) gate; ``out`` is assigned exactly once."""

    kind: GateKind
    in_a: int
    in_b: int | None
    out: int


@dataclass(frozen=True)
class WireRange:
    start: int
    length: int

    def indices(self) -> range:
        return range(self.start, self.start + self.length)


@dataclass(frozen=True)
class InputMap:
    """Where each party's inputs live on the wire vector, LSB first."""

    s0_v: WireRange
    s1_v: WireRange
    theta_v: WireRange
    s0_a: WireRange
    s1_a: WireRange
    theta_a: WireRange

    def ranges(self) -> tuple[WireRange, ...]:
        return (self.s0_v, self.s1_v, self.theta_v, self.s0_a, self.s1_a, self.theta_a)

    def victim_ranges(self) -> tuple[WireRange, ...]:
        return (self.s0_v, self.s1_v, self.theta_v)

    def attacker_ranges(self) -> tuple[WireRange, ...]:
        return (self.s0_a, self.s1_a, self.theta_a)

    @property
    def total_bits(self) -> int:
        return sum(r.length for r in self.ranges())


@dataclass(frozen=True)
class OutputMap:
    """Output wires: the ransom bits, both flags, and the overflow probe.

    ``overflow`` is a builder diagnostic, not a protocol output; it is
    serialized so rebuilt circuits stay byte-identical, but it is not
    part of the revealed result.
    """

    r_f: WireRange
    alpha: int
    sigma: int
    overflow: int


@dataclass(frozen=True)
class Circuit:
    wire_count: int
    gates: tuple[Gate, ...]
    inputs: InputMap
    outputs: OutputMap

    def __post_init__(self) -> None:
        assigned = set()
        for rng in self.inputs.ranges():
            for w in rng.indices():
                if w in assigned:
                    raise ValueError("input ranges overlap")
                assigned.add(w)
        if assigned != set(range(len(assigned))):
            raise ValueError("input ranges must be a prefix of the wire vector")
        for gate in self.gates:
            if gate.kind not in (GateKind.XOR, GateKind.AND, GateKind.NOT):
                raise ValueError(f"unknown gate kind {gate.kind!r}")
            needs_b = gate.kind is not GateKind.NOT
            if needs_b != (gate.in_b is not None):
                raise ValueError("gate arity does not match its kind")
            srcs = (gate.in_a,) if gate.in_b is None else (gate.in_a, gate.in_b)
            for src in srcs:
                if src not in assigned:
                    raise ValueError(f"gate reads unassigned wire {src}")
            if gate.out in assigned or gate.out >= self.wire_count:
                raise ValueError(f"wire {gate.out} assigned twice or out of range")
            assigned.add(gate.out)
        if len(assigned) != self.wire_count:
            raise ValueError("wire_count does not match assigned wires")
        out_wires = list(self.outputs.r_f.indices())
        out_wires += [self.outputs.alpha, self.outputs.sigma, self.outputs.overflow]
        for w in out_wires:
            if w not in assigned:
                raise ValueError(f"output wire {w} is never assigned")

    @property
    def and_count(self) -> int:
        return sum(1 for g in self.gates if g.kind is GateKind.AND)

    def output_wires(self) -> tuple[int, ...]:
        """Revealed output wires: r_f LSB first, then alpha, then sigma."""
        return (*self.outputs.r_f.indices(), self.outputs.alpha, self.outputs.sigma)


class CircuitBuilder:
    """Gate assembler: wires are write-once, emission order is the topo order."""

    def __init__(self) -> None:
        self.wire_count = 0
        self.gates: list[Gate] = []
        self._zero: int | None = None
        self._one: int | None = None

    def new_inputs(self, length: int) -> list[int]:
        if self.gates:
            raise ValueError("inputs must be allocated before any gate")
        wires = list(range(self.wire_count, self.wire_count + length))
        self.wire_count += length
        return wires

    def _emit(self, kind: GateKind, in_a: int, in_b: int | None) -> int:
        out = self.wire_count
        self.wire_count += 1
        self.gates.append(Gate(kind, in_a, in_b, out))
        return out

    def xor(self, a: int, b: int) -> int:
        return self._emit(GateKind.XOR, a, b)

    def and_(self, a: int, b: int) -> int:
        return self._emit(GateKind.AND, a, b)

    def not_(self, a: int) -> int:
        return self._emit(GateKind.NOT, a, None)

    def or_(self, a: int, b: int) -> int:
        return self.xor(self.xor(a, b), self.and_(a, b))

    def zero(self) -> int:
        if self._zero is None:
            self._zero = self.xor(0, 0)
        return self._zero

    def one(self) -> int:
        if self._one is None:
            self._one = self.not_(self.zero())
        return self._one

    def const_bits(self, value: int, width: int) -> list[int]:
        if value < 0 or value >= 1 << width:
            raise ValueError(f"constant {value} does not fit in {width} bits")
        return [self.one() if (value >> i) & 1 else self.zero() for i in range(width)]

    def xor_vec(self, a: Sequence[int], b: Sequence[int]) -> list[int]:
        self._match(a, b)
        return [self.xor(x, y) for x, y in zip(a, b)]

    def zero_extend(self, bits: Sequence[int], width: int) -> list[int]:
        if width < len(bits):
            raise ValueError("cannot extend to a narrower width")
        return list(bits) + [self.zero() for _ in range(width - len(bits))]

    def add(self, a: Sequence[int], b: Sequence[int]) -> tuple[list[int], int]:
        """Ripple-carry sum of equal-width vectors; returns (bits, carry out)."""
        self._match(a, b)
        carry = self.zero()
        out = []
        for x, y in zip(a, b):
            half = self.xor(x, y)
            out.append(self.xor(half, carry))
            carry = self.xor(self.and_(x, y), self.and_(carry, half))
        return out, carry

    def less_than(self, a: Sequence[int], b: Sequence[int]) -> int:
        """Unsigned a < b.

        Scans LSB to MSB; at each bit either the bits differ (one term)
        or they are equal and the verdict carries (other term), so the
        two AND terms are exclusive and XOR acts as OR.
        """
        self._match(a, b)
        lt = self.zero()
        for x, y in zip(a, b):
            eq = self.not_(self.xor(x, y))
            lt = self.xor(self.and_(self.not_(x), y), self.and_(eq, lt))
        return lt

    def mux(self, sel: int, x: int, y: int) -> int:
        # x if sel else y, one AND
        return self.xor(y, self.and_(sel, self.xor(x, y)))

    def mux_vec(self, sel: int, xs: Sequence[int], ys: Sequence[int]) -> list[int]:
        self._match(xs, ys)
        return [self.mux(sel, x, y) for x, y in zip(xs, ys)]

    def multiply(self, a: Sequence[int], b: Sequence[int]) -> list[int]:
        """Shift-and-add product, len(a) + len(b) bits."""
        m = len(a)
        acc = [self.zero() for _ in range(m + len(b))]
        for j, bj in enumerate(b):
            partial = [self.and_(ai, bj) for ai in a]
            summed, carry = self.add(acc[j : j + m], partial)
            acc[j : j + m] = summed
            # bits above j+m are still untouched zeros, so the carry
            # lands in a bare wire and cannot ripple further
            acc[j + m] = self.xor(acc[j + m], carry)
        return acc

    def or_tree(self, bits: Sequence[int]) -> int:
        if not bits:
            raise ValueError("or_tree needs at least one bit")
        out = bits[0]
        for b in bits[1:]:
            out = self.or_(out, b)
        return out

    @staticmethod
    def _match(a: Sequence[int], b: Sequence[int]) -> None:
        if len(a) != len(b):
            raise ValueError(f"width mismatch: {len(a)} vs {len(b)}")


def build_mechanism_circuit(
    params: MechanismParams,
    scaled: ScaledParams,
    max_width: int = DEFAULT_MAX_WIDTH,
) -> Circuit:
    """Lower the fixed-point settlement rules to gates.

    The gate list mirrors ``outcome_fixed`` exactly: same products, same
    shifts, same comparisons, same tie directions.  Both sides of the
    protocol call this with the agreed parameters and must obtain the
    same bytes.
    """
    if max(product_widths(params, scaled)) > max_width:
        raise OverflowError(
            f"intermediate products exceed the declared width {max_width}"
        )
    k, kt = params.k, params.k_theta
    bld = CircuitBuilder()
    s0_v = bld.new_inputs(k)
    s1_v = bld.new_inputs(k)
    theta_v = bld.new_inputs(kt)
    s0_a = bld.new_inputs(k)
    s1_a = bld.new_inputs(k)
    theta_a = bld.new_inputs(kt)
    inputs = InputMap(
        s0_v=WireRange(s0_v[0], k),
        s1_v=WireRange(s1_v[0], k),
        theta_v=WireRange(theta_v[0], kt),
        s0_a=WireRange(s0_a[0], k),
        s1_a=WireRange(s1_a[0], k),
        theta_a=WireRange(theta_a[0], kt),
    )

    # Joint randomness: neither party controls the combined words.
    word0 = bld.xor_vec(s0_v, s0_a)
    word1 = bld.xor_vec(s1_v, s1_a)

    # p_scale reaches 2^k when p_bar = 1, so compare one bit wider.
    cmp_w = k + 1
    below_p = bld.less_than(
        bld.zero_extend(word0, cmp_w), bld.const_bits(scaled.p_scale, cmp_w)
    )
    below_q = bld.less_than(
        bld.zero_extend(word1, cmp_w), bld.const_bits(scaled.q_scale, cmp_w)
    )

    # r2 = (q_scale * theta_v) >> k on the screening branch, else theta_v.
    prod1 = bld.multiply(theta_v, bld.const_bits(scaled.q_scale, k))
    r2 = bld.mux_vec(below_p, prod1[k:], theta_v)

    accept = bld.not_(bld.less_than(r2, theta_a))

    # r3 = max((r2 * inv_q_scale) >> k, theta_a), carried at full width.
    inv_w = scaled.inv_q_scale.bit_length()
    prod2 = bld.multiply(r2, bld.const_bits(scaled.inv_q_scale, inv_w))
    undone = prod2[k:]
    w3 = len(undone)
    theta_a_ext = bld.zero_extend(theta_a, w3)
    r3 = bld.mux_vec(bld.less_than(undone, theta_a_ext), theta_a_ext, undone)
    in_deal = bld.not_(bld.less_than(bld.zero_extend(theta_v, w3), r3))

    countered = bld.and_(bld.not_(accept), in_deal)
    pay_counter = bld.and_(countered, below_q)
    sigma = bld.and_(countered, bld.not_(below_q))

    out_w = kt + 1
    zeros = [bld.zero() for _ in range(out_w)]
    picked = bld.mux_vec(pay_counter, r3[:out_w], zeros)
    r_f_bits = bld.mux_vec(accept, bld.zero_extend(r2, out_w), picked)

    # Alignment pass: pin the ransom to one contiguous range (free XORs).
    r_f_start = bld.wire_count
    r_f_bits = [bld.xor(b, bld.zero()) for b in r_f_bits]

    alpha = bld.or_(bld.or_tree(r_f_bits), sigma)
    # r3 <= theta_v < 2^kt whenever the counter branch is live, so the
    # bits dropped by the truncation above must all be zero then.
    overflow = bld.and_(countered, bld.or_tree(r3[kt:]))

    outputs = OutputMap(
        r_f=WireRange(r_f_start, out_w), alpha=alpha, sigma=sigma, overflow=overflow
    )
    return Circuit(bld.wire_count, tuple(bld.gates), inputs, outputs)


def eval_gate_list(
    wire_count: int, gates: Iterable[Gate], initial: Mapping[int, int]
) -> list[int]:
    """Evaluate raw gates from preset wires; returns every wire's bit."""
    wires = [0] * wire_count
    for idx, bit in initial.items():
        wires[idx] = bit & 1
    for gate in gates:
        if gate.kind is GateKind.XOR:
            wires[gate.out] = wires[gate.in_a] ^ wires[gate.in_b]
        elif gate.kind is GateKind.AND:
            wires[gate.out] = wires[gate.in_a] & wires[gate.in_b]
        else:
            wires[gate.out] = 1 - wires[gate.in_a]
    return wires


def eval_wires(circuit: Circuit, input_bits: Sequence[int]) -> list[int]:
    if len(input_bits) != circuit.inputs.total_bits:
        raise ValueError(
            f"expected {circuit.inputs.total_bits} input bits, got {len(input_bits)}"
        )
    return eval_gate_list(
        circuit.wire_count, circuit.gates, dict(enumerate(input_bits))
    )


def eval_plain(circuit: Circuit, input_bits: Sequence[int]) -> tuple[int, ...]:
    """Plaintext reference evaluation; returns (r_f bits..., alpha, sigma)."""
    wires = eval_wires(circuit, input_bits)
    return tuple(wires[w] for w in circuit.output_wires())


def encode_inputs(
    circuit: Circuit,
    theta_v: int,
    theta_a: int,
    s0_v: int,
    s1_v: int,
    s0_a: int,
    s1_a: int,
) -> list[int]:
    """Pack the six field values into the circuit's input bit-vector."""
    fields = (
        (circuit.inputs.s0_v, s0_v),
        (circuit.inputs.s1_v, s1_v),
        (circuit.inputs.theta_v, theta_v),
        (circuit.inputs.s0_a, s0_a),
        (circuit.inputs.s1_a, s1_a),
        (circuit.inputs.theta_a, theta_a),
    )
    bits = [0] * circuit.inputs.total_bits
    for rng, value in fields:
        if value < 0 or value >= 1 << rng.length:
            raise ValueError(f"value {value} does not fit in {rng.length} bits")
        for i in range(rng.length):
            bits[rng.start + i] = (value >> i) & 1
    return bits


def decode_outcome(circuit: Circuit, output_bits: Sequence[int]) -> MechanismOutcome:
    """Rebuild the settlement from the revealed output bits."""
    n = circuit.outputs.r_f.length
    if len(output_bits) != n + 2:
        raise ValueError(f"expected {n + 2} output bits, got {len(output_bits)}")
    r_f = sum(bit << i for i, bit in enumerate(output_bits[:n]))
    return MechanismOutcome(output_bits[n], Fraction(r_f), output_bits[n + 1])


def serialize_circuit(circuit: Circuit) -> bytes:
    """Canonical little-endian byte form; input to the digest and the wire."""
    parts = [
        struct.pack(
            "<4sHHII", MAGIC, FORMAT_VERSION, 0, circuit.wire_count, len(circuit.gates)
        )
    ]
    for rng in circuit.inputs.ranges():
        parts.append(struct.pack("<II", rng.start, rng.length))
    parts.append(
        struct.pack(
            "<IIIII",
            circuit.outputs.r_f.start,
            circuit.outputs.r_f.length,
            circuit.outputs.alpha,
            circuit.outputs.sigma,
            circuit.outputs.overflow,
        )
    )
    for gate in circuit.gates:
        in_b = NOT_SENTINEL if gate.in_b is None else gate.in_b
        parts.append(struct.pack("<BIII", gate.kind, gate.in_a, in_b, gate.out))
    return b"".join(parts)


def deserialize_circuit(data: bytes) -> Circuit:
    header = struct.Struct("<4sHHII")
    if len(data) < header.size:
        raise ValueError("circuit blob too short")
    magic, version, _, wire_count, gate_count = header.unpack_from(data, 0)
    if magic != MAGIC:
        raise ValueError("bad circuit magic")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported circuit format version {version}")
    off = header.size
    rng_s = struct.Struct("<II")
    ranges = []
    for _ in range(6):
        start, length = rng_s.unpack_from(data, off)
        ranges.append(WireRange(start, length))
        off += rng_s.size
    out_s = struct.Struct("<IIIII")
    rf_start, rf_len, alpha, sigma, overflow = out_s.unpack_from(data, off)
    off += out_s.size
    gate_s = struct.Struct("<BIII")
    expected = off + gate_count * gate_s.size
    if len(data) != expected:
        raise ValueError(f"circuit blob length {len(data)} != expected {expected}")
    gates = []
    for _ in range(gate_count):
        kind, in_a, in_b, out = gate_s.unpack_from(data, off)
        off += gate_s.size
        gates.append(
            Gate(GateKind(kind), in_a, None if in_b == NOT_SENTINEL else in_b, out)
        )
    return Circuit(
        wire_count,
        tuple(gates),
        InputMap(*ranges),
        OutputMap(WireRange(rf_start, rf_len), alpha, sigma, overflow),
    )


def circuit_digest(circuit: Circuit) -> bytes:
    return hashlib.sha256(serialize_circuit(circuit)).digest()


def pack_bit_columns(samples: np.ndarray) -> np.ndarray:
    """Pack (n_samples, n_bits) 0/1 rows into (n_bits, n_words) uint64.

    Sample s lands in bit s % 64 of word s // 64, so one uint64 op in
    the batch evaluator advances 64 samples at once.
    """
    samples = np.asarray(samples, dtype=np.uint64)
    n_samples, n_bits = samples.shape
    n_words = -(-n_samples // 64)
    padded = np.zeros((n_words * 64, n_bits), dtype=np.uint64)
    padded[:n_samples] = samples
    chunks = padded.T.reshape(n_bits, n_words, 64)
    shifts = np.arange(64, dtype=np.uint64)
    return (chunks << shifts).sum(axis=2, dtype=np.uint64)


def unpack_bit_columns(words: np.ndarray, n_samples: int) -> np.ndarray:
    """Inverse of pack_bit_columns: (n_bits, n_words) -> (n_samples, n_bits)."""
    n_bits, n_words = words.shape
    shifts = np.arange(64, dtype=np.uint64)
    bits = (words[:, :, None] >> shifts) & np.uint64(1)
    return bits.reshape(n_bits, n_words * 64).T[:n_samples].astype(np.uint8)


def eval_plain_batch(circuit: Circuit, packed_inputs: np.ndarray) -> np.ndarray:
    """Evaluate many samples at once on packed uint64 columns.

    ``packed_inputs`` has one row per input wire.  Returns one row per
    output: r_f bits LSB first, then alpha, sigma, and the overflow
    probe last.
    """
    n_in = circuit.inputs.total_bits
    if packed_inputs.shape[0] != n_in:
        raise ValueError(f"expected {n_in} input rows, got {packed_inputs.shape[0]}")
    n_words = packed_inputs.shape[1]
    wires = np.zeros((circuit.wire_count, n_words), dtype=np.uint64)
    wires[:n_in] = packed_inputs
    for gate in circuit.gates:
        if gate.kind is GateKind.XOR:
            wires[gate.out] = wires[gate.in_a] ^ wires[gate.in_b]
        elif gate.kind is GateKind.AND:
            wires[gate.out] = wires[gate.in_a] & wires[gate.in_b]
        else:
            wires[gate.out] = ~wires[gate.in_a]
    rows = list(circuit.output_wires()) + [circuit.outputs.overflow]
    return wires[rows]
