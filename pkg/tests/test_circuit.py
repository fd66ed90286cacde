"""Gate-level tests: sub-circuits against integer arithmetic, the full
circuit against the fixed-point oracle, and the canonical byte format."""

import itertools
import random
from fractions import Fraction

import numpy as np
import pytest

from blindbargain.circuit import (
    Circuit,
    CircuitBuilder,
    Gate,
    GateKind,
    InputMap,
    OutputMap,
    WireRange,
    build_mechanism_circuit,
    circuit_digest,
    decode_outcome,
    deserialize_circuit,
    encode_inputs,
    eval_gate_list,
    eval_plain,
    eval_plain_batch,
    eval_wires,
    pack_bit_columns,
    serialize_circuit,
    unpack_bit_columns,
)
from blindbargain.mechanism import (
    MechanismParams,
    Report,
    ScaledParams,
    outcome_fixed,
)

PARAMS = MechanismParams.from_q(Fraction(1, 4), 4, 4)
SCALED = ScaledParams.from_params(PARAMS)

GOLDEN_DIGESTS = {
    (Fraction(1, 4), 8, 8): "fb53f7a227f0236c7afb9f1e8f255c4761b005ee163a9805cad7d54f746d816a",
    (Fraction(1, 2), 8, 8): "0c0142e8fd6e74d0a4663504b4224f0c1490a8d92dfc0f07cb856e82bd43a3e7",
    (Fraction(1, 4), 4, 4): "f9361802c4b1e9e5ee0265f0a441c227caf5362f7f9f4085e3ba393083fd7b20",
}


def _field_bits(value, wires):
    return {w: (value >> i) & 1 for i, w in enumerate(wires)}


def _as_int(wires, values):
    return sum(values[w] << i for i, w in enumerate(wires))


def test_adder_exhaustive_small_widths():
    for width in range(1, 7):
        bld = CircuitBuilder()
        xa = bld.new_inputs(width)
        xb = bld.new_inputs(width)
        out, carry = bld.add(xa, xb)
        for a, b in itertools.product(range(1 << width), repeat=2):
            init = {**_field_bits(a, xa), **_field_bits(b, xb)}
            values = eval_gate_list(bld.wire_count, bld.gates, init)
            got = _as_int(out, values) | (values[carry] << width)
            assert got == a + b


def test_comparator_exhaustive_small_widths():
    for width in range(1, 7):
        bld = CircuitBuilder()
        xa = bld.new_inputs(width)
        xb = bld.new_inputs(width)
        lt = bld.less_than(xa, xb)
        for a, b in itertools.product(range(1 << width), repeat=2):
            init = {**_field_bits(a, xa), **_field_bits(b, xb)}
            values = eval_gate_list(bld.wire_count, bld.gates, init)
            assert values[lt] == (1 if a < b else 0)


def test_multiplier_exhaustive_small_widths():
    shapes = [(1, 1), (2, 3), (4, 4), (5, 5), (6, 3)]
    for wa, wb in shapes:
        bld = CircuitBuilder()
        xa = bld.new_inputs(wa)
        xb = bld.new_inputs(wb)
        prod = bld.multiply(xa, xb)
        assert len(prod) == wa + wb
        for a, b in itertools.product(range(1 << wa), range(1 << wb)):
            init = {**_field_bits(a, xa), **_field_bits(b, xb)}
            values = eval_gate_list(bld.wire_count, bld.gates, init)
            assert _as_int(prod, values) == a * b


def test_mux_and_or_tree():
    bld = CircuitBuilder()
    sel, x, y = bld.new_inputs(3)
    m = bld.mux(sel, x, y)
    for s, a, b in itertools.product((0, 1), repeat=3):
        values = eval_gate_list(bld.wire_count, bld.gates, {sel: s, x: a, y: b})
        assert values[m] == (a if s else b)
    for width in range(1, 5):
        bld = CircuitBuilder()
        xs = bld.new_inputs(width)
        tree = bld.or_tree(xs)
        for v in range(1 << width):
            values = eval_gate_list(bld.wire_count, bld.gates, _field_bits(v, xs))
            assert values[tree] == (1 if v else 0)


def test_builder_input_and_width_rules():
    bld = CircuitBuilder()
    xs = bld.new_inputs(2)
    bld.xor(xs[0], xs[1])
    with pytest.raises(ValueError):
        bld.new_inputs(1)
    with pytest.raises(ValueError):
        bld.add(xs, [xs[0]])
    with pytest.raises(ValueError):
        bld.const_bits(4, 2)
    with pytest.raises(ValueError):
        bld.or_tree([])


def _single_gate_circuit(kind):
    # Two live input wires spread over the six ranges, one gate.
    gate = Gate(kind, 0, 1, 2)
    inputs = InputMap(
        s0_v=WireRange(0, 1),
        s1_v=WireRange(1, 1),
        theta_v=WireRange(2, 0),
        s0_a=WireRange(2, 0),
        s1_a=WireRange(2, 0),
        theta_a=WireRange(2, 0),
    )
    outputs = OutputMap(r_f=WireRange(2, 1), alpha=2, sigma=2, overflow=2)
    return Circuit(3, (gate,), inputs, outputs)


def test_eval_plain_single_gates():
    assert eval_plain(_single_gate_circuit(GateKind.XOR), [1, 1])[0] == 0
    assert eval_plain(_single_gate_circuit(GateKind.XOR), [1, 0])[0] == 1
    assert eval_plain(_single_gate_circuit(GateKind.AND), [1, 0])[0] == 0
    assert eval_plain(_single_gate_circuit(GateKind.AND), [1, 1])[0] == 1
    with pytest.raises(ValueError):
        eval_plain(_single_gate_circuit(GateKind.AND), [1, 0, 1])


def test_circuit_structural_validation():
    ok = _single_gate_circuit(GateKind.XOR)
    with pytest.raises(ValueError):
        Circuit(3, (Gate(GateKind.XOR, 0, 5, 2),), ok.inputs, ok.outputs)
    with pytest.raises(ValueError):
        Circuit(3, (Gate(GateKind.XOR, 0, 1, 0),), ok.inputs, ok.outputs)
    with pytest.raises(ValueError):
        Circuit(3, (Gate(GateKind.NOT, 0, 1, 2),), ok.inputs, ok.outputs)
    with pytest.raises(ValueError):
        Circuit(4, (Gate(GateKind.XOR, 0, 1, 2),), ok.inputs, ok.outputs)


def test_build_is_deterministic():
    first = build_mechanism_circuit(PARAMS, SCALED)
    second = build_mechanism_circuit(PARAMS, SCALED)
    assert serialize_circuit(first) == serialize_circuit(second)
    assert circuit_digest(first) == circuit_digest(second)


def test_digest_tracks_scaled_constants():
    base = circuit_digest(build_mechanism_circuit(PARAMS, SCALED))
    patched = ScaledParams(SCALED.p_scale, SCALED.q_scale + 1, SCALED.inv_q_scale)
    assert circuit_digest(build_mechanism_circuit(PARAMS, patched)) != base


def test_golden_digests_stable():
    for (q, kt, k), expected in GOLDEN_DIGESTS.items():
        params = MechanismParams.from_q(q, kt, k)
        circuit = build_mechanism_circuit(params, ScaledParams.from_params(params))
        assert circuit_digest(circuit).hex() == expected


def test_serialization_roundtrip():
    circuit = build_mechanism_circuit(PARAMS, SCALED)
    blob = serialize_circuit(circuit)
    assert deserialize_circuit(blob) == circuit
    with pytest.raises(ValueError):
        deserialize_circuit(blob[:10])
    with pytest.raises(ValueError):
        deserialize_circuit(b"XXXX" + blob[4:])
    with pytest.raises(ValueError):
        deserialize_circuit(blob + b"\x00")
    bad_version = blob[:4] + b"\x63\x00" + blob[6:]
    with pytest.raises(ValueError):
        deserialize_circuit(bad_version)


def test_matches_fixed_point_on_random_inputs():
    circuit = build_mechanism_circuit(PARAMS, SCALED)
    rng = random.Random(0x11)
    for _ in range(60):
        tv, ta = rng.randrange(16), rng.randrange(16)
        s0v, s1v = rng.randrange(16), rng.randrange(16)
        s0a, s1a = rng.randrange(16), rng.randrange(16)
        bits = encode_inputs(circuit, tv, ta, s0_v=s0v, s1_v=s1v, s0_a=s0a, s1_a=s1a)
        got = decode_outcome(circuit, eval_plain(circuit, bits))
        want = outcome_fixed(PARAMS, SCALED, Report(tv, ta), s0v ^ s0a, s1v ^ s1a)
        assert got == want


def test_matches_fixed_point_wide_widths_batch():
    params = MechanismParams.from_q(Fraction(1, 4), 16, 32)
    scaled = ScaledParams.from_params(params)
    circuit = build_mechanism_circuit(params, scaled)
    rng = random.Random(0x22)
    cases = []
    rows = []
    for _ in range(1000):
        tv, ta = rng.randrange(1 << 16), rng.randrange(1 << 16)
        s0, s1 = rng.randrange(1 << 32), rng.randrange(1 << 32)
        cases.append((tv, ta, s0, s1))
        rows.append(encode_inputs(circuit, tv, ta, s0_v=s0, s1_v=s1, s0_a=0, s1_a=0))
    packed = pack_bit_columns(np.array(rows, dtype=np.uint64))
    out = unpack_bit_columns(eval_plain_batch(circuit, packed), len(cases))
    n = circuit.outputs.r_f.length
    for row, (tv, ta, s0, s1) in zip(out, cases):
        want = outcome_fixed(params, scaled, Report(tv, ta), s0, s1)
        r_f = sum(int(b) << i for i, b in enumerate(row[:n]))
        assert (r_f, row[n], row[n + 1]) == (want.r_f, want.alpha, want.sigma)
        # truncated high product bits never carry information
        assert row[n + 2] == 0


def test_overflow_probe_never_fires_exhaustively():
    circuit = build_mechanism_circuit(PARAMS, SCALED)
    rows = [
        encode_inputs(circuit, tv, ta, s0_v=s0, s1_v=s1, s0_a=0, s1_a=0)
        for tv, ta, s0, s1 in itertools.product(range(16), repeat=4)
    ]
    packed = pack_bit_columns(np.array(rows, dtype=np.uint64))
    out = eval_plain_batch(circuit, packed)
    assert not out[-1].any()


def test_and_count_monotone_in_widths():
    q = Fraction(1, 4)
    grid = {}
    for kt in (4, 6, 8, 16):
        for k in (4, 8, 16, 32):
            params = MechanismParams.from_q(q, kt, k)
            circuit = build_mechanism_circuit(params, ScaledParams.from_params(params))
            grid[kt, k] = circuit.and_count
    kts = (4, 6, 8, 16)
    ks = (4, 8, 16, 32)
    for k in ks:
        counts = [grid[kt, k] for kt in kts]
        assert counts == sorted(counts)
    for kt in kts:
        counts = [grid[kt, k] for k in ks]
        assert counts == sorted(counts)


def test_width_overflow_guard():
    params = MechanismParams.from_q(Fraction(1, 4), 16, 32)
    scaled = ScaledParams.from_params(params)
    with pytest.raises(OverflowError):
        build_mechanism_circuit(params, scaled, max_width=40)


def test_encode_and_decode_guards():
    circuit = build_mechanism_circuit(PARAMS, SCALED)
    with pytest.raises(ValueError):
        encode_inputs(circuit, 16, 0, s0_v=0, s1_v=0, s0_a=0, s1_a=0)
    with pytest.raises(ValueError):
        decode_outcome(circuit, [0] * 3)
    with pytest.raises(ValueError):
        eval_plain_batch(circuit, np.zeros((3, 1), dtype=np.uint64))


def test_pack_unpack_roundtrip():
    rng = random.Random(0x33)
    samples = np.array(
        [[rng.randrange(2) for _ in range(5)] for _ in range(130)], dtype=np.uint64
    )
    packed = pack_bit_columns(samples)
    assert packed.shape == (5, 3)
    assert (unpack_bit_columns(packed, 130) == samples).all()


def test_zero_report_forces_zero_ransom():
    circuit = build_mechanism_circuit(PARAMS, SCALED)
    bits = encode_inputs(circuit, 0, 0, s0_v=0, s1_v=0, s0_a=0, s1_a=0)
    out = decode_outcome(circuit, eval_plain(circuit, bits))
    assert out.r_f == 0
