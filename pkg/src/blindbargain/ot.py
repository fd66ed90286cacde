"""1-out-of-2 oblivious transfer for the evaluator's input labels.

Diffie-Hellman style construction over the 1024-bit MODP group from
RFC 2409 (Oakley group 2), restricted to the prime-order subgroup of
quadratic residues with generator 4.  The sender publishes A = g^a; the
receiver answers with B = g^b to fetch the first label or B = A*g^b to
fetch the second; the sender encrypts label 0 under a key from B^a and
label 1 under a key from (B/A)^a.  Exactly one of those equals the
receiver's g^(ab), so one pad decrypts and the other stays opaque,
while B itself is a uniform group element either way and reveals
nothing about the choice.

Exponents are 256 bits, the usual short-exponent setting for this group
size; input counts here are tiny (two random words and one report per
party), so no OT extension is layered on top.

The three byte blobs produced here travel as protocol messages; the
pure in-process composition ``ot_transfer`` is what the tests exercise.
"""

from __future__ import annotations

import hashlib
import secrets
import struct
from typing import Callable, Sequence

from .garbling import LABEL_BYTES, WireLabel

# RFC 2409 section 6.2; p = 2q + 1 with q prime, 4 generates the
# order-q subgroup of squares.
PRIME = int(
    "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74"
    "020BBEA63B139B22514A08798E3404DDEF9519B3CD3A431B302B0A6DF25F1437"
    "4FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED"
    "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE65381FFFFFFFFFFFFFFFF",
    16,
)
GENERATOR = 4
SUBGROUP_ORDER = (PRIME - 1) // 2
EXPONENT_BITS = 256
ELEMENT_BYTES = 128

RandomBits = Callable[[int], int]


class OtProtocolError(ValueError):
    """Malformed or out-of-group key material."""


def _default_rand(bits: int) -> int:
    return secrets.randbits(bits)


def _rand_exponent(rand_bits: RandomBits) -> int:
    while True:
        e = rand_bits(EXPONENT_BITS)
        if e > 1:
            return e


def _element_bytes(x: int) -> bytes:
    return x.to_bytes(ELEMENT_BYTES, "big")


def _parse_elements(data: bytes, count: int, what: str) -> list[int]:
    if len(data) != count * ELEMENT_BYTES:
        raise OtProtocolError(f"{what}: expected {count} group elements")
    out = []
    for i in range(count):
        x = int.from_bytes(data[i * ELEMENT_BYTES : (i + 1) * ELEMENT_BYTES], "big")
        if not 1 < x < PRIME - 1:
            raise OtProtocolError(f"{what}: element {i} outside the group range")
        out.append(x)
    return out


def _pad(index: int, shared: int) -> bytes:
    material = struct.pack("<I", index) + _element_bytes(shared)
    return hashlib.sha256(b"ot-pad" + material).digest()[:LABEL_BYTES]


class OtSender:
    """Holds the label pairs; answers the receiver's blinded choices."""

    def __init__(
        self,
        pairs: Sequence[tuple[WireLabel, WireLabel]],
        rand_bits: RandomBits = _default_rand,
    ) -> None:
        self._pairs = list(pairs)
        self._a = _rand_exponent(rand_bits)
        self._big_a = pow(GENERATOR, self._a, PRIME)

    @property
    def count(self) -> int:
        return len(self._pairs)

    def public_message(self) -> bytes:
        return _element_bytes(self._big_a)

    def respond(self, blinded: bytes) -> bytes:
        """Encrypt both labels of every pair; one pad per choice."""
        elements = _parse_elements(blinded, len(self._pairs), "receiver message")
        # (B/A)^a = B^a * (A^a)^-1, so invert A^a once
        inv_a_to_a = pow(pow(self._big_a, self._a, PRIME), -1, PRIME)
        parts = []
        for i, (b_elem, pair) in enumerate(zip(elements, self._pairs)):
            shared0 = pow(b_elem, self._a, PRIME)
            shared1 = shared0 * inv_a_to_a % PRIME
            for shared, label in ((shared0, pair[0]), (shared1, pair[1])):
                pad = _pad(i, shared)
                parts.append(bytes(x ^ y for x, y in zip(pad, label.bits)))
        return b"".join(parts)


class OtReceiver:
    """Blinds the choice bits, then unwraps the chosen labels."""

    def __init__(
        self, choices: Sequence[int], rand_bits: RandomBits = _default_rand
    ) -> None:
        self._choices = [c & 1 for c in choices]
        self._rand_bits = rand_bits
        self._exponents: list[int] = []
        self._big_a: int | None = None

    @property
    def count(self) -> int:
        return len(self._choices)

    def blind(self, sender_public: bytes) -> bytes:
        (big_a,) = _parse_elements(sender_public, 1, "sender message")
        self._big_a = big_a
        self._exponents = [_rand_exponent(self._rand_bits) for _ in self._choices]
        parts = []
        for choice, b in zip(self._choices, self._exponents):
            elem = pow(GENERATOR, b, PRIME)
            if choice:
                elem = elem * big_a % PRIME
            parts.append(_element_bytes(elem))
        return b"".join(parts)

    def unwrap(self, ciphertexts: bytes) -> list[WireLabel]:
        if self._big_a is None:
            raise OtProtocolError("unwrap before blind")
        n = len(self._choices)
        if len(ciphertexts) != n * 2 * LABEL_BYTES:
            raise OtProtocolError(f"expected {n} ciphertext pairs")
        labels = []
        for i, (choice, b) in enumerate(zip(self._choices, self._exponents)):
            shared = pow(self._big_a, b, PRIME)
            pad = _pad(i, shared)
            start = (2 * i + choice) * LABEL_BYTES
            ct = ciphertexts[start : start + LABEL_BYTES]
            labels.append(WireLabel(bytes(x ^ y for x, y in zip(pad, ct))))
        return labels


def ot_transfer(
    pairs: Sequence[tuple[WireLabel, WireLabel]],
    choices: Sequence[int],
    rand_bits: RandomBits = _default_rand,
) -> list[WireLabel]:
    """All three flows composed in-process; returns the chosen labels."""
    if len(pairs) != len(choices):
        raise ValueError("one choice bit per label pair")
    sender = OtSender(pairs, rand_bits)
    receiver = OtReceiver(choices, rand_bits)
    blinded = receiver.blind(sender.public_message())
    return receiver.unwrap(sender.respond(blinded))
