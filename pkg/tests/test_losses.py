"""Tests for the per-round loss model."""

import random
from fractions import Fraction

import pytest

from blindbargain.losses import (
    LossProfile,
    VictimParams,
    as_money,
    block_mass,
    elapsed_loss,
    reservation,
    residual_value,
    total_loss,
    total_value,
)


def random_profile(rng: random.Random, max_blocks: int = 12) -> LossProfile:
    blocks = [
        Fraction(rng.randrange(0, 50), rng.randrange(1, 8))
        for _ in range(rng.randrange(0, max_blocks))
    ]
    tail = Fraction(rng.randrange(0, 30), rng.randrange(1, 8))
    l0 = Fraction(rng.randrange(0, 10))
    return LossProfile(l0=l0, blocks=blocks, tail=tail)


def test_total_value_sums_blocks_and_tail():
    assert total_value(LossProfile(blocks=[1, 1, 1, 1, 1])) == 5
    assert total_value(LossProfile(blocks=[], tail=7)) == 7
    assert total_value(LossProfile(blocks=[2, 3], tail="1.5")) == Fraction(13, 2)


def test_residual_value_drops_by_elapsed_blocks():
    profile = LossProfile(blocks=[1, 1, 1, 1, 1])
    assert residual_value(profile, 3) == 2
    assert residual_value(profile, 0) == total_value(profile)
    assert residual_value(LossProfile(blocks=[2, 3], tail="1.5"), 5) == Fraction(3, 2)


def test_reservation_caps_at_r_max():
    profile = LossProfile(blocks=[1, 1, 1, 1, 1])
    assert reservation(VictimParams(10, profile), 1) == 4
    assert reservation(VictimParams("2.5", profile), 1) == Fraction(5, 2)
    constant = VictimParams(7, LossProfile(blocks=[], tail=7))
    for n in (0, 1, 5, 100):
        assert reservation(constant, n) == 7


def test_total_loss_released_and_not():
    victim = VictimParams(10, LossProfile(l0=1, blocks=[1, 1, 1, 1, 1]))
    assert total_loss(victim, 2, 2, released=True) == 5
    assert total_loss(victim, 2, 0, released=False) == 6
    zero = VictimParams(10, LossProfile(l0=0, blocks=[1, 1, 1, 1, 1]))
    assert total_loss(zero, 0, 0, released=True) == 0


def test_total_loss_rejects_negative_ransom():
    victim = VictimParams(10, LossProfile(blocks=[1]))
    with pytest.raises(ValueError):
        total_loss(victim, 0, -1, released=True)


def test_as_money_rejects_floats():
    with pytest.raises(TypeError):
        as_money(0.1)
    with pytest.raises(TypeError):
        LossProfile(blocks=[0.5])


def test_profile_rejects_negative_masses():
    with pytest.raises(ValueError):
        LossProfile(blocks=[-1])
    with pytest.raises(ValueError):
        LossProfile(tail=-1)
    with pytest.raises(ValueError):
        LossProfile(l0=-1)


def test_residual_value_monotone_and_converges_to_tail():
    rng = random.Random(0xBEEF)
    for _ in range(200):
        profile = random_profile(rng)
        values = [residual_value(profile, n) for n in range(len(profile.blocks) + 3)]
        assert all(a >= b for a, b in zip(values, values[1:]))
        assert values[0] == total_value(profile)
        assert values[-1] == profile.tail


def test_reservation_is_binding_min():
    rng = random.Random(0xCAFE)
    for _ in range(200):
        profile = random_profile(rng)
        victim = VictimParams(Fraction(rng.randrange(0, 40), 2), profile)
        for n in range(len(profile.blocks) + 2):
            r = reservation(victim, n)
            assert r <= victim.r_max
            assert r <= residual_value(profile, n)
            assert r == victim.r_max or r == residual_value(profile, n)


def test_total_loss_monotone_in_settle_round():
    rng = random.Random(0xD00D)
    for _ in range(200):
        profile = random_profile(rng)
        victim = VictimParams(100, profile)
        costs = [
            total_loss(victim, n, 3, released=True)
            for n in range(len(profile.blocks) + 2)
        ]
        assert all(a <= b for a, b in zip(costs, costs[1:]))


def test_block_mass_zero_beyond_profile():
    profile = LossProfile(blocks=[2, 3], tail=1)
    assert block_mass(profile, 0) == 2
    assert block_mass(profile, 1) == 3
    assert block_mass(profile, 2) == 0
    assert elapsed_loss(profile, 1) == 2
