"""Tests for the alternating-offers bargaining engine."""

import random
from fractions import Fraction

import pytest

from blindbargain.bargaining import (
    AttackerResponse,
    BargainingInstance,
    IncompleteInfoProfile,
    InfiniteHorizon,
    MarginalLossWarning,
    NoDeal,
    NoFeasibleHorizon,
    NonOddHorizon,
    OfferSchedule,
    attacker_best_response,
    backward_induction_offers,
    closed_form_offer,
    determine_horizon,
    lint_marginal_loss,
    round1_limit,
    rubinstein_split,
    screening_offer,
    validate_profile_bounds,
)
from blindbargain.losses import (
    LossProfile,
    VictimParams,
    elapsed_loss,
    residual_value,
    total_value,
)

FIVE_ONES = LossProfile(blocks=[1, 1, 1, 1, 1])


def instance(profile: LossProfile, r_min, r_max=1000) -> BargainingInstance:
    return BargainingInstance(VictimParams(r_max, profile), r_min)


def random_profile(rng: random.Random, max_blocks: int = 21, with_tail: bool = True):
    blocks = [
        Fraction(rng.randrange(0, 40), rng.randrange(1, 6))
        for _ in range(rng.randrange(1, max_blocks + 1))
    ]
    tail = Fraction(rng.randrange(0, 20), rng.randrange(1, 6)) if with_tail else 0
    return LossProfile(blocks=blocks, tail=tail)


# --- horizon -------------------------------------------------------------


def test_horizon_examples():
    assert determine_horizon(instance(FIVE_ONES, "1.5")) == 3
    with pytest.raises(NonOddHorizon) as excinfo:
        determine_horizon(instance(FIVE_ONES, "0.5"))
    assert excinfo.value.horizon == 4
    with pytest.raises(NoFeasibleHorizon):
        determine_horizon(instance(FIVE_ONES, 10))
    with pytest.raises(InfiniteHorizon):
        determine_horizon(instance(LossProfile(blocks=[2, 2], tail=3), 3))


def test_horizon_satisfies_both_inequalities():
    rng = random.Random(0x401)
    found = 0
    for _ in range(500):
        profile = random_profile(rng)
        r_min = Fraction(rng.randrange(1, 50), rng.randrange(1, 6))
        inst = instance(profile, r_min)
        try:
            n = determine_horizon(inst)
        except NonOddHorizon as err:
            n = err.horizon
        except (NoFeasibleHorizon, InfiniteHorizon):
            continue
        found += 1
        assert residual_value(profile, n) > r_min
        assert residual_value(profile, n + 1) <= r_min
    assert found > 100


# --- equilibrium offers --------------------------------------------------


def test_closed_form_worked_schedule():
    inst = instance(FIVE_ONES, "1.5")
    assert closed_form_offer(inst, 1, 3) == 3
    assert closed_form_offer(inst, 2, 3) == 2
    assert closed_form_offer(inst, 3, 3) == 2
    rng = random.Random(1)
    for _ in range(20):
        profile = random_profile(rng)
        one_round = instance(profile, 0)
        assert closed_form_offer(one_round, 1, 1) == residual_value(profile, 1)


def test_backward_induction_worked_schedule():
    inst = instance(FIVE_ONES, "1.5")
    assert backward_induction_offers(inst, 3).offers == (3, 2, 2)
    profile = LossProfile(blocks=[4, 1], tail=2)
    inst1 = instance(profile, 0)
    assert backward_induction_offers(inst1, 1).offers == (
        residual_value(profile, 1),
    )


def test_round_validation():
    inst = instance(FIVE_ONES, 1)
    with pytest.raises(ValueError):
        closed_form_offer(inst, 0, 3)
    with pytest.raises(ValueError):
        closed_form_offer(inst, 4, 3)
    with pytest.raises(ValueError):
        closed_form_offer(inst, 1, 4)
    with pytest.raises(ValueError):
        backward_induction_offers(inst, 2)


def test_closed_form_equals_backward_induction():
    rng = random.Random(0xE4)
    for _ in range(300):
        profile = random_profile(rng)
        inst = instance(profile, 0)
        for N in range(1, 22, 2):
            schedule = backward_induction_offers(inst, N)
            for n in range(1, N + 1):
                assert closed_form_offer(inst, n, N) == schedule.offer(n)


def test_schedule_monotonicity_lemmas():
    # Offers never rise over rounds; a longer horizon never helps the
    # attacker; no offer exceeds the value remaining.
    rng = random.Random(0x1E44A)
    for _ in range(400):
        profile = random_profile(rng)
        inst = instance(profile, 0)
        for N in (1, 3, 5, 7, 9, 11):
            schedule = backward_induction_offers(inst, N)
            longer = backward_induction_offers(inst, N + 2)
            for n in range(1, N + 1):
                if n < N:
                    assert schedule.offer(n + 1) <= schedule.offer(n)
                assert longer.offer(n) <= schedule.offer(n)
                assert schedule.offer(n) <= residual_value(profile, n)


def test_paired_rounds_share_offers():
    rng = random.Random(0x22)
    for _ in range(100):
        profile = random_profile(rng)
        inst = instance(profile, 0)
        schedule = backward_induction_offers(inst, 9)
        for k in (1, 2, 3, 4):
            assert schedule.offer(2 * k) == schedule.offer(2 * k + 1)
        # The opening demand is the most the attacker can ever get.
        assert max(schedule.offers) == schedule.offer(1)


def test_schedule_type_rejects_increasing_offers():
    with pytest.raises(ValueError):
        OfferSchedule((Fraction(1), Fraction(2)))
    with pytest.raises(ValueError):
        OfferSchedule((Fraction(2), Fraction(1))).offer(3)


# --- special cases -------------------------------------------------------


def test_rubinstein_split():
    assert rubinstein_split(10, 8, 2) == 5
    assert rubinstein_split(6, 10, 6) == 6
    with pytest.raises(NoDeal):
        rubinstein_split(4, 4, 5)


def test_round1_limit_examples():
    r = round1_limit(LossProfile(blocks=[1, 1, 1, 1, 1, 1]))
    assert (r.exact, r.approx, r.has_tail) == (3, 3, False)
    r = round1_limit(LossProfile(blocks=[4]))
    assert (r.exact, r.approx) == (0, 2)
    r = round1_limit(LossProfile(blocks=[2, 2], tail=3))
    assert r.exact == 2 + Fraction(3, 2)
    assert r.has_tail


def test_round1_limit_ratio_approaches_one():
    for count in (5, 11, 25, 101, 1001):
        r = round1_limit(LossProfile(blocks=[1] * count))
        ratio = r.exact / r.approx
        assert 1 - Fraction(1, count) <= ratio <= 1


# --- screening under incomplete information -----------------------------


def screening_setup():
    loss = FIVE_ONES
    profile = IncompleteInfoProfile(q="1/2", p_bar="9/10", rho="1/2")
    validate_profile_bounds(profile, loss)
    return profile, loss


def test_attacker_accepts_covering_offer():
    profile, loss = screening_setup()
    r2 = screening_offer(profile, loss)
    assert r2 == Fraction(1, 2)
    assert attacker_best_response(profile, r2, Fraction(1, 4), loss) == (
        AttackerResponse(accepts=True)
    )


def test_attacker_counters_below_reservation():
    profile, loss = screening_setup()
    r2 = screening_offer(profile, loss)
    response = attacker_best_response(profile, r2, Fraction(3, 4), loss)
    assert not response.accepts
    assert response.counteroffer == max(r2 / profile.q, Fraction(3, 4))
    # Reservation above the inflated offer: the reservation wins the max.
    response = attacker_best_response(profile, r2, 2, loss)
    assert response.counteroffer == 2


def test_counteroffer_at_upper_q_never_exceeds_round3_value():
    rng = random.Random(0x9B)
    checked = 0
    for _ in range(300):
        loss = random_profile(rng, max_blocks=8)
        b2, b3 = elapsed_loss(loss, 2), elapsed_loss(loss, 3)
        if b2 == 0 or b3 == b2:
            continue
        q = b2 / b3
        profile = IncompleteInfoProfile(q=q, p_bar=1, rho=1)
        validate_profile_bounds(profile, loss)
        r2 = screening_offer(profile, loss)
        if r2 <= 0 or r2 / q == r2:
            continue
        assert r2 / q <= residual_value(loss, 3)
        # Reservation strictly between offer and inflated offer: the
        # counter branch fires and the inflation wins the max.
        r_min = (r2 + r2 / q) / 2
        response = attacker_best_response(profile, r2, r_min, loss)
        assert not response.accepts
        assert response.counteroffer == r2 / q
        checked += 1
    assert checked > 50


def test_profile_bounds_reject_out_of_range():
    loss = FIVE_ONES
    with pytest.raises(ValueError):
        validate_profile_bounds(IncompleteInfoProfile("1/5", 1, 1), loss)  # q low
    with pytest.raises(ValueError):
        validate_profile_bounds(IncompleteInfoProfile("3/4", 1, 1), loss)  # q high
    with pytest.raises(ValueError):
        validate_profile_bounds(IncompleteInfoProfile("1/2", 1, 0), loss)  # rho low
    with pytest.raises(ValueError):
        validate_profile_bounds(IncompleteInfoProfile("1/2", "1/2", 1), loss)
    with pytest.raises(ValueError):
        IncompleteInfoProfile(2, 1, 1)


# --- profile lint --------------------------------------------------------


def test_marginal_loss_lint():
    steep = LossProfile(blocks=[1, 1, 5], tail=1)
    with pytest.warns(MarginalLossWarning):
        lint_marginal_loss(steep, 3)
    import warnings

    flat = LossProfile(blocks=[1, 1, 1], tail=100)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        lint_marginal_loss(flat, 3)
