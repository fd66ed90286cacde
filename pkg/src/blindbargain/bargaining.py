"""Finite-horizon alternating-offers ransom negotiation.

The attacker opens in round 1; the parties alternate until round N,
after which the data is worthless to both.  Offers are driven entirely
by the victim's per-round loss blocks: waiting is free for the attacker
but burns a block of value for the victim, so equilibrium offers track
exactly how much value survives to each round.

Two independent routes compute the equilibrium schedule: a closed-form
per-round formula and a backward-induction recursion over the game
tree.  They must agree exactly, in rational arithmetic; the test suite
enforces that.

Also covered: determining the horizon N from the attacker's reservation
value, the infinite-horizon (Rubinstein) split, the limit of the
opening offer for slowly varying losses, and the attacker's screening
best response when the victim's reservation value is private.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .losses import (
    LossProfile,
    Money,
    MoneyLike,
    VictimParams,
    as_money,
    block_mass,
    elapsed_loss,
    residual_value,
    total_value,
)


class HorizonError(ValueError):
    """No usable bargaining horizon exists for the given instance."""


class NoFeasibleHorizon(HorizonError):
    """The attacker's reservation is at or above the round-1 value."""


class InfiniteHorizon(HorizonError):
    """The attacker's reservation never drops below the remaining value."""


class NonOddHorizon(HorizonError):
    """The unique horizon came out even; the model needs an odd one.

    Carries the offending horizon so callers can inspect or adjust the
    profile; this module never adjusts it silently.
    """

    def __init__(self, horizon: int) -> None:
        super().__init__(f"bargaining horizon N={horizon} is even")
        self.horizon = horizon


class NoDeal(ValueError):
    """Reservation values do not overlap; no ransom is ever paid."""


class MarginalLossWarning(UserWarning):
    """Final-round loss block is not small next to the remaining mass."""


@dataclass(frozen=True)
class BargainingInstance:
    """One negotiation: a victim, the attacker's reservation, optional N."""

    victim: VictimParams
    r_min: Money
    horizon: Optional[int] = None

    def __init__(
        self,
        victim: VictimParams,
        r_min: MoneyLike,
        horizon: Optional[int] = None,
    ) -> None:
        object.__setattr__(self, "victim", victim)
        object.__setattr__(self, "r_min", as_money(r_min))
        object.__setattr__(self, "horizon", horizon)
        if self.r_min < 0:
            raise ValueError("r_min must be >= 0")
        if horizon is not None and (horizon < 1 or horizon % 2 == 0):
            raise ValueError("horizon must be an odd positive integer")


@dataclass(frozen=True)
class OfferSchedule:
    """Equilibrium offers indexed by round, round 1 first."""

    offers: tuple[Money, ...]

    def __post_init__(self) -> None:
        if any(a < b for a, b in zip(self.offers, self.offers[1:])):
            raise ValueError("offers must be non-increasing over rounds")

    @property
    def rounds(self) -> int:
        return len(self.offers)

    def offer(self, n: int) -> Money:
        """Offer on the table in round ``n`` (1-based)."""
        if not 1 <= n <= len(self.offers):
            raise ValueError(f"round {n} outside 1..{len(self.offers)}")
        return self.offers[n - 1]


@dataclass(frozen=True)
class Round1Limit:
    """Opening-offer value: exact alternating-block sum vs. half-value.

    ``has_tail`` flags profiles whose tail mass forced an attribution
    choice (half the tail is counted into ``exact``).
    """

    exact: Money
    approx: Money
    has_tail: bool


@dataclass(frozen=True)
class IncompleteInfoProfile:
    """Screening-strategy parameters when the victim's value is private.

    q is the assumed chance the victim plays weak, p_bar the chance the
    victim makes the screening (low) offer, rho the chance the attacker
    tolerates a third round.
    """

    q: Fraction
    p_bar: Fraction
    rho: Fraction

    def __init__(self, q: MoneyLike, p_bar: MoneyLike, rho: MoneyLike) -> None:
        object.__setattr__(self, "q", as_money(q))
        object.__setattr__(self, "p_bar", as_money(p_bar))
        object.__setattr__(self, "rho", as_money(rho))
        for name in ("q", "p_bar", "rho"):
            value = getattr(self, name)
            if not 0 <= value <= 1:
                raise ValueError(f"{name} must be a probability in [0, 1]")


@dataclass(frozen=True)
class AttackerResponse:
    """Attacker's reply to the round-2 offer: accept it or counter."""

    accepts: bool
    counteroffer: Optional[Money] = None


def determine_horizon(inst: BargainingInstance) -> int:
    """Last round in which dealing still beats walking away, for both.

    The horizon N is the unique round with r_min < v(N) and
    r_min > v(N+1): the attacker's reservation is still covered by the
    remaining value at N but not afterwards.  Raised errors:
    InfiniteHorizon when the reservation never falls below the remaining
    value (r_min <= tail), NoFeasibleHorizon when even one round of
    waiting puts the value below the reservation (r_min >= v(1)), and
    NonOddHorizon when the unique N is even, which the finite-horizon
    solution cannot use.
    """
    profile = inst.victim.profile
    if inst.r_min <= profile.tail:
        raise InfiniteHorizon(
            f"r_min={inst.r_min} never exceeds the tail mass {profile.tail}"
        )
    if inst.r_min >= residual_value(profile, 1):
        raise NoFeasibleHorizon(
            f"r_min={inst.r_min} is already at or above v(1)={residual_value(profile, 1)}"
        )
    # v is non-increasing and hits the tail after the profiled rounds, so
    # the scan terminates: N = max{n >= 1 : v(n) > r_min}.
    n = 1
    while residual_value(profile, n + 1) > inst.r_min:
        n += 1
    if n % 2 == 0:
        raise NonOddHorizon(n)
    return n


def closed_form_offer(inst: BargainingInstance, n: int, N: int) -> Money:
    """Equilibrium offer at round ``n`` of an N-round game, in closed form.

    Starting from the full value, subtract the blocks the proposer must
    concede for the rounds its opponent still controls, and the blocks
    already burned by waiting this long:

        r*_n = V - sum_{k=0}^{floor((N-n)/2)-1} b_{N-1-2k}
                 - sum_{j < 2*floor(n/2)+1} b_j
    """
    _check_round(n, N)
    profile = inst.victim.profile
    future_concessions = sum(
        (block_mass(profile, N - 1 - 2 * k) for k in range((N - n) // 2)),
        start=Fraction(0),
    )
    burned = elapsed_loss(profile, 2 * (n // 2) + 1)
    return total_value(profile) - future_concessions - burned


def backward_induction_offers(inst: BargainingInstance, N: int) -> OfferSchedule:
    """Equilibrium offers by walking the game tree from the last round.

    At round N the attacker demands everything the victim still values,
    v(N).  Stepping backwards: in a victim round the victim offers
    exactly what the attacker would demand next round (waiting costs the
    attacker nothing, so nothing less is accepted); in an attacker round
    the victim accepts up to the next round's offer plus the block it
    would burn by waiting, so the attacker demands exactly that.
    """
    _check_round(N, N)
    profile = inst.victim.profile
    offers = [Fraction(0)] * (N + 1)
    offers[N] = residual_value(profile, N)
    for n in range(N - 1, 0, -1):
        if n % 2 == 0:
            offers[n] = offers[n + 1]
        else:
            offers[n] = offers[n + 1] + block_mass(profile, n)
    return OfferSchedule(tuple(offers[1:]))


def rubinstein_split(v: MoneyLike, r_max: MoneyLike, r_min: MoneyLike) -> Money:
    """Infinite-horizon ransom: midpoint of the overlapping reservations.

    With no deadline and no discounting the split lands halfway between
    what the victim would pay at most and what the attacker accepts at
    least.  Raises NoDeal when those do not overlap.
    """
    value, cap, floor_ = as_money(v), as_money(r_max), as_money(r_min)
    ceiling = min(value, cap)
    if floor_ > ceiling:
        raise NoDeal(f"r_min={floor_} exceeds min(v, r_max)={ceiling}")
    return (ceiling + floor_) / 2


def round1_limit(profile: LossProfile) -> Round1Limit:
    """Opening offer for slowly varying losses, exact and approximate.

    The exact value sums the odd-indexed blocks (the rounds the victim
    concedes); a nonzero tail is split evenly, and flagged, because the
    block data does not determine how the alternation continues inside
    it.  The approximation is half the total value, which the exact sum
    approaches when blocks vary slowly.
    """
    exact = sum(profile.blocks[1::2], start=Fraction(0)) + profile.tail / 2
    return Round1Limit(
        exact=exact,
        approx=total_value(profile) / 2,
        has_tail=profile.tail > 0,
    )


def validate_profile_bounds(
    profile: IncompleteInfoProfile, loss: LossProfile
) -> None:
    """Check the screening-profile feasibility bounds against a loss profile.

    The bounds tie q to the first loss blocks (the weak-victim story must
    be consistent with how fast value burns), force rho high enough that
    a third round is believable, and force p_bar high enough that the
    screening offer is worth making.  Raises ValueError on violation.
    """
    v_total = total_value(loss)
    if v_total <= 0:
        raise ValueError("loss profile has no value at stake")
    b2 = elapsed_loss(loss, 2)
    b3 = elapsed_loss(loss, 3)
    v2 = residual_value(loss, 2)
    v3 = residual_value(loss, 3)

    if profile.q * v_total < b2:
        raise ValueError(f"q={profile.q} below lower bound {b2}/{v_total}")
    if profile.q * b3 > b2:
        raise ValueError(f"q={profile.q} above upper bound {b2}/{b3}")

    excess = profile.q * v_total - b2
    if v3 > 0:
        if profile.rho * v3 < excess:
            raise ValueError(f"rho={profile.rho} below lower bound {excess}/{v3}")
    elif excess > 0:
        raise ValueError("rho bound unsatisfiable: no value left after round 3")

    denom = profile.rho * v3 + (1 - profile.q) * v_total
    if denom <= 0:
        if v2 > 0:
            raise ValueError("p_bar bound unsatisfiable: zero continuation value")
    elif profile.p_bar * denom < v2:
        raise ValueError(f"p_bar={profile.p_bar} below lower bound {v2}/{denom}")


def screening_offer(profile: IncompleteInfoProfile, loss: LossProfile) -> Money:
    """Low round-2 offer that screens the attacker's reservation value."""
    return profile.q * total_value(loss) - elapsed_loss(loss, 2)


def attacker_best_response(
    profile: IncompleteInfoProfile,
    r2: MoneyLike,
    r_min: MoneyLike,
    loss: LossProfile,
) -> AttackerResponse:
    """Attacker's reply to the victim's round-2 offer under screening.

    Accept any offer covering the reservation; otherwise counter in
    round 3 with the offer inflated back by the weak-victim odds, never
    below the reservation itself.
    """
    validate_profile_bounds(profile, loss)
    offer = as_money(r2)
    reservation = as_money(r_min)
    if reservation <= offer:
        return AttackerResponse(accepts=True)
    if profile.q == 0:
        raise ValueError("counteroffer undefined for q=0")
    return AttackerResponse(
        accepts=False, counteroffer=max(offer / profile.q, reservation)
    )


def lint_marginal_loss(
    profile: LossProfile, horizon: int, threshold: MoneyLike = Fraction(1, 10)
) -> None:
    """Warn when the final-round block is not marginal.

    The closed-form schedule treats the last round's loss as negligible
    next to everything that would still be lost afterwards; profiles
    violating that (block over ``threshold`` times the post-horizon
    mass) get a MarginalLossWarning.
    """
    last_block = block_mass(profile, horizon - 1)
    remaining = residual_value(profile, horizon + 1)
    if last_block > as_money(threshold) * remaining:
        warnings.warn(
            f"final-round block {last_block} is not small next to the "
            f"remaining mass {remaining}",
            MarginalLossWarning,
            stacklevel=2,
        )


def _check_round(n: int, N: int) -> None:
    if N < 1 or N % 2 == 0:
        raise ValueError(f"N={N} must be an odd positive round count")
    if not 1 <= n <= N:
        raise ValueError(f"round n={n} outside 1..{N}")
