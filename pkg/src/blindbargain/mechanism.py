"""Sealed-report ransom settlement mechanism, exact and fixed-point.

Both parties report a reservation value; the mechanism settles the
ransom from the two reports and two random draws.  The victim's draw
picks between a screening offer (a q-discounted fraction of its report)
and the full report; the attacker accepts anything covering its report,
or counters with the discount inflated away; a counteroffer within the
victim's report is then either paid or answered by releasing for free,
which strips any gain from inflating the counteroffer.

Two semantics are provided.  ``outcome_real`` evaluates the rules in
exact rational arithmetic with unit-interval draws.  ``outcome_fixed``
replaces probabilities by floor-scaled k-bit integers, products by
multiply-then-right-shift, and draws by k-bit words; it is the single
source of truth for what the Boolean circuit must compute, bit for bit.

The expected-utility functions reproduce the incentive analysis.  The
attacker's expected utility is constant across every report that keeps
the deal alive and zero for reports that kill it, so truthful reporting
is optimal exactly when dealing is; types above half the victim's
report prefer pricing themselves out, a documented limit of the scheme.
The victim's interim utility is maximized by reporting truthfully, and
the expected payment of a truthful victim is exactly half its report.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .losses import Money, MoneyLike, as_money

DEFAULT_MAX_WIDTH = 64

Draw = Union[Fraction, float]


class ScalingWarning(UserWarning):
    """Scaled constants cannot represent the parameters exactly."""


@dataclass(frozen=True)
class MechanismParams:
    """Public mechanism parameters agreed by both parties.

    q is the screening discount and the counteroffer-acceptance bias,
    p_bar the bias toward the screening offer.  The exact constraint
    p_bar*(1-q) = 1/2 is what makes the expected payment come out to
    half the victim's report.  k_theta and k are the bitwidths of
    reports and of the random words in fixed-point semantics.
    """

    q: Fraction
    p_bar: Fraction
    k_theta: int
    k: int

    def __init__(self, q: MoneyLike, p_bar: MoneyLike, k_theta: int, k: int) -> None:
        object.__setattr__(self, "q", as_money(q))
        object.__setattr__(self, "p_bar", as_money(p_bar))
        object.__setattr__(self, "k_theta", int(k_theta))
        object.__setattr__(self, "k", int(k))
        if not 0 <= self.q <= Fraction(1, 2):
            raise ValueError("q must lie in [0, 1/2]")
        if not Fraction(1, 2) <= self.p_bar <= 1:
            raise ValueError("p_bar must lie in [1/2, 1]")
        if self.p_bar * (1 - self.q) != Fraction(1, 2):
            raise ValueError("p_bar * (1 - q) must equal 1/2 exactly")
        if self.k_theta < 1 or self.k < 1:
            raise ValueError("bitwidths must be >= 1")

    @classmethod
    def from_q(cls, q: MoneyLike, k_theta: int, k: int) -> "MechanismParams":
        """Build params from q alone, setting p_bar = 1 / (2(1-q))."""
        q = as_money(q)
        return cls(q, 1 / (2 * (1 - q)), k_theta, k)


@dataclass(frozen=True)
class ScaledParams:
    """Floor-scaled integer constants used by the fixed-point path."""

    p_scale: int
    q_scale: int
    inv_q_scale: int

    @classmethod
    def from_params(cls, params: MechanismParams) -> "ScaledParams":
        if params.q <= 0:
            raise ValueError("scaling requires q > 0")
        if (params.q.denominator & (params.q.denominator - 1)) != 0:
            warnings.warn(
                f"q={params.q} is not dyadic; scaled constants round down",
                ScalingWarning,
                stacklevel=2,
            )
        unit = 1 << params.k
        return cls(
            p_scale=int(params.p_bar * unit),
            q_scale=int(params.q * unit),
            inv_q_scale=int(unit / params.q),
        )


@dataclass(frozen=True)
class Report:
    """The two submitted reservation values."""

    theta_v: Money
    theta_a: Money

    def __init__(self, theta_v: MoneyLike, theta_a: MoneyLike) -> None:
        object.__setattr__(self, "theta_v", as_money(theta_v))
        object.__setattr__(self, "theta_a", as_money(theta_a))
        if self.theta_v < 0 or self.theta_a < 0:
            raise ValueError("reports must be >= 0")


@dataclass(frozen=True)
class MechanismOutcome:
    """Settlement: allocation flag, payment, free-release flag."""

    alpha: int
    r_f: Money
    sigma: int

    def __post_init__(self) -> None:
        if self.alpha != (1 if (self.r_f > 0 or self.sigma == 1) else 0):
            raise ValueError("alpha must be 1 exactly when r_f > 0 or sigma = 1")
        if self.sigma == 1 and self.r_f != 0:
            raise ValueError("a free release carries no payment")


def _settle(r_f, sigma: int) -> MechanismOutcome:
    # The allocation rule: the key changes hands iff money does or the
    # release flag fired.
    return MechanismOutcome(1 if (r_f > 0 or sigma == 1) else 0, r_f, sigma)


def _check_draw(name: str, u: Draw) -> None:
    if not 0 <= u < 1:
        raise ValueError(f"{name} must lie in [0, 1)")


def outcome_real(
    params: MechanismParams, rep: Report, u0: Draw, u1: Draw
) -> MechanismOutcome:
    """Evaluate the mechanism in exact arithmetic.

    u0 selects the victim's offer (below p_bar: screening offer
    q*theta_v, else the full report); u1 decides whether an acceptable
    counteroffer is paid (below q) or answered with a free release.
    """
    _check_draw("u0", u0)
    _check_draw("u1", u1)
    if params.q <= 0:
        raise ValueError("outcome requires q > 0")
    r2 = params.q * rep.theta_v if u0 < params.p_bar else rep.theta_v
    if rep.theta_a <= r2:
        return _settle(r2, 0)
    r3 = max(r2 / params.q, rep.theta_a)
    if r3 <= rep.theta_v:
        if u1 < params.q:
            return _settle(r3, 0)
        return _settle(Fraction(0), 1)
    return _settle(Fraction(0), 0)


def product_widths(params: MechanismParams, scaled: ScaledParams) -> tuple[int, int]:
    """Bit widths of the two intermediate products in fixed-point form."""
    first = params.k + params.k_theta
    second = params.k_theta + scaled.inv_q_scale.bit_length()
    return first, second


def outcome_fixed(
    params: MechanismParams,
    scaled: ScaledParams,
    rep: Report,
    s0: int,
    s1: int,
    max_width: int = DEFAULT_MAX_WIDTH,
) -> MechanismOutcome:
    """Evaluate the mechanism on integers only; normative for the circuit.

    Same branch structure as ``outcome_real`` with q*theta_v replaced by
    (q_scale*theta_v) >> k, r2/q by (r2*inv_q_scale) >> k, and the draws
    by k-bit words compared against the scaled constants.
    """
    if max(product_widths(params, scaled)) > max_width:
        raise OverflowError(
            f"intermediate products exceed the declared width {max_width}"
        )
    theta_v, theta_a = _fixed_report(params, rep)
    if not 0 <= s0 < (1 << params.k) or not 0 <= s1 < (1 << params.k):
        raise ValueError("random words must be k-bit")

    r2 = (scaled.q_scale * theta_v) >> params.k if s0 < scaled.p_scale else theta_v
    if theta_a <= r2:
        return _settle(r2, 0)
    r3 = max((r2 * scaled.inv_q_scale) >> params.k, theta_a)
    if r3 <= theta_v:
        if s1 < scaled.q_scale:
            return _settle(r3, 0)
        return _settle(0, 1)
    return _settle(0, 0)


def _fixed_report(params: MechanismParams, rep: Report) -> tuple[int, int]:
    values = []
    for name, value in (("theta_v", rep.theta_v), ("theta_a", rep.theta_a)):
        if value.denominator != 1:
            raise ValueError(f"{name} must be an integer in fixed-point semantics")
        if value >= (1 << params.k_theta):
            raise ValueError(f"{name} does not fit in {params.k_theta} bits")
        values.append(int(value))
    return values[0], values[1]


def expected_attacker_utility(
    params: MechanismParams,
    theta_a_true: MoneyLike,
    report_a: MoneyLike,
    theta_v_report: MoneyLike,
) -> Money:
    """Attacker's expected utility, exact over both random draws.

    Piecewise in the attacker's report: reports within the screening
    offer are always accepted; reports within the victim's report reach
    the counteroffer stage, where the free-release branch bites; higher
    reports end with no deal and zero utility.
    """
    if params.q <= 0:
        raise ValueError("expected utility requires q > 0")
    theta_a = as_money(theta_a_true)
    report = as_money(report_a)
    theta_v = as_money(theta_v_report)
    q, p_bar = params.q, params.p_bar
    if report <= q * theta_v:
        return p_bar * (q * theta_v - theta_a) + (1 - p_bar) * (theta_v - theta_a)
    if report <= theta_v:
        return (
            (1 - p_bar) * (theta_v - theta_a)
            + p_bar * q * (theta_v - theta_a)
            + p_bar * (1 - q) * (-theta_a)
        )
    return Fraction(0)


def _uniform_cdf(x: Money, lo: Money, hi: Money) -> Fraction:
    if x <= lo:
        return Fraction(0)
    if x >= hi:
        return Fraction(1)
    return (x - lo) / (hi - lo)


def expected_victim_utility(
    params: MechanismParams,
    theta_v_true: MoneyLike,
    report_v: MoneyLike,
    prior: tuple[MoneyLike, MoneyLike] = (0, 1),
) -> Money:
    """Victim's interim expected utility against a uniform attacker prior.

    The attacker reports truthfully (it is dominant), so the victim
    averages the outcome over attacker types: below the screening offer
    both offers are accepted as they stand; between the offers the
    counteroffer stage pays the victim's report or releases for free;
    above the victim's report there is no deal.
    """
    theta = as_money(theta_v_true)
    report = as_money(report_v)
    lo, hi = as_money(prior[0]), as_money(prior[1])
    if not lo < hi:
        raise ValueError("prior range must be non-degenerate")
    q, p_bar = params.q, params.p_bar
    f_low = _uniform_cdf(q * report, lo, hi)
    f_mid = _uniform_cdf(report, lo, hi) - f_low
    accept_both = p_bar * (theta - q * report) + (1 - p_bar) * (theta - report)
    counter_stage = (1 - p_bar + p_bar * q) * (theta - report) + p_bar * (1 - q) * theta
    return f_low * accept_both + f_mid * counter_stage


def expected_payment(params: MechanismParams, theta_v: MoneyLike) -> Money:
    """Expected ransom of a truthful victim whose report covers the attacker's.

    Both branches of the victim's draw pay the same in expectation, and
    the parameter constraint pins the total at half the report.
    """
    return (1 - params.p_bar + params.p_bar * params.q) * as_money(theta_v)


def attacker_truthfulness_margin(
    params: MechanismParams, theta_v_report: MoneyLike, grid: int = 64
) -> Money:
    """Smallest utility loss from deviating, over a report/type grid.

    For every attacker type on the grid, compares the truthful report
    against every alternative grid report; returns min(truthful - best
    alternative).  Non-negative means truth-telling dominates on the
    grid.
    """
    theta_v = as_money(theta_v_report)
    points = [Fraction(i, grid - 1) for i in range(grid)]
    margin = None
    for theta_a in points:
        truthful = expected_attacker_utility(params, theta_a, theta_a, theta_v)
        best_other = max(
            expected_attacker_utility(params, theta_a, alt, theta_v)
            for alt in points
            if alt != theta_a
        )
        gap = truthful - best_other
        margin = gap if margin is None else min(margin, gap)
    return margin


def victim_best_report(
    params: MechanismParams,
    theta_v_true: MoneyLike,
    step: MoneyLike = Fraction(1, 1024),
    prior: tuple[MoneyLike, MoneyLike] = (0, 1),
) -> Money:
    """Report maximizing the victim's interim utility on a step grid."""
    theta = as_money(theta_v_true)
    step = as_money(step)
    lo, hi = as_money(prior[0]), as_money(prior[1])
    best_report, best_value = lo, None
    report = lo
    while report <= hi:
        value = expected_victim_utility(params, theta, report, (lo, hi))
        if best_value is None or value > best_value:
            best_report, best_value = report, value
        report += step
    return best_report
