"""Command-line front end.

Subcommands mirror the library layers: ``offers``, ``horizon``, and
``rubinstein`` solve the bargaining game; ``stage-game`` solves the
final-round game; ``mechanism eval`` and ``mechanism verify-bic`` run
the sealed-report mechanism; ``victim``/``attacker`` run the garbled
settlement protocol over TCP; ``bench`` times it on loopback.

All money is printed as exact rationals ("3", "3/2"), never floats.
Exit codes: 0 success, 1 domain or configuration error, 2 protocol
abort on a failed check, 3 transport failure.
"""

from __future__ import annotations

import argparse
import csv
import sys
from fractions import Fraction

from . import bench as bench_mod
from .bargaining import (
    BargainingInstance,
    HorizonError,
    NoDeal,
    backward_induction_offers,
    determine_horizon,
    rubinstein_split,
)
from .config import ConfigError, SessionConfig, load_config
from .losses import LossProfile, VictimParams, as_money, residual_value, total_value
from .mechanism import (
    MechanismParams,
    Report,
    ScaledParams,
    attacker_truthfulness_margin,
    expected_victim_utility,
    outcome_fixed,
)
from .protocol import (
    NegotiationAbort,
    NegotiationConfig,
    TransportFailure,
    persist_transcript,
    run_attacker,
    run_victim,
)
from .stage_game import ReputationParams, regime, spne

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_ABORT = 2
EXIT_TRANSPORT = 3


def _money_str(value: Fraction) -> str:
    return str(value)


def _parse_address(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not host:
        raise ConfigError(f"address must be host:port, got {text!r}")
    try:
        return host, int(port)
    except ValueError as exc:
        raise ConfigError(f"bad port in {text!r}") from exc


def _loss_inputs(args) -> tuple[LossProfile, Fraction, Fraction]:
    """Loss profile, r_min, r_max from a config file and/or flags."""
    config = load_config(args.config) if args.config else None
    profile = config.profile if config else None
    r_min = config.r_min if config else None
    r_max = config.r_max if config else None
    if args.blocks is not None:
        profile = LossProfile(
            l0=as_money(args.l0) if args.l0 is not None else 0,
            blocks=[as_money(b.strip()) for b in args.blocks.split(",")],
            tail=as_money(args.tail) if args.tail is not None else 0,
            round_length=(
                as_money(args.round_length) if args.round_length is not None else 1
            ),
        )
    if args.r_min is not None:
        r_min = as_money(args.r_min)
    if args.r_max is not None:
        r_max = as_money(args.r_max)
    if profile is None:
        raise ConfigError("no loss profile: give --blocks or a config file")
    if r_min is None:
        raise ConfigError("no attacker reservation: give --r-min or a config file")
    if r_max is None:
        r_max = total_value(profile)  # non-binding cap
    return profile, r_min, r_max


def _add_loss_flags(parser) -> None:
    parser.add_argument("--config", help="key-value config file")
    parser.add_argument("--blocks", help="comma-separated per-round losses")
    parser.add_argument("--l0", help="immediate fixed loss")
    parser.add_argument("--tail", help="loss mass beyond the profiled rounds")
    parser.add_argument("--round-length", help="duration of one round")
    parser.add_argument("--r-min", help="attacker reservation ransom")
    parser.add_argument("--r-max", help="largest affordable ransom")


def _cmd_offers(args) -> int:
    profile, r_min, r_max = _loss_inputs(args)
    inst = BargainingInstance(VictimParams(r_max, profile), r_min)
    horizon = args.horizon if args.horizon is not None else determine_horizon(inst)
    schedule = backward_induction_offers(inst, horizon)
    rows = [
        (n, schedule.offer(n), residual_value(profile, n))
        for n in range(1, horizon + 1)
    ]
    print(f"N = {horizon}")
    print("round  offer  remaining_value")
    for n, offer, remaining in rows:
        print(f"{n:<6d} {_money_str(offer):<6s} {_money_str(remaining)}")
    print("offers: [" + ", ".join(_money_str(o) for o in schedule.offers) + "]")
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["round", "offer", "remaining_value"])
            for n, offer, remaining in rows:
                writer.writerow([n, _money_str(offer), _money_str(remaining)])
        print(f"schedule written to {args.csv}")
    return EXIT_OK


def _cmd_horizon(args) -> int:
    profile, r_min, r_max = _loss_inputs(args)
    inst = BargainingInstance(VictimParams(r_max, profile), r_min)
    horizon = determine_horizon(inst)
    print(f"N = {horizon}")
    return EXIT_OK


def _cmd_rubinstein(args) -> int:
    split = rubinstein_split(args.v, args.r_max, args.r_min)
    print(_money_str(split))
    return EXIT_OK


def _cmd_stage_game(args) -> int:
    rep = ReputationParams(
        tau_g=args.tau_g,
        tau_l=args.tau_l,
        kappa_g=args.kappa_g,
        kappa_l=args.kappa_l,
        c_r=args.c_r,
        c_d=args.c_d,
    )
    outcome = spne(rep, args.r_f, args.v, args.r_max)
    print(f"regime: {regime(rep) or 'unclassified'}")
    print(
        f"victim: {outcome.victim_action.name} ({outcome.victim_action.value})"
    )
    print(
        f"attacker: {outcome.attacker_action.name} "
        f"({outcome.attacker_action.value})"
    )
    print(
        f"payoffs: victim={_money_str(outcome.victim_payoff)} "
        f"attacker={_money_str(outcome.attacker_payoff)}"
    )
    return EXIT_OK


def _cmd_mechanism_eval(args) -> int:
    params = MechanismParams(args.q, args.p_bar, args.k_theta, args.k)
    scaled = ScaledParams.from_params(params)
    for name, value in (("theta_v", args.theta_v), ("theta_a", args.theta_a)):
        if not 0 <= value < (1 << params.k_theta):
            raise ConfigError(f"{name} does not fit in k_theta bits")
    for name, value in (("s0", args.s0), ("s1", args.s1)):
        if not 0 <= value < (1 << params.k):
            raise ConfigError(f"{name} does not fit in k bits")
    outcome = outcome_fixed(
        params, scaled, Report(args.theta_v, args.theta_a), args.s0, args.s1
    )
    print(f"alpha = {outcome.alpha}")
    print(f"r_f = {_money_str(outcome.r_f)}")
    print(f"sigma = {outcome.sigma}")
    return EXIT_OK


def _cmd_mechanism_verify_bic(args) -> int:
    params = MechanismParams.from_q(as_money(args.q), args.k_theta, args.k)
    ok = True

    worst = min(
        attacker_truthfulness_margin(params, endpoint, grid=args.attacker_grid)
        for endpoint in (0, 1)
    )
    passed = worst >= 0
    ok &= passed
    print(
        f"attacker dominance at support endpoints "
        f"({args.attacker_grid}x{args.attacker_grid} grid): "
        f"{'PASS' if passed else 'FAIL'} (worst margin {_money_str(worst)})"
    )

    step = Fraction(1, 1 << args.victim_step_bits)
    reports = [i * step for i in range((1 << args.victim_step_bits) + 1)]
    worst_shortfall = Fraction(0)
    for theta in reports:
        truthful = expected_victim_utility(params, theta, theta)
        best = max(expected_victim_utility(params, theta, r) for r in reports)
        worst_shortfall = max(worst_shortfall, best - truthful)
    passed = worst_shortfall <= step
    ok &= passed
    print(
        f"victim optimality (grid step 2^-{args.victim_step_bits}): "
        f"{'PASS' if passed else 'FAIL'} "
        f"(worst shortfall {_money_str(worst_shortfall)}, step {_money_str(step)})"
    )
    return EXIT_OK if ok else EXIT_ERROR


def _cmd_bench(args) -> int:
    cells = bench_mod.run_benchmark(reps=args.reps, warmup=args.warmup)
    print(bench_mod.format_table(cells))
    monotone = bench_mod.monotone_over_grid(cells)
    print(f"monotone over grid: {'yes' if monotone else 'no'}")
    return EXIT_OK


def _session_pieces(args, role: str):
    config = load_config(args.config)
    pi = config.pi()
    report = config.resolve_report(role)
    seed = bytes.fromhex(args.seed) if args.seed else None
    return config, pi, report, seed


def _print_outcome(result) -> None:
    outcome = result.outcome
    print(
        f"settled: alpha={outcome.alpha} r_f={_money_str(outcome.r_f)} "
        f"sigma={outcome.sigma}"
    )


def _cmd_victim(args) -> int:
    _, pi, report, seed = _session_pieces(args, "victim")
    address = _parse_address(args.listen)
    cfg = NegotiationConfig("victim", pi, report, address, args.timeout)
    try:
        result = run_victim(cfg, seed)
    except (NegotiationAbort, TransportFailure) as exc:
        if args.transcript and exc.transcript is not None:
            persist_transcript(exc.transcript, args.transcript)
        raise
    _print_outcome(result)
    if args.transcript:
        persist_transcript(result.transcript, args.transcript)
        print(f"transcript written to {args.transcript}")
    return EXIT_OK


def _cmd_attacker(args) -> int:
    _, pi, report, seed = _session_pieces(args, "attacker")
    address = _parse_address(args.connect)
    cfg = NegotiationConfig("attacker", pi, report, address, args.timeout)
    result = run_attacker(cfg, seed)
    _print_outcome(result)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blindbargain",
        description="Ransom bargaining solvers and the garbled settlement protocol.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("offers", help="equilibrium offer schedule")
    _add_loss_flags(p)
    p.add_argument("--horizon", type=int, help="override the computed horizon")
    p.add_argument("--csv", help="also write the schedule to this CSV file")
    p.set_defaults(func=_cmd_offers)

    p = sub.add_parser("horizon", help="number of rounds the attacker tolerates")
    _add_loss_flags(p)
    p.set_defaults(func=_cmd_horizon)

    p = sub.add_parser("rubinstein", help="no-deadline split")
    p.add_argument("v", help="data value")
    p.add_argument("r_max", help="largest affordable ransom")
    p.add_argument("r_min", help="attacker reservation ransom")
    p.set_defaults(func=_cmd_rubinstein)

    p = sub.add_parser("stage-game", help="final-round equilibrium")
    p.add_argument("--r-f", required=True, help="ransom on the table")
    p.add_argument("--v", required=True, help="data value")
    p.add_argument("--r-max", required=True, help="largest affordable ransom")
    p.add_argument("--c-r", default="1", help="cost of releasing the key")
    p.add_argument("--c-d", default="0", help="cost of destroying the key")
    p.add_argument("--tau-g", default="0", help="reputation gain for honoring payment")
    p.add_argument("--tau-l", default="0", help="reputation loss for burning a payer")
    p.add_argument("--kappa-g", default="0", help="reputation gain for punishing refusal")
    p.add_argument("--kappa-l", default="0", help="reputation loss for unpaid release")
    p.set_defaults(func=_cmd_stage_game)

    p = sub.add_parser("mechanism", help="sealed-report mechanism")
    mech = p.add_subparsers(dest="mechanism_command", required=True)

    q = mech.add_parser("eval", help="evaluate one outcome in fixed point")
    q.add_argument("theta_v", type=int, help="victim report")
    q.add_argument("theta_a", type=int, help="attacker report")
    q.add_argument("q", type=as_money, help="counteroffer acceptance odds")
    q.add_argument("p_bar", type=as_money, help="low-offer odds")
    q.add_argument("k", type=int, help="randomness word width")
    q.add_argument("k_theta", type=int, help="report width")
    q.add_argument("s0", type=int, help="first combined random word")
    q.add_argument("s1", type=int, help="second combined random word")
    q.set_defaults(func=_cmd_mechanism_eval)

    q = mech.add_parser("verify-bic", help="grid truthfulness suites")
    q.add_argument("--q", default="1/4", help="counteroffer acceptance odds")
    q.add_argument("--k", type=int, default=8)
    q.add_argument("--k-theta", type=int, default=8)
    q.add_argument("--attacker-grid", type=int, default=64)
    q.add_argument("--victim-step-bits", type=int, default=6)
    q.set_defaults(func=_cmd_mechanism_verify_bic)

    p = sub.add_parser("bench", help="loopback protocol timing over the width grid")
    p.add_argument("--reps", type=int, default=7)
    p.add_argument("--warmup", type=int, default=1)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("victim", help="run the garbler side of a settlement")
    p.add_argument("--config", required=True)
    p.add_argument("--listen", required=True, metavar="ADDR:PORT")
    p.add_argument("--seed", help="hex test seed; omit for system entropy")
    p.add_argument("--transcript", help="write the session transcript here")
    p.add_argument("--timeout", type=float, default=10.0)
    p.set_defaults(func=_cmd_victim)

    p = sub.add_parser("attacker", help="run the evaluator side of a settlement")
    p.add_argument("--config", required=True)
    p.add_argument("--connect", required=True, metavar="ADDR:PORT")
    p.add_argument("--seed", help="hex test seed; omit for system entropy")
    p.add_argument("--timeout", type=float, default=10.0)
    p.set_defaults(func=_cmd_attacker)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, HorizonError, NoDeal, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except NegotiationAbort as exc:
        print(f"aborted at {exc.stage}" + (f": {exc.detail}" if exc.detail else ""), file=sys.stderr)
        return EXIT_ABORT
    except TransportFailure as exc:
        print(f"transport failure: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT


if __name__ == "__main__":
    sys.exit(main())
