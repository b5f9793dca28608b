"""Command line interface.

Subcommands map one-to-one onto the library: validate, solve, nstage,
limit, certify, strategy, bestresponse, simulate, report, zoo. Exit codes:
0 on success, 1 when a requested verdict comes out failing (certificate
search misses, guarantee check fails), 2 on bad input of any kind.

Numbers print with 12 significant digits. RECGAME_JOBS sets the default
worker count for the report command; the --jobs flag overrides it.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__, everett, model, respond, shapley, sim, zoo
from .errors import RecgameError


def _fmt(x: float) -> str:
    return f"{float(x):.12g}"


def _parse_grid(text: str) -> np.ndarray:
    """Grid spec: 'geometric:HI..LO:NUM' or comma-separated values."""
    if text.startswith("geometric:"):
        body = text[len("geometric:"):]
        rng, sep, num = body.rpartition(":")
        hi, sep2, lo = rng.partition("..")
        if not sep or not sep2:
            raise ValueError(f"bad grid spec {text!r}; want geometric:HI..LO:NUM")
        return shapley.geometric_grid(float(hi), float(lo), int(num))
    vals = np.array([float(v) for v in text.split(",")], dtype=float)
    if vals.size == 0:
        raise ValueError("empty grid")
    return vals


def _jobs(args: argparse.Namespace) -> int:
    if args.jobs is not None:
        return int(args.jobs)
    env = os.environ.get("RECGAME_JOBS", "1")
    try:
        return max(1, int(env))
    except ValueError:
        raise ValueError(f"RECGAME_JOBS must be an integer, got {env!r}") from None


def _print_values(game: model.GameSpec, values: np.ndarray) -> None:
    for k in range(game.num_active):
        print(f"{game.state_names[k]} {_fmt(values[k])}")


def _cmd_validate(args) -> int:
    game = model.load_game(args.game, allow_trivial=args.allow_trivial)
    kind = "recursive" if game.is_recursive() else "general"
    print(f"ok: {game.num_active} active, {game.num_absorbing} absorbing,"
          f" {kind}, initial {game.initial_name},"
          f" payoff bound {_fmt(game.payoff_bound)}")
    return 0


def _cmd_solve(args) -> int:
    game = model.load_game(args.game)
    v = shapley.discounted_value(game, args.lam, args.tol)
    resid = float(np.max(np.abs(shapley.apply_operator(game, args.lam, v) - v))) \
        if game.num_active else 0.0
    _print_values(game, v)
    print(f"residual {_fmt(resid)}")
    return 0


def _cmd_nstage(args) -> int:
    game = model.load_game(args.game)
    vals = shapley.n_stage_values(game, args.n)
    if args.all:
        for m in range(1, args.n + 1):
            for k in range(game.num_active):
                print(f"{m} {game.state_names[k]} {_fmt(vals[m - 1, k])}")
    else:
        _print_values(game, vals[-1])
    return 0


def _cmd_limit(args) -> int:
    game = model.load_game(args.game)
    grid = _parse_grid(args.grid) if args.grid else shapley.DEFAULT_LIMIT_GRID
    lim = shapley.vanishing_discount_limit(game, grid, args.tol)
    _print_values(game, lim.estimate)
    print(f"converged {'true' if lim.converged else 'false'}")
    print(f"tail_spread {_fmt(lim.tail_spread)}")
    if args.curve:
        curve = shapley.discount_curve(game, grid, args.tol / 100.0)
        shapley.write_curve_csv(curve, args.curve)
    return 0


def _cmd_certify(args) -> int:
    game = model.load_game(args.game)
    target = None
    if args.target:
        target = np.array([float(v) for v in args.target.split(",")])
    grid = _parse_grid(args.grid) if args.grid else np.array([1e-1, 1e-2, 1e-3])
    result = everett.find_certificate(
        game, args.side, target, lambda_grid=grid,
        weak_tol=args.weak_tol, strict_tol=args.strict_tol, budget=args.budget)
    if args.out:
        everett.save_report(result, args.out)
    if isinstance(result, everett.CertificateReport):
        print(f"verdict pass ({result.side})")
        for k, name in enumerate(result.states):
            print(f"{name} {_fmt(result.u[k])} weak_margin"
                  f" {_fmt(result.weak_margins[k])}")
        return 0
    print(f"verdict fail ({result.side}):"
          f" {result.candidates_tried} candidates,"
          f" best distance {_fmt(result.distance)}")
    return 1


def _cmd_strategy(args) -> int:
    game = model.load_game(args.game)
    u, side = everett.load_certificate(game, args.cert)
    player = args.player if args.player else (1 if side == "plus" else 2)
    strat = everett.extract_stationary_strategy(game, u, player)
    names = game.p1_actions if player == 1 else game.p2_actions
    for k in range(game.num_active):
        parts = [f"{names[k][a]}={_fmt(p)}"
                 for a, p in enumerate(strat.mixtures[k]) if p != 0.0]
        print(f"{game.state_names[k]} {' '.join(parts)}")
    if args.out:
        model.save_strategy(game, strat, args.out)
    return 0


def _cmd_bestresponse(args) -> int:
    game = model.load_game(args.game)
    fixed = model.load_strategy(game, args.strategy)
    br = respond.best_response_discounted(game, fixed, args.lam, args.tol)
    names = game.p1_actions if br.responder == 1 else game.p2_actions
    for k in range(game.num_active):
        print(f"{game.state_names[k]} {_fmt(br.values[k])}"
              f" action {names[k][br.policy[k]]}")
    print(f"residual {_fmt(br.residual)}")
    if args.out:
        model.save_strategy(
            game, model.strategy_from_policy(game, br.responder, br.policy),
            args.out)
    return 0


def _cmd_simulate(args) -> int:
    game = model.load_game(args.game)
    sigma = model.load_strategy(game, args.sigma)
    tau = model.load_strategy(game, args.tau)
    if sigma.player != 1 or tau.player != 2:
        raise RecgameError("--sigma must be a player 1 strategy and --tau player 2")
    rep = sim.simulate(game, sigma, tau, args.horizon, args.reps, args.seed,
                       tail_frac=args.tail_frac)
    print("checkpoint mean ci_halfwidth absorption_rate")
    for i, n in enumerate(rep.checkpoints):
        print(f"{int(n)} {_fmt(rep.means[i])} {_fmt(rep.ci_halfwidths[i])}"
              f" {_fmt(rep.absorption_rates[i])}")
    print(f"tail_mean {_fmt(rep.tail_mean)} ci {_fmt(rep.tail_ci_halfwidth)}"
          f" window {rep.tail_window}")
    if args.out:
        sim.write_sim_csv(rep, args.out)
    return 0


def _cmd_report(args) -> int:
    game = model.load_game(args.game)
    u, side = everett.load_certificate(game, args.cert)
    player = 1 if side == "plus" else 2
    strat = everett.extract_stationary_strategy(game, u, player)
    rep = sim.guarantee_report(
        game, strat, u, args.eps, horizon=args.horizon,
        replications=args.reps, seed=args.seed, tail_frac=args.tail_frac,
        max_pure=args.max_pure, n_random=args.n_random,
        stop_on_fail=args.stop_on_fail, jobs=_jobs(args))
    for v in rep.verdicts:
        a = f"A:pass@n>={v.clause_a_first_n}" if v.clause_a_pass else "A:fail"
        b = "B:pass" if v.clause_b_pass else "B:fail"
        print(f"{v.label} {a} {b}")
    print(f"floor {_fmt(rep.floor_value)} eps {_fmt(rep.epsilon)}"
          f" adversaries {len(rep.verdicts)}")
    print(f"verdict {'pass' if rep.all_pass else 'fail'}")
    if args.out_csv:
        sim.write_guarantee_csv(rep, args.out_csv)
    if args.out_json:
        sim.save_guarantee(rep, args.out_json)
    return 0 if rep.all_pass else 1


def _cmd_zoo(args) -> int:
    if args.list:
        for name in zoo.names():
            print(name)
        return 0
    if not args.name:
        raise RecgameError("give a game name or --list")
    game = zoo.make(args.name)
    text = json.dumps(model.to_dict(game), indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="recgame",
        description="Solve and verify zero-sum recursive stochastic games.")
    p.add_argument("--version", action="version", version=f"recgame {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("validate", help="check a game file")
    sp.add_argument("game")
    sp.add_argument("--allow-trivial", action="store_true",
                    help="accept games without active states")
    sp.set_defaults(func=_cmd_validate)

    sp = sub.add_parser("solve", help="discounted value")
    sp.add_argument("game")
    sp.add_argument("--lam", type=float, required=True)
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.set_defaults(func=_cmd_solve)

    sp = sub.add_parser("nstage", help="n-stage values")
    sp.add_argument("game")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--all", action="store_true", help="print every stage")
    sp.set_defaults(func=_cmd_nstage)

    sp = sub.add_parser("limit", help="vanishing-discount limit")
    sp.add_argument("game")
    sp.add_argument("--grid", help="geometric:HI..LO:NUM or comma list")
    sp.add_argument("--tol", type=float, default=1e-3)
    sp.add_argument("--curve", help="write per-point CSV here")
    sp.set_defaults(func=_cmd_limit)

    sp = sub.add_parser("certify", help="search a one-sided certificate")
    sp.add_argument("game")
    sp.add_argument("--side", choices=("plus", "minus"), required=True)
    sp.add_argument("--target", help="comma list over active states")
    sp.add_argument("--grid", help="discount grid for the seed")
    sp.add_argument("--weak-tol", type=float, default=everett.WEAK_TOL)
    sp.add_argument("--strict-tol", type=float, default=everett.STRICT_TOL)
    sp.add_argument("--budget", type=int, default=64)
    sp.add_argument("--out", help="write the report JSON here")
    sp.set_defaults(func=_cmd_certify)

    sp = sub.add_parser("strategy", help="extract the strategy of a certificate")
    sp.add_argument("game")
    sp.add_argument("--cert", required=True)
    sp.add_argument("--player", type=int, choices=(1, 2))
    sp.add_argument("--out", help="write the strategy JSON here")
    sp.set_defaults(func=_cmd_strategy)

    sp = sub.add_parser("bestresponse", help="respond to a fixed strategy")
    sp.add_argument("game")
    sp.add_argument("--strategy", required=True)
    sp.add_argument("--lam", type=float, required=True)
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.add_argument("--out", help="write the responder strategy here")
    sp.set_defaults(func=_cmd_bestresponse)

    sp = sub.add_parser("simulate", help="play a strategy pair")
    sp.add_argument("game")
    sp.add_argument("--sigma", required=True, help="player 1 strategy JSON")
    sp.add_argument("--tau", required=True, help="player 2 strategy JSON")
    sp.add_argument("--horizon", type=int, default=sim.DEFAULT_HORIZON)
    sp.add_argument("--reps", type=int, default=sim.DEFAULT_REPLICATIONS)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--tail-frac", type=float, default=0.1)
    sp.add_argument("--out", help="write the checkpoint CSV here")
    sp.set_defaults(func=_cmd_simulate)

    sp = sub.add_parser("report", help="guarantee check for a certificate")
    sp.add_argument("game")
    sp.add_argument("--cert", required=True)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--horizon", type=int, default=sim.DEFAULT_HORIZON)
    sp.add_argument("--reps", type=int, default=sim.DEFAULT_REPLICATIONS)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--tail-frac", type=float, default=0.1)
    sp.add_argument("--max-pure", type=int, default=64)
    sp.add_argument("--n-random", type=int, default=32)
    sp.add_argument("--stop-on-fail", action="store_true")
    sp.add_argument("--jobs", type=int)
    sp.add_argument("--out-csv")
    sp.add_argument("--out-json")
    sp.set_defaults(func=_cmd_report)

    sp = sub.add_parser("zoo", help="emit a canonical game")
    sp.add_argument("name", nargs="?")
    sp.add_argument("--list", action="store_true")
    sp.add_argument("--out")
    sp.set_defaults(func=_cmd_zoo)

    return p


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


def main(argv=None) -> int:
    try:
        return run(argv)
    except (RecgameError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
