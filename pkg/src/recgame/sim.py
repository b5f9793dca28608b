"""Monte Carlo play of stationary strategies and long-run guarantee checks.

Randomness discipline: replication ``rep`` of a run with seed ``s`` draws
from ``Philox(SeedSequence(entropy=(s, rep)))``, and every active stage
consumes exactly two uniforms (action cell first, then the successor state),
even when either draw is degenerate. Replications are therefore independent
of scheduling: the scalar reference sampler and the vectorized engine
produce identical trajectories, and re-running a report is byte-stable.

The guarantee check plays a candidate strategy against an adversary battery
(discounted best responses, pure stationary strategies, random mixtures) and
evaluates two clauses per adversary at the initial state's floor value f:

* clause A: from some checkpoint on, every checkpoint's mean n-stage average
  stays on the right side of f -/+ eps, with 95% CI slack;
* clause B: the mean average over the final stretch of the horizon (the
  tail window) stays on the right side of f -/+ eps, with CI slack.

A passing report is finite-sample evidence against the listed adversaries,
not a proof; the report says so in its caveat field.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch
from .model import GameSpec, StationaryStrategy, strategy_from_policy, make_strategy
from .respond import best_response_discounted, _check_strategy

DEFAULT_HORIZON = 10_000
DEFAULT_REPLICATIONS = 1_000
CI_FACTOR = 1.96

CAVEAT = ("Monte Carlo evidence only: finite horizon, finitely many "
          "replications, and only the adversaries listed; clause checks "
          "allow 95% CI slack and do not constitute a proof.")


def _rep_generator(seed: int, rep: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(
        np.random.SeedSequence(entropy=(int(seed), int(rep)))))


def default_checkpoints(horizon: int) -> np.ndarray:
    """1, 2, 5 times powers of ten up to the horizon, horizon included."""
    cps = {horizon}
    e = 1
    while e <= horizon:
        for m in (1, 2, 5):
            if m * e <= horizon:
                cps.add(m * e)
        e *= 10
    return np.array(sorted(cps), dtype=np.int64)


def _tables(game: GameSpec, sigma: StationaryStrategy, tau: StationaryStrategy):
    """Per-state sampling tables: cell CDF, cell payoff, per-cell target CDF."""
    cell_cdf = []
    cell_pay = []
    tgt_cdf = []
    for k in range(game.num_active):
        joint = np.outer(sigma.mixtures[k], tau.mixtures[k]).ravel()
        cdf = np.cumsum(joint)
        cdf[-1] = 1.0
        cell_cdf.append(cdf)
        cell_pay.append(game.payoffs[k].ravel().copy())
        m, n = game.action_counts(k)
        rows = np.cumsum(game.transitions[k].reshape(m * n, game.num_states), axis=1)
        rows[:, -1] = 1.0
        tgt_cdf.append(rows)
    return cell_cdf, cell_pay, tgt_cdf


@dataclass(frozen=True)
class Trajectory:
    """One sampled play.

    states holds the visited state indices starting at the initial state and
    ending at the first absorbing state entered (or after the last stage).
    actions holds the (row, column) action indices per active stage. payoffs
    has one entry per stage up to the horizon; stages after absorption carry
    the absorbing payoff. absorption_stage is the stage whose transition
    entered the absorbing state, 0 for an absorbing initial state, None if
    play never absorbed.
    """

    states: np.ndarray
    actions: np.ndarray
    payoffs: np.ndarray
    absorption_stage: int | None


def sample_trajectory(game: GameSpec, sigma: StationaryStrategy,
                      tau: StationaryStrategy, horizon: int,
                      seed: int = 0, rep: int = 0) -> Trajectory:
    """Scalar reference sampler; bit-identical to the vectorized engine."""
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon!r}")
    _check_strategy(game, sigma)
    _check_strategy(game, tau)
    if sigma.player != 1 or tau.player != 2:
        raise ValueError("pass player 1's strategy first and player 2's second")
    K = game.num_active
    payoffs = np.zeros(horizon)
    if game.initial >= K:
        r0 = float(game.absorbing_payoffs[game.initial - K])
        payoffs[:] = r0
        return Trajectory(states=np.array([game.initial]),
                          actions=np.empty((0, 2), dtype=np.int64),
                          payoffs=payoffs, absorption_stage=0)
    cell_cdf, cell_pay, tgt_cdf = _tables(game, sigma, tau)
    rng = _rep_generator(seed, rep)
    states = [game.initial]
    actions = []
    cur = game.initial
    absorbed_at: int | None = None
    for t in range(1, horizon + 1):
        u1 = rng.random()
        u2 = rng.random()
        cell = int(np.searchsorted(cell_cdf[cur], u1, side="right"))
        n = len(game.p2_actions[cur])
        actions.append(divmod(cell, n))
        payoffs[t - 1] = cell_pay[cur][cell]
        tgt = int(np.searchsorted(tgt_cdf[cur][cell], u2, side="right"))
        states.append(tgt)
        if tgt >= K:
            absorbed_at = t
            payoffs[t:] = game.absorbing_payoffs[tgt - K]
            break
        cur = tgt
    return Trajectory(states=np.array(states, dtype=np.int64),
                      actions=np.array(actions, dtype=np.int64).reshape(-1, 2),
                      payoffs=payoffs, absorption_stage=absorbed_at)


@dataclass(frozen=True)
class SimulationReport:
    """Aggregates of one strategy pair over all replications.

    means[i] is the mean over replications of the per-replication average
    payoff of the first checkpoints[i] stages; absorption_rates[i] the
    fraction of replications absorbed within those stages. The tail fields
    summarize per-replication averages over the final tail_window stages.
    """

    label: str
    horizon: int
    replications: int
    seed: int
    tail_window: int
    checkpoints: np.ndarray
    means: np.ndarray
    ci_halfwidths: np.ndarray
    absorption_rates: np.ndarray
    tail_mean: float
    tail_ci_halfwidth: float


def _ci(values: np.ndarray) -> float:
    n = values.shape[-1]
    if n < 2:
        return 0.0
    return float(CI_FACTOR * np.std(values, ddof=1) / math.sqrt(n))


_CHUNK = 256


def simulate(game: GameSpec, sigma: StationaryStrategy, tau: StationaryStrategy,
             horizon: int = DEFAULT_HORIZON,
             replications: int = DEFAULT_REPLICATIONS, seed: int = 0, *,
             checkpoints=None, tail_frac: float = 0.1,
             label: str = "pair") -> SimulationReport:
    """Play sigma against tau and aggregate stage-average statistics."""
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon!r}")
    if replications < 1:
        raise ValueError(f"replications must be >= 1, got {replications!r}")
    if not 0.0 < tail_frac <= 1.0:
        raise ValueError(f"tail_frac must be in (0, 1], got {tail_frac!r}")
    _check_strategy(game, sigma)
    _check_strategy(game, tau)
    if sigma.player != 1 or tau.player != 2:
        raise ValueError("pass player 1's strategy first and player 2's second")
    if checkpoints is None:
        cps = default_checkpoints(horizon)
    else:
        cps = np.unique(np.asarray(checkpoints, dtype=np.int64))
        if cps.size == 0 or cps[0] < 1 or cps[-1] > horizon:
            raise ValueError("checkpoints must lie in [1, horizon]")
        if cps[-1] != horizon:
            cps = np.append(cps, horizon)
    tail_len = max(1, int(round(horizon * tail_frac)))
    tail_start = horizon - tail_len
    K = game.num_active
    R = replications

    if game.initial >= K:
        r0 = float(game.absorbing_payoffs[game.initial - K])
        C = cps.size
        return SimulationReport(
            label=label, horizon=horizon, replications=R, seed=seed,
            tail_window=tail_len, checkpoints=cps, means=np.full(C, r0),
            ci_halfwidths=np.zeros(C), absorption_rates=np.ones(C),
            tail_mean=r0, tail_ci_halfwidth=0.0)

    cell_cdf, cell_pay, tgt_cdf = _tables(game, sigma, tau)
    abs_pay = game.absorbing_payoffs
    cur = np.full(R, game.initial, dtype=np.int64)
    S_run = np.zeros(R)
    tail_sum = np.zeros(R)
    A = np.zeros(R, dtype=np.int64)
    r_abs = np.zeros(R)
    gens = [_rep_generator(seed, rep) for rep in range(R)]
    UU = np.empty((R, _CHUNK, 2))
    per_cp = np.empty((cps.size, R))
    rates = np.empty(cps.size)
    cpi = 0
    for t in range(1, horizon + 1):
        alive = np.flatnonzero(cur >= 0)
        if alive.size == 0:
            break
        local = (t - 1) % _CHUNK
        if local == 0:
            for rep in alive:
                UU[rep] = gens[rep].random((_CHUNK, 2))
        st = cur[alive]
        for k in np.unique(st):
            sel = alive[st == k]
            cells = np.searchsorted(cell_cdf[k], UU[sel, local, 0], side="right")
            pay = cell_pay[k][cells]
            S_run[sel] += pay
            if t > tail_start:
                tail_sum[sel] += pay
            rows = tgt_cdf[k][cells]
            tgt = (rows <= UU[sel, local, 1][:, None]).sum(axis=1)
            hit = tgt >= K
            if np.any(hit):
                aidx = sel[hit]
                r_abs[aidx] = abs_pay[tgt[hit] - K]
                A[aidx] = t
                cur[aidx] = -1
            live = sel[~hit]
            cur[live] = tgt[~hit]
        while cpi < cps.size and cps[cpi] == t:
            n = cps[cpi]
            per_cp[cpi] = np.where(A > 0, S_run + r_abs * (n - A), S_run) / n
            rates[cpi] = np.count_nonzero(A > 0) / R
            cpi += 1
    while cpi < cps.size:
        # everyone absorbed; remaining checkpoints are deterministic
        n = cps[cpi]
        per_cp[cpi] = np.where(A > 0, S_run + r_abs * (n - A), S_run) / n
        rates[cpi] = np.count_nonzero(A > 0) / R
        cpi += 1

    tail_fill = np.where(A > 0, r_abs * (horizon - np.maximum(A, tail_start)), 0.0)
    tail_avg = (tail_sum + tail_fill) / tail_len
    hw = np.zeros(cps.size)
    if R >= 2:
        hw = CI_FACTOR * np.std(per_cp, axis=1, ddof=1) / math.sqrt(R)
    return SimulationReport(
        label=label, horizon=horizon, replications=R, seed=seed,
        tail_window=tail_len, checkpoints=cps,
        means=per_cp.mean(axis=1), ci_halfwidths=hw, absorption_rates=rates,
        tail_mean=float(tail_avg.mean()), tail_ci_halfwidth=_ci(tail_avg))


def floor_at_initial(game: GameSpec, floor) -> float:
    """Scalar floor at the initial state; vectors index active states."""
    arr = np.asarray(floor, dtype=float)
    if arr.ndim == 0:
        return float(arr)
    if arr.shape != (game.num_active,):
        raise DimensionMismatch(
            f"floor must be a scalar or shape ({game.num_active},), got {arr.shape}")
    if game.initial < game.num_active:
        return float(arr[game.initial])
    return float(game.absorbing_payoffs[game.initial - game.num_active])


def adversary_battery(game: GameSpec, candidate: StationaryStrategy, *,
                      lambda_grid=(1e-2, 1e-3, 1e-4), max_pure: int = 64,
                      n_random: int = 32, seed: int = 0,
                      tol: float = 1e-9) -> list[tuple[str, StationaryStrategy]]:
    """Deterministic opponent list: best responses, pure, random mixtures.

    Pure strategies enumerate lexicographically and are truncated at
    max_pure. Random mixtures draw uniformly from each state's simplex with
    a stream separate from the simulation replications.
    """
    opp = 3 - candidate.player
    counts = [len(a) for a in
              (game.p1_actions if opp == 1 else game.p2_actions)]
    out: list[tuple[str, StationaryStrategy]] = []
    for lam in lambda_grid:
        br = best_response_discounted(game, candidate, float(lam), tol)
        out.append((f"br@{float(lam):g}",
                    strategy_from_policy(game, opp, br.policy)))
    for i, combo in enumerate(np.ndindex(*counts)):
        if i >= max_pure:
            break
        out.append((f"pure[{','.join(str(a) for a in combo)}]",
                    strategy_from_policy(game, opp, combo)))
    rng = np.random.Generator(np.random.Philox(
        np.random.SeedSequence(entropy=(int(seed), 0x5EED))))
    for i in range(n_random):
        rows = [rng.dirichlet(np.ones(c)) for c in counts]
        out.append((f"rand{i}", make_strategy(game, opp, rows)))
    return out


@dataclass(frozen=True)
class AdversaryVerdict:
    """Clause outcomes for one adversary."""

    label: str
    clause_a_pass: bool
    clause_a_first_n: int | None
    clause_b_pass: bool
    report: SimulationReport


@dataclass(frozen=True)
class GuaranteeReport:
    """Battery-wide verdict for one candidate strategy and floor."""

    player: int
    floor_value: float
    epsilon: float
    horizon: int
    replications: int
    seed: int
    caveat: str
    verdicts: tuple[AdversaryVerdict, ...]
    all_pass: bool
    stopped_early: bool


def _judge(report: SimulationReport, f0: float, eps: float,
           from_below: bool) -> tuple[bool, int | None, bool]:
    if from_below:
        ok = report.means + report.ci_halfwidths >= f0 - eps
        b = report.tail_mean + report.tail_ci_halfwidth >= f0 - eps
    else:
        ok = report.means - report.ci_halfwidths <= f0 + eps
        b = report.tail_mean - report.tail_ci_halfwidth <= f0 + eps
    first_n: int | None = None
    for i in range(ok.size - 1, -1, -1):
        if not ok[i]:
            break
        first_n = int(report.checkpoints[i])
    return first_n is not None, first_n, bool(b)


def guarantee_report(game: GameSpec, candidate: StationaryStrategy, floor,
                     eps: float, *, adversaries=None,
                     horizon: int = DEFAULT_HORIZON,
                     replications: int = DEFAULT_REPLICATIONS, seed: int = 0,
                     tail_frac: float = 0.1,
                     lambda_grid=(1e-2, 1e-3, 1e-4), max_pure: int = 64,
                     n_random: int = 32, stop_on_fail: bool = False,
                     jobs: int = 1) -> GuaranteeReport:
    """Check both long-run clauses for a candidate against a battery.

    A player 1 candidate must keep checkpoint and tail averages above
    floor - eps (CI slack allowed) against every adversary; a player 2
    candidate mirrors this from above. stop_on_fail skips the rest of the
    battery after the first failing adversary (the verdict is already
    final); jobs > 1 simulates adversaries in worker threads.
    """
    if eps <= 0.0:
        raise ValueError(f"eps must be positive, got {eps!r}")
    if jobs < 1:
        raise ValueError(f"jobs must be >= 1, got {jobs!r}")
    f0 = floor_at_initial(game, floor)
    if adversaries is None:
        adversaries = adversary_battery(
            game, candidate, lambda_grid=lambda_grid, max_pure=max_pure,
            n_random=n_random, seed=seed)
    from_below = candidate.player == 1

    def _run(item: tuple[str, StationaryStrategy]) -> AdversaryVerdict:
        lab, adv = item
        if candidate.player == 1:
            rep = simulate(game, candidate, adv, horizon, replications, seed,
                           tail_frac=tail_frac, label=lab)
        else:
            rep = simulate(game, adv, candidate, horizon, replications, seed,
                           tail_frac=tail_frac, label=lab)
        a_pass, first_n, b_pass = _judge(rep, f0, eps, from_below)
        return AdversaryVerdict(label=lab, clause_a_pass=a_pass,
                                clause_a_first_n=first_n,
                                clause_b_pass=b_pass, report=rep)

    verdicts: list[AdversaryVerdict] = []
    stopped = False
    if stop_on_fail or jobs == 1:
        for item in adversaries:
            v = _run(item)
            verdicts.append(v)
            if stop_on_fail and not (v.clause_a_pass and v.clause_b_pass):
                stopped = len(verdicts) < len(adversaries)
                break
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            verdicts = list(pool.map(_run, adversaries))
    all_pass = all(v.clause_a_pass and v.clause_b_pass for v in verdicts)
    return GuaranteeReport(
        player=candidate.player, floor_value=f0, epsilon=float(eps),
        horizon=horizon, replications=replications, seed=seed, caveat=CAVEAT,
        verdicts=tuple(verdicts), all_pass=all_pass, stopped_early=stopped)


def write_sim_csv(report: SimulationReport, path: str | Path) -> None:
    """Checkpoint table of a single pair, same columns as the battery CSV."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["adversary", "checkpoint_n", "mean", "ci_halfwidth",
                    "absorption_rate", "tail_mean"])
        for i, n in enumerate(report.checkpoints):
            w.writerow([report.label, int(n), repr(float(report.means[i])),
                        repr(float(report.ci_halfwidths[i])),
                        repr(float(report.absorption_rates[i])),
                        repr(float(report.tail_mean))])


def write_guarantee_csv(report: GuaranteeReport, path: str | Path) -> None:
    """One row per adversary and checkpoint, full-precision floats."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["adversary", "checkpoint_n", "mean", "ci_halfwidth",
                    "absorption_rate", "tail_mean"])
        for v in report.verdicts:
            r = v.report
            for i, n in enumerate(r.checkpoints):
                w.writerow([v.label, int(n), repr(float(r.means[i])),
                            repr(float(r.ci_halfwidths[i])),
                            repr(float(r.absorption_rates[i])),
                            repr(float(r.tail_mean))])


def guarantee_to_dict(report: GuaranteeReport) -> dict:
    out = {
        "player": report.player,
        "floor": report.floor_value,
        "epsilon": report.epsilon,
        "horizon": report.horizon,
        "replications": report.replications,
        "seed": report.seed,
        "caveat": report.caveat,
        "all_pass": report.all_pass,
        "stopped_early": report.stopped_early,
        "adversaries": [],
    }
    for v in report.verdicts:
        r = v.report
        out["adversaries"].append({
            "label": v.label,
            "clause_a_pass": v.clause_a_pass,
            "clause_a_first_n": v.clause_a_first_n,
            "clause_b_pass": v.clause_b_pass,
            "tail_mean": float(r.tail_mean),
            "tail_ci_halfwidth": float(r.tail_ci_halfwidth),
            "tail_window": r.tail_window,
            "checkpoints": [int(n) for n in r.checkpoints],
            "means": [float(x) for x in r.means],
            "ci_halfwidths": [float(x) for x in r.ci_halfwidths],
            "absorption_rates": [float(x) for x in r.absorption_rates],
        })
    return out


def save_guarantee(report: GuaranteeReport, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(guarantee_to_dict(report), fh, indent=2)
        fh.write("\n")
