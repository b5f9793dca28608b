from __future__ import annotations

import csv
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from recgame import sim, zoo
from recgame.errors import DimensionMismatch
from recgame.model import make_strategy, uniform_strategy, validate

from oracles import expected_average_oracle, pair_expectations


@pytest.fixture(scope="module")
def quit_game():
    return zoo.make("quit")


@pytest.fixture(scope="module")
def bigmatch():
    return zoo.make("bigmatch")


def _replay_report(game, sigma, tau, horizon, reps, seed, cps, tail_frac):
    """Rebuild the engine aggregates from scalar trajectories, same ops."""
    tail_len = max(1, int(round(horizon * tail_frac)))
    tail_start = horizon - tail_len
    per_cp = np.empty((len(cps), reps))
    absorbed = np.zeros(reps, dtype=np.int64)
    tail = np.empty(reps)
    for rep in range(reps):
        tr = sim.sample_trajectory(game, sigma, tau, horizon, seed, rep)
        A = tr.absorption_stage or 0
        r = 0.0
        if tr.absorption_stage is not None:
            r = float(game.absorbing_payoffs[tr.states[-1] - game.num_active])
        absorbed[rep] = A
        last = A if A > 0 else horizon
        run = np.empty(last + 1)
        run[0] = 0.0
        s = 0.0
        for t in range(1, last + 1):
            s += tr.payoffs[t - 1]
            run[t] = s
        ts = 0.0
        for t in range(tail_start + 1, last + 1):
            ts += tr.payoffs[t - 1]
        fill = r * (horizon - max(A, tail_start)) if A > 0 else 0.0
        tail[rep] = (ts + fill) / tail_len
        for i, n in enumerate(cps):
            if 0 < A <= n:
                per_cp[i, rep] = (run[A] + r * (n - A)) / n
            else:
                per_cp[i, rep] = run[n] / n
    rates = np.array([np.count_nonzero((absorbed > 0) & (absorbed <= n)) / reps
                      for n in cps])
    hw = sim.CI_FACTOR * np.std(per_cp, axis=1, ddof=1) / math.sqrt(reps)
    thw = sim.CI_FACTOR * np.std(tail, ddof=1) / math.sqrt(reps)
    return (per_cp.mean(axis=1), hw, rates,
            float(tail.mean()), float(thw))


def test_engine_matches_scalar_sampler_exactly(quit_game, bigmatch):
    rnd = zoo.random_recursive(3, 2, 3, 0.01, seed=17)
    cases = [
        (quit_game, make_strategy(quit_game, 1, [[0.7, 0.3]]),
         uniform_strategy(quit_game, 2), 10_000, 30, 0.1, None),
        (bigmatch, make_strategy(bigmatch, 1, [[0.0, 1.0]]),
         make_strategy(bigmatch, 2, [[0.3, 0.7]]), 600, 8, 0.2,
         [1, 5, 250, 600]),
        (rnd, uniform_strategy(rnd, 1), uniform_strategy(rnd, 2),
         700, 12, 0.1, [10, 100, 700]),
    ]
    for game, sigma, tau, horizon, reps, tail_frac, cps in cases:
        rep = sim.simulate(game, sigma, tau, horizon, reps, seed=42,
                           checkpoints=cps, tail_frac=tail_frac)
        means, hw, rates, tmean, thw = _replay_report(
            game, sigma, tau, horizon, reps, 42, rep.checkpoints, tail_frac)
        # bitwise equality, not approximate: both sides do the same arithmetic
        assert np.array_equal(rep.means, means)
        assert np.array_equal(rep.ci_halfwidths, hw)
        assert np.array_equal(rep.absorption_rates, rates)
        assert rep.tail_mean == tmean
        assert rep.tail_ci_halfwidth == thw


def test_simulate_is_deterministic(quit_game):
    sigma = make_strategy(quit_game, 1, [[0.6, 0.4]])
    tau = uniform_strategy(quit_game, 2)
    a = sim.simulate(quit_game, sigma, tau, 200, 50, seed=7)
    b = sim.simulate(quit_game, sigma, tau, 200, 50, seed=7)
    assert np.array_equal(a.means, b.means)
    assert np.array_equal(a.ci_halfwidths, b.ci_halfwidths)
    assert np.array_equal(a.absorption_rates, b.absorption_rates)
    assert a.tail_mean == b.tail_mean
    c = sim.simulate(quit_game, sigma, tau, 200, 50, seed=8)
    assert not np.array_equal(a.means, c.means)


def test_quit_pure_quit_is_exact(quit_game):
    sigma = make_strategy(quit_game, 1, [[0.0, 1.0]])
    tau = uniform_strategy(quit_game, 2)
    rep = sim.simulate(quit_game, sigma, tau, 10_000, 10, seed=0)
    want = (rep.checkpoints - 1.0) / rep.checkpoints
    # replications are identical plays; only mean-of-10 rounding remains
    assert np.max(np.abs(rep.means - want)) <= 1e-15
    assert np.all(rep.ci_halfwidths <= 1e-15)
    assert np.all(rep.absorption_rates == 1.0)
    assert rep.tail_mean == 1.0
    assert rep.tail_ci_halfwidth == 0.0


def test_trajectory_fields_quit(quit_game):
    sigma = make_strategy(quit_game, 1, [[0.0, 1.0]])
    tau = uniform_strategy(quit_game, 2)
    tr = sim.sample_trajectory(quit_game, sigma, tau, 5, seed=1, rep=2)
    assert tr.absorption_stage == 1
    assert list(tr.states) == [0, 1]
    assert tr.actions.shape == (1, 2)
    assert tuple(tr.actions[0]) == (1, 0)
    assert list(tr.payoffs) == [0.0, 1.0, 1.0, 1.0, 1.0]


def test_trajectory_never_absorbing(bigmatch):
    sigma = make_strategy(bigmatch, 1, [[0.0, 1.0]])
    tau = make_strategy(bigmatch, 2, [[1.0, 0.0]])
    tr = sim.sample_trajectory(bigmatch, sigma, tau, 50, seed=3)
    assert tr.absorption_stage is None
    assert list(tr.states) == [0] * 51
    assert np.all(tr.payoffs == 0.0)
    rep = sim.simulate(bigmatch, sigma, tau, 50, 5, seed=3)
    assert np.all(rep.means == 0.0)
    assert np.all(rep.absorption_rates == 0.0)
    assert rep.tail_mean == 0.0


def test_degenerate_stages_still_use_two_uniforms():
    raw = {
        "states": [
            {"name": "s0", "absorbing": False},
            {"name": "s1", "absorbing": False},
            {"name": "win", "absorbing": True, "payoff": 1.0},
        ],
        "actions": {
            "s0": {"p1": ["a"], "p2": ["b"]},
            "s1": {"p1": ["keep", "quit"], "p2": ["b"]},
        },
        "payoffs": {"s0": [[0.0]], "s1": [[0.0], [0.0]]},
        "transitions": {
            "s0": [[{"s1": 1.0}]],
            "s1": [[{"s1": 1.0}], [{"win": 1.0}]],
        },
        "initial": "s0",
    }
    game = validate(raw)
    sigma = make_strategy(game, 1, [[1.0], [0.5, 0.5]])
    tau = uniform_strategy(game, 2)
    for rep_id in range(8):
        tr = sim.sample_trajectory(game, sigma, tau, 2, seed=9, rep=rep_id)
        u = sim._rep_generator(9, rep_id).random(4)
        # stage 1 is fully degenerate yet must consume u[0] and u[1],
        # so the stage 2 action is decided by u[2]
        assert tr.states[1] == 1
        want_row = 0 if u[2] < 0.5 else 1
        assert tr.actions[1, 0] == want_row
        assert tr.states[2] == (1 if want_row == 0 else 2)


def test_absorbing_initial_state():
    raw = zoo._quit()
    raw["initial"] = "win"
    game = validate(raw)
    sigma = uniform_strategy(game, 1)
    tau = uniform_strategy(game, 2)
    tr = sim.sample_trajectory(game, sigma, tau, 10, seed=0)
    assert tr.absorption_stage == 0
    assert list(tr.states) == [game.initial]
    assert tr.actions.shape == (0, 2)
    assert np.all(tr.payoffs == 1.0)
    rep = sim.simulate(game, sigma, tau, 10, 4, seed=0)
    assert np.all(rep.means == 1.0)
    assert np.all(rep.absorption_rates == 1.0)
    assert rep.tail_mean == 1.0
    assert sim.floor_at_initial(game, [0.25]) == 1.0


def test_default_checkpoints_examples():
    assert list(sim.default_checkpoints(1)) == [1]
    assert list(sim.default_checkpoints(7)) == [1, 2, 5, 7]
    assert list(sim.default_checkpoints(100)) == [1, 2, 5, 10, 20, 50, 100]


@given(st.integers(min_value=1, max_value=10**6))
def test_default_checkpoints_shape(horizon):
    cps = sim.default_checkpoints(horizon)
    want = {horizon}
    e = 1
    while e <= horizon:
        want.update(m * e for m in (1, 2, 5) if m * e <= horizon)
        e *= 10
    assert list(cps) == sorted(want)


def test_custom_checkpoints(quit_game):
    sigma = uniform_strategy(quit_game, 1)
    tau = uniform_strategy(quit_game, 2)
    rep = sim.simulate(quit_game, sigma, tau, 10, 3, seed=0,
                       checkpoints=[7, 3, 3])
    assert list(rep.checkpoints) == [3, 7, 10]
    rep = sim.simulate(quit_game, sigma, tau, 10, 3, seed=0,
                       checkpoints=[10])
    assert list(rep.checkpoints) == [10]


def test_simulate_statistics_match_propagation_oracle(quit_game):
    sigma = make_strategy(quit_game, 1, [[0.7, 0.3]])
    tau = uniform_strategy(quit_game, 2)
    rnd = zoo.random_recursive(2, 2, 2, 0.2, seed=23)
    cases = [
        (quit_game, sigma, tau, [8, 32, 64]),
        (rnd, uniform_strategy(rnd, 1), uniform_strategy(rnd, 2), [8, 64]),
    ]
    for game, sg, tu, cps in cases:
        rep = sim.simulate(game, sg, tu, 64, 500, seed=5,
                           checkpoints=cps, tail_frac=0.25)
        stage, absorbed = pair_expectations(game, sg, tu, 64)
        for i, n in enumerate(rep.checkpoints):
            want = expected_average_oracle(game, sg, tu, int(n))
            assert abs(rep.means[i] - want) <= 5 * rep.ci_halfwidths[i] + 1e-9
            rate_sd = math.sqrt(max(absorbed[n - 1] * (1 - absorbed[n - 1]),
                                    1e-4) / 500)
            assert abs(rep.absorption_rates[i] - absorbed[n - 1]) <= 5 * rate_sd
        want_tail = float(stage[48:].mean())
        assert abs(rep.tail_mean - want_tail) <= 5 * rep.tail_ci_halfwidth + 1e-7


def test_simulate_validates_inputs(quit_game):
    sigma = uniform_strategy(quit_game, 1)
    tau = uniform_strategy(quit_game, 2)
    with pytest.raises(ValueError):
        sim.simulate(quit_game, sigma, tau, 0, 10)
    with pytest.raises(ValueError):
        sim.simulate(quit_game, sigma, tau, 10, 0)
    with pytest.raises(ValueError):
        sim.simulate(quit_game, sigma, tau, 10, 5, tail_frac=0.0)
    with pytest.raises(ValueError):
        sim.simulate(quit_game, sigma, tau, 10, 5, checkpoints=[0, 5])
    with pytest.raises(ValueError):
        sim.simulate(quit_game, sigma, tau, 10, 5, checkpoints=[20])
    with pytest.raises(ValueError):
        sim.simulate(quit_game, sigma, tau, 10, 5, checkpoints=[])
    with pytest.raises(ValueError):
        sim.simulate(quit_game, tau, sigma, 10, 5)
    with pytest.raises(ValueError):
        sim.sample_trajectory(quit_game, sigma, tau, 0)


def test_floor_at_initial(quit_game):
    assert sim.floor_at_initial(quit_game, 0.25) == 0.25
    assert sim.floor_at_initial(quit_game, [0.75]) == 0.75
    with pytest.raises(DimensionMismatch):
        sim.floor_at_initial(quit_game, [0.1, 0.2])


def test_adversary_battery_layout(bigmatch):
    sigma = make_strategy(bigmatch, 1, [[0.5, 0.5]])
    batt = sim.adversary_battery(bigmatch, sigma, n_random=3, seed=11)
    labels = [lab for lab, _ in batt]
    assert labels == ["br@0.01", "br@0.001", "br@0.0001",
                      "pure[0]", "pure[1]", "rand0", "rand1", "rand2"]
    for _, adv in batt:
        assert adv.player == 2
        assert adv.mixtures[0].shape == (2,)
    again = sim.adversary_battery(bigmatch, sigma, n_random=3, seed=11)
    for (_, a), (_, b) in zip(batt, again):
        assert np.array_equal(a.mixtures[0], b.mixtures[0])
    other = sim.adversary_battery(bigmatch, sigma, n_random=3, seed=12)
    assert not np.array_equal(batt[-1][1].mixtures[0], other[-1][1].mixtures[0])


def test_adversary_battery_truncates_pure():
    game = zoo.random_recursive(3, 1, 3, 0.5, seed=6)
    tau = uniform_strategy(game, 2)
    batt = sim.adversary_battery(game, tau, max_pure=5, n_random=0)
    pure = [lab for lab, _ in batt if lab.startswith("pure")]
    assert len(pure) == 5
    assert pure[0] == "pure[0,0,0]"
    assert pure[1] == "pure[0,0,1]"


def test_judge_clauses_from_below():
    rep = sim.SimulationReport(
        label="x", horizon=1000, replications=10, seed=0, tail_window=100,
        checkpoints=np.array([10, 100, 1000]),
        means=np.array([0.2, 0.96, 0.97]),
        ci_halfwidths=np.zeros(3),
        absorption_rates=np.ones(3),
        tail_mean=0.945, tail_ci_halfwidth=0.01)
    a, first_n, b = sim._judge(rep, 1.0, 0.05, from_below=True)
    assert (a, first_n, b) == (True, 100, True)
    rep2 = sim.SimulationReport(
        label="x", horizon=1000, replications=10, seed=0, tail_window=100,
        checkpoints=np.array([10, 100, 1000]),
        means=np.array([0.2, 0.96, 0.90]),
        ci_halfwidths=np.zeros(3),
        absorption_rates=np.ones(3),
        tail_mean=0.9, tail_ci_halfwidth=0.0)
    a, first_n, b = sim._judge(rep2, 1.0, 0.05, from_below=True)
    assert (a, first_n, b) == (False, None, False)


def test_judge_clauses_from_above():
    rep = sim.SimulationReport(
        label="x", horizon=1000, replications=10, seed=0, tail_window=100,
        checkpoints=np.array([10, 100, 1000]),
        means=np.array([1.2, 1.04, 1.06]),
        ci_halfwidths=np.array([0.0, 0.0, 0.02]),
        absorption_rates=np.ones(3),
        tail_mean=1.06, tail_ci_halfwidth=0.005)
    a, first_n, b = sim._judge(rep, 1.0, 0.05, from_below=False)
    assert (a, first_n, b) == (True, 100, False)


def test_guarantee_quit_passes(quit_game):
    sigma = make_strategy(quit_game, 1, [[0.0, 1.0]])
    rep = sim.guarantee_report(
        quit_game, sigma, 0.999, 0.05, horizon=300, replications=50,
        seed=1, lambda_grid=(1e-2,), n_random=3)
    assert rep.all_pass
    assert not rep.stopped_early
    assert rep.player == 1
    assert rep.floor_value == 0.999
    assert rep.caveat == sim.CAVEAT
    assert len(rep.verdicts) == 1 + 1 + 3
    for v in rep.verdicts:
        assert v.clause_a_pass and v.clause_b_pass
        # (n-1)/n clears 0.949 from n = 20 on
        assert v.clause_a_first_n == 20


def test_guarantee_bigmatch_fails_and_stops(bigmatch):
    sigma = make_strategy(bigmatch, 1, [[0.5, 0.5]])
    rep = sim.guarantee_report(
        bigmatch, sigma, 0.5, 0.1, horizon=400, replications=60, seed=2,
        lambda_grid=(1e-2,), n_random=2, stop_on_fail=True)
    assert not rep.all_pass
    assert rep.stopped_early
    assert len(rep.verdicts) == 1
    assert rep.verdicts[0].label == "br@0.01"
    assert not rep.verdicts[0].clause_a_pass


def test_guarantee_player_two_candidate(bigmatch):
    tau = make_strategy(bigmatch, 2, [[0.5, 0.5]])
    rep = sim.guarantee_report(
        bigmatch, tau, 0.5, 0.3, horizon=200, replications=60, seed=3,
        lambda_grid=(1e-2,), n_random=2)
    assert rep.player == 2
    assert rep.all_pass


def test_guarantee_jobs_threaded_equivalent(quit_game):
    sigma = make_strategy(quit_game, 1, [[0.2, 0.8]])
    kw = dict(horizon=150, replications=40, seed=4,
              lambda_grid=(1e-2,), n_random=2)
    one = sim.guarantee_report(quit_game, sigma, 0.9, 0.1, jobs=1, **kw)
    two = sim.guarantee_report(quit_game, sigma, 0.9, 0.1, jobs=2, **kw)
    assert [v.label for v in one.verdicts] == [v.label for v in two.verdicts]
    for a, b in zip(one.verdicts, two.verdicts):
        assert np.array_equal(a.report.means, b.report.means)
        assert a.clause_a_first_n == b.clause_a_first_n
    assert one.all_pass == two.all_pass


def test_guarantee_validates(quit_game):
    sigma = uniform_strategy(quit_game, 1)
    with pytest.raises(ValueError):
        sim.guarantee_report(quit_game, sigma, 0.9, 0.0)
    with pytest.raises(ValueError):
        sim.guarantee_report(quit_game, sigma, 0.9, 0.1, jobs=0)


def test_csv_and_json_outputs_are_byte_stable(tmp_path, quit_game):
    sigma = make_strategy(quit_game, 1, [[0.3, 0.7]])
    tau = uniform_strategy(quit_game, 2)
    srep = sim.simulate(quit_game, sigma, tau, 50, 20, seed=6, label="demo")
    p1 = tmp_path / "a.csv"
    p2 = tmp_path / "b.csv"
    sim.write_sim_csv(srep, p1)
    sim.write_sim_csv(sim.simulate(quit_game, sigma, tau, 50, 20, seed=6,
                                   label="demo"), p2)
    assert p1.read_bytes() == p2.read_bytes()
    with open(p1, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["adversary", "checkpoint_n", "mean", "ci_halfwidth",
                       "absorption_rate", "tail_mean"]
    assert rows[1][0] == "demo"
    assert len(rows) == 1 + srep.checkpoints.size

    grep = sim.guarantee_report(quit_game, sigma, 0.5, 0.2, horizon=60,
                                replications=20, seed=6, lambda_grid=(1e-2,),
                                n_random=2)
    grep2 = sim.guarantee_report(quit_game, sigma, 0.5, 0.2, horizon=60,
                                 replications=20, seed=6, lambda_grid=(1e-2,),
                                 n_random=2)
    c1 = tmp_path / "g1.csv"
    c2 = tmp_path / "g2.csv"
    sim.write_guarantee_csv(grep, c1)
    sim.write_guarantee_csv(grep2, c2)
    assert c1.read_bytes() == c2.read_bytes()
    j1 = tmp_path / "g1.json"
    j2 = tmp_path / "g2.json"
    sim.save_guarantee(grep, j1)
    sim.save_guarantee(grep2, j2)
    assert j1.read_bytes() == j2.read_bytes()
    d = sim.guarantee_to_dict(grep)
    assert d["all_pass"] == grep.all_pass
    assert d["caveat"] == sim.CAVEAT
    assert len(d["adversaries"]) == len(grep.verdicts)
