"""Best responses against a frozen stationary strategy.

Fixing one player's stationary strategy collapses the game into a one-player
discounted problem for the opponent: mixtures average the stage payoffs and
transition rows, and the opponent then optimizes (minimizing as player 2,
maximizing as player 1) by value iteration. The greedy policy for the fixed
point breaks ties toward the lowest action index, so results are fully
deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DimensionMismatch, IterationLimit, SolverError
from .model import GameSpec, StationaryStrategy
from .shapley import iteration_cap, _check_lambda


@dataclass(frozen=True)
class BestResponseResult:
    """Opponent's optimal discounted values and a greedy pure policy.

    values[k] is the responder's optimal discounted payoff from active state
    k (still measured in player 1's payoff, so a responding minimizer drives
    it down). policy[k] is the responder's action index at state k.
    """

    responder: int
    lam: float
    values: np.ndarray
    policy: tuple[int, ...]
    residual: float


def _check_strategy(game: GameSpec, fixed: StationaryStrategy) -> None:
    if len(fixed.mixtures) != game.num_active:
        raise DimensionMismatch(
            f"strategy covers {len(fixed.mixtures)} states,"
            f" game has {game.num_active} active")
    names = game.p1_actions if fixed.player == 1 else game.p2_actions
    for k, row in enumerate(fixed.mixtures):
        if row.shape != (len(names[k]),):
            raise DimensionMismatch(
                f"strategy row for state {game.state_names[k]!r} has"
                f" {row.shape[0]} entries, expected {len(names[k])}")


def _collapse(game: GameSpec, fixed: StationaryStrategy):
    """Average out the fixed player; returns (R, PW, P, na, minimize)."""
    K = game.num_active
    respond_p1 = fixed.player == 2
    counts = [len(a) for a in (game.p1_actions if respond_p1 else game.p2_actions)]
    amax = max(counts, default=1)
    R = np.zeros((K, amax))
    PW = np.zeros((K, amax))
    P = np.zeros((K, amax, K))
    for k in range(K):
        mix = fixed.mixtures[k]
        g = game.payoffs[k]
        t = game.transitions[k]
        if respond_p1:
            r = g @ mix
            rows = np.einsum("j,ijs->is", mix, t)
        else:
            r = mix @ g
            rows = np.einsum("i,ijs->js", mix, t)
        a = counts[k]
        R[k, :a] = r
        P[k, :a, :] = rows[:, :K]
        if game.num_absorbing:
            PW[k, :a] = rows[:, K:] @ game.absorbing_payoffs
    na = np.array(counts, dtype=np.int64)
    return R, PW, P, na, not respond_p1


def best_response_discounted(game: GameSpec, fixed: StationaryStrategy,
                             lam: float, tol: float = 1e-9) -> BestResponseResult:
    """Optimal discounted response of the free player against ``fixed``.

    Converges to the same residual contract as the two-player solver: the
    returned values v satisfy ``max |B v - v| <= tol * lam`` for the
    collapsed Bellman operator B.
    """
    lam = _check_lambda(lam, allow_zero=False)
    if tol <= 0.0:
        raise ValueError(f"tol must be positive, got {tol!r}")
    _check_strategy(game, fixed)
    responder = 3 - fixed.player
    K = game.num_active
    if K == 0:
        return BestResponseResult(responder=responder, lam=lam,
                                  values=np.empty(0), policy=(), residual=0.0)
    R, PW, P, na, minimize = _collapse(game, fixed)
    cap = iteration_cap(game, lam, tol)
    v, it, step, st = _kernels.mdp_value_iteration(
        R, PW, P, na, lam, minimize, np.zeros(K), tol * lam, cap)
    if st == 1:
        raise IterationLimit(
            f"best response did not converge in {it} iterations (lam={lam!r})")
    if st != 0:
        raise SolverError(f"best response failed with status {st}")
    policy = _kernels.mdp_greedy(R, PW, P, na, lam, minimize, v)

    q = lam * R + (1.0 - lam) * (P @ v + PW)
    pad = np.arange(R.shape[1])[None, :] >= na[:, None]
    q[pad] = np.inf if minimize else -np.inf
    image = q.min(axis=1) if minimize else q.max(axis=1)
    residual = float(np.max(np.abs(image - v)))
    return BestResponseResult(responder=responder, lam=lam, values=v,
                              policy=tuple(int(a) for a in policy),
                              residual=residual)


def stationary_pair_value(game: GameSpec, sigma: StationaryStrategy,
                          tau: StationaryStrategy, lam: float) -> np.ndarray:
    """Exact discounted payoff when both players play fixed strategies.

    Solves the linear system of the induced Markov chain; lam must be
    positive so the system is nonsingular.
    """
    lam = _check_lambda(lam, allow_zero=False)
    if sigma.player != 1 or tau.player != 2:
        raise ValueError("pass player 1's strategy first and player 2's second")
    _check_strategy(game, sigma)
    _check_strategy(game, tau)
    K = game.num_active
    if K == 0:
        return np.empty(0)
    g = np.empty(K)
    Pa = np.empty((K, K))
    w = np.zeros(K)
    for k in range(K):
        x = sigma.mixtures[k]
        y = tau.mixtures[k]
        g[k] = x @ game.payoffs[k] @ y
        row = np.einsum("i,ijs,j->s", x, game.transitions[k], y)
        Pa[k] = row[:K]
        if game.num_absorbing:
            w[k] = row[K:] @ game.absorbing_payoffs
    lhs = np.eye(K) - (1.0 - lam) * Pa
    return np.linalg.solve(lhs, lam * g + (1.0 - lam) * w)
