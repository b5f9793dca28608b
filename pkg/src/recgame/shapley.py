"""Value computations built on the one-step operator.

The one-step operator maps a continuation vector f over active states to the
vector of matrix-game values

    (T_lam f)(k) = val_{x,y} E[ lam * g(k, i, j) + (1 - lam) * f(next) ],

where the expectation over the next state pays absorbing states their fixed
payoff and reads f at active ones. For lam in (0, 1] the operator contracts
with factor (1 - lam), so the discounted value is its unique fixed point and
plain iteration from zero converges geometrically. The n-stage values follow
the recursion v_n = T_{1/n} v_{n-1} from v_0 = 0.

For games with all stage payoffs zero, T_lam f = (1 - lam) * T_0 f holds
identically; ``recursive_identity_residual`` measures the deviation and is a
cheap structural self-check.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import IterationLimit, SolverError
from .matgame import solve_matrix_game
from .model import GameSpec, StationaryStrategy, make_strategy

HARD_ITER_CAP = 10_000_000

_STATUS_MSG = {
    2: "matrix game solver reported an unbounded LP",
    3: "matrix game solver returned a degenerate objective",
}


def packed(game: GameSpec):
    """Pad per-state data to the rectangular tensors the kernels expect.

    Returns (G, W, Q, ms, ns): stage payoffs, expected absorbing payoff per
    action cell, transition mass to active states, and true action counts.
    """
    K = game.num_active
    mmax = max((len(a) for a in game.p1_actions), default=1)
    nmax = max((len(a) for a in game.p2_actions), default=1)
    G = np.zeros((K, mmax, nmax))
    W = np.zeros((K, mmax, nmax))
    Q = np.zeros((K, mmax, nmax, K))
    for k in range(K):
        m, n = game.action_counts(k)
        G[k, :m, :n] = game.payoffs[k]
        t = game.transitions[k]
        Q[k, :m, :n, :] = t[:, :, :K]
        if game.num_absorbing:
            W[k, :m, :n] = t[:, :, K:] @ game.absorbing_payoffs
    ms = np.array([len(a) for a in game.p1_actions], dtype=np.int64)
    ns = np.array([len(a) for a in game.p2_actions], dtype=np.int64)
    return G, W, Q, ms, ns


def _check_lambda(lam: float, *, allow_zero: bool) -> float:
    lam = float(lam)
    lo_ok = lam >= 0.0 if allow_zero else lam > 0.0
    if not (lo_ok and lam <= 1.0 and math.isfinite(lam)):
        lo = "[0, 1]" if allow_zero else "(0, 1]"
        raise ValueError(f"discount factor must be in {lo}, got {lam!r}")
    return lam


def _check_f(game: GameSpec, f) -> np.ndarray:
    arr = np.asarray(f, dtype=float)
    if arr.shape != (game.num_active,):
        raise ValueError(
            f"continuation vector must have shape ({game.num_active},), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("continuation vector has non-finite entries")
    return np.ascontiguousarray(arr)


def apply_operator(game: GameSpec, lam: float, f) -> np.ndarray:
    """One application of the lam-weighted operator to f."""
    lam = _check_lambda(lam, allow_zero=True)
    f = _check_f(game, f)
    if game.num_active == 0:
        return np.empty(0)
    G, W, Q, ms, ns = packed(game)
    out = np.empty(game.num_active)
    st = _kernels.apply_operator(G, W, Q, ms, ns, lam, f, out)
    if st != 0:
        raise SolverError(_STATUS_MSG.get(st, f"operator failed with status {st}"))
    return out


def iteration_cap(game: GameSpec, lam: float, tol: float) -> int:
    """Iterations that provably reach a residual of tol * lam from zero."""
    M = game.payoff_bound
    if lam >= 1.0 or M == 0.0:
        return 8
    target = tol * lam / (2.0 * M)
    if target >= 1.0:
        return 8
    # contraction factor (1 - lam) per step; +16 slack for rounding
    return min(HARD_ITER_CAP, int(math.ceil(math.log(target) / math.log1p(-lam))) + 16)


def discounted_value(game: GameSpec, lam: float, tol: float = 1e-9,
                     start=None) -> np.ndarray:
    """Fixed point of the lam-discounted operator over active states.

    Iterates f <- T_lam f until the returned vector v satisfies
    ``max |T_lam v - v| <= tol * lam``. ``start`` warm-starts the iteration
    (any vector works; zero is the default).

    Raises:
        IterationLimit: The cap (provable bound, hard limit 1e7) was hit.
    """
    lam = _check_lambda(lam, allow_zero=False)
    if tol <= 0.0:
        raise ValueError(f"tol must be positive, got {tol!r}")
    if game.num_active == 0:
        return np.empty(0)
    f0 = np.zeros(game.num_active) if start is None else _check_f(game, start)
    G, W, Q, ms, ns = packed(game)
    cap = iteration_cap(game, lam, tol)
    v, it, step, st = _kernels.value_iteration(
        G, W, Q, ms, ns, lam, f0, tol * lam, cap)
    if st == 1:
        raise IterationLimit(
            f"discounted value did not converge in {it} iterations"
            f" (lam={lam!r}, last step {step!r})")
    if st != 0:
        raise SolverError(_STATUS_MSG.get(st, f"operator failed with status {st}"))
    return v


def n_stage_values(game: GameSpec, n: int) -> np.ndarray:
    """Values v_1..v_n of the first n finite games, shape (n, num_active).

    v_m = T_{1/m} v_{m-1} with v_0 = 0; row m-1 holds v_m.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n!r}")
    K = game.num_active
    out = np.empty((n, K))
    if K == 0:
        return out
    G, W, Q, ms, ns = packed(game)
    f = np.zeros(K)
    buf = np.empty(K)
    for m in range(1, n + 1):
        st = _kernels.apply_operator(G, W, Q, ms, ns, 1.0 / m, f, buf)
        if st != 0:
            raise SolverError(_STATUS_MSG.get(st, f"operator failed with status {st}"))
        f = buf.copy()
        out[m - 1] = f
    return out


def recursive_identity_residual(game: GameSpec, lam: float, f) -> float:
    """Sup-norm gap between T_lam f and (1 - lam) * T_0 f.

    Identically zero (up to rounding) when every stage payoff is zero; for
    other games it measures how far the game is from that structure.
    """
    lam = _check_lambda(lam, allow_zero=True)
    f = _check_f(game, f)
    if game.num_active == 0:
        return 0.0
    a = apply_operator(game, lam, f)
    b = apply_operator(game, 0.0, f)
    return float(np.max(np.abs(a - (1.0 - lam) * b)))


def geometric_grid(hi: float, lo: float, num: int) -> np.ndarray:
    """Decreasing geometric grid of discount factors from hi down to lo."""
    if not (0.0 < lo <= hi <= 1.0):
        raise ValueError(f"need 0 < lo <= hi <= 1, got lo={lo!r}, hi={hi!r}")
    if num < 1:
        raise ValueError(f"num must be >= 1, got {num!r}")
    if num == 1:
        return np.array([hi])
    return np.geomspace(hi, lo, num)


DEFAULT_LIMIT_GRID = geometric_grid(1e-1, 1e-4, 7)


@dataclass(frozen=True)
class LimitEstimate:
    """Vanishing-discount limit estimate.

    Attributes:
        lambdas: Grid in decreasing order.
        values: Discounted values per grid point, shape (len(grid), K).
        estimate: Value at the smallest grid point.
        tail_spread: Max sup-norm spread among the last three grid values.
        converged: tail_spread <= the requested tolerance.
    """

    lambdas: np.ndarray
    values: np.ndarray
    estimate: np.ndarray
    tail_spread: float
    converged: bool


def vanishing_discount_limit(game: GameSpec, grid=None, tol: float = 1e-3,
                             fp_tol: float | None = None) -> LimitEstimate:
    """Estimate lim v_lam by walking a decreasing grid of discount factors.

    Each point is solved to fixed-point tolerance ``fp_tol`` (default
    tol / 100) and warm-started from the previous one. The estimate is
    declared converged when the last three grid values are within ``tol``
    of each other in sup norm; fewer than three points never converge.
    """
    if grid is None:
        grid = DEFAULT_LIMIT_GRID
    lams = np.asarray(grid, dtype=float)
    if lams.ndim != 1 or lams.size == 0:
        raise ValueError("grid must be a nonempty 1-D array")
    if np.any(np.diff(lams) >= 0.0) and lams.size > 1:
        raise ValueError("grid must be strictly decreasing")
    if fp_tol is None:
        fp_tol = tol / 100.0
    K = game.num_active
    values = np.empty((lams.size, K))
    prev = None
    for i, lam in enumerate(lams):
        prev = discounted_value(game, lam, fp_tol, start=prev)
        values[i] = prev
    if lams.size >= 3:
        tail = values[-3:]
        spread = float(max(np.max(np.abs(tail[a] - tail[b]))
                           for a in range(3) for b in range(a + 1, 3))) if K else 0.0
        converged = spread <= tol
    else:
        spread = math.inf if K else 0.0
        converged = K == 0
    return LimitEstimate(lambdas=lams, values=values, estimate=values[-1].copy(),
                         tail_spread=spread, converged=converged)


@dataclass(frozen=True)
class DiscountCurve:
    """Discounted values along a grid, with per-state residuals."""

    states: tuple[str, ...]
    lambdas: np.ndarray
    values: np.ndarray
    residuals: np.ndarray


def discount_curve(game: GameSpec, grid, tol: float = 1e-9) -> DiscountCurve:
    """Solve the game at every grid point and record residuals."""
    lams = np.asarray(grid, dtype=float)
    if lams.ndim != 1 or lams.size == 0:
        raise ValueError("grid must be a nonempty 1-D array")
    K = game.num_active
    values = np.empty((lams.size, K))
    resid = np.empty((lams.size, K))
    for i, lam in enumerate(lams):
        v = discounted_value(game, lam, tol)
        values[i] = v
        resid[i] = np.abs(apply_operator(game, lam, v) - v)
    return DiscountCurve(states=game.state_names[:K], lambdas=lams,
                         values=values, residuals=resid)


def write_curve_csv(curve: DiscountCurve, path: str | Path) -> None:
    """Write rows ``lambda,state,value,residual`` (full-precision floats)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lambda", "state", "value", "residual"])
        for i, lam in enumerate(curve.lambdas):
            for k, name in enumerate(curve.states):
                w.writerow([repr(float(lam)), name,
                            repr(float(curve.values[i, k])),
                            repr(float(curve.residuals[i, k]))])


def discounted_optimal_strategies(
        game: GameSpec, lam: float, tol: float = 1e-9,
) -> tuple[np.ndarray, StationaryStrategy, StationaryStrategy]:
    """Discounted value plus both players' optimal stationary strategies.

    Solves the fixed point, then per active state takes the optimal mixtures
    of the lam-weighted one-shot matrix at that fixed point.
    """
    v = discounted_value(game, lam, tol)
    rows1 = []
    rows2 = []
    for k in range(game.num_active):
        t = game.transitions[k]
        cont = t[:, :, :game.num_active] @ v
        if game.num_absorbing:
            cont = cont + t[:, :, game.num_active:] @ game.absorbing_payoffs
        sol = solve_matrix_game(lam * game.payoffs[k] + (1.0 - lam) * cont)
        rows1.append(sol.x)
        rows2.append(sol.y)
    return v, make_strategy(game, 1, rows1), make_strategy(game, 2, rows2)
