"""Certificates that pin the long-run value from one side.

A vector u over active states is a plus-side certificate when the
undiscounted operator T_0 satisfies T_0 u >= u everywhere, strictly by a
margin wherever u is positive. Such a u lies weakly below the long-run value
and the maximizer can secure it (up to epsilon) with a stationary strategy
read off the matrix games of T_0 at u. The minus side mirrors everything:
T_0 u <= u, strict wherever u is negative, and u sits weakly above the
value. Both closures intersect exactly at the value vector, which is what
makes a pair of certificates a two-sided bracket.

``find_certificate`` is a heuristic: it seeds at a small-discount value,
clamps monotonically until the weak inequality holds, then retreats the
candidate (down on the plus side, up on the minus side) by a swept offset to
open the strict margins. Every candidate is re-verified by ``xi_margin``
before being returned.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import CertificateNotValid, GameFormatError, SolverError
from .matgame import solve_matrix_game
from .model import GameSpec, StationaryStrategy, make_strategy
from .shapley import apply_operator, discounted_value, packed

WEAK_TOL = 1e-9
STRICT_TOL = 1e-6
MN_TOL = 1e-10

_SIDES = ("plus", "minus")


@dataclass(frozen=True)
class CertificateReport:
    """Verification record for one candidate vector.

    weak_margins are sign-adjusted so that >= 0 means the weak inequality
    holds: T_0 u - u on the plus side, u - T_0 u on the minus side.
    strict_required lists the active-state indices where the strict margin
    is demanded (u > 0 on the plus side, u < 0 on the minus side) and
    strict_margins aligns with it.
    """

    side: str
    states: tuple[str, ...]
    u: np.ndarray
    weak_margins: np.ndarray
    strict_required: tuple[int, ...]
    strict_margins: np.ndarray
    weak_tol: float
    strict_tol: float
    passed: bool

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"


@dataclass(frozen=True)
class SearchFailure:
    """Best failing candidate of an unsuccessful certificate search."""

    side: str
    target: np.ndarray
    best: CertificateReport
    distance: float
    candidates_tried: int


def _check_side(side: str) -> str:
    if side not in _SIDES:
        raise ValueError(f"side must be 'plus' or 'minus', got {side!r}")
    return side


def xi_margin(game: GameSpec, u, side: str, weak_tol: float = WEAK_TOL,
              strict_tol: float = STRICT_TOL) -> CertificateReport:
    """Measure a candidate's margins and render a verdict.

    Passing means every weak margin is >= -weak_tol and every required
    strict margin is >= strict_tol.
    """
    side = _check_side(side)
    u = np.asarray(u, dtype=float)
    t = apply_operator(game, 0.0, u)
    if side == "plus":
        weak = t - u
        required = tuple(int(k) for k in np.flatnonzero(u > 0.0))
    else:
        weak = u - t
        required = tuple(int(k) for k in np.flatnonzero(u < 0.0))
    strict = weak[list(required)] if required else np.empty(0)
    passed = bool(np.all(weak >= -weak_tol)) and bool(np.all(strict >= strict_tol))
    uc = u.copy()
    uc.setflags(write=False)
    weak.setflags(write=False)
    strict.setflags(write=False)
    return CertificateReport(
        side=side, states=game.state_names[:game.num_active], u=uc,
        weak_margins=weak, strict_required=required, strict_margins=strict,
        weak_tol=float(weak_tol), strict_tol=float(strict_tol), passed=passed)


def equivalent_characterization_check(game: GameSpec, u, side: str,
                                      tol: float = WEAK_TOL) -> bool:
    """Alternative test: weak inequality plus a sign condition at equalities.

    On the plus side, u qualifies when T_0 u >= u - tol everywhere and
    u(k) <= tol at every state where T_0 u and u agree within tol; the minus
    side mirrors the signs. Agrees with the margin test in the limit of zero
    tolerances.
    """
    side = _check_side(side)
    u = np.asarray(u, dtype=float)
    t = apply_operator(game, 0.0, u)
    diff = t - u if side == "plus" else u - t
    if np.any(diff < -tol):
        return False
    tight = np.abs(diff) <= tol
    if side == "plus":
        return bool(np.all(u[tight] <= tol))
    return bool(np.all(u[tight] >= -tol))


def mn_condition_check(game: GameSpec, u, lambda_grid) -> float | None:
    """Largest grid point below which the discounted operator dominates u.

    Walks the grid in increasing order and returns the largest lam_bar such
    that T_lam u >= u - MN_TOL holds at every grid point <= lam_bar, or
    None when even the smallest point fails.
    """
    u = np.asarray(u, dtype=float)
    lams = np.sort(np.asarray(lambda_grid, dtype=float))
    if lams.size == 0:
        raise ValueError("lambda_grid must be nonempty")
    best = None
    for lam in lams:
        margin = apply_operator(game, float(lam), u) - u
        if margin.size and float(np.min(margin)) < -MN_TOL:
            break
        best = float(lam)
    return best


def _continuation_matrix(game: GameSpec, u: np.ndarray, k: int) -> np.ndarray:
    t = game.transitions[k]
    c = t[:, :, :game.num_active] @ u
    if game.num_absorbing:
        c = c + t[:, :, game.num_active:] @ game.absorbing_payoffs
    return c


def extract_stationary_strategy(game: GameSpec, u, player: int = 1,
                                weak_tol: float = WEAK_TOL,
                                strict_tol: float = STRICT_TOL) -> StationaryStrategy:
    """Stationary strategy that secures a valid certificate's floor.

    Player 1 requires a passing plus-side certificate, player 2 a minus-side
    one; the certificate is re-verified here. The mixture at each state is
    the player's optimal mixture in the matrix game of T_0 at u.
    """
    if player not in (1, 2):
        raise ValueError(f"player must be 1 or 2, got {player!r}")
    side = "plus" if player == 1 else "minus"
    report = xi_margin(game, u, side, weak_tol, strict_tol)
    if not report.passed:
        worst_weak = float(np.min(report.weak_margins)) if report.weak_margins.size else 0.0
        worst_strict = (float(np.min(report.strict_margins))
                        if report.strict_margins.size else math.inf)
        raise CertificateNotValid(
            f"{side}-side certificate fails verification:"
            f" worst weak margin {worst_weak!r}, worst strict margin {worst_strict!r}")
    uu = np.asarray(u, dtype=float)
    rows = []
    for k in range(game.num_active):
        sol = solve_matrix_game(_continuation_matrix(game, uu, k))
        rows.append(sol.x if player == 1 else sol.y)
    return make_strategy(game, player, rows)


DEFAULT_DELTAS = (0.0, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 5e-2)


def find_certificate(game: GameSpec, side: str, target=None, *,
                     lambda_grid=(1e-1, 1e-2, 1e-3),
                     deltas=DEFAULT_DELTAS,
                     weak_tol: float = WEAK_TOL, strict_tol: float = STRICT_TOL,
                     budget: int = 64, value_tol: float = 1e-9,
                     stabilize_tol: float = 1e-12,
                     max_stabilize_iter: int = 100_000,
                     ) -> CertificateReport | SearchFailure:
    """Heuristic certificate search near the game's value.

    Seeds at the discounted value for the smallest grid discount factor,
    clamps it monotonically under T_0 until the weak inequality holds, then
    sweeps an offset (subtracted on the plus side, added on the minus side,
    re-clamping each time) to open the strict margins. Returns the first
    candidate that passes ``xi_margin``; otherwise a ``SearchFailure``
    carrying the failing candidate closest to ``target`` (in sup norm, ties
    broken toward earlier candidates). ``target`` defaults to the seed.
    """
    side = _check_side(side)
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget!r}")
    K = game.num_active
    seed = discounted_value(game, float(np.min(lambda_grid)), value_tol)
    tgt = seed if target is None else np.asarray(target, dtype=float)
    if tgt.shape != (K,):
        raise ValueError(f"target must have shape ({K},), got {tgt.shape}")

    G, W, Q, ms, ns = packed(game)
    plus = side == "plus"

    def _stabilized(start: np.ndarray) -> np.ndarray:
        if K == 0:
            return start
        out, _, st = _kernels.stabilize(
            G, W, Q, ms, ns, plus, np.ascontiguousarray(start),
            stabilize_tol, max_stabilize_iter)
        if st not in (0, 1):
            raise SolverError(f"clamp iteration failed with status {st}")
        return out

    base = _stabilized(seed)
    best: CertificateReport | None = None
    best_dist = math.inf
    tried = 0
    for delta in deltas:
        if tried >= budget:
            break
        cand = base if delta == 0.0 else _stabilized(
            base - delta if plus else base + delta)
        report = xi_margin(game, cand, side, weak_tol, strict_tol)
        tried += 1
        if report.passed:
            return report
        dist = float(np.max(np.abs(cand - tgt))) if K else 0.0
        if dist < best_dist:
            best = report
            best_dist = dist
    assert best is not None
    return SearchFailure(side=side, target=tgt.copy(), best=best,
                         distance=best_dist, candidates_tried=tried)


def report_to_dict(obj: CertificateReport | SearchFailure) -> dict:
    """JSON form of a certificate report or search failure."""
    if isinstance(obj, SearchFailure):
        return {
            "kind": "search_failure",
            "side": obj.side,
            "target": {s: float(v) for s, v in zip(obj.best.states, obj.target)},
            "distance": float(obj.distance),
            "candidates_tried": obj.candidates_tried,
            "best": report_to_dict(obj.best),
        }
    strict = {obj.states[k]: float(v)
              for k, v in zip(obj.strict_required, obj.strict_margins)}
    return {
        "kind": "certificate",
        "side": obj.side,
        "verdict": obj.verdict,
        "weak_tol": obj.weak_tol,
        "strict_tol": obj.strict_tol,
        "u": {s: float(v) for s, v in zip(obj.states, obj.u)},
        "weak_margins": {s: float(v) for s, v in zip(obj.states, obj.weak_margins)},
        "strict_margins": strict,
    }


def save_report(obj: CertificateReport | SearchFailure, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report_to_dict(obj), fh, indent=2)
        fh.write("\n")


def load_certificate(game: GameSpec, path: str | Path) -> tuple[np.ndarray, str]:
    """Read a saved passing certificate and align u with the game's states.

    Returns (u, side). Refuses search failures and failing certificates.
    """
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise GameFormatError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(raw, dict) or raw.get("kind") != "certificate":
        raise CertificateNotValid(f"{path}: not a certificate file")
    if raw.get("verdict") != "pass":
        raise CertificateNotValid(f"{path}: certificate is marked failing")
    side = raw.get("side")
    if side not in _SIDES:
        raise CertificateNotValid(f"{path}: bad side {side!r}")
    uraw = raw.get("u")
    if not isinstance(uraw, dict):
        raise CertificateNotValid(f"{path}: missing u")
    active = game.state_names[:game.num_active]
    missing = [s for s in active if s not in uraw]
    extra = [s for s in uraw if s not in active]
    if missing or extra:
        raise CertificateNotValid(
            f"{path}: states do not match game (missing {missing}, extra {extra})")
    u = np.array([float(uraw[s]) for s in active])
    return u, side
