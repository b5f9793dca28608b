"""Canonical games, random generators, and parametric families.

All builders return validated game descriptions, exercising the same
validation path as games loaded from disk.

The fixed instances:

* ``quit``: one active state; the maximizer may stop for an absorbing payoff
  of 1 or keep playing. Discounted value 1 - lam, n-stage value (n-1)/n,
  long-run value 1.
* ``duel``: both players choose to wait or shoot at accuracy 0.2, 0.5 or
  0.8; hits send play to a winner-take-all absorbing state, double hits to a
  draw, double misses back to the start. Symmetric under swapping players,
  so every discounted value is exactly 0.
* ``bigmatch``: the classic absorbing game with stage matrix [[1*, 0*],
  [0, 1]] where starred cells absorb at their stage payoff. Discounted value
  1/2 for every discount factor; stationary strategies cannot secure the
  long-run value, which makes it the standard negative control for the
  simulation harness.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GameFormatError
from .model import GameSpec, validate

Poly = tuple[tuple[int, int, float], ...]


def _quit() -> dict:
    return {
        "states": [
            {"name": "s", "absorbing": False},
            {"name": "win", "absorbing": True, "payoff": 1.0},
        ],
        "actions": {"s": {"p1": ["keep", "quit"], "p2": ["pass"]}},
        "payoffs": {"s": [[0.0], [0.0]]},
        "transitions": {"s": [[{"s": 1.0}], [{"win": 1.0}]]},
        "initial": "s",
    }


_DUEL_ACC = (0.2, 0.5, 0.8)


def _duel() -> dict:
    acts = ["wait"] + [f"shoot{int(a * 10)}" for a in _DUEL_ACC]
    accs = [0.0] + list(_DUEL_ACC)
    cells = []
    for a in accs:
        row = []
        for b in accs:
            hit1 = a * (1.0 - b)
            hit2 = b * (1.0 - a)
            both = a * b
            stay = (1.0 - a) * (1.0 - b)
            cell = {}
            if stay:
                cell["s"] = stay
            if hit1:
                cell["p1wins"] = hit1
            if hit2:
                cell["p2wins"] = hit2
            if both:
                cell["draw"] = both
            row.append(cell)
        cells.append(row)
    n = len(accs)
    return {
        "states": [
            {"name": "s", "absorbing": False},
            {"name": "p1wins", "absorbing": True, "payoff": 1.0},
            {"name": "p2wins", "absorbing": True, "payoff": -1.0},
            {"name": "draw", "absorbing": True, "payoff": 0.0},
        ],
        "actions": {"s": {"p1": acts, "p2": acts}},
        "payoffs": {"s": [[0.0] * n for _ in range(n)]},
        "transitions": {"s": cells},
        "initial": "s",
    }


def _bigmatch() -> dict:
    return {
        "states": [
            {"name": "s", "absorbing": False},
            {"name": "high", "absorbing": True, "payoff": 1.0},
            {"name": "low", "absorbing": True, "payoff": 0.0},
        ],
        "actions": {"s": {"p1": ["star", "safe"], "p2": ["left", "right"]}},
        "payoffs": {"s": [[1.0, 0.0], [0.0, 1.0]]},
        "transitions": {"s": [
            [{"high": 1.0}, {"low": 1.0}],
            [{"s": 1.0}, {"s": 1.0}],
        ]},
        "initial": "s",
    }


_REGISTRY = {
    "quit": _quit,
    "duel": _duel,
    "bigmatch": _bigmatch,
}


def names() -> tuple[str, ...]:
    return tuple(sorted(_REGISTRY))


def make(name: str) -> GameSpec:
    """Build a named game from the registry."""
    try:
        builder = _REGISTRY[name]
    except KeyError:
        raise GameFormatError(
            f"unknown game {name!r}; available: {', '.join(names())}") from None
    return validate(builder())


def random_recursive(num_active: int, num_absorbing: int, max_actions: int,
                     absorb_prob: float, seed: int) -> GameSpec:
    """Random game with zero stage payoffs, deterministic in the seed.

    Every action cell sends ``absorb_prob`` of its mass to the absorbing
    states (split at random) and the rest back into the active ones.
    Absorbing payoffs are uniform on [-1, 1].
    """
    if num_active < 1:
        raise ValueError(f"num_active must be >= 1, got {num_active!r}")
    if num_absorbing < 0:
        raise ValueError(f"num_absorbing must be >= 0, got {num_absorbing!r}")
    if max_actions < 1:
        raise ValueError(f"max_actions must be >= 1, got {max_actions!r}")
    if not 0.0 <= absorb_prob <= 1.0:
        raise ValueError(f"absorb_prob must be in [0, 1], got {absorb_prob!r}")
    if num_absorbing == 0 and absorb_prob > 0.0:
        raise ValueError("absorb_prob > 0 needs at least one absorbing state")
    rng = np.random.default_rng(seed)
    active = [f"s{k}" for k in range(num_active)]
    absorbing = [f"a{k}" for k in range(num_absorbing)]

    def _simplex_point(size: int) -> np.ndarray:
        while True:
            w = rng.random(size)
            s = w.sum()
            if s > 0.0:
                return w / s

    states = [{"name": n, "absorbing": False} for n in active]
    for n in absorbing:
        states.append({"name": n, "absorbing": True,
                       "payoff": float(rng.uniform(-1.0, 1.0))})
    actions = {}
    payoffs = {}
    transitions = {}
    for name in active:
        m = int(rng.integers(1, max_actions + 1))
        n = int(rng.integers(1, max_actions + 1))
        actions[name] = {"p1": [f"a{i}" for i in range(m)],
                         "p2": [f"b{j}" for j in range(n)]}
        payoffs[name] = [[0.0] * n for _ in range(m)]
        cells = []
        for _ in range(m):
            row = []
            for _ in range(n):
                cell = {}
                if absorb_prob < 1.0:
                    part = (1.0 - absorb_prob) * _simplex_point(num_active)
                    for t, p in zip(active, part):
                        cell[t] = float(p)
                if absorb_prob > 0.0:
                    part = absorb_prob * _simplex_point(num_absorbing)
                    for t, p in zip(absorbing, part):
                        cell[t] = float(p)
                row.append(cell)
            cells.append(row)
        transitions[name] = cells
    return validate({
        "states": states,
        "actions": actions,
        "payoffs": payoffs,
        "transitions": transitions,
        "initial": "s0",
    })


@dataclass(frozen=True)
class ParametricGame:
    """Game family with polynomial data over per-state action rectangles.

    Each active state gives the maximizer a parameter x in ``p1_range[k]``
    and the minimizer a parameter y in ``p2_range[k]``. Stage payoffs and
    per-target transition probabilities are polynomials in (x, y), encoded
    as tuples of (x_power, y_power, coefficient). Transition polynomials
    must sum to 1 at every grid node used for discretization.
    """

    active: tuple[str, ...]
    absorbing: tuple[str, ...]
    absorbing_payoffs: tuple[float, ...]
    p1_range: tuple[tuple[float, float], ...]
    p2_range: tuple[tuple[float, float], ...]
    payoff: tuple[Poly, ...]
    transition: tuple[dict[str, Poly], ...]
    initial: str


def _poly_eval(poly: Poly, x: float, y: float) -> float:
    return float(sum(c * x ** i * y ** j for i, j, c in poly))


def _axis(lo: float, hi: float, points: int) -> list[float]:
    if lo == hi:
        return [lo]
    return [float(v) for v in np.linspace(lo, hi, points)]


def discretize(family: ParametricGame, points: int) -> GameSpec:
    """Sample each action rectangle on a uniform grid and validate.

    Action names carry the parameter values. A degenerate axis (lo == hi)
    collapses to a single action regardless of ``points``.
    """
    if points < 2:
        raise ValueError(f"points must be >= 2, got {points!r}")
    states = [{"name": n, "absorbing": False} for n in family.active]
    for n, p in zip(family.absorbing, family.absorbing_payoffs):
        states.append({"name": n, "absorbing": True, "payoff": float(p)})
    actions = {}
    payoffs = {}
    transitions = {}
    for k, name in enumerate(family.active):
        xs = _axis(*family.p1_range[k], points)
        ys = _axis(*family.p2_range[k], points)
        actions[name] = {"p1": [f"x={v:.6g}" for v in xs],
                         "p2": [f"y={v:.6g}" for v in ys]}
        payoffs[name] = [[_poly_eval(family.payoff[k], x, y) for y in ys]
                         for x in xs]
        cells = []
        for x in xs:
            row = []
            for y in ys:
                cell = {}
                for target, poly in family.transition[k].items():
                    p = _poly_eval(poly, x, y)
                    if p != 0.0:
                        cell[target] = p
                row.append(cell)
            cells.append(row)
        transitions[name] = cells
    return validate({
        "states": states,
        "actions": actions,
        "payoffs": payoffs,
        "transitions": transitions,
        "initial": family.initial,
    })


def parametric_quit() -> ParametricGame:
    """Continuum version of the quit game: stop with probability x."""
    return ParametricGame(
        active=("s",),
        absorbing=("win",),
        absorbing_payoffs=(1.0,),
        p1_range=((0.0, 1.0),),
        p2_range=((0.0, 0.0),),
        payoff=((),),
        transition=({"s": ((1, 0, -1.0), (0, 0, 1.0)), "win": ((1, 0, 1.0),)},),
        initial="s",
    )
