"""Game descriptions: validation, immutable in-memory form, JSON round trip.

A game is finite, two-player, zero sum. States are either active (both
players pick actions, play moves on) or absorbing (play is over, a fixed
payoff is collected every remaining stage). The wire format is a JSON object
with exactly the keys "states", "actions", "payoffs", "transitions" and
"initial"; see ``validate`` for the schema. Internally states are reordered
active-first and everything is stored as read-only float64 arrays.

Transition rows are accepted verbatim when they sum to 1 within 1e-12,
rescaled (with an exact-sum fixup on the largest entry) when off by at most
1e-9, and rejected beyond that. The verbatim band keeps
``validate(to_dict(validate(x)))`` the identity on the stored arrays.
"""

from __future__ import annotations

import json
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatch,
    GameFormatError,
    NegativeProbability,
    NoActiveState,
    NonStochasticRow,
)

ROW_ACCEPT_TOL = 1e-12
ROW_RESCALE_TOL = 1e-9

_TOP_KEYS = ("states", "actions", "payoffs", "transitions", "initial")


@dataclass(frozen=True)
class GameSpec:
    """Validated game, states ordered active-first.

    Attributes:
        state_names: All state names, active states first.
        num_active: Count of active states; indices [0, num_active) are
            active, the rest absorbing.
        p1_actions: Per active state, the maximizer's action names.
        p2_actions: Per active state, the minimizer's action names.
        payoffs: Per active state, (m, n) stage payoff matrix.
        transitions: Per active state, (m, n, S) transition law over all
            states in state_names order.
        absorbing_payoffs: Payoff collected per stage in each absorbing
            state, in state_names order.
        initial: Index of the initial state in state_names.
    """

    state_names: tuple[str, ...]
    num_active: int
    p1_actions: tuple[tuple[str, ...], ...]
    p2_actions: tuple[tuple[str, ...], ...]
    payoffs: tuple[np.ndarray, ...]
    transitions: tuple[np.ndarray, ...]
    absorbing_payoffs: np.ndarray
    initial: int

    @property
    def num_states(self) -> int:
        return len(self.state_names)

    @property
    def num_absorbing(self) -> int:
        return len(self.state_names) - self.num_active

    @property
    def payoff_bound(self) -> float:
        """Smallest M with every stage and absorbing payoff in [-M, M]."""
        m = 0.0
        for g in self.payoffs:
            if g.size:
                m = max(m, float(np.max(np.abs(g))))
        if self.absorbing_payoffs.size:
            m = max(m, float(np.max(np.abs(self.absorbing_payoffs))))
        return m

    @property
    def initial_name(self) -> str:
        return self.state_names[self.initial]

    def is_recursive(self) -> bool:
        """True when every active-state stage payoff is exactly zero."""
        return all(not g.size or not np.any(g) for g in self.payoffs)

    def action_counts(self, k: int) -> tuple[int, int]:
        return len(self.p1_actions[k]), len(self.p2_actions[k])

    def state_index(self, name: str) -> int:
        try:
            return self.state_names.index(name)
        except ValueError:
            raise GameFormatError(f"unknown state {name!r}") from None


def _require_mapping(obj: object, where: str) -> Mapping:
    if not isinstance(obj, Mapping):
        raise GameFormatError(f"{where} must be an object, got {type(obj).__name__}")
    return obj


def _require_keys(obj: Mapping, keys: tuple[str, ...], where: str) -> None:
    missing = [k for k in keys if k not in obj]
    unknown = [k for k in obj if k not in keys]
    if missing:
        raise GameFormatError(f"{where}: missing key(s) {missing}")
    if unknown:
        raise GameFormatError(f"{where}: unknown key(s) {unknown}")


def _as_float(x: object, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise GameFormatError(f"{where} must be a number, got {type(x).__name__}")
    v = float(x)
    if not math.isfinite(v):
        raise GameFormatError(f"{where} must be finite, got {v!r}")
    return v


def _name_list(obj: object, where: str) -> tuple[str, ...]:
    if not isinstance(obj, Sequence) or isinstance(obj, (str, bytes)):
        raise GameFormatError(f"{where} must be a list of names")
    names = []
    for i, a in enumerate(obj):
        if not isinstance(a, str) or not a:
            raise GameFormatError(f"{where}[{i}] must be a nonempty string")
        names.append(a)
    if not names:
        raise GameFormatError(f"{where} must be nonempty")
    if len(set(names)) != len(names):
        raise GameFormatError(f"{where} has duplicate names")
    return tuple(names)


def _fix_row(row: np.ndarray, where: str) -> None:
    """Bring a transition row to an exact unit sum, in place."""
    s = float(row.sum())
    if abs(s - 1.0) <= ROW_ACCEPT_TOL:
        return
    if abs(s - 1.0) > ROW_RESCALE_TOL:
        raise NonStochasticRow(f"{where}: probabilities sum to {s!r}")
    row /= s
    for _ in range(4):
        gap = 1.0 - float(row.sum())
        if gap == 0.0:
            return
        row[int(np.argmax(row))] += gap


def validate(raw: object, *, allow_trivial: bool = False) -> GameSpec:
    """Check a parsed game description and build the immutable form.

    Args:
        raw: Parsed JSON object (any mapping).
        allow_trivial: Permit a game with no active states.

    Raises:
        GameFormatError: Wrong keys, types, names, or non-finite numbers.
        DimensionMismatch: A payoff or transition array has the wrong shape.
        NegativeProbability: A transition probability is negative.
        NonStochasticRow: A transition row is off by more than 1e-9.
        NoActiveState: No active state and allow_trivial is False.
    """
    top = _require_mapping(raw, "game")
    _require_keys(top, _TOP_KEYS, "game")

    states = top["states"]
    if not isinstance(states, Sequence) or isinstance(states, (str, bytes)):
        raise GameFormatError("states must be a list")
    active: list[str] = []
    absorbing: list[str] = []
    abs_payoffs: list[float] = []
    seen: set[str] = set()
    for i, st in enumerate(states):
        m = _require_mapping(st, f"states[{i}]")
        name = m.get("name")
        if not isinstance(name, str) or not name:
            raise GameFormatError(f"states[{i}]: name must be a nonempty string")
        if name in seen:
            raise GameFormatError(f"duplicate state name {name!r}")
        seen.add(name)
        flag = m.get("absorbing")
        if not isinstance(flag, bool):
            raise GameFormatError(f"state {name!r}: absorbing must be a boolean")
        if flag:
            _require_keys(m, ("name", "absorbing", "payoff"), f"state {name!r}")
            abs_payoffs.append(_as_float(m["payoff"], f"state {name!r} payoff"))
            absorbing.append(name)
        else:
            _require_keys(m, ("name", "absorbing"), f"state {name!r}")
            active.append(name)
    if not seen:
        raise GameFormatError("states must be nonempty")
    if not active and not allow_trivial:
        raise NoActiveState("game has no active state")

    order = active + absorbing
    index = {name: i for i, name in enumerate(order)}
    S = len(order)

    actions = _require_mapping(top["actions"], "actions")
    payoffs_raw = _require_mapping(top["payoffs"], "payoffs")
    trans_raw = _require_mapping(top["transitions"], "transitions")
    for section, m in (("actions", actions), ("payoffs", payoffs_raw),
                       ("transitions", trans_raw)):
        extra = [k for k in m if k not in active]
        if extra:
            raise GameFormatError(f"{section}: entries for non-active state(s) {extra}")
        missing = [k for k in active if k not in m]
        if missing:
            raise GameFormatError(f"{section}: missing entries for {missing}")

    p1_all: list[tuple[str, ...]] = []
    p2_all: list[tuple[str, ...]] = []
    pay_all: list[np.ndarray] = []
    tr_all: list[np.ndarray] = []
    for name in active:
        acts = _require_mapping(actions[name], f"actions[{name!r}]")
        _require_keys(acts, ("p1", "p2"), f"actions[{name!r}]")
        p1 = _name_list(acts["p1"], f"actions[{name!r}].p1")
        p2 = _name_list(acts["p2"], f"actions[{name!r}].p2")
        m, n = len(p1), len(p2)

        rows = payoffs_raw[name]
        if not isinstance(rows, Sequence) or len(rows) != m:
            raise DimensionMismatch(
                f"payoffs[{name!r}]: expected {m} rows,"
                f" got {len(rows) if isinstance(rows, Sequence) else type(rows).__name__}")
        g = np.empty((m, n))
        for i, row in enumerate(rows):
            if not isinstance(row, Sequence) or len(row) != n:
                raise DimensionMismatch(f"payoffs[{name!r}][{i}]: expected {n} entries")
            for j, cell in enumerate(row):
                g[i, j] = _as_float(cell, f"payoffs[{name!r}][{i}][{j}]")

        rows = trans_raw[name]
        if not isinstance(rows, Sequence) or len(rows) != m:
            raise DimensionMismatch(f"transitions[{name!r}]: expected {m} rows")
        t = np.zeros((m, n, S))
        for i, row in enumerate(rows):
            if not isinstance(row, Sequence) or len(row) != n:
                raise DimensionMismatch(f"transitions[{name!r}][{i}]: expected {n} cells")
            for j, cell in enumerate(row):
                cm = _require_mapping(cell, f"transitions[{name!r}][{i}][{j}]")
                for target, prob in cm.items():
                    if target not in index:
                        raise GameFormatError(
                            f"transitions[{name!r}][{i}][{j}]: unknown state {target!r}")
                    p = _as_float(prob, f"transitions[{name!r}][{i}][{j}][{target!r}]")
                    if p < 0.0:
                        raise NegativeProbability(
                            f"transitions[{name!r}][{i}][{j}][{target!r}] = {p!r}")
                    t[i, j, index[target]] = p
                _fix_row(t[i, j], f"transitions[{name!r}][{i}][{j}]")

        p1_all.append(p1)
        p2_all.append(p2)
        g.setflags(write=False)
        t.setflags(write=False)
        pay_all.append(g)
        tr_all.append(t)

    init = top["initial"]
    if not isinstance(init, str) or init not in index:
        raise GameFormatError(f"initial must name a state, got {init!r}")

    ap = np.array(abs_payoffs, dtype=float)
    ap.setflags(write=False)
    return GameSpec(
        state_names=tuple(order),
        num_active=len(active),
        p1_actions=tuple(p1_all),
        p2_actions=tuple(p2_all),
        payoffs=tuple(pay_all),
        transitions=tuple(tr_all),
        absorbing_payoffs=ap,
        initial=index[init],
    )


def to_dict(game: GameSpec) -> dict:
    """Serialize back to the wire format (states active-first)."""
    states: list[dict] = []
    for i, name in enumerate(game.state_names):
        if i < game.num_active:
            states.append({"name": name, "absorbing": False})
        else:
            states.append({"name": name, "absorbing": True,
                           "payoff": float(game.absorbing_payoffs[i - game.num_active])})
    actions = {}
    payoffs = {}
    transitions = {}
    for k in range(game.num_active):
        name = game.state_names[k]
        actions[name] = {"p1": list(game.p1_actions[k]), "p2": list(game.p2_actions[k])}
        payoffs[name] = [[float(v) for v in row] for row in game.payoffs[k]]
        m, n = game.action_counts(k)
        cells = []
        for i in range(m):
            row = []
            for j in range(n):
                probs = game.transitions[k][i, j]
                row.append({game.state_names[s]: float(probs[s])
                            for s in range(game.num_states) if probs[s] != 0.0})
            cells.append(row)
        transitions[name] = cells
    return {
        "states": states,
        "actions": actions,
        "payoffs": payoffs,
        "transitions": transitions,
        "initial": game.initial_name,
    }


def load_game(path: str | Path, *, allow_trivial: bool = False) -> GameSpec:
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise GameFormatError(f"{path}: invalid JSON: {exc}") from exc
    return validate(raw, allow_trivial=allow_trivial)


def save_game(game: GameSpec, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_dict(game), fh, indent=2)
        fh.write("\n")


@dataclass(frozen=True)
class StationaryStrategy:
    """A stationary mixed strategy for one player.

    mixtures[k] is the probability row over the player's actions at active
    state k; rows sum to 1 and are read-only.
    """

    player: int
    mixtures: tuple[np.ndarray, ...] = field(repr=False)


def make_strategy(game: GameSpec, player: int,
                  rows: Sequence[Sequence[float]]) -> StationaryStrategy:
    """Build a strategy from per-active-state probability rows.

    Rows off unit sum by at most 1e-9 are rescaled; worse is rejected.
    """
    if player not in (1, 2):
        raise GameFormatError(f"player must be 1 or 2, got {player!r}")
    if len(rows) != game.num_active:
        raise DimensionMismatch(
            f"expected {game.num_active} mixture rows, got {len(rows)}")
    out = []
    for k, row in enumerate(rows):
        want = len((game.p1_actions if player == 1 else game.p2_actions)[k])
        r = np.asarray(row, dtype=float)
        if r.shape != (want,):
            raise DimensionMismatch(
                f"mixture for state {game.state_names[k]!r}:"
                f" expected {want} entries, got {r.shape}")
        if not np.all(np.isfinite(r)):
            raise GameFormatError(
                f"mixture for state {game.state_names[k]!r} has non-finite entries")
        if np.any(r < 0.0):
            raise NegativeProbability(
                f"mixture for state {game.state_names[k]!r} has negative entries")
        s = float(r.sum())
        if abs(s - 1.0) > ROW_RESCALE_TOL:
            raise NonStochasticRow(
                f"mixture for state {game.state_names[k]!r} sums to {s!r}")
        if abs(s - 1.0) > ROW_ACCEPT_TOL:
            r = r / s
        r.setflags(write=False)
        out.append(r)
    return StationaryStrategy(player=player, mixtures=tuple(out))


def strategy_from_policy(game: GameSpec, player: int,
                         policy: Sequence[int]) -> StationaryStrategy:
    """One-hot strategy from a pure policy (action index per active state)."""
    rows = []
    for k, a in enumerate(policy):
        want = len((game.p1_actions if player == 1 else game.p2_actions)[k])
        row = np.zeros(want)
        row[int(a)] = 1.0
        rows.append(row)
    return make_strategy(game, player, rows)


def uniform_strategy(game: GameSpec, player: int) -> StationaryStrategy:
    rows = []
    for k in range(game.num_active):
        want = len((game.p1_actions if player == 1 else game.p2_actions)[k])
        rows.append(np.full(want, 1.0 / want))
    return make_strategy(game, player, rows)


def strategy_to_dict(game: GameSpec, strat: StationaryStrategy) -> dict:
    names = game.p1_actions if strat.player == 1 else game.p2_actions
    mix = {}
    for k in range(game.num_active):
        mix[game.state_names[k]] = {
            names[k][a]: float(p) for a, p in enumerate(strat.mixtures[k]) if p != 0.0}
    return {"player": strat.player, "mixtures": mix}


def strategy_from_dict(game: GameSpec, raw: object) -> StationaryStrategy:
    top = _require_mapping(raw, "strategy")
    _require_keys(top, ("player", "mixtures"), "strategy")
    player = top["player"]
    if player not in (1, 2):
        raise GameFormatError(f"strategy player must be 1 or 2, got {player!r}")
    mix = _require_mapping(top["mixtures"], "strategy.mixtures")
    active = game.state_names[:game.num_active]
    extra = [k for k in mix if k not in active]
    if extra:
        raise GameFormatError(f"strategy.mixtures: unknown state(s) {extra}")
    missing = [k for k in active if k not in mix]
    if missing:
        raise GameFormatError(f"strategy.mixtures: missing state(s) {missing}")
    rows = []
    for k in range(game.num_active):
        names = (game.p1_actions if player == 1 else game.p2_actions)[k]
        cell = _require_mapping(mix[active[k]], f"strategy.mixtures[{active[k]!r}]")
        row = np.zeros(len(names))
        pos = {a: i for i, a in enumerate(names)}
        for a, p in cell.items():
            if a not in pos:
                raise GameFormatError(
                    f"strategy.mixtures[{active[k]!r}]: unknown action {a!r}")
            row[pos[a]] = _as_float(p, f"strategy.mixtures[{active[k]!r}][{a!r}]")
        rows.append(row)
    return make_strategy(game, player, rows)


def load_strategy(game: GameSpec, path: str | Path) -> StationaryStrategy:
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise GameFormatError(f"{path}: invalid JSON: {exc}") from exc
    return strategy_from_dict(game, raw)


def save_strategy(game: GameSpec, strat: StationaryStrategy, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(strategy_to_dict(game, strat), fh, indent=2)
        fh.write("\n")
