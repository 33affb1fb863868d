"""Solution concepts: approximate equilibria, one-round walks, brute force."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .config import TOL, Caps, current_caps
from .game import CongestionGame, GameError, StrategyProfile, social_cost


class WalkMode(str, Enum):
    SELFISH = "selfish"
    COOPERATIVE = "cooperative"


class WalkError(ValueError):
    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


class EnumerationCapExceeded(RuntimeError):
    pass


@dataclass
class EquilibriumReport:
    is_equilibrium: bool
    worst_ratio: float
    witness: tuple | None  # (player id, deviation strategy index) achieving worst_ratio
    epsilon: float


@dataclass
class WalkStep:
    player: object
    choice: int
    minimum: float
    chosen: float

    @property
    def slack(self) -> float:
        return self.chosen / self.minimum if self.minimum > 0 else 1.0


@dataclass
class WalkTrace:
    order: list
    mode: WalkMode
    epsilon: float
    steps: list[WalkStep]
    final_profile: StrategyProfile

    def to_json(self) -> dict:
        return {
            "mode": self.mode.value,
            "epsilon": self.epsilon,
            "order": list(self.order),
            "steps": [
                {"player": s.player, "choice": s.choice, "minimum": s.minimum, "chosen": s.chosen} for s in self.steps
            ],
            "social_cost": social_cost(self.final_profile.game, self.final_profile),
        }


# ---------------------------------------------------------------------------
# equilibrium check


def _strategy_cost(game: CongestionGame, k: np.ndarray, strat, current, w: float) -> float:
    lat = game.latencies
    if current is None:
        return sum(lat[e].eval(k[e] + w) for e in strat)
    return sum(lat[e].eval(k[e] if e in current else k[e] + w) for e in strat)


def check_equilibrium(game: CongestionGame, profile: StrategyProfile, epsilon: float, rtol: float | None = None) -> EquilibriumReport:
    if not profile.is_total:
        raise GameError("equilibrium check needs a total profile")
    rtol = TOL.equilibrium_rtol if rtol is None else rtol
    k = profile.congestion
    worst, witness = 0.0, None
    for pos, a in enumerate(profile.assignment):
        strats = game.strategy_index[pos]
        if len(strats) < 2:
            continue
        cur = strats[a]
        cur_set = set(cur)
        w = game.weights[pos]
        cost = sum(game.latencies[e].eval(k[e]) for e in cur)
        for b, alt in enumerate(strats):
            if b == a:
                continue
            dev = _strategy_cost(game, k, alt, cur_set, w)
            r = math.inf if dev <= 0 else cost / dev
            if r > worst:
                worst, witness = r, (game.players[pos].id, b)
    worst = max(worst, 1.0) if witness is None else worst
    return EquilibriumReport(worst <= (1 + epsilon) * (1 + rtol), worst, witness, epsilon)


# ---------------------------------------------------------------------------
# one-round walks


def _step_values(game: CongestionGame, k: np.ndarray, pos: int, mode: WalkMode) -> list[float]:
    w = game.weights[pos]
    lat = game.latencies
    vals = []
    for strat in game.strategy_index[pos]:
        if mode is WalkMode.SELFISH:
            vals.append(sum(lat[e].eval(k[e] + w) for e in strat))
        else:
            vals.append(sum((k[e] + w) * lat[e].eval(k[e] + w) - k[e] * lat[e].eval(k[e]) for e in strat))
    return vals


def run_walk(
    game: CongestionGame,
    order: Sequence | None = None,
    mode: WalkMode | str = WalkMode.SELFISH,
    epsilon: float = 0.0,
    tiebreak: str = "lowest-index",
    prescribed: Sequence[int] | Mapping | None = None,
    rtol: float | None = None,
) -> WalkTrace:
    """Process players once in ``order``; each picks a (1+eps)-greedy strategy.

    Without prescriptions every player takes the exact greedy minimum, lowest
    strategy index on ties. With ``tiebreak="prescribed-choice-list"`` the
    choices come from ``prescribed`` (aligned with ``order`` or keyed by
    player id) and any choice above (1+eps) times the minimum is rejected.
    """
    mode = WalkMode(mode)
    rtol = TOL.equilibrium_rtol if rtol is None else rtol
    order = [p.id for p in game.players] if order is None else list(order)
    positions = [game.player_index[p] if p in game.player_index else _bad_player(p) for p in order]
    if sorted(positions) != list(range(game.n_players)):
        raise WalkError("order must be a permutation of the players")
    if tiebreak not in ("lowest-index", "prescribed-choice-list"):
        raise WalkError(f"unknown tiebreak {tiebreak!r}")
    if tiebreak == "prescribed-choice-list" and prescribed is None:
        raise WalkError("prescribed-choice-list tiebreak needs a prescription")

    profile = StrategyProfile(game)
    steps: list[WalkStep] = []
    for t, (pid, pos) in enumerate(zip(order, positions)):
        vals = _step_values(game, profile.congestion, pos, mode)
        best = min(vals)
        if tiebreak == "prescribed-choice-list":
            choice = prescribed[pid] if isinstance(prescribed, Mapping) else prescribed[t]
            if not 0 <= choice < len(vals):
                raise WalkError(f"step {t}: player {pid!r} has no strategy {choice}", t)
            if vals[choice] > (1 + epsilon) * best * (1 + rtol) + 1e-300:
                raise WalkError(
                    f"step {t}: prescribed strategy {choice} of player {pid!r} costs {vals[choice]!r}, "
                    f"above (1+eps) x minimum {best!r}",
                    t,
                )
        else:
            choice = vals.index(best)
        profile.assign(pos, choice)
        steps.append(WalkStep(pid, choice, best, vals[choice]))
    return WalkTrace(order, mode, float(epsilon), steps, profile)


def _bad_player(p):
    raise WalkError(f"unknown player {p!r} in order")


# ---------------------------------------------------------------------------
# brute force


def _incidence(game: CongestionGame):
    """Per player: 0/1 incidence matrix (strategies x resources)."""
    m = game.n_resources
    out = []
    for strats in game.strategy_index:
        inc = np.zeros((len(strats), m))
        for s, strat in enumerate(strats):
            inc[s, list(strat)] = 1.0
        out.append(inc)
    return out


def _latency_matrix(game: CongestionGame, k: np.ndarray) -> np.ndarray:
    if game._poly_matrix is not None:
        acc = np.zeros_like(k)
        for col in range(game._poly_matrix.shape[1] - 1, -1, -1):
            acc = acc * k + game._poly_matrix[:, col]
        return acc
    out = np.empty_like(k)
    for e, f in enumerate(game.latencies):
        out[:, e] = f.eval_array(k[:, e])
    return out


def _profile_count(game: CongestionGame) -> int:
    return math.prod(len(s) for s in game.strategy_index)


def _enumerate_chunks(game: CongestionGame, cap: int, chunk: int = 200_000):
    total = _profile_count(game)
    if total > cap:
        raise EnumerationCapExceeded(f"{total} profiles exceed the enumeration cap {cap}")
    shape = tuple(len(s) for s in game.strategy_index)
    inc = _incidence(game)
    w = game.weights
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk))
        choice = np.stack(np.unravel_index(idx, shape), axis=1)
        k = np.zeros((len(idx), game.n_resources))
        for i in range(game.n_players):
            k += w[i] * inc[i][choice[:, i]]
        yield idx, choice, k, inc


def _social(game, k):
    return np.sum(k * _latency_matrix(game, k), axis=1)


def brute_force_optimum(game: CongestionGame, caps: Caps | None = None):
    caps = caps or current_caps()
    best_val, best_choice = math.inf, None
    for _, choice, k, _ in _enumerate_chunks(game, caps.enum_profiles):
        vals = _social(game, k)
        j = int(np.argmin(vals))
        if vals[j] < best_val:
            best_val, best_choice = float(vals[j]), choice[j]
    profile = StrategyProfile(game, [int(c) for c in best_choice])
    return profile, best_val


def _equilibrium_mask(game, choice, k, inc, epsilon, rtol):
    lat = _latency_matrix(game, k)
    ok = np.ones(len(k), dtype=bool)
    for i in range(game.n_players):
        n_s = inc[i].shape[0]
        if n_s < 2:
            continue
        cur = inc[i][choice[:, i]]
        cost = np.sum(lat * cur, axis=1)
        w = game.weights[i]
        for b in range(n_s):
            alt = inc[i][b]
            kdev = k + w * (alt[None, :] * (1.0 - cur))
            dev = np.sum(_latency_matrix(game, kdev) * alt[None, :], axis=1)
            same = choice[:, i] == b
            bad = cost > (1 + epsilon) * dev * (1 + rtol)
            ok &= ~(bad & ~same)
    return ok


@dataclass
class WorstEquilibrium:
    profile: StrategyProfile | None
    value: float | None  # PoA_eps of this game, None if no equilibrium exists
    equilibrium_cost: float | None
    optimum_cost: float
    n_equilibria: int

    @property
    def exists(self) -> bool:
        return self.profile is not None


def worst_equilibrium(game: CongestionGame, epsilon: float, caps: Caps | None = None, rtol: float | None = None) -> WorstEquilibrium:
    caps = caps or current_caps()
    rtol = TOL.equilibrium_rtol if rtol is None else rtol
    opt_val = math.inf
    worst_val, worst_choice, count = -math.inf, None, 0
    for _, choice, k, inc in _enumerate_chunks(game, caps.enum_profiles):
        vals = _social(game, k)
        opt_val = min(opt_val, float(vals.min()))
        mask = _equilibrium_mask(game, choice, k, inc, epsilon, rtol)
        count += int(mask.sum())
        if mask.any():
            sub = np.where(mask, vals, -np.inf)
            j = int(np.argmax(sub))
            if sub[j] > worst_val:
                worst_val, worst_choice = float(sub[j]), choice[j]
    if worst_choice is None:
        return WorstEquilibrium(None, None, None, opt_val, 0)
    prof = StrategyProfile(game, [int(c) for c in worst_choice])
    value = worst_val / opt_val if opt_val > 0 else math.inf
    return WorstEquilibrium(prof, value, worst_val, opt_val, count)


def ratio(game: CongestionGame, profile: StrategyProfile, optimum) -> float:
    opt = optimum if isinstance(optimum, (int, float)) else social_cost(game, optimum)
    if not opt > 0:
        raise ZeroDivisionError("optimum social cost is zero")
    return social_cost(game, profile) / opt


def competitive_ratio_over_orders(
    game: CongestionGame,
    mode: WalkMode | str = WalkMode.SELFISH,
    epsilon: float = 0.0,
    caps: Caps | None = None,
):
    """Worst exact-greedy walk outcome over every arrival order tried.

    This is a lower estimate of the instance's competitive ratio: only the
    lowest-index greedy choice is followed, and orders beyond the cap are skipped.
    """
    caps = caps or current_caps()
    _, opt = brute_force_optimum(game, caps)
    ids = [p.id for p in game.players]
    worst, worst_order, tried = -math.inf, None, 0
    for perm in itertools.permutations(ids):
        if tried >= caps.walk_orders:
            break
        tried += 1
        tr = run_walk(game, perm, mode, epsilon)
        val = social_cost(game, tr.final_profile)
        if val > worst:
            worst, worst_order = val, list(perm)
    return worst / opt, worst_order, tried
