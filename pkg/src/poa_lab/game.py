"""Congestion-game data model: resources, players, profiles and costs."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

from .latency import LatencyFunction, Polynomial
from . import latency as _lat

ResourceId = Hashable
PlayerId = Hashable


class GameError(ValueError):
    pass


@dataclass(frozen=True)
class Resource:
    id: ResourceId
    latency: LatencyFunction


@dataclass(frozen=True)
class Player:
    id: PlayerId
    weight: float
    strategies: tuple  # tuple of sorted tuples of resource ids


@dataclass(frozen=True)
class Violation:
    where: str
    message: str

    def __str__(self):
        return f"{self.where}: {self.message}"


class CongestionGame:
    """Immutable congestion game.

    Strategies are stored twice: by resource id (public) and by resource
    index (``strategy_index``) for the hot loops in dynamics.
    """

    def __init__(self, resources: Sequence[Resource | tuple], players: Sequence[Player | tuple]):
        res = [r if isinstance(r, Resource) else Resource(*r) for r in resources]
        self.resources: tuple[Resource, ...] = tuple(res)
        self.resource_index: dict = {}
        for idx, r in enumerate(self.resources):
            if r.id in self.resource_index:
                raise GameError(f"duplicate resource id {r.id!r}")
            self.resource_index[r.id] = idx

        plist = []
        for p in players:
            if not isinstance(p, Player):
                pid, w, strats = p
                p = Player(pid, w, strats)
            strats = tuple(tuple(sorted(set(s), key=_sort_key)) for s in p.strategies)
            plist.append(Player(p.id, float(p.weight), strats))
        self.players: tuple[Player, ...] = tuple(plist)
        self.player_index: dict = {}
        for idx, p in enumerate(self.players):
            if p.id in self.player_index:
                raise GameError(f"duplicate player id {p.id!r}")
            self.player_index[p.id] = idx

        # index form, unknown resources mapped to -1 (validate() reports them)
        self.strategy_index: tuple[tuple[tuple[int, ...], ...], ...] = tuple(
            tuple(tuple(self.resource_index.get(e, -1) for e in s) for s in p.strategies) for p in self.players
        )
        self.weights = np.array([p.weight for p in self.players], dtype=float)
        self.latencies: tuple[LatencyFunction, ...] = tuple(r.latency for r in self.resources)
        self._poly_matrix = _poly_matrix(self.latencies)
        self._flags = None

    # -- structure -------------------------------------------------------
    @property
    def n_players(self) -> int:
        return len(self.players)

    @property
    def n_resources(self) -> int:
        return len(self.resources)

    @property
    def flags(self) -> dict:
        if self._flags is None:
            first = self.players[0].strategies if self.players else ()
            first_set = set(first)
            lat0 = self.latencies[0] if self.latencies else None
            self._flags = {
                "unweighted": bool(np.all(self.weights == 1.0)),
                "symmetric": all(set(p.strategies) == first_set for p in self.players),
                "singleton": all(len(s) == 1 for p in self.players for s in p.strategies),
                "identical": all(_same_latency(f, lat0) for f in self.latencies),
            }
        return self._flags

    @property
    def max_degree(self) -> int | None:
        """Largest polynomial degree, or None if some latency is custom."""
        if any(not isinstance(f, Polynomial) for f in self.latencies):
            return None
        return max(f.degree for f in self.latencies)

    # -- vectorised latency evaluation -----------------------------------
    def latency_values(self, congestion: np.ndarray) -> np.ndarray:
        if self._poly_matrix is not None:
            acc = np.zeros_like(congestion, dtype=float)
            for col in range(self._poly_matrix.shape[1] - 1, -1, -1):
                acc = acc * congestion + self._poly_matrix[:, col]
            return acc
        return np.array([f.eval(float(k)) for f, k in zip(self.latencies, congestion)])

    def latency_at(self, e: int, k: float) -> float:
        return self.latencies[e].eval(k)

    # -- JSON ----------------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "resources": [{"id": r.id, "latency": r.latency.to_json()} for r in self.resources],
            "players": [
                {"id": p.id, "weight": p.weight, "strategies": [list(s) for s in p.strategies]} for p in self.players
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CongestionGame":
        try:
            resources = [Resource(r["id"], _lat.from_json(r["latency"])) for r in obj["resources"]]
            players = [Player(p["id"], p.get("weight", 1.0), tuple(tuple(s) for s in p["strategies"])) for p in obj["players"]]
        except (KeyError, TypeError) as exc:
            raise GameError(f"malformed instance JSON: {exc}") from exc
        return cls(resources, players)

    def __repr__(self):
        return f"CongestionGame(players={self.n_players}, resources={self.n_resources})"


def _sort_key(x):
    return (type(x).__name__, x)


def _same_latency(f, g) -> bool:
    if f is g:
        return True
    if isinstance(f, Polynomial) and isinstance(g, Polynomial):
        return f.coeffs == g.coeffs
    return False


def _poly_matrix(lats: Sequence[LatencyFunction]):
    if not lats or any(not isinstance(f, Polynomial) for f in lats):
        return None
    width = max(len(f.coeffs) for f in lats)
    m = np.zeros((len(lats), width))
    for i, f in enumerate(lats):
        m[i, : len(f.coeffs)] = f.coeffs
    return m


class StrategyProfile:
    """Assignment of players to strategy indices plus a congestion cache.

    ``None`` marks a player that has not arrived yet (walk prefixes).
    """

    def __init__(self, game: CongestionGame, assignment: Sequence[int | None] | None = None):
        self.game = game
        n = game.n_players
        self.assignment: list[int | None] = [None] * n if assignment is None else list(assignment)
        if len(self.assignment) != n:
            raise GameError("assignment length differs from the number of players")
        self.congestion = np.zeros(game.n_resources)
        for i, a in enumerate(self.assignment):
            if a is not None:
                self._check_index(i, a)
                self._add(i, a, game.weights[i])

    def _check_index(self, i: int, a: int):
        if not 0 <= a < len(self.game.strategy_index[i]):
            raise GameError(f"player {self.game.players[i].id!r} has no strategy {a}")

    def _add(self, i: int, a: int, w: float):
        for e in self.game.strategy_index[i][a]:
            self.congestion[e] += w

    @classmethod
    def uniform(cls, game: CongestionGame, index: int) -> "StrategyProfile":
        return cls(game, [min(index, len(s) - 1) for s in game.strategy_index])

    def copy(self) -> "StrategyProfile":
        other = StrategyProfile.__new__(StrategyProfile)
        other.game = self.game
        other.assignment = list(self.assignment)
        other.congestion = self.congestion.copy()
        return other

    def assign(self, i: int, a: int | None) -> None:
        """Move player i (by index) to strategy a, or unassign with None."""
        old = self.assignment[i]
        if old is not None:
            self._add(i, old, -self.game.weights[i])
        if a is not None:
            self._check_index(i, a)
            self._add(i, a, self.game.weights[i])
        self.assignment[i] = a

    def recompute_congestion(self) -> np.ndarray:
        k = np.zeros(self.game.n_resources)
        for i, a in enumerate(self.assignment):
            if a is not None:
                for e in self.game.strategy_index[i][a]:
                    k[e] += self.game.weights[i]
        return k

    @property
    def is_total(self) -> bool:
        return all(a is not None for a in self.assignment)

    def congestion_by_id(self) -> dict:
        return {r.id: float(k) for r, k in zip(self.game.resources, self.congestion)}

    def to_json(self) -> dict:
        return {"assignment": {_json_key(p.id): a for p, a in zip(self.game.players, self.assignment)}}

    @classmethod
    def from_json(cls, game: CongestionGame, obj: dict) -> "StrategyProfile":
        raw = obj.get("assignment")
        if not isinstance(raw, dict):
            raise GameError("profile JSON needs an 'assignment' object")
        lookup = {_json_key(p.id): i for i, p in enumerate(game.players)}
        assignment: list[int | None] = [None] * game.n_players
        for key, val in raw.items():
            if key not in lookup:
                raise GameError(f"unknown player {key!r} in profile")
            assignment[lookup[key]] = None if val is None else int(val)
        return cls(game, assignment)


def _json_key(pid) -> str:
    return pid if isinstance(pid, str) else str(pid)


def _player_pos(game: CongestionGame, i) -> int:
    if i in game.player_index:
        return game.player_index[i]
    raise GameError(f"unknown player {i!r}")


def player_cost(game: CongestionGame, profile: StrategyProfile, i: PlayerId) -> float:
    pos = _player_pos(game, i)
    a = profile.assignment[pos]
    if a is None:
        raise GameError(f"player {i!r} is not assigned")
    return float(sum(game.latency_at(e, profile.congestion[e]) for e in game.strategy_index[pos][a]))


def player_cost_at(game: CongestionGame, profile: StrategyProfile, pos: int) -> float:
    """Same as player_cost but takes the player's position, skipping id lookup."""
    a = profile.assignment[pos]
    if a is None:
        raise GameError(f"player at position {pos} is not assigned")
    return float(sum(game.latency_at(e, profile.congestion[e]) for e in game.strategy_index[pos][a]))


def social_cost(game: CongestionGame, profile: StrategyProfile) -> float:
    """Resource-side sum of k_e * l_e(k_e); unassigned players contribute nothing."""
    k = profile.congestion
    used = k > 0
    if not np.any(used):
        return 0.0
    if game._poly_matrix is not None:
        return float(np.dot(k[used], game.latency_values(k)[used]))
    return float(sum(float(k[e]) * game.latency_at(e, float(k[e])) for e in np.nonzero(used)[0]))


def social_cost_player_side(game: CongestionGame, profile: StrategyProfile) -> float:
    total = 0.0
    for pos, a in enumerate(profile.assignment):
        if a is not None:
            total += game.weights[pos] * player_cost_at(game, profile, pos)
    return float(total)


def validate(game: CongestionGame) -> list[Violation]:
    out: list[Violation] = []
    if game.n_players < 2:
        out.append(Violation("game", f"needs at least 2 players, has {game.n_players}"))
    if game.n_resources < 1:
        out.append(Violation("game", "needs at least 1 resource"))
    for p, idx_strats in zip(game.players, game.strategy_index):
        where = f"player {p.id!r}"
        if not (p.weight > 0) or not np.isfinite(p.weight):
            out.append(Violation(where, f"weight must be positive, got {p.weight}"))
        if not p.strategies:
            out.append(Violation(where, "empty strategy list"))
        for s, si in zip(p.strategies, idx_strats):
            if not s:
                out.append(Violation(where, "empty strategy"))
            for e, ei in zip(s, si):
                if ei < 0:
                    out.append(Violation(where, f"strategy references unknown resource {e!r}"))
    for r in game.resources:
        if not isinstance(r.latency, LatencyFunction):
            out.append(Violation(f"resource {r.id!r}", "latency is not a LatencyFunction"))
    return out


def singleton_game(latencies: Sequence[LatencyFunction], weights: Sequence[float], strategies=None) -> CongestionGame:
    """Load balancing game helper: resources 0..m-1, players 0..n-1.

    ``strategies`` lists allowed resource ids per player; default is every resource.
    """
    resources = [Resource(e, f) for e, f in enumerate(latencies)]
    m = len(latencies)
    players = []
    for i, w in enumerate(weights):
        allowed = range(m) if strategies is None else strategies[i]
        players.append(Player(i, w, tuple((e,) for e in allowed)))
    return CongestionGame(resources, players)
