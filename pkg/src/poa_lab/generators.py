"""Lower-bound instance families with their canonical profiles and closed forms.

Every tree/multipartite family shares one accounting structure: level i of a
2s-level load balancing graph contributes ``scale * P_i * a_j`` to the cost of
the canonical profile and ``scale * P_i * b_j`` to the optimum, where
``P_i = T1^(i-1)`` for i <= s and ``T1^(s-1) T12 T2^(i-s-1)`` afterwards. The
optimum gets nothing from level 1 and ``c_last`` instead of ``b2`` at level 2s.
:class:`LevelChain` evaluates that structure; each generator only supplies the
T, a, b, c values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .bounds import (
    Case1,
    Case2,
    Metric,
    Mode,
    beta,
    best_lambda,
    bracket_threshold,
    gamma_identical,
)
from .config import Caps, current_caps
from .dynamics import WalkMode, check_equilibrium, run_walk
from .game import CongestionGame, Player, Resource, StrategyProfile, social_cost
from .latency import LatencyFunction


class Family(str, Enum):
    WEIGHTED_TREE = "weighted-tree"
    WEIGHTED_WALK_TREE = "weighted-walk-tree"
    UNWEIGHTED_MULTIPARTITE = "unweighted-multipartite"
    UNWEIGHTED_WALK_MULTIPARTITE = "unweighted-walk-multipartite"
    IDENTICAL_WEIGHTED = "identical-weighted"
    IDENTICAL_UNWEIGHTED_WALK = "identical-unweighted-walk"


class GeneratorError(ValueError):
    pass


class SizeCapExceeded(GeneratorError):
    pass


# ---------------------------------------------------------------------------
# shared accounting


@dataclass(frozen=True)
class LevelChain:
    s: int
    T1: float
    T12: float
    T2: float
    a1: float
    a2: float
    b1: float
    b2: float
    c_last: float
    scale: float = 1.0

    def products(self) -> list[float]:
        out = []
        for i in range(1, 2 * self.s + 1):
            if i <= self.s:
                out.append(self.T1 ** (i - 1))
            else:
                out.append(self.T1 ** (self.s - 1) * self.T12 * self.T2 ** (i - self.s - 1))
        return out

    def level_sums(self) -> tuple[list[float], list[float]]:
        """Per-level contributions (canonical, optimum)."""
        P = self.products()
        eq, opt = [], []
        for i, p in enumerate(P, start=1):
            a = self.a1 if i <= self.s else self.a2
            b = self.b1 if i <= self.s else self.b2
            eq.append(self.scale * p * a)
            if i == 1:
                opt.append(0.0)
            elif i == 2 * self.s:
                opt.append(self.scale * p * self.c_last)
            else:
                opt.append(self.scale * p * b)
        return eq, opt

    def sums(self) -> tuple[float, float]:
        eq, opt = self.level_sums()
        return math.fsum(eq), math.fsum(opt)

    def leading_ratio(self) -> float:
        """Ratio with the lower-order optimum terms dropped (b at every level, level 1 included)."""
        P = self.products()
        num = sum(p * (self.a1 if i < self.s else self.a2) for i, p in enumerate(P))
        den = sum(p * (self.b1 if i < self.s else self.b2) for i, p in enumerate(P))
        return num / den

    def limit(self, tol: float = 1e-12) -> float | None:
        """s -> infinity limit of the exact ratio, or None if it diverges."""
        T1, T12, T2 = self.T1, self.T12, self.T2
        if T1 > 1 + tol:
            if T2 >= 1 - tol:
                return None
            g1 = T1 / (T1 - 1)
            g2 = T12 / (1 - T2)
            return (g1 * self.a1 + g2 * self.a2) / (g1 * self.b1 + g2 * self.b2)
        if abs(T1 - 1) <= tol:
            if abs(T2 - 1) <= tol:
                return (self.a1 + T12 * self.a2) / (self.b1 + T12 * self.b2)
            if T2 < 1:
                return self.a1 / self.b1
            return None
        # T1 < 1: both sums converge; level 1 dominates the canonical cost
        return self.a1 / (self.b1 * T1) if T1 > 0 else None


@dataclass
class ClosedForm:
    sum_sigma: float
    sum_opt: float
    leading: float | None = None
    limit_n: float | None = None  # n -> infinity at this s (walk tree only)
    limit: float | None = None  # s (and n) -> infinity

    @property
    def ratio(self) -> float:
        return self.sum_sigma / self.sum_opt

    def to_json(self) -> dict:
        return {
            "sum_sigma": self.sum_sigma,
            "sum_opt": self.sum_opt,
            "ratio": self.ratio,
            "leading_ratio": self.leading,
            "limit_n": self.limit_n,
            "limit": self.limit,
        }


@dataclass
class GeneratedInstance:
    family: Family
    game: CongestionGame
    canonical_profile: StrategyProfile
    optimal_profile: StrategyProfile
    closed_form: ClosedForm
    epsilon: float
    params: dict = field(default_factory=dict)
    witness: Case1 | Case2 | None = None
    walk_order: list | None = None
    prescribed: list | None = None
    walk_modes: tuple = ()
    claims_equilibrium: bool = False
    tight_steps: bool = True
    checks: dict = field(default_factory=dict)

    def simulated_ratio(self) -> float:
        return social_cost(self.game, self.canonical_profile) / social_cost(self.game, self.optimal_profile)

    def verify(self, rtol: float = 1e-6) -> dict:
        """Run every check this family supports and store the results in ``checks``."""
        out: dict = {}
        s_eq = social_cost(self.game, self.canonical_profile)
        s_opt = social_cost(self.game, self.optimal_profile)
        out["sum_sigma_rel_err"] = _rel(s_eq, self.closed_form.sum_sigma)
        out["sum_opt_rel_err"] = _rel(s_opt, self.closed_form.sum_opt)
        out["sums_match"] = out["sum_sigma_rel_err"] <= rtol and out["sum_opt_rel_err"] <= rtol
        out["simulated_ratio"] = s_eq / s_opt
        if self.claims_equilibrium:
            rep = check_equilibrium(self.game, self.canonical_profile, self.epsilon)
            out["equilibrium"] = rep.is_equilibrium
            out["equilibrium_worst_ratio"] = rep.worst_ratio
            if self.tight_steps:
                out["max_tightness_error"] = _deviation_tightness(self.game, self.canonical_profile, self.epsilon)
        for mode in self.walk_modes:
            tr = run_walk(
                self.game,
                self.walk_order,
                mode,
                self.epsilon,
                tiebreak="prescribed-choice-list",
                prescribed=self.prescribed,
            )
            key = WalkMode(mode).value
            out[f"walk_{key}_reproduces"] = tr.final_profile.assignment == self.canonical_profile.assignment
            if self.tight_steps:
                target = 1 + self.epsilon
                errs = [abs(st.chosen / st.minimum - target) for st in tr.steps if st.minimum > 0 and _has_choice(self.game, st.player)]
                out[f"walk_{key}_max_tightness_error"] = max(errs, default=0.0)
        self.checks = out
        return out

    def manifest(self) -> dict:
        return {
            "family": self.family.value,
            "params": self.params,
            "epsilon": self.epsilon,
            "witness": None if self.witness is None else self.witness.to_json(),
            "closed_form": self.closed_form.to_json(),
            "n_players": self.game.n_players,
            "n_resources": self.game.n_resources,
            "walk_modes": [WalkMode(m).value for m in self.walk_modes],
            "claims_equilibrium": self.claims_equilibrium,
            "checks": self.checks,
        }

    def instance_json(self) -> dict:
        data = self.game.to_json()
        data["profiles"] = {
            "canonical": self.canonical_profile.to_json(),
            "optimal": self.optimal_profile.to_json(),
        }
        if self.walk_order is not None:
            data["walk"] = {"order": self.walk_order, "prescribed": self.prescribed}
        return data


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def _has_choice(game: CongestionGame, pid) -> bool:
    return len(game.strategy_index[game.player_index[pid]]) > 1


def _deviation_tightness(game: CongestionGame, profile: StrategyProfile, eps: float) -> float:
    """Max |cost / cost-after-moving-to-the-other-strategy - (1+eps)| over two-option singleton players."""
    k = profile.congestion
    worst = 0.0
    for pos, a in enumerate(profile.assignment):
        strats = game.strategy_index[pos]
        if len(strats) != 2:
            continue
        (u,), (v,) = strats[a], strats[1 - a]
        cost = game.latencies[u].eval(k[u])
        dev = game.latencies[v].eval(k[v] + game.weights[pos])
        worst = max(worst, abs(cost / dev - (1 + eps)))
    return worst


def _check_size(players: int, resources: int, caps: Caps):
    if players > caps.max_players or resources > caps.max_resources:
        raise SizeCapExceeded(
            f"instance needs {players} players and {resources} resources; caps are "
            f"{caps.max_players} / {caps.max_resources} (raise via POA_LAB_CAPS)"
        )


def _split_witness(w) -> tuple:
    """(k1, k2, o1, o2, f1, f2) with Case 1 duplicated into both slots."""
    if isinstance(w, Case1):
        return w.k, w.k, w.o, w.o, w.f, w.f
    if isinstance(w, Case2):
        return w.k1, w.k2, w.o1, w.o2, w.f1, w.f2
    raise GeneratorError("witness must be a Case1 or Case2 tuple")


def normalize_weighted_witness(w, metric: Metric):
    """Rescale abscissas so that every o equals 1; the witness value is unchanged."""
    if isinstance(w, Case1):
        f = w.f.scale_abscissa(w.o)
        return Case1(w.k / w.o, 1.0, f, beta(Mode.WEIGHTED, metric, w.k / w.o, 1.0, f))
    k1, k2, o1, o2, f1, f2 = _split_witness(w)
    g1, g2 = f1.scale_abscissa(o1), f2.scale_abscissa(o2)
    from .bounds import make_case2

    return make_case2(Mode.WEIGHTED, metric, k1 / o1, 1.0, g1, k2 / o2, 1.0, g2)


def _require_normalized(w):
    k1, k2, o1, o2, *_ = _split_witness(w)
    if abs(o1 - 1) > 1e-12 or abs(o2 - 1) > 1e-12:
        raise GeneratorError("weighted witness must have o = 1; use normalize_weighted_witness first")


def _require_integer(w):
    k1, k2, o1, o2, *_ = _split_witness(w)
    for v in (k1, k2, o1, o2):
        if float(v) != int(v):
            raise GeneratorError(f"unweighted witness needs integer k and o, got {v}")
    if o1 < 1 or o2 < 1 or k1 < 0 or k2 < 0:
        raise GeneratorError("unweighted witness needs o >= 1 and k >= 0")


# ---------------------------------------------------------------------------
# weighted n-ary trees (equilibrium and walk variants)


class _WeightedTreeGeometry:
    """Weights, abscissa scales and latency constructors for the 2s-level n-ary tree."""

    def __init__(self, s: int, n: int, k1, k2, f1, f2):
        self.s, self.n = s, n
        self.k1, self.k2, self.f1, self.f2 = float(k1), float(k2), f1, f2

    def weight(self, i: int) -> float:
        s, n = self.s, self.n
        if i <= s:
            return (self.k1 / n) ** i
        return (self.k1 / n) ** s * (self.k2 / n) ** (i - s)

    def abscissa(self, i: int) -> float:
        s, n = self.s, self.n
        if i <= s:
            return (n / self.k1) ** (i - 1)
        return (n / self.k1) ** s * (n / self.k2) ** (i - s - 1)

    def latency(self, i: int, A: float) -> LatencyFunction:
        f = self.f1 if i <= self.s else self.f2
        g = f.scale_abscissa(self.abscissa(i)) if self.abscissa(i) != 1.0 else f
        return g.scale_ordinate(A) if A != 1.0 else g

    def level_size(self, i: int) -> int:
        return self.n ** (i - 1)


def _tree_thetas(metric_kind: str, eps: float, n: int, k1, k2, f1, f2):
    """theta(h) functions for the child levels: (first half, transition, second half)."""
    if metric_kind == "poa":
        t1 = f1.eval(k1) / ((1 + eps) * f1.eval(k1 + 1))
        t12 = f1.eval(k1) / ((1 + eps) * f2.eval(k2 + 1))
        t2 = f2.eval(k2) / ((1 + eps) * f2.eval(k2 + 1))
        return (lambda h: t1), (lambda h: t12), (lambda h: t2)
    if metric_kind == "selfish":
        d1 = (1 + eps) * f1.eval(k1 + 1)
        d2 = (1 + eps) * f2.eval(k2 + 1)
        return (
            lambda h: f1.eval(h * k1 / n) / d1,
            lambda h: f1.eval(h * k1 / n) / d2,
            lambda h: f2.eval(h * k2 / n) / d2,
        )
    m1 = (1 + eps) * f1.marginal(k1, 1.0)
    m2 = (1 + eps) * f2.marginal(k2, 1.0)
    return (lambda h: f1.eval(k1) / m1), (lambda h: f1.eval(k1) / m2), (lambda h: f2.eval(k2) / m2)


def _tree_chain(s, n, k1, k2, f1, f2, th1, th12, th2) -> LevelChain:
    hs = range(1, n + 1)
    T1 = sum(th1(h) for h in hs) * k1 / n
    T12 = sum(th12(h) for h in hs) * k1 / n
    T2 = sum(th2(h) for h in hs) * k2 / n
    return LevelChain(
        s, T1, T12, T2, k1 * f1.eval(k1), k2 * f2.eval(k2), f1.eval(1.0), f2.eval(1.0), (k2 + 1) * f2.eval(k2 + 1)
    )


def _build_tree(geo: _WeightedTreeGeometry, child_theta, symmetric: bool, caps: Caps):
    """Materialize the tree. ``child_theta(level, h)`` gives A_child / A_parent."""
    s, n = geo.s, geo.n
    L = 2 * s
    sizes = [geo.level_size(i) for i in range(1, L + 1)]
    n_res = sum(sizes)
    _check_size(n * n_res, n_res, caps)
    if symmetric and n_res > 5000:
        raise SizeCapExceeded("symmetric tree variant is limited to 5000 resources")
    offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(int)
    A_levels = [np.ones(1)]
    for i in range(2, L + 1):
        th = np.array([child_theta(i, h) for h in range(1, n + 1)])
        A_levels.append(np.repeat(A_levels[-1], n) * np.tile(th, sizes[i - 2]))
    resources = []
    lat_cache: dict = {}
    for i in range(1, L + 1):
        for idx, A in enumerate(A_levels[i - 1]):
            key = (i, float(A))
            if key not in lat_cache:
                lat_cache[key] = geo.latency(i, float(A))
            resources.append(Resource(int(offsets[i - 1] + idx), lat_cache[key]))
    players, order_keys, second_idx = [], [], []
    pid = 0
    all_res = tuple((r.id,) for r in resources) if symmetric else None
    for i in range(1, L + 1):
        w = geo.weight(i)
        base = int(offsets[i - 1])
        for idx in range(sizes[i - 1]):
            tail = base + idx
            for h in range(1, n + 1):
                if i < L:
                    head = int(offsets[i]) + idx * n + (h - 1)
                    strats = ((tail,), (head,))
                else:
                    strats = ((tail,),)
                second_idx.append(1 if i < L else 0)
                if symmetric:
                    rest = tuple(r for r in all_res if r not in strats)
                    strats = strats + rest
                players.append(Player(pid, w, strats))
                order_keys.append((-i, h if i < L else 0, idx, pid))
                pid += 1
    game = CongestionGame(resources, players)
    first = StrategyProfile(game, [0] * len(players))
    second = StrategyProfile(game, second_idx)  # self-loops keep the tail
    order = [k[-1] for k in sorted(order_keys)]
    return game, first, second, order


def gen_weighted_tree(
    s: int,
    n: int,
    witness,
    epsilon: float = 0.0,
    symmetric: bool = False,
    caps: Caps | None = None,
) -> GeneratedInstance:
    """Equilibrium lower bound for weighted load balancing via a 2s-level n-ary tree."""
    if s < 1 or n < 1:
        raise GeneratorError("need s >= 1 and n >= 1")
    _require_normalized(witness)
    caps = caps or current_caps()
    k1, k2, _, _, f1, f2 = _split_witness(witness)
    th1, th12, th2 = _tree_thetas("poa", epsilon, n, k1, k2, f1, f2)
    geo = _WeightedTreeGeometry(s, n, k1, k2, f1, f2)

    def child_theta(i, h):
        return th1(h) if i <= s else (th12(h) if i == s + 1 else th2(h))

    game, first, second, _ = _build_tree(geo, child_theta, symmetric, caps)
    chain = _tree_chain(s, n, k1, k2, f1, f2, th1, th12, th2)
    eq, opt = chain.sums()
    cf = ClosedForm(eq, opt, chain.leading_ratio(), None, chain.limit())
    return GeneratedInstance(
        Family.WEIGHTED_TREE,
        game,
        first,
        second,
        cf,
        epsilon,
        {"s": s, "n": n, "symmetric": symmetric},
        witness,
        claims_equilibrium=True,
        tight_steps=not symmetric,
    )


def weighted_tree_closed_form(s: int, witness, epsilon: float = 0.0) -> ClosedForm:
    """Closed forms only; the ratio does not depend on n."""
    _require_normalized(witness)
    k1, k2, _, _, f1, f2 = _split_witness(witness)
    th = _tree_thetas("poa", epsilon, 1, k1, k2, f1, f2)
    chain = _tree_chain(s, 1, k1, k2, f1, f2, *th)
    eq, opt = chain.sums()
    return ClosedForm(eq, opt, chain.leading_ratio(), None, chain.limit())


def tree_equilibrium_local_check(s: int, n: int, witness, epsilon: float = 0.0) -> float:
    """Deviation tightness of the restricted equilibrium tree without building it.

    A player on level i only compares its tail (congestion n w_i) with its
    head after moving (n w_(i+1) + w_i); level latencies are uniform, so one
    check per level suffices. Returns max |cost / deviation - (1+eps)|.
    """
    _require_normalized(witness)
    k1, k2, _, _, f1, f2 = _split_witness(witness)
    t1, t12, t2 = (th(1) for th in _tree_thetas("poa", epsilon, n, k1, k2, f1, f2))
    geo = _WeightedTreeGeometry(s, n, k1, k2, f1, f2)

    def A(i):
        return t1 ** (i - 1) if i <= s else t1 ** (s - 1) * t12 * t2 ** (i - s - 1)

    worst = 0.0
    for i in range(1, 2 * s):
        cost = geo.latency(i, A(i)).eval(n * geo.weight(i))
        dev = geo.latency(i + 1, A(i + 1)).eval(n * geo.weight(i + 1) + geo.weight(i))
        worst = max(worst, abs(cost / dev - (1 + epsilon)))
    return worst


def smallest_equilibrium_n(s: int, witness, epsilon: float = 0.0, n_max: int = 64, caps: Caps | None = None) -> int | None:
    """Double n from 1 until the symmetric tree's canonical profile is an equilibrium."""
    n = 1
    while n <= n_max:
        try:
            inst = gen_weighted_tree(s, n, witness, epsilon, symmetric=True, caps=caps)
        except SizeCapExceeded:
            return None
        if check_equilibrium(inst.game, inst.canonical_profile, epsilon).is_equilibrium:
            return n
        n *= 2
    return None


def _walk_tree_parts(s, n, witness, epsilon, mode: WalkMode):
    k1, k2, _, _, f1, f2 = _split_witness(witness)
    kind = "selfish" if mode is WalkMode.SELFISH else "cooperative"
    th1, th12, th2 = _tree_thetas(kind, epsilon, n, k1, k2, f1, f2)
    return k1, k2, f1, f2, th1, th12, th2


def weighted_walk_tree_closed_form(s: int, n: int, witness, epsilon: float = 0.0, mode=WalkMode.SELFISH) -> ClosedForm:
    mode = WalkMode(mode)
    _require_normalized(witness)
    if mode is WalkMode.COOPERATIVE and n != 1:
        raise GeneratorError("the cooperative walk tree uses n = 1")
    k1, k2, f1, f2, th1, th12, th2 = _walk_tree_parts(s, n, witness, epsilon, mode)
    chain = _tree_chain(s, n, k1, k2, f1, f2, th1, th12, th2)
    eq, opt = chain.sums()
    if mode is WalkMode.SELFISH:
        d1 = (1 + epsilon) * f1.eval(k1 + 1)
        d2 = (1 + epsilon) * f2.eval(k2 + 1)
        xi = LevelChain(
            s, f1.integral(k1) / d1, f1.integral(k1) / d2, f2.integral(k2) / d2,
            chain.a1, chain.a2, chain.b1, chain.b2, chain.c_last,
        )
        e_n, o_n = xi.sums()
        return ClosedForm(eq, opt, chain.leading_ratio(), e_n / o_n, xi.limit())
    return ClosedForm(eq, opt, chain.leading_ratio(), eq / opt, chain.limit())


def gen_weighted_walk_tree(
    s: int,
    n: int,
    witness,
    epsilon: float = 0.0,
    mode: WalkMode | str = WalkMode.SELFISH,
    caps: Caps | None = None,
) -> GeneratedInstance:
    """One-round-walk lower bound for weighted load balancing (labelled n-ary tree)."""
    mode = WalkMode(mode)
    if mode is WalkMode.COOPERATIVE and n != 1:
        raise GeneratorError("the cooperative walk tree uses n = 1")
    _require_normalized(witness)
    caps = caps or current_caps()
    k1, k2, f1, f2, th1, th12, th2 = _walk_tree_parts(s, n, witness, epsilon, mode)
    geo = _WeightedTreeGeometry(s, n, k1, k2, f1, f2)

    def child_theta(i, h):
        return th1(h) if i <= s else (th12(h) if i == s + 1 else th2(h))

    game, first, second, order = _build_tree(geo, child_theta, False, caps)
    cf = weighted_walk_tree_closed_form(s, n, witness, epsilon, mode)
    return GeneratedInstance(
        Family.WEIGHTED_WALK_TREE,
        game,
        first,
        second,
        cf,
        epsilon,
        {"s": s, "n": n, "mode": mode.value},
        witness,
        walk_order=order,
        prescribed=[0] * len(order),
        walk_modes=(mode,),
    )


def walk_tree_local_check(s: int, n: int, witness, epsilon: float = 0.0, mode=WalkMode.SELFISH) -> float:
    """Step tightness for trees too large to build.

    Every arrival in the walk only sees its own tail u and head v. The ratio of
    the two candidate costs depends on the level and the head label, not on
    A_u, so one star per (level, label) class with A_u = 1 covers the whole
    tree. Returns the max |cost_u / cost_v - (1+eps)|.
    """
    mode = WalkMode(mode)
    if mode is WalkMode.COOPERATIVE and n != 1:
        raise GeneratorError("the cooperative walk tree uses n = 1")
    _require_normalized(witness)
    k1, k2, f1, f2, th1, th12, th2 = _walk_tree_parts(s, n, witness, epsilon, mode)
    geo = _WeightedTreeGeometry(s, n, k1, k2, f1, f2)
    worst = 0.0
    for i in range(1, 2 * s):
        g_u = geo.latency(i, 1.0)
        w_i, w_next = geo.weight(i), geo.weight(i + 1)
        for h in range(1, n + 1):
            th = th1(h) if i + 1 <= s else (th12(h) if i + 1 == s + 1 else th2(h))
            g_v = geo.latency(i + 1, th)
            before_u = (h - 1) * w_i
            before_v = n * w_next
            if mode is WalkMode.SELFISH:
                cu = g_u.eval(before_u + w_i)
                cv = g_v.eval(before_v + w_i)
            else:
                cu = (before_u + w_i) * g_u.eval(before_u + w_i) - before_u * g_u.eval(before_u)
                cv = (before_v + w_i) * g_v.eval(before_v + w_i) - before_v * g_v.eval(before_v)
            worst = max(worst, abs(cu / cv - (1 + epsilon)))
    return worst


# ---------------------------------------------------------------------------
# unweighted multipartite graphs


def _multipartite_sizes(s: int, k1: int, k2: int, o1: int, o2: int) -> list[int]:
    out = []
    for i in range(1, 2 * s + 1):
        if i <= s:
            out.append(o1 ** (s - i) * k1 ** (i - 1) * o2**s)
        else:
            out.append(o2 ** (2 * s - i) * k2 ** (i - s - 1) * k1**s)
    return out


def _level_params(s, i, k1, k2, o1, o2):
    """(out-degree of level i, in-degree of level i+1)."""
    k = k1 if i <= s else k2
    o = o1 if i + 1 <= s else o2
    return k, o


def _unweighted_thetas(kind: str, eps: float, k1, k2, f1, f2):
    if kind == "poa":
        t1 = f1.eval(k1) / ((1 + eps) * f1.eval(k1 + 1.0))
        t12 = f1.eval(k1) / ((1 + eps) * f2.eval(k2 + 1.0))
        t2 = f2.eval(k2) / ((1 + eps) * f2.eval(k2 + 1.0))
        return (lambda h: t1), (lambda h: t12), (lambda h: t2)
    if kind == "selfish":
        d1 = (1 + eps) * f1.eval(k1 + 1.0)
        d2 = (1 + eps) * f2.eval(k2 + 1.0)
        return (lambda h: f1.eval(float(h)) / d1), (lambda h: f1.eval(float(h)) / d2), (lambda h: f2.eval(float(h)) / d2)
    m1 = (1 + eps) * f1.marginal(k1, 1.0)
    m2 = (1 + eps) * f2.marginal(k2, 1.0)

    def step(f, h):
        return h * f.eval(float(h)) - ((h - 1) * f.eval(float(h - 1)) if h > 1 else 0.0)

    return (lambda h: step(f1, h) / m1), (lambda h: step(f1, h) / m2), (lambda h: step(f2, h) / m2)


def _unweighted_chain(s, k1, k2, o1, o2, f1, f2, th1, th12, th2, walk: bool) -> LevelChain:
    if walk:
        T1 = sum(th1(h) for h in range(1, k1 + 1)) / o1
        T12 = sum(th12(h) for h in range(1, k1 + 1)) / o2
        T2 = sum(th2(h) for h in range(1, k2 + 1)) / o2
    else:
        T1, T12, T2 = k1 * th1(1) / o1, k1 * th12(1) / o2, k2 * th2(1) / o2
    return LevelChain(
        s,
        T1,
        T12,
        T2,
        k1 * f1.eval(float(k1)),
        k2 * f2.eval(float(k2)),
        o1 * f1.eval(float(o1)),
        o2 * f2.eval(float(o2)),
        (k2 + o2) * f2.eval(float(k2 + o2)),
        float(o1 ** (s - 1) * o2**s),
    )


def unweighted_multipartite_closed_form(s: int, witness, epsilon: float = 0.0, mode: str = "poa") -> ClosedForm:
    """mode: "poa" (equilibrium family) or a WalkMode value (walk family)."""
    _require_integer(witness)
    k1, k2, o1, o2, f1, f2 = (int(v) if not isinstance(v, LatencyFunction) else v for v in _split_witness(witness))
    kind = "poa" if mode == "poa" else WalkMode(mode).value
    th = _unweighted_thetas(kind, epsilon, k1, k2, f1, f2)
    chain = _unweighted_chain(s, k1, k2, o1, o2, f1, f2, *th, walk=kind != "poa")
    eq, opt = chain.sums()
    return ClosedForm(eq, opt, chain.leading_ratio(), None, chain.limit())


def _multipartite_game(s, k1, k2, o1, o2, f1, f2, A_of, wiring, caps: Caps):
    """Shared builder. ``wiring(i)`` yields (tail_local, head_local, label) for level i -> i+1."""
    sizes = _multipartite_sizes(s, k1, k2, o1, o2)
    n_res = sum(sizes)
    n_players = sum(sizes[i] * (k1 if i < s else k2) for i in range(2 * s))
    _check_size(n_players, n_res, caps)
    offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(int)
    players, order_keys = [], []
    pid = 0
    for i in range(1, 2 * s):
        for tail, head, label in wiring(i):
            players.append(Player(pid, 1.0, ((int(offsets[i - 1] + tail),), (int(offsets[i] + head),))))
            order_keys.append((-i, label, tail, pid))
            pid += 1
    last = 2 * s
    for idx in range(sizes[last - 1]):
        for t in range(k2):
            players.append(Player(pid, 1.0, ((int(offsets[last - 1] + idx),),)))
            order_keys.append((-last, 0, idx, pid))
            pid += 1
    resources = []
    cache: dict = {}
    for i in range(1, 2 * s + 1):
        f = f1 if i <= s else f2
        for idx in range(sizes[i - 1]):
            A = A_of(i, idx)
            key = (i <= s, A)
            if key not in cache:
                cache[key] = f.scale_ordinate(A) if A != 1.0 else f
            resources.append(Resource(int(offsets[i - 1] + idx), cache[key]))
    game = CongestionGame(resources, players)
    first = StrategyProfile(game, [0] * len(players))
    second = StrategyProfile(game, [min(1, len(p.strategies) - 1) for p in players])
    order = [key[-1] for key in sorted(order_keys)]
    return game, first, second, order


def gen_unweighted_multipartite(s: int, witness, epsilon: float = 0.0, caps: Caps | None = None) -> GeneratedInstance:
    """Equilibrium lower bound for unweighted load balancing (multipartite graph)."""
    if s < 1:
        raise GeneratorError("need s >= 1")
    _require_integer(witness)
    caps = caps or current_caps()
    k1, k2, o1, o2, f1, f2 = (int(v) if not isinstance(v, LatencyFunction) else v for v in _split_witness(witness))
    th1, th12, th2 = _unweighted_thetas("poa", epsilon, k1, k2, f1, f2)
    t1, t12, t2 = th1(1), th12(1), th2(1)
    sizes = _multipartite_sizes(s, k1, k2, o1, o2)

    def A_of(i, idx):
        return t1 ** (i - 1) if i <= s else t1 ** (s - 1) * t12 * t2 ** (i - s - 1)

    def wiring(i):
        k, o = _level_params(s, i, k1, k2, o1, o2)
        for a in range(sizes[i - 1]):
            for t in range(k):
                yield a, (a * k + t) // o, 0

    game, first, second, _ = _multipartite_game(s, k1, k2, o1, o2, f1, f2, A_of, wiring, caps)
    cf = unweighted_multipartite_closed_form(s, witness, epsilon, "poa")
    return GeneratedInstance(
        Family.UNWEIGHTED_MULTIPARTITE,
        game,
        first,
        second,
        cf,
        epsilon,
        {"s": s},
        witness,
        claims_equilibrium=True,
    )


@dataclass
class _Group:
    start: int
    size: int
    A: float


def _walk_groups(s, k1, k2, o1, o2, th1, th12, th2):
    """Group recursion: yields per level the edge list and per-node A values.

    Returns (edges_by_level, A_by_level, a_independent).
    """
    sizes = _multipartite_sizes(s, k1, k2, o1, o2)
    groups = [_Group(0, sizes[0], 1.0)]
    A_levels = [np.ones(sizes[0])]
    edges: dict[int, list] = {}
    independent = True
    for i in range(1, 2 * s):
        k, o = _level_params(s, i, k1, k2, o1, o2)
        th = th1 if i + 1 <= s else (th12 if i + 1 == s + 1 else th2)
        nxt = sizes[i]
        A_next = np.full(nxt, np.nan)
        new_groups = []
        lst = []
        block = nxt // len(groups) if groups and nxt else 0
        for gi, G in enumerate(groups):
            if k == 0 or G.size == 0:
                continue
            c = G.size // o
            if c * o != G.size or c * k != block:
                raise GeneratorError("group sizes are not divisible; witness/level sizes inconsistent")
            gstart = gi * block
            for q in range(k):
                A_child = th(q + 1) * G.A
                new_groups.append(_Group(gstart + q * c, c, A_child))
                for r in range(c):
                    head = gstart + q * c + r
                    for p in range(o):
                        tail = G.start + p * c + r
                        lst.append((tail, head, q + 1))
                        # A-independence: every parent proposes the same A for this head
                        proposal = th(q + 1) * A_levels[i - 1][tail]
                        if np.isnan(A_next[head]):
                            A_next[head] = proposal
                        elif A_next[head] != proposal:
                            independent = False
        edges[i] = lst
        groups = new_groups
        A_levels.append(A_next)
    return edges, A_levels, independent


def gen_unweighted_walk_multipartite(
    s: int,
    witness,
    epsilon: float = 0.0,
    mode: WalkMode | str = WalkMode.SELFISH,
    caps: Caps | None = None,
) -> GeneratedInstance:
    """One-round-walk lower bound for unweighted load balancing (labelled multipartite graph)."""
    mode = WalkMode(mode)
    if s < 1:
        raise GeneratorError("need s >= 1")
    _require_integer(witness)
    caps = caps or current_caps()
    k1, k2, o1, o2, f1, f2 = (int(v) if not isinstance(v, LatencyFunction) else v for v in _split_witness(witness))
    th1, th12, th2 = _unweighted_thetas(mode.value, epsilon, k1, k2, f1, f2)
    sizes = _multipartite_sizes(s, k1, k2, o1, o2)
    _check_size(sum(sizes) * max(k1, k2, 1), sum(sizes), caps)
    edges, A_levels, independent = _walk_groups(s, k1, k2, o1, o2, th1, th12, th2)
    if not independent:
        raise GeneratorError("A_v differs between parents; labelling is inconsistent")

    def A_of(i, idx):
        return float(A_levels[i - 1][idx])

    def wiring(i):
        # keep each tail's edges in label order
        for tail, head, label in sorted(edges.get(i, []), key=lambda e: (e[0], e[2])):
            yield tail, head, label

    game, first, second, order = _multipartite_game(s, k1, k2, o1, o2, f1, f2, A_of, wiring, caps)
    cf = unweighted_multipartite_closed_form(s, witness, epsilon, mode.value)
    inst = GeneratedInstance(
        Family.UNWEIGHTED_WALK_MULTIPARTITE,
        game,
        first,
        second,
        cf,
        epsilon,
        {"s": s, "mode": mode.value, "a_independent": independent},
        witness,
        walk_order=order,
        prescribed=[0] * len(order),
        walk_modes=(mode,),
    )
    return inst


# ---------------------------------------------------------------------------
# identical resources, weighted: red/blue subdivision instance


def _frac(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, int):
        return Fraction(v)
    return Fraction(v).limit_denominator(10**9)


def identical_weighted_closed_form(x, h: int, m: int, f: LatencyFunction, bracket) -> ClosedForm:
    lam = h / m
    xf, b = float(x), float(bracket)
    opt = lam * xf + (1 - lam) * b
    eq = h * xf * f.eval(xf) + (m - h) * (b * f.eval(b) if b > 0 else 0.0)
    return ClosedForm(eq, m * opt * f.eval(opt), None, None, None)


def gen_identical_weighted(
    x,
    m: int,
    epsilon: float,
    f: LatencyFunction,
    h: int | None = None,
    bracket=None,
) -> GeneratedInstance:
    """Symmetric singleton game on m identical resources with red and blue players.

    ``h`` defaults to ceil(m * lambda*(x)). ``bracket`` overrides the computed
    second-group congestion (useful when it is known exactly, e.g. 8/3).
    """
    if m < 2 or m % 2:
        raise GeneratorError("m must be an even integer >= 2")
    xq = _frac(x)
    if xq <= 0:
        raise GeneratorError("x must be positive")
    bq = _frac(bracket_threshold(f, epsilon, float(xq)) if bracket is None else bracket)
    lam_star = None
    if h is None:
        lam_star, _ = best_lambda(epsilon, f, float(xq))
        h = max(1, math.ceil(m * lam_star - 1e-6))
    if not 1 <= h <= m // 2:
        raise GeneratorError(f"h = {h} must lie in [1, m/2]; lambda*(x) > 1/2 is outside the construction")
    opt = Fraction(h, m) * xq + (1 - Fraction(h, m)) * bq
    dark = opt - xq / 2
    if dark < 0:
        raise GeneratorError("applicability condition fails: opt congestion is below x/2")
    total = (m - h) * bq
    if abs(total - (2 * h * dark + (m - 2 * h) * opt)) > Fraction(1, 10**12):
        raise GeneratorError("subdivision totals differ")
    # overlap of the two subdivisions of [0, total]
    cuts1 = [bq * j for j in range(1, m - h + 1)]
    cuts2 = [dark * j for j in range(1, 2 * h + 1)] + [2 * h * dark + opt * j for j in range(1, m - 2 * h + 1)]
    points = sorted(set([Fraction(0)] + cuts1 + cuts2))
    resources = [Resource(e, f) for e in range(m)]
    every = tuple((e,) for e in range(m))
    players = []
    eq_assign, opt_assign = [], []
    half = xq / 2
    for r in range(2 * h):
        players.append(Player(f"r{r}", float(half), every))
        eq_assign.append(r // 2)
        opt_assign.append(r)
    b_idx = 0
    for lo, hi in zip(points, points[1:]):
        w = hi - lo
        if w == 0:
            continue
        mid = (lo + hi) / 2
        seg1 = int(mid // bq) if bq > 0 else 0
        # which interval of subdivision 2 contains mid
        if mid < 2 * h * dark:
            seg2 = int(mid // dark)
        else:
            seg2 = 2 * h + int((mid - 2 * h * dark) // opt)
        players.append(Player(f"b{b_idx}", float(w), every))
        eq_assign.append(h + seg1)
        opt_assign.append(seg2)
        b_idx += 1
    game = CongestionGame(resources, players)
    sigma = StrategyProfile(game, eq_assign)
    star = StrategyProfile(game, opt_assign)
    cf = identical_weighted_closed_form(xq, h, m, f, bq)
    params = {"x": str(xq), "m": m, "h": h, "bracket": str(bq), "lambda": h / m}
    if lam_star is not None:
        params["lambda_star"] = lam_star
    inst = GeneratedInstance(
        Family.IDENTICAL_WEIGHTED,
        game,
        sigma,
        star,
        cf,
        epsilon,
        params,
        None,
        claims_equilibrium=True,
        tight_steps=False,
    )
    inst.params["gamma"] = gamma_identical(epsilon, f, float(xq), h / m, float(bq))
    return inst


# ---------------------------------------------------------------------------
# identical resources, unweighted one-round walks


def reference_o_sequence(start: int, stop: int) -> np.ndarray:
    """o_i = floor(0.44411 i + 1 + floor(sqrt(i) / 7)) for i in [start, stop), exact integer arithmetic."""
    i = np.arange(start, stop, dtype=np.int64)
    r = np.floor(np.sqrt(i.astype(float))).astype(np.int64)
    r -= (r * r > i).astype(np.int64)
    r += ((r + 1) * (r + 1) <= i).astype(np.int64)
    return (44411 * i) // 100000 + 1 + r // 7


def _validate_o(o: np.ndarray):
    if o.size == 0 or o[0] != 1:
        raise GeneratorError("the o sequence must start with o_1 = 1")
    if np.any(np.diff(o) < 0):
        raise GeneratorError("the o sequence must be non-decreasing")


def identical_walk_ratio(
    n: int,
    f: LatencyFunction,
    o_sequence: Sequence[int] | Callable[[int, int], np.ndarray] | None = None,
    chunk: int = 1_000_000,
    progress: Callable[[int], None] | None = None,
) -> float:
    """Ratio of the nested-set walk outcome to the optimum, by direct summation.

    Sizes are tracked relative to |E_0| = 1 in log space, chunk by chunk, so n
    can be far larger than memory allows.
    """
    if n < 1:
        raise GeneratorError("n must be >= 1")
    if o_sequence is None:
        o_sequence = reference_o_sequence
    if callable(o_sequence):
        get = o_sequence
    else:
        arr = np.asarray(o_sequence, dtype=np.int64)
        if arr.size < n:
            raise GeneratorError("o sequence shorter than n")
        _validate_o(arr[:n])
        get = lambda a, b: arr[a - 1 : b - 1]
    num = den = 0.0
    log_prev = 0.0  # log |E_{i-1}|
    prev_o_last = 1
    for a in range(1, n + 1, chunk):
        b = min(n + 1, a + chunk)
        o = get(a, b).astype(float)
        if a == 1 and o[0] != 1:
            raise GeneratorError("the o sequence must start with o_1 = 1")
        if o[0] < prev_o_last or np.any(np.diff(o) < 0):
            raise GeneratorError("the o sequence must be non-decreasing")
        prev_o_last = o[-1]
        logs = log_prev + np.cumsum(np.log(o / (o + 1)))  # log |E_i|, i in [a, b)
        e_prev = np.exp(np.concatenate([[log_prev], logs[:-1]]))
        e_cur = np.exp(logs)
        i = np.arange(a, b, dtype=float)
        den += float(np.sum((e_prev - e_cur) * o * f.eval_array(o)))
        # |E_i| - |E_{i+1}| = |E_i| / (o_{i+1} + 1) for i < n, and |E_n| at i = n
        if b <= n:
            o_next = np.concatenate([o[1:], get(b, b + 1).astype(float)])
        else:
            o_next = np.concatenate([o[1:], [np.inf]])
        drop = np.where(np.isinf(o_next), e_cur, e_cur / (o_next + 1))
        num += float(np.sum(drop * i * f.eval_array(i)))
        log_prev = float(logs[-1])
        if progress is not None:
            progress(b - 1)
    return num / den


def _integer_sizes(o: Sequence[int], cap: int) -> list[int]:
    """Smallest integer |E_0| >= ... making every |E_i| = |E_{i-1}| o_i / (o_i + 1) integral."""
    rel = [Fraction(1)]
    for oi in o:
        rel.append(rel[-1] * Fraction(oi, oi + 1))
    lcm = 1
    for r in rel:
        lcm = lcm * r.denominator // math.gcd(lcm, r.denominator)
        if lcm > cap:
            raise SizeCapExceeded(f"integer realization needs |E_0| > {cap}; use the analytic mode")
    return [int(r * lcm) for r in rel]


def gen_identical_unweighted_walk(
    n: int,
    o_sequence: Sequence[int],
    f: LatencyFunction,
    representation: str = "materialized",
    caps: Caps | None = None,
):
    """Nested resource sets E_0 ⊃ E_1 ⊃ ... with players of type i restricted to E_{i-1}.

    ``representation="analytic"`` returns only the ratio (a float).
    """
    o = np.asarray(list(o_sequence)[:n], dtype=np.int64)
    if o.size < n:
        raise GeneratorError("o sequence shorter than n")
    _validate_o(o)
    if representation == "analytic":
        return identical_walk_ratio(n, f, o)
    if representation != "materialized":
        raise GeneratorError(f"unknown representation {representation!r}")
    caps = caps or current_caps()
    sizes = _integer_sizes([int(v) for v in o], caps.lcm_cap)
    n_players = sum(sizes[1:])
    _check_size(n_players, sizes[0], caps)
    resources = [Resource(e, f) for e in range(sizes[0])]
    players, sigma, star = [], [], []
    pid = 0
    for i in range(1, n + 1):
        strat = tuple((e,) for e in range(sizes[i - 1]))  # E_{i-1} as a prefix of the resources
        oi = int(o[i - 1])
        for j in range(sizes[i]):
            players.append(Player(pid, 1.0, strat))
            sigma.append(j)  # a distinct resource of E_i
            star.append(sizes[i] + j // oi)  # o_i players per resource of E_{i-1} \ E_i
            pid += 1
    game = CongestionGame(resources, players)
    cf_num = sum((sizes[i] - (sizes[i + 1] if i < n else 0)) * i * f.eval(float(i)) for i in range(1, n + 1))
    cf_den = sum((sizes[i - 1] - sizes[i]) * int(o[i - 1]) * f.eval(float(o[i - 1])) for i in range(1, n + 1))
    ratio = identical_walk_ratio(n, f, o)
    cf = ClosedForm(cf_num, cf_den, None, None, ratio)
    return GeneratedInstance(
        Family.IDENTICAL_UNWEIGHTED_WALK,
        game,
        StrategyProfile(game, sigma),
        StrategyProfile(game, star),
        cf,
        0.0,
        {"n": n, "o": [int(v) for v in o], "sizes": sizes},
        None,
        walk_order=list(range(pid)),
        prescribed=sigma,
        walk_modes=(WalkMode.SELFISH, WalkMode.COOPERATIVE),
        tight_steps=False,
    )
