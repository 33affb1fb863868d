"""Efficiency bounds: beta/gamma formulas, min-max solvers and witnesses.

Conventions used throughout:

* ``mode`` is ``"weighted"`` (real congestions, k, o > 0) or ``"unweighted"``
  (integer congestions, k >= 0, o >= 1).
* ``metric`` is a :class:`Metric`: the kind (PoA, selfish or cooperative
  competitive ratio) plus the approximation slack ``epsilon``.
* A latency *class* is :class:`PolynomialClass` (all polynomials with
  non-negative coefficients up to a degree) or :class:`FiniteClass`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import optimize

from .config import TOL, Caps, current_caps
from .latency import LatencyFunction, Polynomial

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class MetricKind(str, Enum):
    POA = "poa"
    CR_SELFISH = "crs"
    CR_COOPERATIVE = "crc"


class Mode(str, Enum):
    WEIGHTED = "weighted"
    UNWEIGHTED = "unweighted"


@dataclass(frozen=True)
class Metric:
    kind: MetricKind
    epsilon: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", MetricKind(self.kind))
        if not (self.epsilon >= 0) or not math.isfinite(self.epsilon):
            raise ValueError(f"epsilon must be a finite non-negative number, got {self.epsilon}")

    @classmethod
    def parse(cls, text: str, epsilon: float = 0.0) -> "Metric":
        aliases = {
            "poa": MetricKind.POA,
            "crs": MetricKind.CR_SELFISH,
            "cr-s": MetricKind.CR_SELFISH,
            "selfish": MetricKind.CR_SELFISH,
            "crc": MetricKind.CR_COOPERATIVE,
            "cr-c": MetricKind.CR_COOPERATIVE,
            "cooperative": MetricKind.CR_COOPERATIVE,
        }
        key = text.strip().lower()
        if key not in aliases:
            raise ValueError(f"unknown metric {text!r}")
        return cls(aliases[key], epsilon)


class BoundError(ValueError):
    pass


class WitnessNotFound(BoundError):
    pass


# ---------------------------------------------------------------------------
# latency classes


@dataclass(frozen=True)
class PolynomialClass:
    degree: int

    def __post_init__(self):
        if self.degree < 0:
            raise BoundError("polynomial degree must be >= 0")

    @property
    def constant_only(self) -> bool:
        return self.degree == 0

    def basis(self) -> list[Polynomial]:
        return [Polynomial.monomial(h) for h in range(self.degree + 1)]


@dataclass(frozen=True)
class FiniteClass:
    functions: tuple

    def __init__(self, functions: Iterable[LatencyFunction]):
        object.__setattr__(self, "functions", tuple(functions))
        if not self.functions:
            raise BoundError("finite latency class must not be empty")

    @property
    def constant_only(self) -> bool:
        return all(f.is_constant for f in self.functions)

    def basis(self) -> list[LatencyFunction]:
        return list(self.functions)


# ---------------------------------------------------------------------------
# witnesses


@dataclass
class Case1:
    k: float
    o: float
    f: LatencyFunction
    beta: float = float("nan")

    def value(self) -> float:
        return self.k * self.f.eval(self.k) / (self.o * self.f.eval(self.o))

    def to_json(self) -> dict:
        return {"case": 1, "k": self.k, "o": self.o, "f": _lat_json(self.f), "beta": self.beta, "value": self.value()}


@dataclass
class Case2:
    k1: float
    k2: float
    o1: float
    o2: float
    f1: LatencyFunction
    f2: LatencyFunction
    alpha1: float
    alpha2: float

    def value(self) -> float:
        num = self.alpha1 * self.k1 * self.f1.eval(self.k1) + self.alpha2 * self.k2 * self.f2.eval(self.k2)
        den = self.alpha1 * self.o1 * self.f1.eval(self.o1) + self.alpha2 * self.o2 * self.f2.eval(self.o2)
        return num / den

    def to_json(self) -> dict:
        return {
            "case": 2,
            "k1": self.k1,
            "k2": self.k2,
            "o1": self.o1,
            "o2": self.o2,
            "f1": _lat_json(self.f1),
            "f2": _lat_json(self.f2),
            "alpha1": self.alpha1,
            "alpha2": self.alpha2,
            "value": self.value(),
        }


Witness = Case1 | Case2


def _lat_json(f: LatencyFunction):
    try:
        return f.to_json()
    except Exception:
        return repr(f)


def witness_from_json(obj: dict) -> Witness:
    from .latency import from_json

    if obj["case"] == 1:
        return Case1(obj["k"], obj["o"], from_json(obj["f"]), obj.get("beta", float("nan")))
    return Case2(
        obj["k1"], obj["k2"], obj["o1"], obj["o2"], from_json(obj["f1"]), from_json(obj["f2"]), obj["alpha1"], obj["alpha2"]
    )


def make_case2(mode, metric: Metric, k1, o1, f1, k2, o2, f2) -> Case2:
    """Case-2 witness from two tuples; alpha values are derived, not given."""
    a1 = beta(mode, metric, k2, o2, f2)
    a2 = -beta(mode, metric, k1, o1, f1)
    if not (a1 > 0 and a2 > 0):
        raise BoundError(f"not a Case-2 pair: alpha1={a1}, alpha2={a2}")
    return Case2(k1, k2, o1, o2, f1, f2, a1, a2)


# ---------------------------------------------------------------------------
# beta and the parametric gamma


def _unweighted_sum(f: LatencyFunction, k: int) -> float:
    if isinstance(f, Polynomial):
        # sum_{j=1..k} j^h via numpy for moderate k
        js = np.arange(1, k + 1, dtype=float)
        return float(np.sum(f.eval_array(js))) if k > 0 else 0.0
    return float(sum(f.eval(float(j)) for j in range(1, k + 1)))


def beta(mode: Mode | str, metric: Metric, k, o, f: LatencyFunction) -> float:
    mode = Mode(mode)
    eps = metric.epsilon
    kind = metric.kind
    if mode is Mode.WEIGHTED:
        k, o = float(k), float(o)
        if not (k > 0 and o > 0):
            raise BoundError(f"weighted beta needs k, o > 0, got k={k}, o={o}")
        kfk = k * f.eval(k)
        if kind is MetricKind.POA:
            return -kfk + (1 + eps) * o * f.eval(k + o)
        if kind is MetricKind.CR_SELFISH:
            return -f.integral(k) + (1 + eps) * o * f.eval(k + o)
        return -kfk + (1 + eps) * ((k + o) * f.eval(k + o) - kfk)
    if int(k) != k or int(o) != o or k < 0 or o < 1:
        raise BoundError(f"unweighted beta needs integers k >= 0, o >= 1, got k={k}, o={o}")
    k, o = int(k), int(o)
    kfk = k * f.eval(float(k)) if k > 0 else 0.0
    if kind is MetricKind.POA:
        return -kfk + (1 + eps) * o * f.eval(k + 1.0)
    if kind is MetricKind.CR_SELFISH:
        return -_unweighted_sum(f, k) + (1 + eps) * o * f.eval(k + 1.0)
    return -kfk + (1 + eps) * ((k + 1) * f.eval(k + 1.0) - kfk)


def gamma_param(mode: Mode | str, metric: Metric, x: float, k, o, f: LatencyFunction) -> float:
    den = float(o) * f.eval(float(o))
    if den <= 0:
        raise BoundError("o * f(o) must be positive")
    kfk = float(k) * f.eval(float(k)) if float(k) > 0 else 0.0
    return (kfk + x * beta(mode, metric, k, o, f)) / den


# ---------------------------------------------------------------------------
# results


@dataclass
class BoundResult:
    value: float
    x: float
    witness: Witness | None
    mode: Mode
    metric: Metric
    status: str = "exact"  # exact | upper-estimate | lower-bound | cap-limited | diverged
    meta: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "mode": self.mode.value,
            "metric": self.metric.kind.value,
            "epsilon": self.metric.epsilon,
            "value": self.value,
            "x": self.x,
            "status": self.status,
            "witness": None if self.witness is None else self.witness.to_json(),
            "meta": self.meta,
        }


# ---------------------------------------------------------------------------
# weighted polynomial closed form


def _phi_equation(metric: Metric, d: int) -> tuple[Callable, Callable]:
    e = metric.epsilon
    if metric.kind is MetricKind.POA:
        g = lambda k: -(k ** (d + 1)) + (1 + e) * (k + 1) ** d
        dg = lambda k: -(d + 1) * k**d + (1 + e) * d * (k + 1) ** (d - 1) if d > 0 else -1.0
    elif metric.kind is MetricKind.CR_SELFISH:
        g = lambda k: -(k ** (d + 1)) / (d + 1) + (1 + e) * (k + 1) ** d
        dg = lambda k: -(k**d) + (1 + e) * d * (k + 1) ** (d - 1) if d > 0 else -1.0
    else:
        g = lambda k: -(2 + e) * k ** (d + 1) + (1 + e) * (k + 1) ** (d + 1)
        dg = lambda k: (d + 1) * (-(2 + e) * k**d + (1 + e) * (k + 1) ** d)
    return g, dg


def poly_phi(metric: Metric, d: int) -> float:
    """Unique positive root of the metric's monomial equation for degree d.

    The left-hand side is positive at 0 and, past its sign change, strictly
    decreasing, so bracketing by doubling then Brent plus one Newton polish
    is enough. The residual is checked relative to the size of the terms.
    """
    if d < 0:
        raise BoundError("degree must be >= 0")
    g, dg = _phi_equation(metric, d)
    hi = 1.0
    while g(hi) > 0:
        hi *= 2.0
    lo = hi / 2.0 if hi > 1.0 else 0.0
    root = optimize.brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    slope = dg(root)
    if slope != 0:
        polished = root - g(root) / slope
        if lo <= polished <= hi and abs(g(polished)) <= abs(g(root)):
            root = polished
    scale = max(1.0, abs(root) ** (d + 1))
    if abs(g(root)) > TOL.root_residual * scale * 1e3:
        raise BoundError(f"root residual too large: {g(root)}")
    return float(root)


def poly_gamma_weighted(metric: Metric, d: int) -> float:
    """Class bound for weighted games with polynomial latencies of degree <= d.

    Equal to phi ** (d + 1), the Case-1 value k f(k) / f(1) at k = phi, f = t^d.
    """
    phi = poly_phi(metric, d)
    return phi ** (d + 1)


def poly_argmin_x(metric: Metric, d: int) -> float:
    """Multiplier x* at which the sup over k is attained exactly at phi."""
    if d == 0:
        return 1.0
    phi = poly_phi(metric, d)
    _, dg = _phi_equation(metric, d)
    # for CR^c the phi equation is beta itself; for PoA and CR^s likewise
    return (d + 1) * phi**d / (-dg(phi))


# ---------------------------------------------------------------------------
# numerical min-max machinery


def golden_section_min(func: Callable[[float], float], lo: float, hi: float, tol: float) -> tuple[float, float]:
    """Minimise a unimodal function on [lo, hi] to interval width ``tol``."""
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = func(c), func(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = func(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = func(d)
    x = (a + b) / 2.0
    return x, func(x)


def _bracket_convex(func: Callable[[float], float], x0: float, x_max: float) -> tuple[float, float]:
    """Expand [x0, x] geometrically until func stops decreasing."""
    prev2, prev = x0, x0
    fprev = func(x0)
    x = max(2.0 * x0, x0 + 1.0)
    while x < x_max:
        fx = func(x)
        if fx > fprev:
            return prev2, x
        prev2, prev, fprev = prev, x, fx
        x *= 2.0
    return prev2, x_max


def _sup_over_k(fun: Callable[[float], float], lo=1e-6, hi=1e6, n=800) -> tuple[float, float, bool]:
    """Maximise a smooth function of k > 0; flags a maximiser at the upper edge."""
    ks = np.logspace(math.log10(lo), math.log10(hi), n)
    vals = np.array([fun(k) for k in ks])
    j = int(np.argmax(vals))
    if j == n - 1:
        return float(vals[j]), float(ks[j]), True
    a = ks[max(j - 1, 0)]
    b = ks[min(j + 1, n - 1)]
    res = optimize.minimize_scalar(lambda k: -fun(k), bounds=(a, b), method="bounded", options={"xatol": 1e-13 * b})
    if -res.fun >= vals[j]:
        return float(-res.fun), float(res.x), False
    return float(vals[j]), float(ks[j]), False


def _weighted_poly_numeric(metric: Metric, d: int, caps: Caps) -> BoundResult:
    """Cross-check for the closed form: min over x of max over monomials and k."""
    eps = metric.epsilon

    def beta_h(h, k):
        if metric.kind is MetricKind.POA:
            return -(k ** (h + 1)) + (1 + eps) * (k + 1) ** h
        if metric.kind is MetricKind.CR_SELFISH:
            return -(k ** (h + 1)) / (h + 1) + (1 + eps) * (k + 1) ** h
        return -(k ** (h + 1)) + (1 + eps) * ((k + 1) ** (h + 1) - k ** (h + 1))

    diverged = []

    def outer(x):
        best = -math.inf
        for h in range(d + 1):
            v, _, edge = _sup_over_k(lambda k: k ** (h + 1) + x * beta_h(h, k))
            if edge:
                diverged.append((h, x))
            best = max(best, v)
        return best

    lo, hi = _bracket_convex(outer, 1.0, caps.x_max)
    x, val = golden_section_min(outer, lo, hi, TOL.golden_x * max(1.0, hi))
    return BoundResult(val, x, None, Mode.WEIGHTED, metric, "exact", {"method": "numeric", "edge_hits": len(diverged)})


def _weighted_finite_numeric(metric: Metric, cls: FiniteClass, caps: Caps) -> BoundResult:
    logk = np.linspace(-3, 3, 121)
    logo = np.linspace(-3, 3, 61)
    funcs = cls.basis()

    def gam(x, k, o, f):
        return gamma_param(Mode.WEIGHTED, metric, x, k, o, f)

    best_at: dict = {}

    def outer(x):
        best, arg = -math.inf, None
        for fi, f in enumerate(funcs):
            for lk in logk:
                for lo_ in logo:
                    v = gam(x, 10**lk, 10**lo_, f)
                    if v > best:
                        best, arg = v, (10**lk, 10**lo_, fi)
        k0, o0, fi = arg
        res = optimize.minimize(
            lambda p: -gam(x, math.exp(p[0]), math.exp(p[1]), funcs[fi]),
            [math.log(k0), math.log(o0)],
            method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 2000},
        )
        if -res.fun > best:
            best, arg = -res.fun, (math.exp(res.x[0]), math.exp(res.x[1]), fi)
        best_at[x] = arg
        return best

    lo, hi = _bracket_convex(outer, 1.0, caps.x_max)
    x, val = golden_section_min(outer, lo, hi, 1e-7 * max(1.0, hi))
    k, o, fi = best_at.get(x) or best_at[min(best_at, key=lambda t: abs(t - x))]
    w = Case1(k, o, funcs[fi], beta(Mode.WEIGHTED, metric, k, o, funcs[fi]))
    return BoundResult(val, x, w, Mode.WEIGHTED, metric, "upper-estimate", {"method": "grid+nelder-mead"})


# ---------------------------------------------------------------------------
# unweighted: exact kink search on a piecewise-linear convex envelope


@dataclass
class _Line:
    a: float  # k f(k) / (o f(o))
    b: float  # beta / (o f(o))
    h: int  # basis index
    k: int
    o: int

    def at(self, x):
        return self.a + x * self.b


class _UnweightedEnvelope:
    """max over tuples (f, k, o) of a + x b on the capped integer grid."""

    def __init__(self, metric: Metric, funcs: Sequence[LatencyFunction], monomial_degrees: Sequence[int] | None, caps: Caps):
        self.metric = metric
        self.funcs = list(funcs)
        self.degrees = monomial_degrees
        self.K = int(caps.k_cap)
        self.O = int(caps.o_cap)
        eps = metric.epsilon
        ks = np.arange(0, self.K + 1, dtype=float)
        self.ks = ks
        self.tables = []
        for f in self.funcs:
            fk = f.eval_array(ks)
            fk1 = f.eval_array(ks + 1.0)
            kfk = ks * fk
            if metric.kind is MetricKind.POA:
                base, per_o = -kfk, (1 + eps) * fk1
            elif metric.kind is MetricKind.CR_SELFISH:
                prefix = np.concatenate([[0.0], np.cumsum(f.eval_array(ks[1:]))])
                base, per_o = -prefix, (1 + eps) * fk1
            else:
                base, per_o = -kfk + (1 + eps) * ((ks + 1) * fk1 - kfk), np.zeros_like(ks)
            self.tables.append((kfk, base, per_o))

    # beta(k, o) = base[k] + o * per_o[k]

    def _candidates_monomial(self, x: float, h: int, kfk, base, per_o):
        """Best o per k for f = t^h via the stationary point of (A + B o) / o^(h+1)."""
        A = kfk + x * base
        B = x * per_o
        if self.metric.kind is MetricKind.CR_COOPERATIVE or h == 0:
            if h == 0 and self.metric.kind is not MetricKind.CR_COOPERATIVE:
                # (A + B o) / o: increasing in o iff A < 0
                o = np.where(A < 0, float(self.O), 1.0)
                return [o]
            return [np.ones_like(A)]
        with np.errstate(divide="ignore", invalid="ignore"):
            ostar = np.where(A < 0, -(h + 1) * A / (h * B), 1.0)
        ostar = np.clip(np.nan_to_num(ostar, nan=1.0, posinf=self.O), 1.0, float(self.O))
        return [np.floor(ostar), np.ceil(ostar)]

    def _scan(self, x: float):
        """Yield (values, slopes, h, k-array, o-array) blocks covering the grid."""
        for h, (f, (kfk, base, per_o)) in enumerate(zip(self.funcs, self.tables)):
            if self.degrees is not None:
                deg = self.degrees[h]
                for o in self._candidates_monomial(x, deg, kfk, base, per_o):
                    den = o ** (deg + 1)
                    b = (base + o * per_o) / den
                    a = kfk / den
                    yield a + x * b, b, a, h, o
            else:
                # generic function: explicit o grid in blocks
                os_all = np.arange(1, self.O + 1, dtype=float)
                fo = f.eval_array(os_all) * os_all
                for start in range(0, self.O, 64):
                    oo = os_all[start : start + 64][:, None]
                    den = fo[start : start + 64][:, None]
                    b = (base[None, :] + oo * per_o[None, :]) / den
                    a = kfk[None, :] / den
                    yield (a + x * b).ravel(), b.ravel(), a.ravel(), h, np.broadcast_to(oo, b.shape).ravel()

    def argmax(self, x: float, side: str) -> tuple[float, _Line]:
        """Max value at x and the active line with the largest (side='right')
        or smallest (side='left') slope among near-ties."""
        best_v = -math.inf
        blocks = []
        for v, b, a, h, o in self._scan(x):
            m = float(np.max(v))
            blocks.append((v, b, a, h, o))
            best_v = max(best_v, m)
        tol = 1e-12 * max(1.0, abs(best_v))
        pick, pick_slope = None, None
        for v, b, a, h, o in blocks:
            idx = np.nonzero(v >= best_v - tol)[0]
            if idx.size == 0:
                continue
            j = idx[np.argmax(b[idx])] if side == "right" else idx[np.argmin(b[idx])]
            s = float(b[j])
            if pick is None or (side == "right" and s > pick_slope) or (side == "left" and s < pick_slope):
                kk = int(j % (self.K + 1)) if self.degrees is None else int(j)
                oo = int(np.ravel(o)[j]) if np.ndim(o) else int(o)
                pick, pick_slope = _Line(float(a[j]), s, h, kk, oo), s
        return best_v, pick


def _kink_search(env: _UnweightedEnvelope, x_max: float, max_iter: int = 200):
    """Minimise a convex piecewise-linear envelope over x >= 1 exactly.

    Returns (value, x, left_line, right_line); the two lines meet at x (they
    coincide when the minimum sits on a flat piece or at x = 1).
    """
    v1, right = env.argmax(1.0, "right")
    if right.b >= 0:
        return v1, 1.0, right, right
    left = right
    x = 2.0
    while True:
        v, r = env.argmax(x, "right")
        if r.b >= 0:
            right = r
            break
        left = r
        if x >= x_max:
            raise BoundError(f"envelope still decreasing at x={x_max}; raise x_max")
        x = min(2.0 * x, x_max)
    for _ in range(max_iter):
        if right.b == left.b:
            xs = x
        else:
            xs = (left.a - right.a) / (right.b - left.b)
        xs = max(xs, 1.0)
        target = right.at(xs)
        v, m = env.argmax(xs, "right")
        if v <= target + 1e-12 * max(1.0, abs(target)):
            return target, xs, left, right
        if m.b > 0:
            right = m
        elif m.b < 0:
            left = m
        else:
            return v, xs, m, m
    raise BoundError("kink search did not converge")


def _unweighted_numeric(metric: Metric, cls, caps: Caps) -> BoundResult:
    if isinstance(cls, PolynomialClass):
        funcs = cls.basis()
        degrees = list(range(cls.degree + 1))
    else:
        funcs = cls.basis()
        degrees = None
    env = _UnweightedEnvelope(metric, funcs, degrees, caps)
    value, x, left, right = _kink_search(env, caps.x_max)
    meta = {"method": "kink-search", "k_cap": env.K, "o_cap": env.O}
    edge = [ln for ln in (left, right) if ln.k >= env.K or ln.o >= env.O]
    status = "exact"
    if edge:
        # the active tuple sits on a cap: probe with caps x10 to tell a slowly
        # converging sup from a divergent one
        meta["cap_hit"] = "k" if any(ln.k >= env.K for ln in edge) else "o"
        status = "cap-limited"
        if degrees is not None:
            big = replace(caps, k_cap=env.K * 10, o_cap=env.O * 10)
            v_big = _kink_search(_UnweightedEnvelope(metric, funcs, degrees, big), caps.x_max)[0]
            meta["value_at_10x_caps"] = v_big
            if v_big > value * (1 + 1e-2):
                status = "diverged"
    if left is right or left.b == right.b:
        f = funcs[right.h]
        witness = Case1(right.k, right.o, f, beta(Mode.UNWEIGHTED, metric, right.k, right.o, f))
    else:
        f1, f2 = funcs[left.h], funcs[right.h]
        witness = make_case2(Mode.UNWEIGHTED, metric, left.k, left.o, f1, right.k, right.o, f2)
    return BoundResult(value, x, witness, Mode.UNWEIGHTED, metric, status, meta)


# ---------------------------------------------------------------------------
# public solvers


def gamma_bound(mode: Mode | str, metric: Metric, cls, caps: Caps | None = None) -> BoundResult:
    """inf over x >= 1 of sup over (k, o, f) of gamma_param, with a witness."""
    mode = Mode(mode)
    caps = caps or current_caps()
    eps = metric.epsilon
    if cls.constant_only:
        const = Polynomial([1.0])
        w = Case1(1 + eps, 1.0, const, 0.0) if mode is Mode.WEIGHTED else None
        return BoundResult(1 + eps, 1.0, w, mode, metric, "exact", {"method": "constant-class"})
    if mode is Mode.WEIGHTED:
        if isinstance(cls, PolynomialClass):
            d = cls.degree
            phi = poly_phi(metric, d)
            f = Polynomial.monomial(d)
            w = Case1(phi, 1.0, f, beta(mode, metric, phi, 1.0, f))
            return BoundResult(phi ** (d + 1), poly_argmin_x(metric, d), w, mode, metric, "exact", {"method": "closed-form", "phi": phi})
        return _weighted_finite_numeric(metric, cls, caps)
    return _unweighted_numeric(metric, cls, caps)


def weighted_numeric_check(metric: Metric, d: int, caps: Caps | None = None) -> BoundResult:
    """Independent numeric min-max for weighted polynomial classes."""
    return _weighted_poly_numeric(metric, d, caps or current_caps())


def unweighted_closed_form(metric: Metric, d: int) -> tuple[float, Witness]:
    """Closed form for unweighted polynomial classes.

    PoA and cooperative CR: exact value from the real root of
    beta(k, 1, t^d) = 0. Selfish CR: a lower bound only (the largest integer k
    with beta >= 0, paired with k + 1).
    """
    if d < 1:
        raise BoundError("degree must be >= 1")
    f = Polynomial.monomial(d)
    mode = Mode.UNWEIGHTED
    if metric.kind in (MetricKind.POA, MetricKind.CR_COOPERATIVE):
        root = poly_phi(metric, d)  # same equation as the weighted o = 1 case
        kr = round(root)
        if abs(root - kr) < 1e-9 and abs(beta(mode, metric, kr, 1, f)) <= 1e-9 * max(1.0, kr ** (d + 1)):
            w = Case1(kr, 1, f, 0.0)
            return w.value(), w
        k2 = math.floor(root)
        w = make_case2(mode, metric, k2 + 1, 1, f, k2, 1, f)
        return w.value(), w
    k = 0
    while beta(mode, metric, k + 1, 1, f) >= 0:
        k += 1
    b = beta(mode, metric, k, 1, f)
    if b == 0:
        w = Case1(k, 1, f, 0.0)
        return w.value(), w
    w = make_case2(mode, metric, k + 1, 1, f, k, 1, f)
    return w.value(), w


def find_witness(mode: Mode | str, metric: Metric, cls, M: float, caps: Caps | None = None) -> Witness:
    """A Case-1 or Case-2 tuple whose lower-bound value exceeds M."""
    mode = Mode(mode)
    res = gamma_bound(mode, metric, cls, caps)
    if M >= res.value:
        raise WitnessNotFound(f"M={M} is not below the class bound {res.value}")
    if res.witness is not None and res.witness.value() > M:
        return res.witness
    if mode is Mode.UNWEIGHTED and isinstance(cls, PolynomialClass):
        val, w = unweighted_closed_form(metric, max(cls.degree, 1))
        if val > M:
            return w
    raise WitnessNotFound(f"no witness above M={M} found within caps")


@dataclass
class CertificateResult:
    feasible: bool
    violations: list  # (k, o, f, slack)
    min_slack: float


def dual_certificate_check(
    mode: Mode | str, metric: Metric, x: float, gamma: float, tuples: Iterable[tuple], rtol: float = 1e-9
) -> CertificateResult:
    """Check gamma * o f(o) >= k f(k) + x * beta(k, o, f) on every tuple."""
    mode = Mode(mode)
    if x < 1:
        raise BoundError("x must be >= 1")
    viol = []
    min_slack = math.inf
    for k, o, f in tuples:
        lhs = gamma * float(o) * f.eval(float(o))
        kfk = float(k) * f.eval(float(k)) if float(k) > 0 else 0.0
        rhs = kfk + x * beta(mode, metric, k, o, f)
        slack = lhs - rhs
        min_slack = min(min_slack, slack / max(1.0, abs(lhs)))
        if slack < -rtol * max(1.0, abs(lhs), abs(rhs)):
            viol.append((k, o, f, slack))
    return CertificateResult(not viol, viol, min_slack)


# ---------------------------------------------------------------------------
# identical resources


def bracket_threshold(f: LatencyFunction, epsilon: float, x: float, tol: float | None = None) -> float:
    """inf{t >= 0 : f(x) <= (1+eps) f(x/2 + t)} by bisection on [0, x/2]."""
    tol = TOL.bracket_abs if tol is None else tol
    if not x > 0:
        raise BoundError("x must be positive")
    fx = f.eval(x)
    ok = lambda t: fx <= (1 + epsilon) * f.eval(x / 2.0 + t)
    if ok(0.0):
        return 0.0
    lo, hi = 0.0, x / 2.0
    while hi - lo > tol:
        mid = (lo + hi) / 2.0
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def gamma_identical(epsilon: float, f: LatencyFunction, x: float, lam: float, bracket: float | None = None) -> float:
    if not 0 < lam < 1:
        raise BoundError("lambda must lie in (0, 1)")
    b = bracket_threshold(f, epsilon, x) if bracket is None else bracket
    opt = lam * x + (1 - lam) * b
    num = lam * x * f.eval(x) + ((1 - lam) * b * f.eval(b) if b > 0 else 0.0)
    return num / (opt * f.eval(opt))


@dataclass
class IdenticalBound:
    value: float
    x: float
    lam: float
    bracket: float
    lambda_at_most_half: bool
    epsilon_condition: bool

    @property
    def lower_bound_applies(self) -> bool:
        return self.lambda_at_most_half and self.epsilon_condition


def best_lambda(epsilon: float, f: LatencyFunction, x: float) -> tuple[float, float]:
    b = bracket_threshold(f, epsilon, x)
    lam, negv = golden_section_min(lambda t: -gamma_identical(epsilon, f, x, t, b), 1e-12, 1 - 1e-12, TOL.golden_lambda)
    return lam, -negv


def identical_bound(epsilon: float, f: LatencyFunction, x_range=(1e-3, 1e3)) -> IdenticalBound:
    """sup over x > 0 of max over lambda of gamma_identical, by nested golden section."""
    probe = np.concatenate([np.linspace(0.0, 2.0, 41), np.linspace(2.5, 50.0, 40)])
    if not f.is_semi_convex(probe):
        raise BoundError("identical-resources bound needs a semi-convex latency")
    lo, hi = math.log(x_range[0]), math.log(x_range[1])
    seeds = np.linspace(lo, hi, 61)
    inner = lambda lx: -best_lambda(epsilon, f, math.exp(lx))[1]
    vals = [inner(s) for s in seeds]
    j = int(np.argmin(vals))
    a = seeds[max(j - 1, 0)]
    b = seeds[min(j + 1, len(seeds) - 1)]
    lx, _ = golden_section_min(inner, a, b, TOL.golden_x)
    x = math.exp(lx)
    lam, val = best_lambda(epsilon, f, x)
    br = bracket_threshold(f, epsilon, x)
    cond = epsilon == 0 or lam * x + (1 - lam) * br - x / 2.0 >= 0
    return IdenticalBound(val, x, lam, br, lam <= 0.5, cond)


def corollary_poly_identical(d: int) -> tuple[float, float]:
    """(lambda*, value) for weighted identical resources with degree-d polynomials, eps = 0."""
    if d < 1:
        raise BoundError("degree must be >= 1")
    lam = (2 ** (d + 1) - d - 2) / (d * 2 ** (d + 1) - d)
    value = d**d * (2 ** (d + 1) - 1) ** (d + 1) / (2**d * (d + 1) ** (d + 1) * (2**d - 1) ** d)
    return lam, value
