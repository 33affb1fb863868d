"""Latency functions: evaluation, integral, marginal cost, semi-convexity.

Two representations exist. ``Polynomial`` keeps non-negative coefficients
and does everything in closed form. ``Custom`` wraps a Python callable and
falls back to adaptive quadrature for the integral.
"""

from __future__ import annotations

import math
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import integrate

QUAD_ABS_TOL = 1e-10
SEMI_CONVEX_TOL = 1e-9

_PROBE_GRID = np.concatenate([[1e-9, 1e-6, 1e-3], np.linspace(0.01, 10.0, 200), [50.0, 100.0, 1e3]])


class LatencyError(ValueError):
    pass


def _check_point(x: float, name: str = "x") -> float:
    x = float(x)
    if not math.isfinite(x):
        raise LatencyError(f"{name} must be finite, got {x}")
    if x < 0:
        raise LatencyError(f"{name} must be non-negative, got {x}")
    return x


class LatencyFunction:
    """Common interface. Subclasses are immutable once built."""

    def __call__(self, x):
        return self.eval(x)

    def eval(self, x):
        raise NotImplementedError

    def eval_array(self, xs: np.ndarray) -> np.ndarray:
        return np.array([self.eval(float(v)) for v in np.ravel(xs)]).reshape(np.shape(xs))

    def integral(self, k: float) -> float:
        raise NotImplementedError

    def marginal(self, k: float, w: float) -> float:
        """Increase of k*f(k) when weight w joins a resource at congestion k."""
        k = _check_point(k, "k")
        w = float(w)
        if not w > 0:
            raise LatencyError(f"w must be positive, got {w}")
        return (k + w) * self.eval(k + w) - k * self.eval(k)

    def is_semi_convex(self, grid: Sequence[float]) -> bool:
        return _second_difference_semi_convex(self, grid)

    def scale_ordinate(self, a: float) -> "LatencyFunction":
        raise NotImplementedError

    def scale_abscissa(self, a: float) -> "LatencyFunction":
        raise NotImplementedError

    @property
    def is_constant(self) -> bool:
        return False

    def to_json(self) -> dict:
        raise NotImplementedError


class Polynomial(LatencyFunction):
    """sum_h coeffs[h] * x**h with every coefficient >= 0."""

    __slots__ = ("coeffs", "_key")

    def __init__(self, coeffs: Iterable[float]):
        cs = [float(c) for c in coeffs]
        if not cs:
            raise LatencyError("polynomial needs at least one coefficient")
        for c in cs:
            if not math.isfinite(c) or c < 0:
                raise LatencyError(f"coefficients must be finite and non-negative, got {cs}")
        while len(cs) > 1 and cs[-1] == 0.0:
            cs.pop()
        if all(c == 0.0 for c in cs):
            raise LatencyError("the zero polynomial is not a latency function")
        object.__setattr__(self, "coeffs", tuple(cs))
        object.__setattr__(self, "_key", ("poly",) + self.coeffs)

    def __setattr__(self, name, value):
        raise AttributeError("Polynomial is immutable")

    @classmethod
    def monomial(cls, degree: int, scale: float = 1.0) -> "Polynomial":
        return cls([0.0] * degree + [scale])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_constant(self) -> bool:
        return self.degree == 0

    def eval(self, x):
        if isinstance(x, np.ndarray):
            return self.eval_array(x)
        x = _check_point(x)
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def eval_array(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        acc = np.zeros_like(xs)
        for c in reversed(self.coeffs):
            acc = acc * xs + c
        return acc

    def integral(self, k: float) -> float:
        k = _check_point(k, "k")
        acc = 0.0
        for h in range(self.degree, -1, -1):
            acc = acc * k + self.coeffs[h] / (h + 1)
        return acc * k

    def is_semi_convex(self, grid: Sequence[float]) -> bool:
        _check_grid(grid)
        return True

    def scale_ordinate(self, a: float) -> "Polynomial":
        a = _positive(a)
        return Polynomial([c * a for c in self.coeffs])

    def scale_abscissa(self, a: float) -> "Polynomial":
        a = _positive(a)
        return Polynomial([c * a**h for h, c in enumerate(self.coeffs)])

    def to_json(self) -> dict:
        return {"kind": "poly", "coeffs": list(self.coeffs)}

    def __eq__(self, other):
        return isinstance(other, Polynomial) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        return f"Polynomial({list(self.coeffs)})"


class Custom(LatencyFunction):
    """A user-supplied latency.

    ``func`` must be non-decreasing and positive on (0, inf); both are checked
    on a probe grid at construction time, not proven.
    """

    def __init__(
        self,
        func: Callable[[float], float],
        integral: Callable[[float], float] | None = None,
        name: str | None = None,
        constant: bool = False,
        _probe: bool = True,
    ):
        self.func = func
        self._integral = integral
        self.name = name
        self._constant = constant
        if _probe:
            vals = [_probe_value(func, float(x)) for x in _PROBE_GRID]
            if any(not (v > 0) for v in vals):
                raise LatencyError(f"custom latency {name or func!r} is not positive on the probe grid")
            if any(b < a * (1 - 1e-12) for a, b in zip(vals, vals[1:])):
                raise LatencyError(f"custom latency {name or func!r} is decreasing somewhere on the probe grid")

    @property
    def is_constant(self) -> bool:
        return self._constant

    def eval(self, x):
        if isinstance(x, np.ndarray):
            return self.eval_array(x)
        x = _check_point(x)
        if x == 0.0:
            # right limit; most callables are continuous at 0 anyway
            return float(self.func(0.0)) if _finite_at_zero(self.func) else float(self.func(1e-300))
        return float(self.func(x))

    def integral(self, k: float) -> float:
        k = _check_point(k, "k")
        if self._integral is not None:
            return float(self._integral(k))
        if k == 0.0:
            return 0.0
        val, _ = integrate.quad(self.eval, 0.0, k, epsabs=QUAD_ABS_TOL, epsrel=1e-12, limit=200)
        return float(val)

    def scale_ordinate(self, a: float) -> "Custom":
        a = _positive(a)
        f, F = self.func, self._integral
        return Custom(
            lambda x: a * f(x),
            None if F is None else (lambda k: a * F(k)),
            name=None,
            constant=self._constant,
            _probe=False,
        )

    def scale_abscissa(self, a: float) -> "Custom":
        a = _positive(a)
        f, F = self.func, self._integral
        return Custom(
            lambda x: f(a * x),
            None if F is None else (lambda k: F(a * k) / a),
            name=None,
            constant=self._constant,
            _probe=False,
        )

    def to_json(self) -> dict:
        if self.name is None or _REGISTRY.get(self.name) is not self:
            raise LatencyError("only registered custom latencies can be serialized")
        return {"kind": "custom", "name": self.name}

    def __repr__(self):
        return f"Custom({self.name or self.func!r})"


def _probe_value(func, x: float) -> float:
    """Value at a probe point; overflow counts as +inf, which still passes the checks."""
    try:
        return float(func(x))
    except OverflowError:
        return math.inf


def _finite_at_zero(func) -> bool:
    try:
        v = float(func(0.0))
    except (ZeroDivisionError, ValueError, OverflowError):
        return False
    return math.isfinite(v) and v > 0


def _positive(a: float) -> float:
    a = float(a)
    if not (a > 0) or not math.isfinite(a):
        raise LatencyError(f"scale factor must be positive, got {a}")
    return a


def _check_grid(grid: Sequence[float]) -> np.ndarray:
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size < 3:
        raise LatencyError("semi-convexity grid needs at least 3 points")
    if np.any(np.diff(g) <= 0) or g[0] < 0:
        raise LatencyError("semi-convexity grid must be non-negative and strictly increasing")
    return g


def _second_difference_semi_convex(f: LatencyFunction, grid: Sequence[float]) -> bool:
    g = _check_grid(grid)
    y = g * f.eval_array(g)
    # divided differences handle non-uniform grids
    slopes = np.diff(y) / np.diff(g)
    jumps = np.diff(slopes)
    scale = np.maximum(1.0, np.abs(slopes[:-1]) + np.abs(slopes[1:]))
    return bool(np.all(jumps >= -SEMI_CONVEX_TOL * scale))


# process-local registry of named custom latencies
_REGISTRY: dict[str, Custom] = {}


def register_custom(
    name: str,
    func: Callable[[float], float],
    integral: Callable[[float], float] | None = None,
    constant: bool = False,
) -> Custom:
    f = Custom(func, integral, name=name, constant=constant)
    _REGISTRY[name] = f
    return f


def get_custom(name: str) -> Custom:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise LatencyError(f"no custom latency registered under {name!r}") from None


def from_json(obj: dict) -> LatencyFunction:
    kind = obj.get("kind")
    if kind == "poly":
        return Polynomial(obj["coeffs"])
    if kind == "custom":
        return get_custom(obj["name"])
    raise LatencyError(f"unknown latency kind {kind!r}")


# functional aliases
def evaluate(f: LatencyFunction, x: float) -> float:
    return f.eval(x)


def integral(f: LatencyFunction, k: float) -> float:
    return f.integral(k)


def marginal(f: LatencyFunction, k: float, w: float) -> float:
    return f.marginal(k, w)


def is_semi_convex(f: LatencyFunction, grid: Sequence[float]) -> bool:
    return f.is_semi_convex(grid)


def scale_ordinate(f: LatencyFunction, a: float) -> LatencyFunction:
    return f.scale_ordinate(a)


def scale_abscissa(f: LatencyFunction, a: float) -> LatencyFunction:
    return f.scale_abscissa(a)


def linear() -> Polynomial:
    return Polynomial([0.0, 1.0])


def monomial(d: int) -> Polynomial:
    return Polynomial.monomial(d)
