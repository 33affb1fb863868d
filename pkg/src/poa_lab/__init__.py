"""Inefficiency bounds for congestion games: equilibria, one-round walks and lower-bound instances."""

from .latency import Custom, LatencyError, LatencyFunction, Polynomial, linear, monomial, register_custom
from .game import CongestionGame, GameError, Player, Resource, StrategyProfile, social_cost, validate
from .bounds import (
    BoundResult,
    Case1,
    Case2,
    FiniteClass,
    Metric,
    MetricKind,
    Mode,
    PolynomialClass,
    beta,
    gamma_bound,
    gamma_param,
)
from .dynamics import WalkMode, check_equilibrium, run_walk, worst_equilibrium
from .generators import Family, GeneratedInstance

__all__ = [
    "BoundResult",
    "Case1",
    "Case2",
    "CongestionGame",
    "Custom",
    "Family",
    "FiniteClass",
    "GameError",
    "GeneratedInstance",
    "LatencyError",
    "LatencyFunction",
    "Metric",
    "MetricKind",
    "Mode",
    "Player",
    "Polynomial",
    "PolynomialClass",
    "Resource",
    "StrategyProfile",
    "WalkMode",
    "beta",
    "check_equilibrium",
    "gamma_bound",
    "gamma_param",
    "linear",
    "monomial",
    "register_custom",
    "run_walk",
    "social_cost",
    "validate",
    "worst_equilibrium",
]

__version__ = "0.1.0"
