"""Caps and tolerances shared across modules.

``POA_LAB_CAPS`` may override any cap, either as JSON
(``{"enum_profiles": 1e6}``) or as ``key=value`` pairs separated by commas.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields, replace


@dataclass(frozen=True)
class Caps:
    enum_profiles: int = 10_000_000
    k_cap: int = 10_000
    o_cap: int = 1_000
    x_max: float = 1e6
    max_resources: int = 2_000_000
    max_players: int = 4_000_000
    lcm_cap: int = 10**9
    walk_orders: int = 40_320


@dataclass(frozen=True)
class Tolerances:
    equilibrium_rtol: float = 1e-9
    golden_x: float = 1e-10
    golden_lambda: float = 1e-10
    bracket_abs: float = 1e-12
    quad_abs: float = 1e-10
    root_residual: float = 1e-12


TOL = Tolerances()


class CapsError(ValueError):
    pass


def _parse(text: str) -> dict:
    text = text.strip()
    if not text:
        return {}
    if text.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise CapsError(f"POA_LAB_CAPS is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise CapsError("POA_LAB_CAPS JSON must be an object")
        return data
    out = {}
    for part in text.split(","):
        if not part.strip():
            continue
        if "=" not in part:
            raise CapsError(f"bad POA_LAB_CAPS entry {part!r}, expected key=value")
        key, val = part.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def load_caps(env: dict | None = None) -> Caps:
    env = os.environ if env is None else env
    raw = _parse(env.get("POA_LAB_CAPS", ""))
    known = {f.name: f.type for f in fields(Caps)}
    updates = {}
    for key, val in raw.items():
        if key not in known:
            raise CapsError(f"unknown cap {key!r}; known caps: {sorted(known)}")
        num = float(val)
        updates[key] = num if key == "x_max" else int(num)
    return replace(Caps(), **updates)


def current_caps() -> Caps:
    return load_caps()
