"""poa-lab command line: reference tables, instance generation, simulation.

Exit codes: 0 success, 2 a mismatch or failed check, 3 bad input.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import random
import sys
from pathlib import Path

from . import generators as G
from .bounds import (
    BoundError,
    Metric,
    Mode,
    PolynomialClass,
    corollary_poly_identical,
    gamma_bound,
    identical_bound,
    unweighted_closed_form,
    witness_from_json,
)
from .config import CapsError
from .dynamics import EnumerationCapExceeded, WalkError, WalkMode, run_walk, worst_equilibrium
from .game import CongestionGame, GameError, StrategyProfile, social_cost
from .latency import LatencyError, Polynomial
from .tables import compute_table

EXIT_OK, EXIT_MISMATCH, EXIT_INPUT = 0, 2, 3


class InputError(Exception):
    pass


# ---------------------------------------------------------------------------
# output helpers


def _emit(rows: list[dict], as_json: bool, out=None):
    out = out or sys.stdout
    if as_json:
        json.dump(rows, out, indent=2, sort_keys=False, default=_json_default)
        out.write("\n")
        return
    if not rows:
        return
    fields: list[str] = []
    for r in rows:
        for k in r:
            if k not in fields:
                fields.append(k)
    w = csv.DictWriter(out, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(r.get(k)) for k in fields})


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def _json_default(o):
    if hasattr(o, "item"):
        return o.item()
    if hasattr(o, "to_json"):
        return o.to_json()
    return str(o)


def _parse_int_list(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            a, b = part.split("-", 1)
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(float(part)))
    if not out:
        raise InputError(f"empty list {text!r}")
    return out


def _load_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise InputError(f"no such file: {path}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def _manifest_path(instance_path: str) -> Path:
    p = Path(instance_path)
    return p.with_name(p.stem + ".manifest.json")


# ---------------------------------------------------------------------------
# reproduce / bounds


def cmd_reproduce(args) -> int:
    cells = compute_table(args.table, args.workers)
    rows = [c.to_json() for c in cells]
    _emit(rows, args.json)
    return EXIT_OK if all(c.match for c in cells) else EXIT_MISMATCH


def cmd_bounds(args) -> int:
    rows = []
    for d in _parse_int_list(args.degrees):
        if args.mode == "identical":
            f = Polynomial.monomial(d)
            res = identical_bound(args.eps, f)
            row = {"d": d, "value": res.value, "x": res.x, "lambda": res.lam, "applies": res.lower_bound_applies}
            if args.eps == 0:
                row["closed_form"] = corollary_poly_identical(d)[1]
            rows.append(row)
            continue
        metric = Metric.parse(args.metric, args.eps)
        res = gamma_bound(args.mode, metric, PolynomialClass(d))
        row = {"d": d, "metric": args.metric, "value": res.value, "x": res.x, "status": res.status}
        row["witness"] = json.dumps(res.witness.to_json()) if res.witness is not None and args.json is False else res.witness
        rows.append(row)
    _emit(rows, args.json)
    return EXIT_OK


# ---------------------------------------------------------------------------
# gen


def _witness_for(args, mode: Mode, metric_name: str):
    if args.witness:
        return witness_from_json(_load_json(args.witness))
    metric = Metric.parse(metric_name, args.eps)
    if mode is Mode.WEIGHTED:
        return gamma_bound(mode, metric, PolynomialClass(args.degree)).witness
    return unweighted_closed_form(metric, args.degree)[1]


def build_instance(args) -> G.GeneratedInstance:
    fam = G.Family(args.family)
    walk_mode = WalkMode(args.walk_mode)
    walk_metric = "crs" if walk_mode is WalkMode.SELFISH else "crc"
    if fam is G.Family.WEIGHTED_TREE:
        w = _witness_for(args, Mode.WEIGHTED, "poa")
        return G.gen_weighted_tree(args.s, args.n, w, args.eps, symmetric=args.symmetric)
    if fam is G.Family.WEIGHTED_WALK_TREE:
        w = _witness_for(args, Mode.WEIGHTED, walk_metric)
        n = 1 if walk_mode is WalkMode.COOPERATIVE else args.n
        return G.gen_weighted_walk_tree(args.s, n, w, args.eps, walk_mode)
    if fam is G.Family.UNWEIGHTED_MULTIPARTITE:
        w = _witness_for(args, Mode.UNWEIGHTED, "poa")
        return G.gen_unweighted_multipartite(args.s, w, args.eps)
    if fam is G.Family.UNWEIGHTED_WALK_MULTIPARTITE:
        w = _witness_for(args, Mode.UNWEIGHTED, walk_metric)
        return G.gen_unweighted_walk_multipartite(args.s, w, args.eps, walk_mode)
    if fam is G.Family.IDENTICAL_WEIGHTED:
        f = Polynomial.monomial(args.degree)
        x = args.x if args.x is not None else identical_bound(args.eps, f).x
        return G.gen_identical_weighted(x, args.m, args.eps, f, h=args.h, bracket=args.bracket)
    f = Polynomial.monomial(args.degree)
    o = [int(v) for v in args.o.split(",")] if args.o else [int(v) for v in G.reference_o_sequence(1, args.n + 1)]
    return G.gen_identical_unweighted_walk(len(o), o, f)


def cmd_gen(args) -> int:
    inst = build_instance(args)
    checks = inst.verify()
    out = Path(args.out)
    out.write_text(json.dumps(inst.instance_json(), default=_json_default))
    manifest = inst.manifest()
    manifest["tight_steps"] = inst.tight_steps
    _manifest_path(str(out)).write_text(json.dumps(manifest, indent=2, default=_json_default))
    row = {"family": inst.family.value, "players": inst.game.n_players, "resources": inst.game.n_resources}
    row.update({k: v for k, v in checks.items()})
    row["closed_form_ratio"] = inst.closed_form.ratio
    _emit([row], args.json)
    return EXIT_OK if _checks_pass(checks) else EXIT_MISMATCH


def _checks_pass(checks: dict) -> bool:
    for k, v in checks.items():
        if isinstance(v, bool) and not v:
            return False
        if k.endswith("tightness_error") and v > 1e-9:
            return False
    return True


# ---------------------------------------------------------------------------
# verify / walk / poa-brute


def _load_instance(path: str):
    data = _load_json(path)
    game = CongestionGame.from_json(data)
    profiles = {k: StrategyProfile.from_json(game, v) for k, v in data.get("profiles", {}).items()}
    return game, profiles, data.get("walk")


def cmd_verify(args) -> int:
    game, profiles, walk = _load_instance(args.instance)
    mpath = Path(args.manifest) if args.manifest else _manifest_path(args.instance)
    manifest = _load_json(str(mpath))
    if "canonical" not in profiles or "optimal" not in profiles:
        raise InputError("instance has no canonical/optimal profiles; was it written by `gen`?")
    cf = manifest["closed_form"]
    inst = G.GeneratedInstance(
        G.Family(manifest["family"]),
        game,
        profiles["canonical"],
        profiles["optimal"],
        G.ClosedForm(cf["sum_sigma"], cf["sum_opt"], cf.get("leading_ratio"), cf.get("limit_n"), cf.get("limit")),
        float(manifest["epsilon"] if args.eps is None else args.eps),
        manifest.get("params", {}),
        walk_order=None if walk is None else walk["order"],
        prescribed=None if walk is None else walk["prescribed"],
        walk_modes=tuple(WalkMode(m) for m in manifest.get("walk_modes", [])),
        claims_equilibrium=manifest.get("claims_equilibrium", False),
        tight_steps=manifest.get("tight_steps", True),
    )
    fresh = inst.verify()
    rows = []
    agree_all = True
    for key, old in manifest.get("checks", {}).items():
        new = fresh.get(key)
        if isinstance(old, bool):
            agree = new == old
        else:
            agree = new is not None and abs(new - old) <= 1e-9 + 1e-6 * abs(old)
        agree_all &= agree
        rows.append({"check": key, "manifest": old, "recomputed": new, "agree": agree})
    _emit(rows, args.json)
    return EXIT_OK if agree_all and _checks_pass(fresh) else EXIT_MISMATCH


def _order_from(args, game: CongestionGame, walk) -> list:
    ids = [p.id for p in game.players]
    spec = args.order
    if spec == "identity":
        return ids
    if spec == "reverse":
        return ids[::-1]
    if spec == "instance":
        if walk is None:
            raise InputError("instance file has no stored walk order")
        return walk["order"]
    if spec.startswith("random"):
        seed = int(spec.split(":", 1)[1]) if ":" in spec else 0
        rng = random.Random(seed)
        out = list(ids)
        rng.shuffle(out)
        return out
    data = _load_json(spec)
    return data["order"] if isinstance(data, dict) else data


def cmd_walk(args) -> int:
    game, profiles, walk = _load_instance(args.instance)
    order = _order_from(args, game, walk)
    prescribed = None
    if args.tiebreak == "prescribed-choice-list":
        if args.prescribed:
            prescribed = _load_json(args.prescribed)
        elif walk is not None and args.order == "instance":
            prescribed = walk["prescribed"]
        else:
            raise InputError("prescribed-choice-list needs --prescribed or --order instance")
    tr = run_walk(game, order, args.mode, args.eps, tiebreak=args.tiebreak, prescribed=prescribed)
    cost = social_cost(game, tr.final_profile)
    if args.json:
        data = tr.to_json()
        if "optimal" in profiles:
            data["ratio_to_stored_optimum"] = cost / social_cost(game, profiles["optimal"])
        json.dump(data, sys.stdout, default=_json_default)
        sys.stdout.write("\n")
    else:
        rows = [{"step": t, "player": s.player, "choice": s.choice, "minimum": s.minimum, "chosen": s.chosen} for t, s in enumerate(tr.steps)]
        _emit(rows, False)
        sys.stderr.write(f"social cost {cost!r}\n")
    return EXIT_OK


def cmd_poa_brute(args) -> int:
    game, _, _ = _load_instance(args.instance)
    res = worst_equilibrium(game, args.eps)
    row = {
        "epsilon": args.eps,
        "equilibria": res.n_equilibria,
        "optimum_cost": res.optimum_cost,
        "worst_equilibrium_cost": res.equilibrium_cost,
        "ratio": res.value,
    }
    if res.profile is not None and args.json:
        row["profile"] = res.profile.assignment
    _emit([row], args.json)
    return EXIT_OK


# ---------------------------------------------------------------------------
# converge


def _materialize_ok(players: int, budget: int) -> bool:
    return players <= budget


def cmd_converge(args) -> int:
    fam = G.Family(args.family)
    rows: list[dict] = []
    ok = True
    if fam is G.Family.IDENTICAL_UNWEIGHTED_WALK:
        f = Polynomial.monomial(args.degree)
        ns = _parse_int_list(args.n_values) if args.n_values else [10**3, 10**4, 10**5, 10**6]
        if args.long:
            ns.append(10**13)
        prev = -math.inf
        for n in ns:
            val = G.identical_walk_ratio(n, f)
            mono = val >= prev - 1e-12
            ok &= mono
            rows.append({"n": n, "closed_form_ratio": val, "non_decreasing": mono})
            prev = val
        _emit(rows, args.json)
        return EXIT_OK if ok else EXIT_MISMATCH

    walk_mode = WalkMode(args.walk_mode)
    s_values = _parse_int_list(args.s_values)
    n_values = _parse_int_list(args.n_values) if args.n_values else [1]
    if fam is G.Family.WEIGHTED_TREE:
        w = _witness_for(args, Mode.WEIGHTED, "poa")
    elif fam is G.Family.WEIGHTED_WALK_TREE:
        w = _witness_for(args, Mode.WEIGHTED, "crs" if walk_mode is WalkMode.SELFISH else "crc")
        if walk_mode is WalkMode.COOPERATIVE:
            n_values = [1]
    elif fam is G.Family.UNWEIGHTED_MULTIPARTITE:
        w = _witness_for(args, Mode.UNWEIGHTED, "poa")
        n_values = [None]
    elif fam is G.Family.UNWEIGHTED_WALK_MULTIPARTITE:
        w = _witness_for(args, Mode.UNWEIGHTED, "crs" if walk_mode is WalkMode.SELFISH else "crc")
        n_values = [None]
    else:
        raise InputError(f"converge does not support {fam.value}")
    prev = -math.inf
    for s in s_values:
        for n in n_values:
            if fam is G.Family.WEIGHTED_TREE:
                cf = G.weighted_tree_closed_form(s, w, args.eps)
                size = n * sum(n**i for i in range(2 * s))
                make = lambda: G.gen_weighted_tree(s, n, w, args.eps)
            elif fam is G.Family.WEIGHTED_WALK_TREE:
                cf = G.weighted_walk_tree_closed_form(s, n, w, args.eps, walk_mode)
                size = n * sum(n**i for i in range(2 * s))
                make = lambda: G.gen_weighted_walk_tree(s, n, w, args.eps, walk_mode)
            elif fam is G.Family.UNWEIGHTED_MULTIPARTITE:
                cf = G.unweighted_multipartite_closed_form(s, w, args.eps, "poa")
                size = _multipartite_players(s, w)
                make = lambda: G.gen_unweighted_multipartite(s, w, args.eps)
            else:
                cf = G.unweighted_multipartite_closed_form(s, w, args.eps, walk_mode.value)
                size = _multipartite_players(s, w)
                make = lambda: G.gen_unweighted_walk_multipartite(s, w, args.eps, walk_mode)
            sim = None
            if _materialize_ok(size, args.max_players):
                sim = make().simulated_ratio()
            agree = None if sim is None else abs(sim - cf.ratio) <= 1e-6 * cf.ratio
            if agree is False:
                ok = False
            mono = cf.ratio >= prev - 1e-12
            prev = cf.ratio
            rows.append(
                {
                    "s": s,
                    "n": n,
                    "simulated_ratio": sim,
                    "closed_form_ratio": cf.ratio,
                    "leading_ratio": cf.leading,
                    "limit_n": cf.limit_n,
                    "limit": cf.limit,
                    "agree": agree,
                    "non_decreasing": mono,
                }
            )
    _emit(rows, args.json)
    return EXIT_OK if ok else EXIT_MISMATCH


def _multipartite_players(s, w) -> int:
    k1, k2, o1, o2, *_ = G._split_witness(w)
    sizes = G._multipartite_sizes(s, int(k1), int(k2), int(o1), int(o2))
    return sum(sz * (int(k1) if i < s else int(k2)) for i, sz in enumerate(sizes))


# ---------------------------------------------------------------------------
# parser


def _add_family_args(p: argparse.ArgumentParser):
    p.add_argument("--degree", type=int, default=1, help="degree of the monomial latency used for the witness")
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--walk-mode", choices=[m.value for m in WalkMode], default="selfish")
    p.add_argument("--witness", help="JSON file with a witness tuple (overrides --degree)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="poa-lab", description="Efficiency bounds and lower-bound instances for congestion games.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reproduce", help="recompute a reference table and compare with the published cells")
    p.add_argument("table", choices=["weighted", "unweighted", "identical"])
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("bounds", help="class-level bounds for monomial classes")
    p.add_argument("--mode", choices=["weighted", "unweighted", "identical"], default="weighted")
    p.add_argument("--metric", choices=["poa", "crs", "crc"], default="poa")
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--degrees", default="1-8", help="e.g. 1-8 or 1,2,5")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("gen", help="generate a lower-bound instance plus a manifest")
    p.add_argument("family", choices=[f.value for f in G.Family])
    p.add_argument("--out", required=True)
    p.add_argument("--s", type=int, default=2)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--symmetric", action="store_true")
    p.add_argument("--m", type=int, default=16)
    p.add_argument("--x", type=float)
    p.add_argument("--h", type=int)
    p.add_argument("--bracket", type=float)
    p.add_argument("--o", help="comma-separated o sequence for the nested-set family")
    p.add_argument("--json", action="store_true")
    _add_family_args(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("verify", help="re-run the checks of a generated instance")
    p.add_argument("instance")
    p.add_argument("--manifest")
    p.add_argument("--eps", type=float)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("walk", help="simulate a one-round walk")
    p.add_argument("instance")
    p.add_argument("--mode", choices=[m.value for m in WalkMode], default="selfish")
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--order", default="identity", help="identity, reverse, instance, random[:SEED] or a JSON file")
    p.add_argument("--tiebreak", choices=["lowest-index", "prescribed-choice-list"], default="lowest-index")
    p.add_argument("--prescribed", help="JSON list of strategy indices aligned with the order")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_walk)

    p = sub.add_parser("poa-brute", help="worst approximate equilibrium by enumeration")
    p.add_argument("instance")
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_poa_brute)

    p = sub.add_parser("converge", help="ratio as the instance size grows")
    p.add_argument("family", choices=[f.value for f in G.Family if f is not G.Family.IDENTICAL_WEIGHTED])
    p.add_argument("--s-values", default="2-4")
    p.add_argument("--n-values")
    p.add_argument("--max-players", type=int, default=200_000, help="simulate only instances up to this size")
    p.add_argument("--long", action="store_true", help="add n = 10^13 for the nested-set family (days of CPU)")
    p.add_argument("--json", action="store_true")
    _add_family_args(p)
    p.set_defaults(func=cmd_converge)
    return ap


INPUT_ERRORS = (
    InputError,
    BoundError,
    GameError,
    LatencyError,
    CapsError,
    G.GeneratorError,
    EnumerationCapExceeded,
    WalkError,
    KeyError,
    ValueError,
)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except INPUT_ERRORS as exc:
        sys.stderr.write(f"poa-lab: error: {exc}\n")
        return EXIT_INPUT
