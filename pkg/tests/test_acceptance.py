"""Acceptance criteria 1 to 9, one PASS/FAIL line each.

Run under pytest (lines appear in the terminal summary) or directly with
``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import math
import random
import sys
import time
from fractions import Fraction

from poa_lab import generators as G
from poa_lab.bounds import (
    Metric,
    MetricKind,
    Mode,
    PolynomialClass,
    beta,
    bracket_threshold,
    dual_certificate_check,
    gamma_bound,
    gamma_identical,
    unweighted_closed_form,
)
from poa_lab.dynamics import worst_equilibrium
from poa_lab.game import singleton_game
from poa_lab.latency import Polynomial
from poa_lab.tables import compute_table

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # direct script run
    ACCEPTANCE_LINES = []

LIN = Polynomial.monomial(1)
PHI = (1 + math.sqrt(5)) / 2


def report(n: int, ok: bool, detail: str):
    line = f"criterion {n} {'PASS' if ok else 'FAIL'}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def _timed(fn):
    t = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t


def test_criterion_1_weighted_table():
    cells, dt = _timed(lambda: compute_table("weighted"))
    bad = [f"d={c.d} {c.metric}: {c.value:,.2f} vs {c.printed}" for c in cells if not c.match]
    ok = not bad and dt < 10
    report(1, ok, f"{24 - len(bad)}/24 cells match in {dt:.2f}s" + (f"; mismatches {bad}" if bad else ""))


def test_criterion_2_unweighted_table():
    cells, dt = _timed(lambda: compute_table("unweighted"))
    bad = [f"d={c.d} {c.metric}: {c.value} vs {c.printed}" for c in cells if not c.match]
    uppers_ok = all(c.upper is None or c.upper >= c.value for c in cells)
    ok = not bad and uppers_ok and dt < 60
    report(2, ok, f"{24 - len(bad)}/24 cells match, upper >= lower everywhere: {uppers_ok}, {dt:.2f}s" + (f"; {bad}" if bad else ""))


def test_criterion_3_identical_table():
    cells, dt = _timed(lambda: compute_table("identical"))
    bad = [f"d={c.d}: {c.value} vs {c.printed} ({c.note})" for c in cells if not c.match]
    ok = not bad and dt < 10
    report(3, ok, f"{8 - len(bad)}/8 cells match with closed form and nested search agreeing to 1e-6, {dt:.2f}s")


def test_criterion_4_worked_example():
    m = Metric(MetricKind.CR_SELFISH)
    res = gamma_bound(Mode.WEIGHTED, m, PolynomialClass(1))
    w = res.witness
    x = (2 * math.sqrt(3) + 6) / 3
    k_expected = (math.sqrt(3) + 3) / math.sqrt(3)
    tuples = [(k / 100, 1.0, LIN) for k in range(1, 3001)] + [(k, o, LIN) for k in (0.5, 1, 2, 5) for o in (0.2, 0.5, 2, 4)]
    cert = dual_certificate_check(Mode.WEIGHTED, m, x, res.value, tuples)
    checks = {
        "value": abs(res.value - (2 * math.sqrt(3) + 4)) <= 1e-9,
        "k": abs(w.k - k_expected) <= 1e-9 and w.o == 1.0 and w.f == LIN,
        "beta": abs(beta(Mode.WEIGHTED, m, w.k, 1.0, LIN)) <= 1e-9,
        "certificate": cert.feasible,
    }
    report(4, all(checks.values()), f"value {res.value!r}, k {w.k!r}, checks {checks}")


def _walk_ok(chk, mode):
    return chk["sums_match"] and chk[f"walk_{mode}_reproduces"] and chk[f"walk_{mode}_max_tightness_error"] <= 1e-9


def test_criterion_5_generator_faithfulness():
    results = {}
    w_poa = gamma_bound("weighted", Metric.parse("poa"), PolynomialClass(1)).witness
    w_crs = gamma_bound("weighted", Metric.parse("crs"), PolynomialClass(1)).witness
    w_crc = gamma_bound("weighted", Metric.parse("crc"), PolynomialClass(1)).witness

    for s, n in [(1, 8), (2, 8), (3, 4), (4, 2)]:
        chk = G.gen_weighted_tree(s, n, w_poa).verify()
        results[f"tree s={s} n={n}"] = chk["sums_match"] and chk["equilibrium"] and chk["max_tightness_error"] <= 1e-9
    for s, n in [(3, 8), (4, 4), (4, 8)]:
        results[f"tree s={s} n={n} (local)"] = G.tree_equilibrium_local_check(s, n, w_poa) <= 1e-9

    for s, n in [(2, 16), (3, 4)]:
        results[f"walk tree s={s} n={n}"] = _walk_ok(G.gen_weighted_walk_tree(s, n, w_crs).verify(), "selfish")
    for s, n in [(2, 64), (3, 64)]:
        results[f"walk tree s={s} n={n} (local)"] = G.walk_tree_local_check(s, n, w_crs) <= 1e-9
    results["walk tree cooperative s=3"] = _walk_ok(G.gen_weighted_walk_tree(3, 1, w_crc, 0.0, "cooperative").verify(), "cooperative")

    u_poa = unweighted_closed_form(Metric.parse("poa"), 1)[1]
    u_crs = unweighted_closed_form(Metric.parse("crs"), 1)[1]
    u_crc = unweighted_closed_form(Metric.parse("crc"), 1)[1]
    for s in (2, 5, 8):
        chk = G.gen_unweighted_multipartite(s, u_poa).verify()
        results[f"multipartite s={s}"] = chk["sums_match"] and chk["equilibrium"] and chk["max_tightness_error"] <= 1e-9
    for s in (2, 5, 8):
        results[f"walk multipartite selfish s={s}"] = _walk_ok(G.gen_unweighted_walk_multipartite(s, u_crs).verify(), "selfish")
    for s in (2, 4, 6):
        results[f"walk multipartite cooperative s={s}"] = _walk_ok(
            G.gen_unweighted_walk_multipartite(s, u_crc, 0.0, "cooperative").verify(), "cooperative"
        )

    chk = G.gen_identical_weighted(8, 16, 0.2, LIN, h=7, bracket=Fraction(8, 3)).verify()
    results["identical weighted m=16"] = chk["sums_match"] and chk["equilibrium"]
    inst = G.gen_identical_weighted(4.0, 300, 0.0, LIN)
    chk = inst.verify()
    results["identical weighted m=300"] = chk["sums_match"] and chk["equilibrium"] and abs(inst.closed_form.ratio - 9 / 8) <= 5e-3

    o = [int(v) for v in G.reference_o_sequence(1, 6)]
    chk = G.gen_identical_unweighted_walk(5, o, LIN).verify()
    results["nested sets n=5"] = chk["sums_match"] and chk["walk_selfish_reproduces"] and chk["walk_cooperative_reproduces"]

    failed = [k for k, v in results.items() if not v]
    report(5, not failed, f"{len(results) - len(failed)}/{len(results)} instance checks pass" + (f"; failed {failed}" if failed else ""))


def test_criterion_6_convergence():
    w_poa = gamma_bound("weighted", Metric.parse("poa"), PolynomialClass(1)).witness
    cf = G.weighted_tree_closed_form(50, w_poa)
    a_ok = abs(cf.ratio - PHI**2) <= 1e-3 * PHI**2

    u_poa = unweighted_closed_form(Metric.parse("poa"), 1)[1]
    sim = G.gen_unweighted_multipartite(8, u_poa).simulated_ratio()
    b_ok = abs(sim - 2.5) <= 0.02 * 2.5

    w_crs = gamma_bound("weighted", Metric.parse("crs"), PolynomialClass(1)).witness
    lim = G.weighted_walk_tree_closed_form(3, 4, w_crs).limit
    c_ok = abs(lim - (2 * math.sqrt(3) + 4)) <= 1e-6

    report(
        6,
        a_ok and b_ok and c_ok,
        f"tree s=50 exact ratio {cf.ratio:.6f} (leading-order form {cf.leading:.6f}, target 2.618): {a_ok}; "
        f"multipartite s=8 simulated {sim:.6f}: {b_ok}; walk tree double limit {lim:.9f}: {c_ok}",
    )


def test_criterion_7_weak_duality_sweep():
    rng = random.Random(20240611)
    bounds = {}

    def bound(weighted, d, eps):
        key = (weighted, d, eps)
        if key not in bounds:
            mode = Mode.WEIGHTED if weighted else Mode.UNWEIGHTED
            bounds[key] = gamma_bound(mode, Metric(MetricKind.POA, eps), PolynomialClass(d)).value
        return bounds[key]

    games = worst = 0
    violations = []
    while games < 1000:
        n_res = rng.randint(1, 3)
        lats = []
        for _ in range(n_res):
            c = [float(rng.randint(0, 3)) for _ in range(rng.randint(1, 3))]
            if not any(c):
                c[0] = 1.0
            lats.append(Polynomial(c))
        weights = [float(rng.randint(1, 3)) for _ in range(rng.randint(2, 3))]
        strategies = [sorted(rng.sample(range(n_res), rng.randint(1, n_res))) for _ in weights]
        g = singleton_game(lats, weights, strategies)
        games += 1
        d = g.max_degree
        weighted = any(w != 1.0 for w in weights)
        for eps in (0.0, 0.5):
            res = worst_equilibrium(g, eps)
            if not res.exists:
                continue
            ub = bound(weighted, d, eps)
            worst = max(worst, res.value / ub)
            if res.value > ub + 1e-6:
                violations.append((games, eps, res.value, ub))
    report(7, not violations, f"{games} games x 2 epsilons, max ratio/bound {worst:.4f}, violations {len(violations)}")


def test_criterion_8_nested_sets_lower_bound():
    ns = [10**3, 10**4, 10**5, 10**6]
    vals = [G.identical_walk_ratio(n, LIN) for n in ns]
    mono = all(b >= a for a, b in zip(vals, vals[1:]))
    above = vals[-1] > 4.0
    report(8, mono and above, f"values {[round(v, 6) for v in vals]}, non-decreasing {mono}, exceeds 4.0 at 1e6 {above}")


def test_criterion_9_identical_primitives():
    fs = [Polynomial.monomial(1), Polynomial.monomial(2), Polynomial([1.0, 1.0])]
    br = max(abs(bracket_threshold(f, 0.0, x) - x / 2) for f in fs for x in (0.5, 1.0, 8.0, 100.0))
    lim = max(abs(gamma_identical(0.0, f, x, lam) - 1) for f in fs for x in (0.5, 1.0, 8.0, 100.0) for lam in (1e-6, 1 - 1e-6))
    report(9, br <= 1e-10 and lim <= 1e-3, f"max |[x] - x/2| {br:.2e}, max |gamma - 1| at lambda edges {lim:.2e}")


if __name__ == "__main__":
    failures = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failures += 1
    sys.exit(1 if failures else 0)
