import math
from dataclasses import replace
from fractions import Fraction

import pytest

from poa_lab import generators as G
from poa_lab.bounds import Case1, Metric, PolynomialClass, gamma_bound, make_case2, unweighted_closed_form
from poa_lab.config import Caps
from poa_lab.latency import Polynomial

LIN = Polynomial.monomial(1)
PHI = (1 + math.sqrt(5)) / 2


def weighted_witness(metric="poa", d=1):
    return gamma_bound("weighted", Metric.parse(metric), PolynomialClass(d)).witness


def unweighted_witness(metric="poa", d=1):
    return unweighted_closed_form(Metric.parse(metric), d)[1]


# -- accounting ---------------------------------------------------------------


def test_level_chain_small_case():
    ch = G.LevelChain(1, 2.0, 3.0, 5.0, 1.0, 2.0, 10.0, 20.0, 7.0)
    eq, opt = ch.level_sums()
    assert eq == [1.0, 3.0 * 2.0]
    assert opt == [0.0, 3.0 * 7.0]


def test_level_chain_limits():
    flat = G.LevelChain(3, 1.0, 1.0, 1.0, 4.0, 4.0, 1.0, 1.0, 9.0)
    assert flat.limit() == pytest.approx(4.0)
    assert flat.leading_ratio() == pytest.approx(4.0)
    grow = G.LevelChain(3, 2.0, 1.0, 0.5, 1.0, 1.0, 1.0, 1.0, 1.0)
    assert grow.limit() == pytest.approx(1.0)
    assert G.LevelChain(3, 2.0, 1.0, 2.0, 1.0, 1.0, 1.0, 1.0, 1.0).limit() is None


def test_normalize_weighted_witness_preserves_value():
    w = Case1(3.0, 2.0, Polynomial.monomial(2))
    n = G.normalize_weighted_witness(w, Metric.parse("poa"))
    assert n.o == 1.0 and n.value() == pytest.approx(w.value())
    c2 = make_case2("weighted", Metric.parse("poa"), 2.0, 0.5, LIN, 1.0, 2.0, LIN)
    n2 = G.normalize_weighted_witness(c2, Metric.parse("poa"))
    assert (n2.o1, n2.o2) == (1.0, 1.0)
    assert n2.value() == pytest.approx(c2.value())


# -- weighted trees -------------------------------------------------------------


@pytest.mark.parametrize("s,n", [(1, 3), (2, 4), (3, 2)])
def test_weighted_tree_sums_and_equilibrium(s, n):
    inst = G.gen_weighted_tree(s, n, weighted_witness())
    chk = inst.verify()
    assert chk["sums_match"] and chk["equilibrium"]
    assert chk["max_tightness_error"] <= 1e-9
    assert inst.game.n_resources == sum(n**i for i in range(2 * s))


def test_weighted_tree_ratio_independent_of_n():
    w = weighted_witness()
    r = [G.gen_weighted_tree(2, n, w).closed_form.ratio for n in (1, 2, 5)]
    assert max(r) - min(r) < 1e-12


def test_weighted_tree_with_epsilon_and_case2():
    m = Metric.parse("poa", 0.25)
    w = make_case2("weighted", m, 2.5, 1.0, LIN, 1.0, 1.0, Polynomial.monomial(2))
    inst = G.gen_weighted_tree(2, 3, w, 0.25)
    chk = inst.verify()
    assert chk["sums_match"] and chk["equilibrium"] and chk["max_tightness_error"] <= 1e-9


def test_weighted_tree_leading_and_limit():
    cf = G.weighted_tree_closed_form(50, weighted_witness())
    assert cf.limit == pytest.approx(PHI**2)
    assert cf.leading == pytest.approx(PHI**2)
    assert cf.ratio < cf.limit


def test_symmetric_tree_needs_larger_n():
    w = weighted_witness()
    assert G.smallest_equilibrium_n(1, w, n_max=8) == 1
    inst = G.gen_weighted_tree(1, 4, w, symmetric=True)
    assert inst.game.flags["symmetric"]
    assert inst.verify()["sums_match"]


def test_unnormalized_weighted_witness_rejected():
    with pytest.raises(G.GeneratorError):
        G.gen_weighted_tree(2, 2, Case1(2.0, 2.0, LIN))


def test_size_cap():
    caps = replace(Caps(), max_players=100)
    with pytest.raises(G.SizeCapExceeded):
        G.gen_weighted_tree(3, 4, weighted_witness(), caps=caps)


@pytest.mark.parametrize("s,n", [(2, 4), (3, 3)])
def test_walk_tree_selfish(s, n):
    inst = G.gen_weighted_walk_tree(s, n, weighted_witness("crs"))
    chk = inst.verify()
    assert chk["sums_match"] and chk["walk_selfish_reproduces"]
    assert chk["walk_selfish_max_tightness_error"] <= 1e-9


def test_walk_tree_cooperative():
    inst = G.gen_weighted_walk_tree(3, 1, weighted_witness("crc"), 0.1, "cooperative")
    chk = inst.verify()
    assert chk["sums_match"] and chk["walk_cooperative_reproduces"]
    assert chk["walk_cooperative_max_tightness_error"] <= 1e-9
    with pytest.raises(G.GeneratorError):
        G.gen_weighted_walk_tree(2, 2, weighted_witness("crc"), mode="cooperative")


def test_walk_tree_limits():
    w = weighted_witness("crs")
    cf = G.weighted_walk_tree_closed_form(2, 8, w)
    assert cf.limit == pytest.approx(2 * math.sqrt(3) + 4, rel=1e-9)
    # finite-n ratio approaches the n -> infinity value
    gaps = [abs(G.weighted_walk_tree_closed_form(2, n, w).ratio - cf.limit_n) for n in (4, 64, 1024)]
    assert gaps[0] > gaps[1] > gaps[2]


def test_walk_tree_local_check_matches_materialized():
    w = weighted_witness("crs")
    assert G.walk_tree_local_check(3, 64, w) <= 1e-9
    assert G.walk_tree_local_check(4, 1, weighted_witness("crc"), 0.0, "cooperative") <= 1e-9


# -- unweighted multipartite -----------------------------------------------------


def test_multipartite_sizes_balance_degrees():
    s, k1, k2, o1, o2 = 3, 3, 1, 2, 2
    N = G._multipartite_sizes(s, k1, k2, o1, o2)
    for i in range(1, 2 * s):
        k, o = G._level_params(s, i, k1, k2, o1, o2)
        assert N[i - 1] * k == N[i] * o


@pytest.mark.parametrize("s", [1, 2, 5])
def test_unweighted_multipartite(s):
    inst = G.gen_unweighted_multipartite(s, unweighted_witness())
    chk = inst.verify()
    assert chk["sums_match"] and chk["equilibrium"] and chk["max_tightness_error"] <= 1e-9


def test_unweighted_multipartite_with_o_above_one():
    m = Metric.parse("poa")
    w = make_case2("unweighted", m, 3, 2, LIN, 1, 2, LIN)
    inst = G.gen_unweighted_multipartite(2, w)
    chk = inst.verify()
    assert chk["sums_match"] and chk["equilibrium"]


@pytest.mark.parametrize("mode,metric", [("selfish", "crs"), ("cooperative", "crc")])
def test_unweighted_walk_multipartite(mode, metric):
    inst = G.gen_unweighted_walk_multipartite(3, unweighted_witness(metric), 0.0, mode)
    chk = inst.verify()
    assert chk["sums_match"] and chk[f"walk_{mode}_reproduces"]
    assert chk[f"walk_{mode}_max_tightness_error"] <= 1e-9
    assert inst.params["a_independent"]


def test_unweighted_walk_with_o_above_one():
    m = Metric.parse("crs")
    w = make_case2("unweighted", m, 5, 2, LIN, 1, 2, LIN)
    inst = G.gen_unweighted_walk_multipartite(2, w)
    chk = inst.verify()
    assert chk["sums_match"] and chk["walk_selfish_reproduces"]


def test_unweighted_requires_integers():
    with pytest.raises(G.GeneratorError):
        G.gen_unweighted_multipartite(2, Case1(1.5, 1, LIN))


# -- identical resources -------------------------------------------------------


def test_identical_weighted_small_example():
    inst = G.gen_identical_weighted(8, 16, 0.2, LIN, h=7, bracket=Fraction(8, 3))
    chk = inst.verify()
    assert chk["sums_match"] and chk["equilibrium"]
    assert inst.closed_form.sum_sigma == pytest.approx(512.0)
    assert inst.closed_form.sum_opt == pytest.approx(400.0)
    assert inst.closed_form.ratio == pytest.approx(1.28)
    assert inst.game.flags["symmetric"] and inst.game.flags["identical"]


def test_identical_weighted_default_h():
    inst = G.gen_identical_weighted(4.0, 60, 0.0, LIN)
    assert inst.params["h"] == 20
    assert inst.closed_form.ratio == pytest.approx(9 / 8)
    assert inst.verify()["equilibrium"]


def test_identical_weighted_input_errors():
    with pytest.raises(G.GeneratorError):
        G.gen_identical_weighted(8, 15, 0.2, LIN)
    with pytest.raises(G.GeneratorError):
        G.gen_identical_weighted(8, 16, 0.2, LIN, h=9)


def test_nested_sets_materialized():
    inst = G.gen_identical_unweighted_walk(3, [1, 1, 2], LIN)
    assert inst.params["sizes"] == [12, 6, 3, 2]
    chk = inst.verify()
    assert chk["sums_match"]
    assert chk["walk_selfish_reproduces"] and chk["walk_cooperative_reproduces"]
    assert inst.closed_form.ratio == pytest.approx(inst.closed_form.limit)


def test_nested_sets_analytic_agrees_with_materialized():
    o = [1, 1, 2, 2, 3]
    mat = G.gen_identical_unweighted_walk(5, o, LIN)
    ana = G.gen_identical_unweighted_walk(5, o, LIN, representation="analytic")
    assert ana == pytest.approx(mat.simulated_ratio(), rel=1e-12)


def test_nested_sets_chunking_is_invisible():
    a = G.identical_walk_ratio(5000, LIN, chunk=10**6)
    b = G.identical_walk_ratio(5000, LIN, chunk=333)
    assert a == pytest.approx(b, rel=1e-12)


def test_reference_sequence_integer_arithmetic():
    o = G.reference_o_sequence(1, 200)
    ref = [math.floor(44411 * i / 100000 + 1 + math.floor(math.sqrt(i) / 7)) for i in range(1, 200)]
    assert list(o) == ref
    big = G.reference_o_sequence(10**12, 10**12 + 3)
    assert list(big) == [(44411 * i) // 100000 + 1 + math.isqrt(i) // 7 for i in range(10**12, 10**12 + 3)]


def test_nested_sets_sequence_validation():
    with pytest.raises(G.GeneratorError):
        G.gen_identical_unweighted_walk(2, [2, 3], LIN)
    with pytest.raises(G.GeneratorError):
        G.gen_identical_unweighted_walk(3, [1, 3, 2], LIN)
    with pytest.raises(G.SizeCapExceeded):
        G.gen_identical_unweighted_walk(12, list(range(1, 13)), LIN, caps=replace(Caps(), lcm_cap=1000))
