"""Build the lower-bound games and watch their ratio climb towards the class bound."""

# %%
from poa_lab import generators as G
from poa_lab.bounds import Metric, PolynomialClass, gamma_bound, unweighted_closed_form

# %% Unweighted equilibria on a layered multipartite graph. Each row builds the game,
# checks it is an equilibrium and compares simulated and closed-form cost.
w = unweighted_closed_form(Metric.parse("poa"), 1)[1]
for s in range(2, 9):
    inst = G.gen_unweighted_multipartite(s, w)
    chk = inst.verify()
    print(f"s={s}: {inst.game.n_players:>5} players, ratio {chk['simulated_ratio']:.4f}, equilibrium {chk['equilibrium']}")
print("limit:", inst.closed_form.limit)

# %% Weighted trees: the exact ratio ignores n, and approaches the bound only like 1/s.
w = gamma_bound("weighted", Metric.parse("poa"), PolynomialClass(1)).witness
for s in (2, 5, 10, 50, 500):
    cf = G.weighted_tree_closed_form(s, w)
    print(f"s={s:>3}: exact {cf.ratio:.5f}   leading-order {cf.leading:.5f}")

# %% A one-round walk on the labelled tree: every arrival is exactly indifferent
# between its two options, and the prescribed choices rebuild the bad profile.
w = gamma_bound("weighted", Metric.parse("crs"), PolynomialClass(1)).witness
inst = G.gen_weighted_walk_tree(2, 8, w)
print(inst.verify())
print("double limit:", inst.closed_form.limit)
