"""Identical machines, unit jobs, greedy arrivals: the nested-set construction."""

# %%
from poa_lab import generators as G
from poa_lab.latency import Polynomial

f = Polynomial.monomial(1)

# %% A tiny instance first: 12 machines, three job types.
inst = G.gen_identical_unweighted_walk(3, [1, 1, 2], f)
print("set sizes:", inst.params["sizes"])
print("checks:", inst.verify())

# %% The long sequence: growth is slow, roughly n^(-1/4) away from the limit.
o = G.reference_o_sequence(1, 11)
print("first o values:", list(o))
for n in (10**3, 10**4, 10**5, 10**6):
    print(f"n={n:>8}: {G.identical_walk_ratio(n, f):.6f}")
