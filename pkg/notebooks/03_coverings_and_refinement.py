"""Color refinement, bisimulation and coverings on the classic C3 / C6 pair."""

# %%
from kignn import workbench as wb
from kignn.equivalence import (FULL, bisimilar, cr_equivalent, cr_signature, double_cycle_cover,
                               find_covering, verify_covering)
from kignn.graphs import builtin_graph, is_isomorphic, unravel, write_graph

c3, c6 = builtin_graph("cycle(3)"), builtin_graph("cycle(6)")

# %% refinement cannot tell the two cycles apart
print("CR-equivalent:", cr_equivalent(c3, c6, FULL))
print("C6 signature:", cr_signature(c6))

# %% C6 wraps twice around C3
w = find_covering(c6, c3)
print("covering:", w.mapping, "verified:", verify_covering(c6, c3, w))
print("C3 -> C6:", find_covering(c3, c6))

# %% bounded unravellings coincide too
for r in range(4):
    print(r, is_isomorphic(unravel(c3, r), unravel(c6, r)) is not None)

# %% the labeled triangle and its double cover
tri = builtin_graph("triangle_p")
h, cov = double_cycle_cover(tri)
print(write_graph(h))
print("verified:", verify_covering(h, tri, cov), "CR-equivalent:", cr_equivalent(h, tri))

# %% stars are bisimilar whatever their size
print(bisimilar(builtin_graph("star(1)"), builtin_graph("star(5)")))

# %% what the covering means for classifiers
print(wb.separation_report("covering_obstruction_c3").text())
