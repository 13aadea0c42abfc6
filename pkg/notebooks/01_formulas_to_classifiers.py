"""Compile modal formulas into feature-expression classifiers and watch them agree
with the model checker.  Run with `python3 notebooks/01_formulas_to_classifiers.py`."""

# %%
from kignn import compilers as C
from kignn import workbench as wb
from kignn.features import classify
from kignn.graphs import builtin_graph
from kignn.kir import write_model
from kignn.logic import Logic, format_formula, modelcheck_gml, parse_formula, wgml_membership

# %% a graded formula: the point has at least two neighbors satisfying p1
phi = parse_formula("<>{>=2}p1")
print("formula:", format_formula(phi), "|", wgml_membership(phi).kind.value)
c = C.compile_gml_localsum(phi)
print(write_model(c))

# %% decisions on a few fixtures, next to the model checker
for name in ("star(1)", "star(2)", "star(3)", "cycle(3)"):
    g = builtin_graph(name, prop_count=1)
    print(f"{name:10s} checker={modelcheck_gml(g, phi)!s:5s} classifier={classify(c, g).accept}")
# unlabeled fixtures carry no p1, so every line above is False; label the leaves
from kignn.graphs import Graph, PointedGraph
star = PointedGraph(Graph.from_edges(3, [(0, 1), (0, 2)], [(0,), (1,), (1,)]), 0)
print("star(2) with labeled leaves:", modelcheck_gml(star, phi), classify(c, star).accept)

# %% the same formula through the weakly graded compiler, which needs keys
cm = C.compile_wgml_modal(phi)
print("mode:", cm.mode.value, "policy:", cm.policy.value)

# %% a small oracle sweep: 20 formulas over every pointed graph with <= 3 nodes
corpus = wb.Corpus(count=20, max_nodes=3, props=2, keyings=0, connected_only=False)
print(wb.oracle_agreement("gml_localsum_relu", corpus, seed=1).text())

# %% LDDL: unique-witness diamonds and their normal form
from kignn.logic import normalize_lddl
psi = parse_formula("<(step + stay);step>=1 p1", Logic.LDDL)
print(format_formula(psi), "=>", format_formula(normalize_lddl(psi)))
print(wb.oracle_agreement("lddl_localmax_semilinear",
                          wb.Corpus(count=10, max_nodes=3, keyings=3), seed=2).text())
