"""Keys as node identifiers: classifiers that read them, classifiers that
must not depend on them, and the falsifier that tells them apart."""

# %%
from fractions import Fraction

from kignn import compilers as C
from kignn import features as F
from kignn import workbench as wb
from kignn.features import AcceptancePolicy, GnnClassifier, LocalMax, Val, classify
from kignn.graphs import as_keyed, builtin_graph

# %% |max of neighbor keys - min of neighbor keys| is positive iff two neighbors exist
diamond2top = C.fixture_classifier("diamond2top")
for keys in ([0, 1, 3], [5, 2, 9]):
    print("star(2) keys", keys, "->", classify(diamond2top, as_keyed(builtin_graph("star(2)"), keys)))
print("star(1) ->", classify(diamond2top, as_keyed(builtin_graph("star(1)"), [4, 7])))

# %% a classifier that leaks the key
leak = GnnClassifier(Val(), AcceptancePolicy.POS_NEG, metadata="accept iff key > 0")
r = wb.test_key_invariance(leak, max_nodes=1, props=0, keyings=20)
print(r.text())
print("replayed:", r.counterexample.replay(leak))

# %% the fixture survives the same search on every graph with <= 4 nodes
print(wb.test_key_invariance(diamond2top, max_nodes=4, props=0, keyings=20).text())

# %% positive iff some neighbor holds a strictly larger key than all of its own neighbors
local_peak = LocalMax(F.relu(F.sub(Val(), LocalMax(Val()))))
g = as_keyed(builtin_graph("path(3)"), [Fraction(1), Fraction(3), Fraction(2)])
print("per node:", [str(x) for x in F.eval_feature(local_peak, g)[1]])

# %% q_even: even number of leaves on a star, read off through keys
print(wb.separation_report("q_even_positive").text())
