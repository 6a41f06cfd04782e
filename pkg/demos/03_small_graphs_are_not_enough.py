"""Graphs on q vertices cannot tell every pair of (q+1)-step graphons apart.

A graphon that is 1 on q diagonal blocks of measures a_1..a_q and 0 elsewhere
has densities that depend only on the power sums of orders up to the
largest component size.  Moving a_q a little and re-solving power sums
2..q for the others keeps every density on at most q vertices.  The
clique K_{q+1} still sees the change.
"""

from quasiforce import build_counterexample_pair, hom_density
from quasiforce.counterexample import enumerate_small_graphs
from quasiforce.graphs import complete_graph

for a, delta in (([0.2, 0.4], 0.01), ([0.1, 0.2, 0.3], 0.005)):
    q = len(a)
    u, u2, rep = build_counterexample_pair(a, delta)
    print(f"q={q}: a = {a} -> a' = {[round(x, 12) for x in rep['a_perturbed']]}")
    worst = max(abs(hom_density(h, u) - hom_density(h, u2)) for h in enumerate_small_graphs(q))
    k = complete_graph(q + 1)
    print(f"  largest gap over the {rep['classes_checked']} graphs on <= {q} vertices: {worst:.2e}")
    print(f"  gap on K{q + 1}: {abs(hom_density(k, u) - hom_density(k, u2)):.3e}")
    print(f"  weakly isomorphic: {rep['part_matching'] is not None}\n")
