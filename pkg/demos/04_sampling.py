"""Sampled graphs approach their step graphon.

Vertices of a sample get i.i.d. part labels and edges appear independently
with the block probability.  Homomorphism densities of K2 and C4 in the
sample are compared with the exact rational values as n grows.
"""

import random
from fractions import Fraction

from quasiforce import random_kernel
from quasiforce.graphs import complete_graph, cycle_graph
from quasiforce.sbm import convergence_report

u = random_kernel(3, random.Random(5))
rows = convergence_report(u, [("K2", complete_graph(2)), ("C4", cycle_graph(4))], [100, 500, 2000], seed=1)
print(f"{'n':>5} {'H':>3} {'exact':>10} {'sample':>10} {'|gap|':>8} {'stderr':>8}  mode")
for r in rows:
    exact = float(Fraction(r["exact"]))
    print(f"{r['n']:>5} {r['h']:>3} {exact:>10.5f} {r['empirical']:>10.5f} {r['deviation']:>8.5f}"
          f" {r['stderr']:>8.5f}  {r['mode']}")
