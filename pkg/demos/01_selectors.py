"""Gadgets on a two-step kernel.

A 2-step kernel with parts of measure 1/3 and 2/3.  Q_2 has positive
density because the two parts are distinguishable, and Q_3 vanishes because
there is no third part.  The selector P_{4,4} is then evaluated with its
roots placed in every possible way.  It is nonzero only when each group of
roots sits inside a single part and the two groups use different parts.
"""

from collections import Counter
from fractions import Fraction
from itertools import product

from quasiforce import GadgetDescriptor, StepKernel, build_color_gadget, eval_Qk, verify_color_gadget
from quasiforce.gadgets import PCombination, closed_form_d0, eval_P_rooted

u = StepKernel([Fraction(1, 3), Fraction(2, 3)],
               [[Fraction(1, 2), Fraction(1, 4)], [Fraction(1, 4), Fraction(3, 4)]])

print("t(Q_2, U) =", eval_Qk(u, 2))
print("t(Q_3, U) =", eval_Qk(u, 3, method="full"))

g = build_color_gadget(2, (4, 4))
rep = verify_color_gadget(g)
print(f"\ncolor gadget on {g.graph.n} vertices, {g.graph.m} edges: unique 2-coloring = {rep['unique_coloring']}")

desc = GadgetDescriptor("P", s=(4, 4))
values = Counter(eval_P_rooted(desc, u, roots) for roots in product(range(2), repeat=8))
print("\nrooted selector values over all 256 root placements:")
for v, n in sorted(values.items()):
    print(f"  {str(v):>16}  x{n}")
print("closed form d0 =", closed_form_d0(u))
print("t(P_{4,4}, U) =", PCombination.single((4, 4)).density(u))
