"""Deciding weak isomorphism with bounded-size graphs.

The pipeline compares densities of a fixed sequence of gadgets.  Each gadget
has at most 4q^2 - q vertices.  On the first mismatch, a single distinguishing
graph is pulled out of that gadget's expansion and shrunk by deleting
vertices and edges.  Its density gap is then re-checked by brute force.
"""

import random

from quasiforce import forcing_pipeline, random_kernel, weakly_isomorphic
from quasiforce.catalog import pair_catalog

rng = random.Random(2024)
u = random_kernel(3, rng)
print("reference kernel:", u.to_dict())

for kind, a, b in pair_catalog(3, 8, seed=11):
    cert = forcing_pipeline(a, b)
    line = f"{kind:>24}: {cert.verdict:<16} largest gadget {cert.max_vertices:>2} vertices"
    if cert.witness is not None:
        line += (f", failed at '{cert.failed_stage}', witness has {cert.witness.n} vertices"
                 f" and {cert.witness.m} edges (t = {cert.t_U} vs {cert.t_U2})")
    print(line)
    assert (cert.verdict == "WeaklyIsomorphic") == weakly_isomorphic(a, b)

cert = forcing_pipeline(u, u.permuted([2, 0, 1]))
print("\nscrambled copy of the reference:", cert.verdict, "permutation", cert.permutation)
for st in cert.stages:
    print(f"  {st.name:>14}  {st.graph:<16} {st.vertices:>3} vertices  passed={st.passed}")
