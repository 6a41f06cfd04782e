import json
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quasiforce import forcing as F
from quasiforce.catalog import PAIR_KINDS, pair_catalog
from quasiforce.graphs import complete_graph, cycle_graph
from quasiforce.kernel import (
    KernelError,
    NotMinimal,
    StepKernel,
    constant_kernel,
    hom_density,
    random_kernel,
    weak_iso,
    weakly_isomorphic,
)

seeds = st.integers(0, 10**6)


def test_budgets():
    assert [F.theorem9_budget(q) for q in (1, 2, 3, 4)] == [4, 14, 33, 60]
    assert [F.theorem10_budget(q) for q in (1, 2, 3)] == [3, 5, 7]


def test_identical_and_scrambled_kernels(example_kernel):
    cert = F.forcing_pipeline(example_kernel, example_kernel)
    assert cert.verdict == "WeaklyIsomorphic" and cert.permutation == [0, 1]
    swapped = example_kernel.permuted([1, 0])
    cert = F.forcing_pipeline(example_kernel, swapped)
    assert cert.verdict == "WeaklyIsomorphic"
    assert cert.permutation == weak_iso(example_kernel, swapped) == [1, 0]
    assert cert.max_vertices <= 14


def test_constant_kernels():
    p, r = constant_kernel(Fraction(1, 3)), constant_kernel(Fraction(1, 2))
    cert = F.forcing_pipeline(p, r)
    assert cert.verdict == "Distinguished"
    assert cert.witness == complete_graph(2)
    assert F.forcing_pipeline(p, constant_kernel(Fraction(1, 3))).verdict == "WeaklyIsomorphic"


def test_constant_kernel_against_same_edge_density():
    # both have edge density 1/2 but only the constant one minimizes C4
    two = StepKernel([Fraction(1, 2)] * 2, [[1, 0], [0, 1]], graphon=True)
    cert = F.forcing_pipeline(constant_kernel(Fraction(1, 2)), two)
    assert cert.verdict == "Distinguished"
    assert cert.max_vertices <= 4
    assert hom_density(cert.witness, constant_kernel(Fraction(1, 2))) != hom_density(cert.witness, two)


def test_non_minimal_reference_is_rejected(example_kernel):
    bad = StepKernel([Fraction(1, 2)] * 2, [[1, 1], [1, 1]], check_minimal=False)
    with pytest.raises(NotMinimal):
        F.forcing_pipeline(bad, example_kernel)
    with pytest.raises(KernelError):
        F.forcing_pipeline(StepKernel([1.0], [[0.5]]), example_kernel)


@pytest.mark.parametrize("q", [2, 3])
def test_catalog_covers_kinds_and_stages(q):
    kinds, stages = set(), set()
    for kind, u, u2 in pair_catalog(q, 32, seed=5):
        kinds.add(kind)
        cert = F.forcing_pipeline(u, u2)
        assert (cert.verdict == "WeaklyIsomorphic") == weakly_isomorphic(u, u2)
        if cert.verdict == "Distinguished":
            stages.add(cert.failed_stage)
            assert cert.witness_verified_by in ("brute", "eliminate")
            a, b = F.verify_witness(cert.witness, u, u2)[:2]
            assert a != b
    assert kinds == set(PAIR_KINDS)
    assert {"steps", "measures"} <= stages


@given(seeds)
@settings(max_examples=15)
def test_verdict_is_invariant_under_scrambling(seed):
    rng = random.Random(seed)
    kind, u, u2 = next(pair_catalog(2, 1, seed))
    perm = [1, 0] if rng.random() < 0.5 else [0, 1]
    if u2.q == 2:
        assert F.forcing_pipeline(u, u2).verdict == F.forcing_pipeline(u, u2.permuted(perm)).verdict


def test_certificate_json(example_kernel):
    other = random_kernel(2, random.Random(1))
    cert = F.forcing_pipeline(example_kernel, other)
    d = json.loads(cert.to_json())
    assert d["verdict"] == "Distinguished"
    assert d["vertex_budget"] == 14
    assert all(st["vertices"] <= 14 for st in d["stages"])
    assert d["witness"]["n"] == cert.witness.n


def test_distinguishing_graph(example_kernel):
    assert F.distinguishing_graph(example_kernel, example_kernel.permuted([1, 0])) is None
    other = random_kernel(2, random.Random(2))
    g, a, b = F.distinguishing_graph(example_kernel, other)
    assert a != b and hom_density(g, example_kernel) == a and hom_density(g, other) == b


def test_witness_is_minimal_under_deletion(example_kernel):
    other = random_kernel(3, random.Random(4))
    cert = F.forcing_pipeline(example_kernel, other)
    g = cert.witness
    for e in g.sorted_edges():
        h = g.remove_edge(*e)
        assert hom_density(h, example_kernel) == hom_density(h, other)


@given(seeds, st.integers(2, 3))
@settings(max_examples=15)
def test_recover_measures(seed, q):
    u = random_kernel(q, random.Random(seed))
    assert F.recover_measures(u, q) == sorted(u.measures)
    assert F.recover_measures(u.permuted(list(range(q))[::-1]), q) == sorted(u.measures)


def test_matrix_matchings(example_kernel):
    assert [list(p) for p in F.matrix_matchings(example_kernel, example_kernel.D)] == [[0, 1]]
    D = example_kernel.permuted([1, 0]).D
    assert [list(p) for p in F.matrix_matchings(example_kernel, D)] == [[1, 0]]


def test_degree_pipeline(example_kernel):
    assert len(set(example_kernel.degrees())) == 2
    cert = F.degree_forcing_pipeline(example_kernel, example_kernel.permuted([1, 0]))
    assert cert.verdict == "WeaklyIsomorphic" and cert.max_vertices <= 5
    other = random_kernel(2, random.Random(8))
    cert = F.degree_forcing_pipeline(example_kernel, other)
    assert cert.verdict == "Distinguished" and cert.witness.n <= 5
    same_degrees = StepKernel([Fraction(1, 2)] * 2, [[1, 0], [0, 1]])
    with pytest.raises(F.DegreesNotDistinct):
        F.degree_forcing_pipeline(same_degrees, example_kernel)


@given(seeds, st.integers(1, 3))
@settings(max_examples=20)
def test_diff3_closed_forms(seed, q):
    u = random_kernel(q, random.Random(seed), distinct_degrees=True)
    d = u.degrees()
    for k in range(q):
        for l in range(q):
            for joined in (False, True):
                gad = F.h_gadget(d, k, l, joined)
                assert gad.max_vertices() <= 2 * q + 1
                assert gad.density(u) == F.diff3_closed_form(u, k, l, joined)


def test_c4_minimality_small():
    u = random_kernel(2, random.Random(0))
    rep = F.c4_minimality_test(u, 20, seed=1, constant_every=5)
    assert rep["ok"] and rep["equal_constant"] >= 4
    ref, flat = F.average_preserving_refinement(u, random.Random(0), constant=True)
    assert flat and hom_density(cycle_graph(4), ref) == hom_density(cycle_graph(4), u)
    with pytest.raises(KernelError):
        F.c4_minimality_test(StepKernel([1.0], [[0.5]]), 1)


def test_catalog_kind_filter():
    kinds = {k for k, *_ in pair_catalog(2, 12, seed=0, kinds=("scrambled", "unrelated"))}
    assert kinds == {"scrambled", "unrelated"}
    with pytest.raises(ValueError):
        next(pair_catalog(2, 1, kinds=("bogus",)))
