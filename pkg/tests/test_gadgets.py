import dataclasses
import json
import math
import random
from fractions import Fraction
from itertools import permutations, product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quasiforce.gadgets import (
    GadgetDescriptor,
    OutOfRange,
    PCombination,
    PreconditionViolated,
    build_color_gadget,
    closed_form_c0,
    build_Qk,
    closed_form_d0,
    count_colorings,
    eval_decorated_P_density,
    eval_P_rooted,
    eval_Qk,
    expected_matching_sizes,
    pattern_roots,
    verify_color_gadget,
)
from quasiforce.graphs import Graph
from quasiforce.kernel import KernelError, NotMinimal, StepKernel, quantum_density, random_kernel
from quasiforce.lemmas import exhaustive_selector_values, selector_values

seeds = st.integers(0, 10**6)


def test_example_kernel_values(example_kernel):
    u = example_kernel
    assert eval_Qk(u, 2) == Fraction(1, 144)
    assert eval_Qk(u, 2, method="full") == Fraction(1, 144)
    assert eval_Qk(u, 3, method="full") == 0
    assert closed_form_d0(u) == Fraction(1089, 16777216)
    assert PCombination.single((4, 4)).density(u) == Fraction(121, 382205952)


def test_q2_expansion_agrees(example_kernel):
    qg = build_Qk(2, merge=True)
    assert qg.max_vertices() == 6
    assert quantum_density(qg, example_kernel) == Fraction(1, 144)
    assert isinstance(build_Qk(4, expansion_limit=1000), GadgetDescriptor)


@given(st.integers(1, 4), seeds)
def test_qk_is_positive_exactly_at_q(q, seed):
    u = random_kernel(q, random.Random(seed))
    assert eval_Qk(u, q) > 0
    assert eval_Qk(u, q + 1) == 0
    for k in range(1, q + 1):
        assert eval_Qk(u, k) == eval_Qk(u, k, method="full") >= 0


@given(seeds)
def test_qk_vanishes_on_non_minimal_kernels(seed):
    u = random_kernel(2, random.Random(seed))
    rows = [list(u.D[0]) + [u.D[0][0]], list(u.D[1]) + [u.D[1][0]], list(u.D[0]) + [u.D[0][0]]]
    a = [u.measures[0] / 2, u.measures[1], u.measures[0] / 2]
    v = StepKernel(a, rows, check_minimal=False)
    assert eval_Qk(v, 3, method="full") == 0
    assert eval_Qk(v, 2) == eval_Qk(u, 2)


@pytest.mark.parametrize("q", [2, 3, 4, 5])
def test_matching_sizes(q):
    g = build_color_gadget(q, (q + 2,) * q)
    sizes = expected_matching_sizes(q)
    for (i, j, m), es in g.matchings.items():
        assert len(es) == sizes[m - 1]
    assert g.graph.n == q * (q + 2)


def test_out_of_range_sizes():
    with pytest.raises(OutOfRange):
        build_color_gadget(2, (3, 4))
    with pytest.raises(OutOfRange):
        build_color_gadget(2, (4, 7))
    with pytest.raises(OutOfRange):
        build_color_gadget(1, (3,))


def _strip_matching(g, m):
    gone = {tuple(sorted(e)) for (_, _, mm), es in g.matchings.items() if mm == m for e in es}
    return dataclasses.replace(g, graph=Graph(g.graph.n, frozenset(g.graph.edges - gone)))


@pytest.mark.parametrize("q", [2, 3])
def test_removing_first_matching_breaks_uniqueness(q):
    g = build_color_gadget(q, (q + 2,) * q)
    assert verify_color_gadget(g)["unique_coloring"]
    rep = verify_color_gadget(_strip_matching(g, 1))
    assert not rep["unique_coloring"]
    assert count_colorings(_strip_matching(g, 1).graph, q, limit=5)[0] > 1


def _brute_colorings(g, colors):
    classes = set()
    for col in product(range(colors), repeat=g.n):
        if all(col[u] != col[v] for u, v in g.edges):
            rename = {}
            classes.add(tuple(rename.setdefault(c, len(rename)) for c in col))
    return len(classes)


@st.composite
def small_graphs(draw):
    n = draw(st.integers(1, 7))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    es = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    return Graph(n, frozenset(es))


@given(small_graphs(), st.integers(1, 3))
@settings(max_examples=60)
def test_coloring_count_matches_brute_force(g, colors):
    brute = _brute_colorings(g, colors)
    assert count_colorings(g, colors, limit=10**6)[0] == brute


def test_odd_q_collisions_between_third_and_fourth_matchings():
    for s in [(5, 5, 7), (5, 7, 8), (7, 5, 5)]:
        rep = verify_color_gadget(build_color_gadget(3, s))
        assert not rep["matchings_disjoint"]
        assert {tuple(sorted(m[-1] for m in c["matchings"])) for c in rep["collisions"]} == {(3, 4)}
        assert rep["unique_coloring"]
    for s in [(5, 5, 5), (8, 8, 8), (5, 8, 5), (6, 7, 6)]:
        assert verify_color_gadget(build_color_gadget(3, s))["ok"]


@pytest.mark.parametrize("s", [(5, 5, 7), (5, 7, 8)])
def test_selector_holds_despite_collisions(s):
    u = random_kernel(3, random.Random(11))
    d0 = closed_form_d0(u)
    expected = d0 * sum(math.prod(u.measures[p[i]] ** s[i] for i in range(3)) for p in permutations(range(3)))
    assert PCombination.single(s).density(u) == expected
    for pat in product(range(3), repeat=3):
        v = eval_P_rooted(GadgetDescriptor("P", s=s), u, pattern_roots(s, pat))
        assert v == (d0 if len(set(pat)) == 3 else 0)


@given(seeds)
def test_selector_two_valued_q2(seed):
    u = random_kernel(2, random.Random(seed))
    s = (4 + seed % 3, 4 + seed % 2)
    rep = selector_values(u, s, 0, 0)
    assert rep["ok"], rep


def test_exhaustive_selector_matches_enumeration(example_kernel):
    fast = exhaustive_selector_values(example_kernel, (4, 5))
    slow = selector_values(example_kernel, (4, 5), 0, 0)
    assert fast["ok"] and slow["ok"]
    assert fast["values"] == slow["values"]


def test_selector_on_too_many_parts():
    u = random_kernel(3, random.Random(0))
    with pytest.raises(KernelError):
        eval_decorated_P_density(GadgetDescriptor("P", s=(4, 4)), u)


def test_closed_form_d0_requires_minimal():
    u = StepKernel([Fraction(1, 2)] * 2, [[1, 1], [1, 1]], check_minimal=False)
    with pytest.raises(NotMinimal):
        closed_form_d0(u)


@given(seeds)
@settings(max_examples=10)
def test_pcombination_methods_agree(seed):
    rng = random.Random(seed)
    u = random_kernel(2, rng)
    comb = PCombination(2, {(4, 4): 1, (5, 4): Fraction(-1, 2)}, {(1, 0, 0): 1, (0, 1, 1): 3})
    ref = comb.density(u)
    assert comb.density(u, "pieces") == ref
    assert comb.density(u, "full") == ref
    assert comb.density(u, "expanded") == ref


def test_descriptor_json_and_validation():
    d = GadgetDescriptor("P", s=(4, 5), decorations=((0, 1), (0, 5)))
    assert d.kind == "P_decorated"
    assert GadgetDescriptor.from_json(d.to_json()) == d
    assert json.loads(d.to_json())["s"] == [4, 5]
    assert d.vertex_count() == 9 + 4
    q = GadgetDescriptor("Qk", k=3)
    assert GadgetDescriptor.from_json(q.to_json()) == q and q.vertex_count() == 12
    with pytest.raises(ValueError):
        GadgetDescriptor("P", s=(4, 4), decorations=((0, 9),))


def test_decorated_rooted_value(example_kernel):
    d = GadgetDescriptor("P", s=(4, 4), decorations=((0, 4),))
    roots = pattern_roots((4, 4), (0, 1))
    base = eval_P_rooted(GadgetDescriptor("P", s=(4, 4)), example_kernel, roots)
    assert eval_P_rooted(d, example_kernel, roots) == base * example_kernel.D[0][1]


def test_rooted_evaluation_needs_a_selector():
    with pytest.raises(ValueError):
        eval_P_rooted(GadgetDescriptor("Qk", k=2), random_kernel(2, random.Random(0)), [0] * 8)


def test_c0_needs_matching_value_sets(example_kernel):
    with pytest.raises(PreconditionViolated):
        closed_form_c0(example_kernel, [[Fraction(1, 2), Fraction(1, 5)], [Fraction(1, 5), Fraction(3, 4)]])
    c0 = closed_form_c0(example_kernel, example_kernel.D)
    assert c0 == closed_form_d0(example_kernel) * (Fraction(1, 2) - Fraction(3, 4)) * (Fraction(3, 4) - Fraction(1, 2))
