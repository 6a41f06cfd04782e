import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quasiforce.counterexample import (
    ConstraintViolated,
    DiagonalBlockGraphon,
    NoConvergence,
    Singular,
    build_counterexample_pair,
    diagonal_block_density,
    enumerate_small_graphs,
    jacobian_eq_J,
    k3_closed_form_gap,
    power_sum_residuals,
    solve_perturbation,
)
from quasiforce.graphs import Graph, complete_graph, path_graph
from quasiforce.kernel import hom_density


def test_class_counts():
    counts = [sum(1 for g in enumerate_small_graphs(7) if g.n == n) for n in range(1, 8)]
    assert counts == [1, 2, 4, 11, 34, 156, 1044]


def test_diagonal_block_density_matches_kernel():
    a = (0.2, 0.3)
    u = DiagonalBlockGraphon(a).kernel()
    for h in enumerate_small_graphs(4):
        assert diagonal_block_density(h, a) == pytest.approx(hom_density(h, u), abs=1e-14)


def test_q2_perturbation_matches_quadratic():
    a2 = solve_perturbation([0.2, 0.4], 0.41)
    assert a2[0] == pytest.approx(math.sqrt(0.2 ** 2 + 0.4 ** 2 - 0.41 ** 2), abs=1e-14)
    assert a2[0] == pytest.approx(0.178605710994917566, abs=1e-14)
    assert k3_closed_form_gap([0.2, 0.4], 0.41) == pytest.approx(2.6185e-3, abs=1e-6)


@given(st.integers(2, 4), st.randoms(use_true_random=False))
@settings(max_examples=15)
def test_perturbation_preserves_power_sums(q, rnd):
    w = [rnd.uniform(1, 2) + i for i in range(q)]
    a = [x / (sum(w) * 1.5) for x in w]
    u, u2, rep = build_counterexample_pair(a, 1e-3)
    assert np.max(np.abs(power_sum_residuals(rep["a_perturbed"], [sum(x ** (l + 1) for x in a)
                                                                   for l in range(1, q)]))) <= 1e-12
    assert rep["ok"], rep


def test_determinant_of_jacobian():
    a1, a2 = 0.2, 0.3
    J = jacobian_eq_J([a1, a2, 0.1])
    assert np.linalg.det(J) == pytest.approx(2 * 3 * a1 * a2 * (a2 - a1), rel=1e-12)


def test_jacobian_singular():
    with pytest.raises(Singular):
        jacobian_eq_J([0.2, 0.2, 0.3])


def test_constraint_errors():
    with pytest.raises(ConstraintViolated):
        DiagonalBlockGraphon((0.5, 0.6))
    with pytest.raises(ConstraintViolated):
        solve_perturbation([0.2, 0.2], 0.21)
    with pytest.raises((NoConvergence, ConstraintViolated)):
        solve_perturbation([0.2, 0.4], 0.5)


def test_zero_delta_gives_identical_pair():
    u, u2, rep = build_counterexample_pair([0.2, 0.4], 0.0)
    assert not rep["ok"] and not rep["disagree_clique"]


def test_large_delta_is_halved():
    u, u2, rep = build_counterexample_pair([0.2, 0.4], 0.5)
    assert rep["delta"] < 0.5 and rep["ok"]


def test_q3_distinguishes_only_at_four_vertices():
    a = [0.1, 0.2, 0.3]
    u, u2, rep = build_counterexample_pair(a, 0.005)
    assert rep["classes_checked"] == 7
    assert abs(hom_density(path_graph(4), u) - hom_density(path_graph(4), u2)) > 1e-9
    assert hom_density(complete_graph(3), u) == pytest.approx(hom_density(complete_graph(3), u2), abs=1e-12)
    assert diagonal_block_density(Graph(4), a) == 1
