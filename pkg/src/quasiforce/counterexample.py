"""Non-isomorphic step graphons that agree on every graph with at most q vertices.

The graphon ``U_a`` has parts of measures ``a_1..a_q`` plus a remainder part;
it is 1 on each diagonal block ``A_i x A_i`` (i <= q) and 0 elsewhere.  A
graph's density in ``U_a`` depends only on the power sums ``sum a_j^n`` over
its component sizes n, so moving ``a_q`` slightly and re-solving the power
sums of orders 2..q for ``a_1..a_{q-1}`` yields a second graphon that no
graph on q vertices can tell apart from the first.

This is the one numeric module: the perturbed measures are irrational in
general, so both kernels of a pair are built with float entries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .graphs import Graph, TooLarge, canonical_form, complete_graph
from .kernel import StepKernel, weak_iso


class Singular(ValueError):
    pass


class NoConvergence(RuntimeError):
    pass


class ConstraintViolated(ValueError):
    pass


@dataclass(frozen=True)
class DiagonalBlockGraphon:
    a: tuple

    def __post_init__(self):
        if any(x <= 0 for x in self.a):
            raise ConstraintViolated("part measures must be positive")
        if sum(self.a) >= 1:
            raise ConstraintViolated("part measures must sum to less than one")

    @property
    def q(self) -> int:
        return len(self.a)

    def kernel(self) -> StepKernel:
        q = self.q
        measures = list(self.a) + [1 - sum(self.a)]
        exact = all(isinstance(x, (int, Fraction)) for x in self.a)
        one, zero = (Fraction(1), Fraction(0)) if exact else (1.0, 0.0)
        D = [[one if i == j < q else zero for j in range(q + 1)] for i in range(q + 1)]
        if not exact:
            measures = [float(x) for x in measures]
        return StepKernel(measures, D, graphon=True, check_minimal=False)

    def density(self, h: Graph):
        return diagonal_block_density(h, self.a)


def diagonal_block_density(h: Graph, a: Sequence):
    """Product over non-trivial components of sum_j a_j^(component size)."""
    val = 1
    for comp in h.components():
        if len(comp) > 1:
            val *= sum(x ** len(comp) for x in a)
    return val


def power_sum_residuals(a: Sequence, target: Sequence) -> np.ndarray:
    """sum_j a_j^(l+1) - target_l for l = 1..q-1."""
    a = np.asarray(a, dtype=float)
    return np.array([np.sum(a ** (l + 1)) - t for l, t in enumerate(target, start=1)])


def jacobian_eq_J(a: Sequence, at=None) -> np.ndarray:
    """(q-1)x(q-1) Jacobian of the power sums of orders 2..q in a_1..a_{q-1}.

    Entry (l, i) is (l+1) a_i^l; ``at`` overrides the first q-1 coordinates.
    """
    x = np.asarray(a[: len(a) - 1] if at is None else at, dtype=float)
    m = len(x)
    if len(set(x.tolist())) < m or np.any(x == 0):
        raise Singular("Jacobian is singular at repeated or zero coordinates")
    ells = np.arange(1, m + 1)
    return (ells + 1)[:, None] * x[None, :] ** ells[:, None]


def solve_perturbation(a: Sequence, a_q_new: float, tol: float = 1e-12, max_iters: int = 100) -> list:
    """Newton's method for a'_1..a'_{q-1} keeping the power sums 2..q of a."""
    a = [float(x) for x in a]
    q = len(a)
    if len(set(a)) < q or min(a) <= 0 or sum(a) >= 1:
        raise ConstraintViolated("need distinct positive measures summing below one")
    target = [sum(x ** (l + 1) for x in a) for l in range(1, q)]
    x = np.array(a[:-1])
    for _ in range(max_iters):
        full = np.append(x, a_q_new)
        F = power_sum_residuals(full, target)
        if np.max(np.abs(F), initial=0.0) <= tol / 10:
            break
        try:
            step = np.linalg.solve(jacobian_eq_J(full), F)
        except (Singular, np.linalg.LinAlgError) as exc:
            raise NoConvergence("Newton step hit a singular Jacobian") from exc
        x = x - step
        if not np.all(np.isfinite(x)):
            raise NoConvergence("Newton iteration diverged")
    else:
        raise NoConvergence(f"no convergence within {max_iters} iterations")
    out = [float(v) for v in x] + [float(a_q_new)]
    if min(out) <= 0 or sum(out) >= 1:
        raise ConstraintViolated("perturbed measures leave the simplex")
    if len({round(v, 14) for v in out}) < q:
        raise ConstraintViolated("perturbed measures are not distinct")
    return out


def enumerate_small_graphs(n_max: int) -> list[Graph]:
    """One graph per isomorphism class on 1..n_max vertices, sorted by (n, m, key)."""
    if n_max > 7:
        raise TooLarge("class enumeration is limited to 7 vertices")
    out: list[Graph] = []
    layer = {canonical_form(Graph(1)): Graph(1)} if n_max >= 1 else {}
    for n in range(1, n_max + 1):
        reps = sorted(layer.items(), key=lambda kv: (kv[1].m, kv[0]))
        out += [g for _, g in reps]
        if n == n_max:
            break
        nxt = {}
        for _, g in reps:
            for mask in range(1 << n):
                extra = [(v, n) for v in range(n) if mask >> v & 1]
                h = Graph(n + 1, g.edges | frozenset(extra))
                key = canonical_form(h)
                if key not in nxt:
                    nxt[key] = h
        layer = nxt
    return out


def _counterexample_report(a, a2, tol):
    q = len(a)
    classes = enumerate_small_graphs(min(q, 7))
    gaps = [abs(diagonal_block_density(h, a) - diagonal_block_density(h, a2)) for h in classes]
    k = complete_graph(q + 1)
    tk, tk2 = diagonal_block_density(k, a), diagonal_block_density(k, a2)
    u = DiagonalBlockGraphon(tuple(a)).kernel()
    u2 = DiagonalBlockGraphon(tuple(a2)).kernel()
    match = weak_iso(u, u2, tol=max(tol, 1e-9))
    report = {
        "q": q,
        "tol": tol,
        "classes_checked": len(classes),
        "max_gap_small": max(gaps, default=0.0),
        "agree_small": all(g <= tol for g in gaps),
        "clique": f"K{q + 1}",
        "t_clique_U": tk,
        "t_clique_U2": tk2,
        "clique_gap": abs(tk - tk2),
        "disagree_clique": abs(tk - tk2) > 10 * tol,
        "part_matching": match,
        "not_weakly_isomorphic": match is None,
    }
    report["ok"] = report["agree_small"] and report["disagree_clique"] and report["not_weakly_isomorphic"]
    return u, u2, report


def build_counterexample_pair(a: Sequence, delta: float, tol: float = 1e-12, halvings: int = 20):
    """(U, U', report) with U' obtained by moving a_q by delta (halved on failure)."""
    a = [float(x) for x in a]
    d = float(delta)
    last = None
    for _ in range(halvings + 1):
        try:
            a2 = solve_perturbation(a, a[-1] + d, tol)
        except (NoConvergence, ConstraintViolated) as exc:
            last = exc
            d /= 2
            continue
        u, u2, report = _counterexample_report(a, a2, tol)
        report["delta"] = d
        report["a"] = a
        report["a_perturbed"] = a2
        return u, u2, report
    raise last


def k3_closed_form_gap(a: Sequence, a_q_new: float) -> float:
    """q=2 check value: |t(K3, U) - t(K3, U')| with a'_1 from the quadratic."""
    a1p = math.sqrt(a[0] ** 2 + a[1] ** 2 - a_q_new ** 2)
    return abs(a[0] ** 3 + a[1] ** 3 - a1p ** 3 - a_q_new ** 3)
