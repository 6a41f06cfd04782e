"""Stochastic block model samples of step graphons and empirical densities."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from .graphs import Graph, format_fraction
from .kernel import NotAGraphon, StepKernel, hom_density

EXHAUSTIVE_LIMIT = 10**7
_LABEL_STREAM = 0
_EDGE_STREAM = 1


@dataclass(frozen=True, eq=False)
class SampledGraph:
    """A sampled graph kept as a dense adjacency matrix; ``labels`` are 1-based parts."""

    adjacency: np.ndarray
    labels: np.ndarray
    seed: int

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def m(self) -> int:
        return int(np.triu(self.adjacency, 1).sum())

    def edges(self) -> list[tuple[int, int]]:
        i, j = np.nonzero(np.triu(self.adjacency, 1))
        return list(zip(i.tolist(), j.tolist()))

    @property
    def graph(self) -> Graph:
        return Graph(self.n, frozenset(self.edges()))

    def to_edgelist(self) -> str:
        lines = [f"{self.n} {self.m}"] + [f"{u} {v}" for u, v in self.edges()]
        return "\n".join(lines) + "\n"

    def __eq__(self, other):
        return (isinstance(other, SampledGraph) and self.seed == other.seed
                and np.array_equal(self.adjacency, other.adjacency)
                and np.array_equal(self.labels, other.labels))


def sample_graph(u: StepKernel, n: int, seed: int) -> SampledGraph:
    """Vertex labels drawn with probabilities a; edge {i, j} kept with probability D.

    Randomness is keyed by (seed, stream, row) so that every row of the
    adjacency matrix can be produced independently of all others.
    """
    if any(not 0 <= x <= 1 for r in u.D for x in r):
        raise NotAGraphon("sampling needs values in [0, 1]")
    if n < 1:
        raise ValueError("n must be positive")
    a = np.array([float(x) for x in u.measures])
    D = np.array([[float(x) for x in r] for r in u.D])
    cuts = np.cumsum(a)
    cuts[-1] = 1.0
    draws = np.random.default_rng([seed, _LABEL_STREAM]).random(n)
    labels = np.searchsorted(cuts, draws, side="right")
    labels = np.minimum(labels, u.q - 1)
    adj = np.zeros((n, n), dtype=bool)
    for i in range(n - 1):
        r = np.random.default_rng([seed, _EDGE_STREAM, i]).random(n - i - 1)
        adj[i, i + 1:] = r < D[labels[i], labels[i + 1:]]
    adj |= adj.T
    return SampledGraph(adj, labels + 1, seed)


def _adjacency(g) -> np.ndarray:
    if isinstance(g, SampledGraph):
        return g.adjacency
    if isinstance(g, Graph):
        A = np.zeros((g.n, g.n), dtype=bool)
        for u, v in g.edges:
            A[u, v] = A[v, u] = True
        return A
    return np.asarray(g, dtype=bool)


@dataclass(frozen=True)
class Estimate:
    value: Union[Fraction, float]
    stderr: float
    mode: str
    samples: int

    def to_dict(self) -> dict:
        v = self.value
        return {"estimate": format_fraction(v) if isinstance(v, Fraction) else float(v), "stderr": self.stderr,
                "mode": self.mode, "samples": self.samples}


def _exhaustive(h: Graph, A: np.ndarray) -> Fraction:
    N = A.shape[0]
    M = A.astype(np.int64)
    ops = []
    touched = set()
    for u, v in h.edges:
        ops += [M, [u, v]]
        touched.update((u, v))
    free = h.n - len(touched)
    count = int(np.einsum(*ops, [], optimize=True)) if ops else 1
    return Fraction(count * N ** free, N ** h.n)


def empirical_hom_density(h: Graph, g, samples: int = 100_000, seed: int = 0, chunk: int = 200_000) -> Estimate:
    """t(h, g): exhaustive when |V(g)|^|V(h)| is small, otherwise Monte Carlo."""
    A = _adjacency(g)
    N = A.shape[0]
    if h.n == 0 or N ** h.n <= EXHAUSTIVE_LIMIT:
        return Estimate(_exhaustive(h, A), 0.0, "exhaustive", 0)
    if samples < 1:
        raise ValueError("samples must be positive")
    rng = np.random.default_rng(seed)
    edges = np.array(h.sorted_edges(), dtype=int).reshape(-1, 2)
    hits = 0
    left = samples
    while left:
        b = min(chunk, left)
        phi = rng.integers(0, N, size=(b, h.n))
        ok = np.ones(b, dtype=bool)
        for u, v in edges:
            ok &= A[phi[:, u], phi[:, v]]
        hits += int(ok.sum())
        left -= b
    p = hits / samples
    se = float(np.sqrt(max(p * (1 - p), 0.0) / samples))
    return Estimate(p, se, "monte_carlo", samples)


def convergence_report(u: StepKernel, h_list: Sequence, n_list: Sequence[int], seed: int,
                       samples: int = 200_000) -> list[dict]:
    """Deviation of empirical from exact densities for every (n, h)."""
    rows = []
    exact = {name: hom_density(h, u) for name, h in h_list}
    for n in n_list:
        g = sample_graph(u, n, seed)
        for name, h in h_list:
            est = empirical_hom_density(h, g, samples, seed)
            dev = abs(float(est.value) - float(exact[name]))
            rows.append({"n": n, "h": name, "exact": str(exact[name]), "empirical": float(est.value),
                         "stderr": est.stderr, "deviation": dev, "mode": est.mode})
    return rows
