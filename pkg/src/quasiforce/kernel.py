"""Step kernels and exact homomorphism densities.

A q-step kernel is stored as part measures ``a_0..a_{q-1}`` and a symmetric
q-by-q value matrix ``D``. For exact kernels every entry is a
:class:`fractions.Fraction`; numeric kernels (floats) exist only for the
irrational constructions and never mix with exact ones.

Densities are finite sums over part assignments.  Small graphs are summed
directly; larger ones go through variable elimination with a greedy
minimum-degree order, carried out on integer tables obtained by clearing the
kernel's common denominator.
"""

from __future__ import annotations

import json
import math
import random
import warnings
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations, product
from typing import Optional, Sequence

import numpy as np

from .graphs import Graph, QuantumGraph, QuantumRootedGraph, RootedGraph, format_fraction

BRUTE_LIMIT = 16
TABLE_LIMIT = 10**7


class KernelError(ValueError):
    pass


class NotMinimal(KernelError):
    pass


class NotAGraphon(KernelError):
    pass


class BadSplit(KernelError):
    pass


class BudgetExceeded(RuntimeError):
    pass


def _num(x, exact: bool):
    if exact:
        if isinstance(x, float):
            raise KernelError("float entry in an exact kernel; use numeric mode")
        return Fraction(x)
    return float(x)


def _is_exact(values) -> bool:
    kinds = {isinstance(v, float) for v in values}
    if kinds == {True, False}:
        raise KernelError("exact and floating-point entries cannot be mixed")
    return kinds != {True}


@dataclass(frozen=True, init=False)
class StepKernel:
    measures: tuple
    D: tuple
    graphon: bool

    def __init__(self, measures, D, graphon: bool = False, *, check_minimal: bool = True,
                 tol: float = 1e-12):
        flat = list(measures) + [x for row in D for x in row]
        exact = _is_exact(flat)
        a = tuple(_num(x, exact) for x in measures)
        q = len(a)
        if q < 1:
            raise KernelError("a step kernel needs at least one part")
        M = tuple(tuple(_num(x, exact) for x in row) for row in D)
        if len(M) != q or any(len(r) != q for r in M):
            raise KernelError("D must be q-by-q")
        object.__setattr__(self, "measures", a)
        object.__setattr__(self, "D", M)
        object.__setattr__(self, "graphon", bool(graphon))
        if any(x <= 0 for x in a):
            raise KernelError("part measures must be positive")
        total = sum(a)
        if (total != 1) if exact else abs(total - 1) > tol:
            raise KernelError(f"part measures sum to {total}, not 1")
        for i in range(q):
            for j in range(i):
                if (M[i][j] != M[j][i]) if exact else abs(M[i][j] - M[j][i]) > tol:
                    raise KernelError("D must be symmetric")
        if graphon and any(not (0 <= x <= 1) for r in M for x in r):
            raise NotAGraphon("graphon values must lie in [0, 1]")
        if check_minimal:
            ok, pair = check_minimality(self)
            if not ok:
                raise NotMinimal(f"parts {pair} have identical rows")

    @property
    def q(self) -> int:
        return len(self.measures)

    @property
    def exact(self) -> bool:
        return not isinstance(self.measures[0], float)

    def degree(self, i: int):
        return sum(self.measures[j] * self.D[i][j] for j in range(self.q))

    def degrees(self) -> list:
        return [self.degree(i) for i in range(self.q)]

    def part_densities(self) -> list:
        return [self.D[i][i] for i in range(self.q)]

    def pair_densities(self) -> list:
        return [self.D[i][j] for i in range(self.q) for j in range(i + 1, self.q)]

    def permuted(self, perm: Sequence[int]) -> "StepKernel":
        """Part ``i`` of the result is part ``perm[i]`` of ``self``."""
        a = [self.measures[p] for p in perm]
        D = [[self.D[p][r] for r in perm] for p in perm]
        return StepKernel(a, D, self.graphon, check_minimal=False)

    def minimal_form(self, tol: Optional[float] = None) -> tuple["StepKernel", list[int]]:
        """Merge parts with identical rows; returns the kernel and the part map."""
        classes: list[int] = []
        reps: list[int] = []
        for i in range(self.q):
            for c, r in enumerate(reps):
                if _rows_equal(self.D[i], self.D[r], tol):
                    classes.append(c)
                    break
            else:
                classes.append(len(reps))
                reps.append(i)
        a = [sum(self.measures[i] for i in range(self.q) if classes[i] == c) for c in range(len(reps))]
        D = [[self.D[r][s] for s in reps] for r in reps]
        return StepKernel(a, D, self.graphon, check_minimal=False), classes

    def to_dict(self) -> dict:
        if self.exact:
            fmt = format_fraction
        else:
            def fmt(x):
                return format(x, ".18g")
        return {"q": self.q, "measures": [fmt(x) for x in self.measures],
                "D": [[fmt(x) for x in row] for row in self.D], "graphon": self.graphon}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict, check_minimal: bool = True) -> "StepKernel":
        a = [_parse_number(x) for x in d["measures"]]
        D = [[_parse_number(x) for x in row] for row in d["D"]]
        if "q" in d and int(d["q"]) != len(a):
            raise KernelError("q does not match the number of measures")
        return cls(a, D, bool(d.get("graphon", False)), check_minimal=check_minimal)

    @classmethod
    def from_json(cls, text: str, check_minimal: bool = True) -> "StepKernel":
        return cls.from_dict(json.loads(text), check_minimal=check_minimal)


def _parse_number(x):
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    if isinstance(x, float):
        return x
    s = str(x).strip()
    if any(ch in s for ch in ".eE") and "/" not in s:
        return float(s)
    return Fraction(s)


def _rows_equal(r1, r2, tol) -> bool:
    if tol is None:
        return tuple(r1) == tuple(r2)
    return all(abs(x - y) <= tol for x, y in zip(r1, r2))


def constant_kernel(p, graphon: bool = True) -> StepKernel:
    return StepKernel([1], [[p]], graphon)


def check_minimality(u: StepKernel) -> tuple[bool, Optional[tuple[int, int]]]:
    """True iff all rows of D are pairwise distinct; otherwise the first offending pair."""
    for i in range(u.q):
        for j in range(i + 1, u.q):
            if u.D[i] == u.D[j]:
                return False, (i, j)
    return True, None


def degree_of_part(u: StepKernel, i: int):
    if not 0 <= i < u.q:
        raise KernelError(f"part index {i} out of range")
    return u.degree(i)


# -- density evaluation ---------------------------------------------------------

def _integer_tables(u: StepKernel):
    """Scale to integers: a = A/L, D = E/L. Floats pass through unchanged."""
    if not u.exact:
        return (np.array(u.measures, dtype=float), np.array(u.D, dtype=float), 1.0)
    L = math.lcm(*(x.denominator for x in u.measures), *(x.denominator for r in u.D for x in r))
    A = np.empty(u.q, dtype=object)
    E = np.empty((u.q, u.q), dtype=object)
    for i in range(u.q):
        A[i] = int(u.measures[i] * L)
        for j in range(u.q):
            E[i, j] = int(u.D[i][j] * L)
    return A, E, L


def _eliminate(graph: Graph, u: StepKernel, k: int, roots: Sequence[int]):
    """Sum over non-root assignments, roots ``0..k-1`` fixed to ``roots``."""
    A, E, L = _integer_tables(u)
    exact = u.exact
    const = 1
    factors: list[tuple[tuple, np.ndarray]] = []
    for v in range(k, graph.n):
        factors.append(((v,), A))
    for x, y in graph.edges:
        if y < k:
            const = const * E[roots[x], roots[y]]
        elif x < k:
            factors.append(((y,), E[roots[x], :]))
        else:
            factors.append(((x, y), E))
    # interaction graph for the ordering heuristic
    nbrs: dict[int, set] = {v: set() for v in range(k, graph.n)}
    for scope, _ in factors:
        for a in scope:
            nbrs[a].update(b for b in scope if b != a)
    remaining = set(nbrs)
    q = u.q
    while remaining:
        v = min(remaining, key=lambda w: (len(nbrs[w] & remaining), w))
        involved = [f for f in factors if v in f[0]]
        factors = [f for f in factors if v not in f[0]]
        scope = sorted({a for s, _ in involved for a in s} - {v})
        if q ** (len(scope) + 1) > TABLE_LIMIT:
            raise BudgetExceeded(f"elimination table of size {q}^{len(scope) + 1} exceeds budget")
        args = []
        for s, t in involved:
            args += [t, list(s)]
        new = np.einsum(*args, scope)
        if scope:
            factors.append((tuple(scope), new))
        else:
            const = const * new[()] if isinstance(new, np.ndarray) else const * new
        for a in scope:
            nbrs[a].update(b for b in scope if b != a)
        remaining.discard(v)
    assert not factors
    scale = L ** ((graph.n - k) + graph.m)
    if exact:
        return Fraction(int(const), scale)
    return float(const) / scale


def _brute(graph: Graph, u: StepKernel, k: int, roots: Sequence[int]):
    a, D = u.measures, u.D
    zero = Fraction(0) if u.exact else 0.0
    total = zero
    free = range(k, graph.n)
    edges = list(graph.edges)
    for tail in product(range(u.q), repeat=graph.n - k):
        phi = list(roots) + list(tail)
        w = 1
        for v in free:
            w *= a[phi[v]]
        for x, y in edges:
            w *= D[phi[x]][phi[y]]
            if not w:
                break
        total += w
    return total


def _check_method(method):
    if method not in ("auto", "brute", "eliminate"):
        raise ValueError(f"unknown method {method!r}")


def hom_density(h: Graph, u: StepKernel, method: str = "auto"):
    """t(H, U): measure-weighted sum over all part assignments of the edge product."""
    _check_method(method)
    if method == "brute" or (method == "auto" and u.q ** h.n <= BRUTE_LIMIT):
        return _brute(h, u, 0, ())
    return _eliminate(h, u, 0, ())


def rooted_density(h: RootedGraph, u: StepKernel, roots: Sequence[int], method: str = "auto"):
    """Density with the roots placed in the given parts (non-roots integrated out)."""
    _check_method(method)
    roots = list(roots)
    if len(roots) != h.k:
        raise KernelError(f"{h.k} roots need a part each, got {len(roots)}")
    if any(not 0 <= r < u.q for r in roots):
        raise KernelError("root part out of range")
    free = h.n - h.k
    if method == "brute" or (method == "auto" and u.q ** free <= BRUTE_LIMIT):
        return _brute(h.graph, u, h.k, roots)
    return _eliminate(h.graph, u, h.k, roots)


def quantum_density(qg, u: StepKernel, roots: Optional[Sequence[int]] = None, method: str = "auto"):
    """Linear extension of :func:`hom_density` / :func:`rooted_density`."""
    total = Fraction(0) if u.exact else 0.0
    if isinstance(qg, QuantumRootedGraph):
        if roots is None:
            raise KernelError("rooted quantum graph needs a root assignment")
        for c, h in qg:
            total += c * rooted_density(h, u, roots, method)
        return total
    if isinstance(qg, QuantumGraph):
        for c, g in qg:
            total += c * hom_density(g, u, method)
        return total
    raise TypeError(f"not a quantum graph: {type(qg).__name__}")


_SIG_BASE = 64


class _SignatureTables:
    """Per-(q, n) arrays encoding each map's signature as one integer."""

    def __init__(self, q: int, n: int):
        self.q = q
        phi = np.indices((q,) * n).reshape(n, -1).T
        self.phi = phi
        lut = np.zeros((q, q), dtype=np.int64)
        for k, (i, j) in enumerate((i, j) for i in range(q) for j in range(i, q)):
            lut[i, j] = lut[j, i] = k
        self.lut = lut
        self.vertex_code = np.zeros(phi.shape[0], dtype=np.int64)
        for v in range(n):
            self.vertex_code += _SIG_BASE ** phi[:, v]
        self._edge: dict = {}

    def edge(self, x: int, y: int) -> np.ndarray:
        if (x, y) not in self._edge:
            self._edge[(x, y)] = _SIG_BASE ** (self.q + self.lut[self.phi[:, x], self.phi[:, y]])
        return self._edge[(x, y)]


_TABLES: dict = {}


def _decode(code: int, q: int) -> tuple:
    digits = []
    for _ in range(q + q * (q + 1) // 2):
        code, r = divmod(code, _SIG_BASE)
        digits.append(r)
    return tuple(digits)


def _signature_codes(h: Graph, q: int, limit: int) -> np.ndarray:
    if q ** h.n > limit:
        raise BudgetExceeded(f"{q}^{h.n} maps exceed the enumeration limit")
    if max(h.n, h.m) >= _SIG_BASE or q + q * (q + 1) // 2 > 10:
        raise BudgetExceeded("graph or q too large for signature encoding")
    if (q, h.n) not in _TABLES:
        _TABLES[(q, h.n)] = _SignatureTables(q, h.n)
    tab = _TABLES[(q, h.n)]
    code = tab.vertex_code.copy()
    for x, y in h.edges:
        code += tab.edge(x, y)
    return code


def quantum_hom_polynomial(terms, q: int, limit: int = 10**6) -> dict:
    """Kernel-independent count of maps V(h) -> [q] by signature, summed over terms.

    ``terms`` yields (coefficient, graph).  A key lists the vertices in each
    part, then the edges per unordered part pair (upper-triangular row-major
    order); t(h, U) is the sum of count * prod a^vertices * prod D^edges.
    """
    by_coef: dict = {}
    for c, g in terms:
        if c:
            by_coef.setdefault(c, []).append(_signature_codes(g, q, limit))
    out: dict = {}
    for c, arrays in by_coef.items():
        uniq, counts = np.unique(np.concatenate(arrays), return_counts=True)
        for code, k in zip(uniq.tolist(), counts.tolist()):
            out[code] = out.get(code, 0) + c * k
    return {_decode(code, q): v for code, v in out.items() if v}


def hom_polynomial(h: Graph, q: int, limit: int = 10**6) -> dict:
    return quantum_hom_polynomial([(1, h)], q, limit)


def evaluate_hom_polynomial(poly: dict, u: StepKernel):
    pairs = [u.D[i][j] for i in range(u.q) for j in range(i, u.q)]
    total = Fraction(0) if u.exact else 0.0
    for key, c in poly.items():
        term = c
        for a, e in zip(u.measures, key[:u.q]):
            term *= a ** e
        for d, e in zip(pairs, key[u.q:]):
            term *= d ** e
        total += term
    return total


# -- weak isomorphism -----------------------------------------------------------

def _eq(x, y, tol):
    return x == y if tol is None else abs(x - y) <= tol


def weak_iso(u: StepKernel, u2: StepKernel, tol: Optional[float] = None) -> Optional[list[int]]:
    """Part permutation ``pi`` with a2[pi[i]] = a[i] and D2[pi[i]][pi[j]] = D[i][j].

    Both kernels must be minimal; with ``tol`` the comparisons are numeric.
    """
    for w in (u, u2):
        if tol is None:
            ok, pair = check_minimality(w)
        else:
            ok = w.minimal_form(tol)[0].q == w.q
            pair = None
        if not ok:
            raise NotMinimal(f"weak_iso needs minimal kernels (offending parts {pair})")
    if u.q != u2.q:
        return None
    q = u.q
    pi: list[int] = []
    used = [False] * q

    def extend(i):
        if i == q:
            return True
        for c in range(q):
            if used[c] or not _eq(u2.measures[c], u.measures[i], tol):
                continue
            if not _eq(u2.D[c][c], u.D[i][i], tol):
                continue
            if any(not _eq(u2.D[c][pi[j]], u.D[i][j], tol) for j in range(i)):
                continue
            used[c] = True
            pi.append(c)
            if extend(i + 1):
                return True
            pi.pop()
            used[c] = False
        return False

    return list(pi) if extend(0) else None


def weakly_isomorphic(u: StepKernel, u2: StepKernel, tol: Optional[float] = None) -> bool:
    """Weak isomorphism for arbitrary (possibly non-minimal) step kernels."""
    return weak_iso(u.minimal_form(tol)[0], u2.minimal_form(tol)[0], tol) is not None


def refine(u: StepKernel, i: int, fractions: Sequence) -> StepKernel:
    """Split part ``i`` into pieces of the given measures; rows are duplicated."""
    if not 0 <= i < u.q:
        raise BadSplit(f"part {i} out of range")
    fr = [_num(f, u.exact) for f in fractions]
    if len(fr) < 1 or any(f <= 0 for f in fr):
        raise BadSplit("split fractions must be positive")
    if (sum(fr) != u.measures[i]) if u.exact else abs(sum(fr) - u.measures[i]) > 1e-12:
        raise BadSplit(f"split fractions must sum to a_{i} = {u.measures[i]}")
    idx = list(range(i)) + [i] * len(fr) + list(range(i + 1, u.q))
    a = list(u.measures[:i]) + fr + list(u.measures[i + 1:])
    D = [[u.D[r][c] for c in idx] for r in idx]
    if len(fr) > 1:
        warnings.warn("refined kernel is not minimal", stacklevel=2)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return StepKernel(a, D, u.graphon, check_minimal=False)


# -- random catalogs ----------------------------------------------------------------

def random_measures(q: int, rng: random.Random, denom: int = 12) -> list[Fraction]:
    w = [rng.randint(1, denom) for _ in range(q)]
    s = sum(w)
    return [Fraction(x, s) for x in w]


def random_kernel(q: int, rng: random.Random, graphon: bool = True, denom: int = 12,
                  distinct_degrees: bool = False) -> StepKernel:
    """Random minimal rational kernel (graphon values in [0, 1] by default)."""
    while True:
        a = random_measures(q, rng, denom)
        D = [[Fraction(0)] * q for _ in range(q)]
        for i in range(q):
            for j in range(i, q):
                if graphon:
                    v = Fraction(rng.randint(0, denom), denom)
                else:
                    v = Fraction(rng.randint(-denom, denom), denom)
                D[i][j] = D[j][i] = v
        u = StepKernel(a, D, graphon, check_minimal=False)
        if not check_minimality(u)[0]:
            continue
        if distinct_degrees and len(set(u.degrees())) < q:
            continue
        return u


def all_part_permutations(q: int):
    return permutations(range(q))
