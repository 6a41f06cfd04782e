"""Gadget quantum graphs for step kernels and their exact evaluation.

Three families live here:

* ``Q_k``, built from the four-constituent rooted graphs ``Q_k^{ij}``; its
  density vanishes exactly on kernels with fewer than ``k`` distinguishable
  parts.
* The uniquely ``q``-colorable graphs with four labeled matchings, built per
  parity of ``q``.
* The selector ``P_s``: one factor per (pair of groups, matching), each a
  signed sum over endpoint choices.  On a step kernel it factorizes as a
  product of sums over a single part, so it is evaluated without expanding
  its (astronomically many) constituents.

``PCombination`` packages the linear combinations of decorated selectors
used by the forcing pipeline.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, product
from typing import Iterator, Optional, Sequence

from . import poly as P
from .graphs import (
    DEFAULT_EXPANSION_LIMIT,
    ExpansionTooLarge,
    Graph,
    QuantumGraph,
    QuantumRootedGraph,
    RootedGraph,
    expand_quantum_product,
    unlabel,
)
from .kernel import (
    BudgetExceeded,
    KernelError,
    NotMinimal,
    StepKernel,
    check_minimality,
    evaluate_hom_polynomial,
    quantum_hom_polynomial,
)


class OutOfRange(ValueError):
    pass


class PreconditionViolated(ValueError):
    pass


# -- Q_k ----------------------------------------------------------------------

def q_pair_factor(k: int, i: int, j: int) -> QuantumRootedGraph:
    """The 2k-rooted quantum graph Q_k^{ij} (0-based i < j).

    Roots ``0..k-1`` are v_1..v_k and ``k..2k-1`` are v'_1..v'_k; each
    constituent has one non-root vertex ``2k``.
    """
    if not 0 <= i < j < k:
        raise ValueError("need 0 <= i < j < k")
    y = 2 * k

    def star(a, b):
        return RootedGraph(Graph(2 * k + 1, frozenset({(a, y), (b, y)})), (2 * k,))
    return QuantumRootedGraph([
        (1, star(i, k + i)), (1, star(j, k + j)),
        (-1, star(i, k + j)), (-1, star(j, k + i)),
    ])


@dataclass(frozen=True)
class GadgetDescriptor:
    """Symbolic gadget: ``Qk`` (with ``k``) or ``P``/``P_decorated`` (with ``s``)."""

    kind: str
    k: Optional[int] = None
    s: tuple = ()
    decorations: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "s", tuple(int(x) for x in self.s))
        object.__setattr__(self, "decorations", tuple(tuple(sorted(map(int, e))) for e in self.decorations))
        if self.kind == "Qk":
            if self.k is None or self.k < 1:
                raise OutOfRange("Qk needs k >= 1")
        elif self.kind in ("P", "P_decorated"):
            q = len(self.s)
            if q < 1:
                raise OutOfRange("P needs at least one group")
            if q >= 2 and any(not q + 2 <= x <= 2 * q + 2 for x in self.s):
                raise OutOfRange(f"group sizes must lie in [{q + 2}, {2 * q + 2}]")
            k = sum(self.s)
            seen = set()
            for e in self.decorations:
                if e[0] == e[1] or not (0 <= e[0] < k and 0 <= e[1] < k):
                    raise OutOfRange(f"decoration {e} must join two distinct roots")
                if e in seen:
                    raise OutOfRange(f"decoration {e} duplicated")
                seen.add(e)
            if self.decorations and self.kind == "P":
                object.__setattr__(self, "kind", "P_decorated")
        else:
            raise OutOfRange(f"unknown gadget kind {self.kind!r}")

    @property
    def q(self) -> int:
        return len(self.s)

    def vertex_count(self) -> int:
        if self.kind == "Qk":
            return self.k * (self.k + 1)
        return sum(self.s) + 2 * self.q * (self.q - 1)

    def to_dict(self) -> dict:
        if self.kind == "Qk":
            return {"kind": "Qk", "k": self.k}
        return {"kind": self.kind, "s": list(self.s), "decorations": [list(e) for e in self.decorations]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "GadgetDescriptor":
        if d["kind"] == "Qk":
            return cls("Qk", k=int(d["k"]))
        return cls(d["kind"], s=tuple(d["s"]), decorations=tuple(tuple(e) for e in d.get("decorations", [])))

    @classmethod
    def from_json(cls, text: str) -> "GadgetDescriptor":
        return cls.from_dict(json.loads(text))


class QkGadget:
    """Q_k held symbolically: exact evaluation plus lazy constituents."""

    def __init__(self, k: int):
        self.k = k
        self.descriptor = GadgetDescriptor("Qk", k=k)
        self.label = f"Q_{k}"

    def max_vertices(self) -> int:
        return self.k * (self.k + 1)

    def density(self, u: StepKernel):
        return eval_Qk(u, self.k)

    def term_count(self) -> int:
        return 16 ** math.comb(self.k, 2)

    def constituents(self) -> Iterator[tuple]:
        k = self.k
        pairs = list(combinations(range(k), 2))
        base = 2 * k
        n = k * (k + 1)
        for choice in product(range(16), repeat=len(pairs)):
            coef = 1
            edges = set()
            for p, ((i, j), c) in enumerate(zip(pairs, choice)):
                for half, sel in enumerate((c // 4, c % 4)):
                    y = base + 2 * p + half
                    a, b, sign = ((i, k + i, 1), (j, k + j, 1), (i, k + j, -1), (j, k + i, -1))[sel]
                    coef *= sign
                    edges.add((a, y))
                    edges.add((b, y))
            yield Fraction(coef), Graph(n, frozenset(edges))

    def expand(self, expansion_limit: int = DEFAULT_EXPANSION_LIMIT, merge: bool = False) -> QuantumGraph:
        return build_Qk(self.k, expansion_limit=expansion_limit, merge=merge)


def build_Qk(k: int, expand: bool = True, expansion_limit: int = DEFAULT_EXPANSION_LIMIT,
             merge: bool = False):
    """unlabel(prod_{i<j} (Q_k^{ij})^2); a descriptor when expansion is too large."""
    if k < 1:
        raise OutOfRange("k must be positive")
    desc = GadgetDescriptor("Qk", k=k)
    if not expand or 16 ** math.comb(k, 2) > expansion_limit:
        return desc
    factors = []
    for i, j in combinations(range(k), 2):
        f = q_pair_factor(k, i, j)
        factors += [f, f]
    if not factors:
        only_roots = RootedGraph(Graph(2 * k), (2 * k,))
        return unlabel(QuantumRootedGraph.single(only_roots), merge=merge)
    return unlabel(expand_quantum_product(factors, expansion_limit), merge=merge)


def _gram(u: StepKernel):
    q = u.q
    a, D = u.measures, u.D

    @lru_cache(maxsize=None)
    def G(x1, x2, y1, y2):
        return sum(a[y] * (D[x1][y] - D[x2][y]) * (D[y1][y] - D[y2][y]) for y in range(q))
    return G


def eval_Qk(u: StepKernel, k: int, method: str = "injective"):
    """t(Q_k, U) via the nested-integral formula, without expansion.

    Tuples with a repeated part contribute zero (their inner difference
    vanishes identically); ``method="injective"`` skips them, ``"full"``
    sums every tuple.
    """
    if method not in ("injective", "full"):
        raise ValueError(method)
    a = u.measures
    G = _gram(u)
    pairs = list(combinations(range(k), 2))
    if method == "injective":
        from itertools import permutations
        tuples = list(permutations(range(u.q), k))
    else:
        tuples = list(product(range(u.q), repeat=k))
    weight = {x: math.prod((a[p] for p in x), start=Fraction(1) if u.exact else 1.0) for x in tuples}
    total = Fraction(0) if u.exact else 0.0
    for x in tuples:
        for y in tuples:
            val = weight[x] * weight[y]
            for i, j in pairs:
                g = G(x[i], x[j], y[i], y[j])
                if not g:
                    val = 0
                    break
                val *= g * g
            total += val
    return total


# -- color gadgets ---------------------------------------------------------------

@dataclass(frozen=True)
class ColorGadget:
    """Uniquely q-colorable graph on V_1..V_q with four labeled matchings.

    ``matchings[(i, j, m)]`` lists the edges of M_m between groups i < j as
    (vertex in V_i, vertex in V_j); groups and m are 0-based and 1-based.
    """

    q: int
    s: tuple
    graph: Graph
    groups: tuple
    matchings: dict = field(hash=False)

    def vertex(self, i: int, k: int) -> int:
        return self.groups[i][k - 1]


def _even_matchings(q, si, sj):
    M1 = [(1, 1), (q + 2, q + 2)]
    for k in range(2, q + 1, 2):
        M1 += [(k, k + 1), (k + 1, k)]
    M2 = []
    for k in range(1, q + 2, 2):
        M2 += [(k, k + 1), (k + 1, k)]
    M3 = [(k, sj - q + k) for k in range(1, q + 1)]
    M4 = [(si - q + k, k) for k in range(1, q + 1)]
    return M1, M2, M3, M4


def _odd_matchings(q, si, sj):
    M1 = [(1, 1), (q + 1, q + 1)]
    for k in range(2, q, 2):
        M1 += [(k, k + 1), (k + 1, k)]
    M2 = []
    for k in range(1, q + 1, 2):
        M2 += [(k, k + 1), (k + 1, k)]
    if sj != q + 2:
        M3 = [(k, sj - q - 1 + k) for k in range(1, q + 2)]
    else:
        M3 = [(q + 1, q + 2), (q + 2, 2)] + [(k, k + 2) for k in range(1, q)]
    if si != q + 2:
        M4 = [(si - q - 1 + k, k) for k in range(1, q + 2)]
    else:
        M4 = [(q + 2, q + 1), (2, q + 2)] + [(k + 2, k) for k in range(1, q)]
    return M1, M2, M3, M4


def expected_matching_sizes(q: int) -> tuple:
    return (q + 2, q + 2, q, q) if q % 2 == 0 else (q + 1,) * 4


def build_color_gadget(q: int, s: Sequence[int]) -> ColorGadget:
    s = tuple(int(x) for x in s)
    if q < 2 or len(s) != q:
        raise OutOfRange("need q >= 2 and one size per group")
    if any(not q + 2 <= x <= 2 * q + 2 for x in s):
        raise OutOfRange(f"group sizes must lie in [{q + 2}, {2 * q + 2}]")
    offsets = [sum(s[:i]) for i in range(q)]
    groups = tuple(tuple(range(offsets[i], offsets[i] + s[i])) for i in range(q))
    build = _even_matchings if q % 2 == 0 else _odd_matchings
    matchings = {}
    edges = set()
    for i, j in combinations(range(q), 2):
        for m, M in enumerate(build(q, s[i], s[j]), start=1):
            es = [(groups[i][a - 1], groups[j][b - 1]) for a, b in M]
            matchings[(i, j, m)] = es
            edges.update(es)
    return ColorGadget(q, s, Graph(sum(s), frozenset(edges)), groups, matchings)


def count_colorings(g: Graph, colors: int, limit: int = 2, fixed: Optional[dict] = None) -> tuple[int, list]:
    """Proper colorings up to renaming colors, counted up to ``limit``.

    ``fixed`` pins some vertices to colors (for symmetry breaking by a
    clique); without it a new color may only be opened in increasing order.
    Returns the count and the colorings found.
    """
    nb = g.neighbors()
    fixed = dict(fixed or {})
    order = list(fixed)
    seen = set(order)
    # BFS from the pinned vertices keeps the search tightly constrained
    frontier = list(order) or ([max(range(g.n), key=lambda v: len(nb[v]))] if g.n else [])
    while len(order) < g.n:
        if not frontier:
            frontier = [next(v for v in range(g.n) if v not in seen)]
        nxt = []
        for v in frontier:
            if v not in seen:
                seen.add(v)
                order.append(v)
            for w in sorted(nb[v]):
                if w not in seen:
                    nxt.append(w)
        frontier = nxt
    col = [-1] * g.n
    found: list = []

    def rec(idx, used):
        if len(found) >= limit:
            return
        if idx == len(order):
            found.append(list(col))
            return
        v = order[idx]
        if v in fixed:
            opts = [fixed[v]]
        else:
            opts = range(min(colors, used + 1)) if not fixed else range(colors)
        for c in opts:
            if any(col[w] == c for w in nb[v]):
                continue
            col[v] = c
            rec(idx + 1, max(used, c + 1))
            col[v] = -1

    rec(0, 0)
    return len(found), found


def verify_color_gadget(g: ColorGadget, max_q: int = 4) -> dict:
    """Check matching sizes, disjointness, independence and unique colorability."""
    q = g.q
    if q > max_q:
        raise BudgetExceeded(f"exhaustive coloring check limited to q <= {max_q}")
    sizes = expected_matching_sizes(q)
    size_ok = True
    is_matching = True
    endpoints_ok = True
    group_of = {v: i for i, grp in enumerate(g.groups) for v in grp}
    for (i, j, m), es in g.matchings.items():
        if len(es) != sizes[m - 1]:
            size_ok = False
        ends = [x for e in es for x in e]
        if len(set(ends)) != len(ends):
            is_matching = False
        if any(group_of[a] != i or group_of[b] != j for a, b in es):
            endpoints_ok = False
    owner: dict = {}
    collisions = []
    for key, es in sorted(g.matchings.items()):
        for e in es:
            e2 = tuple(sorted(e))
            if e2 in owner:
                collisions.append({"edge": list(e2), "matchings": [list(owner[e2]), list(key)]})
            else:
                owner[e2] = key
    independent = all(group_of[a] != group_of[b] for a, b in g.graph.edges)
    pins = {g.vertex(i, 1): i for i in range(q)}
    clique = all(g.graph.has_edge(g.vertex(i, 1), g.vertex(j, 1)) for i, j in combinations(range(q), 2))
    if clique:
        n_col, cols = count_colorings(g.graph, q, limit=2, fixed=pins)
        lower_ok = True
    else:
        n_col, cols = count_colorings(g.graph, q, limit=2)
        lower_ok = count_colorings(g.graph, q - 1, limit=1)[0] == 0
    classes_ok = False
    if n_col == 1:
        c = cols[0]
        classes = {}
        for v, cv in enumerate(c):
            classes.setdefault(cv, set()).add(v)
        classes_ok = sorted(map(sorted, classes.values())) == sorted(map(list, g.groups))
    report = {
        "q": q,
        "s": list(g.s),
        "matching_sizes_ok": size_ok and is_matching and endpoints_ok,
        "matchings_disjoint": not collisions,
        "collisions": collisions,
        "groups_independent": independent,
        "chromatic_number_is_q": lower_ok and n_col >= 1,
        "unique_coloring": n_col == 1 and classes_ok,
    }
    report["ok"] = all(report[k] for k in ("matching_sizes_ok", "matchings_disjoint", "groups_independent",
                                           "chromatic_number_is_q", "unique_coloring"))
    return report


# -- the selector P_s ----------------------------------------------------------------

@lru_cache(maxsize=None)
def p_factors(s: tuple) -> tuple:
    """Factors of P_s as (i, j, m, edges) with edges (root in V_i, root in V_j)."""
    q = len(s)
    if q < 2:
        return ()
    g = build_color_gadget(q, s)
    return tuple((i, j, m, tuple(es)) for (i, j, m), es in sorted(g.matchings.items()))


def group_roots(s: Sequence[int]) -> list[range]:
    out, off = [], 0
    for x in s:
        out.append(range(off, off + x))
        off += x
    return out


def pattern_roots(s: Sequence[int], pattern: Sequence[int]) -> list[int]:
    """Root assignment placing every root of group i in part ``pattern[i]``."""
    return [pattern[i] for i, x in enumerate(s) for _ in range(x)]


def eval_P_rooted(desc: GadgetDescriptor, u: StepKernel, roots: Sequence[int]):
    """t_*(P_s, U) for an arbitrary placement of the roots into parts.

    Each factor equals sum_y a_y prod_{vw in M} (D[w, y] - D[v, y]); root-root
    decorations multiply by their D entries.
    """
    if desc.kind not in ("P", "P_decorated"):
        raise ValueError("eval_P_rooted needs a P descriptor")
    roots = list(roots)
    if len(roots) != sum(desc.s):
        raise KernelError("one part per root required")
    a, D = u.measures, u.D
    val = Fraction(1) if u.exact else 1.0
    for r1, r2 in desc.decorations:
        val *= D[roots[r1]][roots[r2]]
        if not val:
            return val * 0
    for _, _, _, edges in p_factors(desc.s):
        f = 0
        for y in range(u.q):
            term = a[y]
            for v, w in edges:
                term *= D[roots[w]][y] - D[roots[v]][y]
                if not term:
                    break
            f += term
        val *= f
        if not val:
            return val
    return val


def closed_form_d0(u: StepKernel):
    """The nonzero selector value of a minimal q-step kernel."""
    ok, pair = check_minimality(u)
    if not ok:
        raise NotMinimal(f"parts {pair} coincide, the selector value would vanish")
    q, a, D = u.q, u.measures, u.D
    val = Fraction(1) if u.exact else 1.0

    def moment(i, j, e):
        return sum(a[y] * (D[i][y] - D[j][y]) ** e for y in range(q))
    for i, j in combinations(range(q), 2):
        if q % 2:
            val *= moment(i, j, q + 1) ** 4
        else:
            val *= moment(i, j, q + 2) ** 2 * moment(i, j, q) ** 2
    return val


def _require_pattern_shortcut(u: StepKernel, q: int):
    if not check_minimality(u)[0]:
        raise NotMinimal("group-constant evaluation needs a minimal kernel")
    if u.q > q:
        raise KernelError(f"a {u.q}-step kernel has colorings that are not group-constant for q={q}")


def eval_decorated_P_density(desc: GadgetDescriptor, u: StepKernel, method: str = "patterns"):
    """Unrooted density of a (decorated) selector.

    ``patterns`` sums over group-constant root placements only (the
    coloring property makes every other placement vanish on a minimal
    kernel with at most q parts); ``full`` sums over every placement.
    """
    s = desc.s
    a = u.measures
    total = Fraction(0) if u.exact else 0.0
    if method == "patterns":
        _require_pattern_shortcut(u, desc.q)
        for pat in product(range(u.q), repeat=desc.q):
            val = eval_P_rooted(desc, u, pattern_roots(s, pat))
            if val:
                w = math.prod((a[pat[i]] ** s[i] for i in range(desc.q)), start=1)
                total += w * val
        return total
    if method == "full":
        k = sum(s)
        if u.q ** k > 10**7:
            raise BudgetExceeded(f"{u.q}^{k} root placements")
        for roots in product(range(u.q), repeat=k):
            val = eval_P_rooted(desc, u, roots)
            if val:
                total += math.prod((a[r] for r in roots), start=1) * val
        return total
    raise ValueError(method)


def closed_form_c0(u: StepKernel, D_target: Sequence[Sequence]):
    """d0 times the matrix-matching polynomial read off at D_target itself."""
    q = len(D_target)
    Z1 = {D_target[i][i] for i in range(q)}
    Z2 = {D_target[i][j] for i in range(q) for j in range(i + 1, q)}
    if not set(u.part_densities()) <= Z1 or not set(u.pair_densities()) <= Z2:
        raise PreconditionViolated("kernel densities fall outside the diagonal/off-diagonal value sets")
    val = closed_form_d0(u)
    for i in range(q):
        for z in Z1 - {D_target[i][i]}:
            val *= D_target[i][i] - z
    for i, j in combinations(range(q), 2):
        for z in Z2 - {D_target[i][j]}:
            val *= D_target[i][j] - z
    return val


def p_factor_quantum(s: tuple, i: int, j: int, edges) -> QuantumRootedGraph:
    """One selector factor as an explicit rooted quantum graph (one non-root)."""
    k = sum(s)
    y = k
    terms = []
    for picks in product((0, 1), repeat=len(edges)):
        W = [edges[t][p] for t, p in enumerate(picks)]
        sign = (-1) ** sum(1 for p in picks if p == 0)
        terms.append((sign, RootedGraph(Graph(k + 1, frozenset((w, y) for w in W)), s)))
    return QuantumRootedGraph(terms)


def expand_P(desc: GadgetDescriptor, expansion_limit: int = DEFAULT_EXPANSION_LIMIT) -> QuantumRootedGraph:
    """Full constituent expansion of a (decorated) selector; feasible at q=2."""
    factors = [p_factor_quantum(desc.s, i, j, es) for i, j, _, es in p_factors(desc.s)]
    if not factors:
        out = QuantumRootedGraph.single(RootedGraph(Graph(sum(desc.s)), desc.s))
    else:
        out = expand_quantum_product(factors, expansion_limit)
    return out.add_root_edges(desc.decorations) if desc.decorations else out


def iter_P_constituents(desc: GadgetDescriptor) -> Iterator[tuple]:
    """Lazily yield (coefficient, unrooted graph) of a selector."""
    s = desc.s
    k = sum(s)
    facs = p_factors(s)
    n = k + len(facs)
    deco = set(desc.decorations)
    for picks in product(*(product((0, 1), repeat=len(es)) for _, _, _, es in facs)):
        sign = 1
        edges = set(deco)
        for f, ((_, _, _, es), pk) in enumerate(zip(facs, picks)):
            y = k + f
            for (v, w), p in zip(es, pk):
                if p == 0:
                    sign = -sign
                    edges.add((v, y))
                else:
                    edges.add((w, y))
        yield Fraction(sign), Graph(n, frozenset(edges))


# -- linear combinations of decorated selectors ---------------------------------------

def pair_index(q: int) -> list[tuple[int, int]]:
    """Variable order for D-monomials: (0,0), (0,1), ..., (q-1,q-1)."""
    return [(i, j) for i in range(q) for j in range(i, q)]


def decorations_for(s: Sequence[int], m: Sequence[int]) -> tuple:
    """Lexicographically smallest legal root pairs realizing edge counts ``m``."""
    q = len(s)
    grs = group_roots(s)
    out = []
    for (i, j), cnt in zip(pair_index(q), m):
        if not cnt:
            continue
        cands = combinations(grs[i], 2) if i == j else product(grs[i], grs[j])
        chosen = [tuple(sorted(e)) for _, e in zip(range(cnt), cands)]
        if len(chosen) < cnt:
            raise OutOfRange(f"cannot place {cnt} edges between groups {i} and {j}")
        out += chosen
    return tuple(sorted(out))


class PCombination:
    """sum_s sum_m c_s c_m unlabel(P_s decorated by m).

    ``s_poly`` maps group-size vectors to coefficients, ``d_poly`` maps
    D-monomial exponent vectors (ordered by :func:`pair_index`) to
    coefficients.
    """

    def __init__(self, q: int, s_poly: dict, d_poly: dict, label: str = "P"):
        self.q = q
        self.s_poly = {tuple(k): Fraction(v) for k, v in s_poly.items() if v}
        self.d_poly = {tuple(k): Fraction(v) for k, v in d_poly.items() if v}
        self.label = label
        npairs = len(pair_index(q))
        for m in self.d_poly:
            if len(m) != npairs:
                raise ValueError("D-monomial has the wrong number of variables")
        for s in self.s_poly:
            GadgetDescriptor("P", s=s)

    @classmethod
    def single(cls, s: Sequence[int], label: str = "P") -> "PCombination":
        q = len(s)
        return cls(q, {tuple(s): 1}, {(0,) * len(pair_index(q)): 1}, label)

    def max_vertices(self) -> int:
        return max(sum(s) for s in self.s_poly) + 2 * self.q * (self.q - 1)

    def pieces(self) -> Iterator[tuple]:
        for s, cs in sorted(self.s_poly.items()):
            for m, cm in sorted(self.d_poly.items()):
                yield cs * cm, GadgetDescriptor("P", s=s, decorations=decorations_for(s, m))

    def density(self, u: StepKernel, method: str = "factored"):
        if method == "pieces":
            return sum((c * eval_decorated_P_density(d, u) for c, d in self.pieces()), Fraction(0))
        if method == "full":
            return sum((c * eval_decorated_P_density(d, u, "full") for c, d in self.pieces()), Fraction(0))
        if method == "expanded":
            return sum((c * evaluate_hom_polynomial(_piece_polynomial(d, u.q), u) for c, d in self.pieces()),
                       Fraction(0))
        if method != "factored":
            raise ValueError(method)
        _require_pattern_shortcut(u, self.q)
        a, D = u.measures, u.D
        pairs = pair_index(self.q)
        total = Fraction(0) if u.exact else 0.0
        pats = list(product(range(u.q), repeat=self.q))
        dval = {}
        for pat in pats:
            point = [D[pat[i]][pat[j]] for i, j in pairs]
            dval[pat] = P.evaluate(self.d_poly, point)
        for s, cs in self.s_poly.items():
            desc = GadgetDescriptor("P", s=s)
            for pat in pats:
                if not dval[pat]:
                    continue
                val = eval_P_rooted(desc, u, pattern_roots(s, pat))
                if val:
                    w = math.prod((a[pat[i]] ** s[i] for i in range(self.q)), start=1)
                    total += cs * w * val * dval[pat]
        return total

    def constituents(self) -> Iterator[tuple]:
        for c, desc in self.pieces():
            for c2, g in iter_P_constituents(desc):
                yield c * c2, g

    def term_count(self) -> int:
        per = {s: math.prod(2 ** len(es) for *_, es in p_factors(s)) for s in self.s_poly}
        return sum(per[s] for s in self.s_poly) * len(self.d_poly)

    def expand(self, expansion_limit: int = DEFAULT_EXPANSION_LIMIT, merge: bool = True) -> QuantumGraph:
        if self.term_count() > expansion_limit:
            raise ExpansionTooLarge(f"{self.term_count()} constituents exceed {expansion_limit}")
        acc = QuantumGraph([])
        for c, desc in self.pieces():
            piece = _merged_piece(desc, expansion_limit) if merge else unlabel(expand_P(desc, expansion_limit))
            acc = acc + piece.scale(c)
        return acc.merged() if merge else acc


@lru_cache(maxsize=512)
def _piece_polynomial(desc: GadgetDescriptor, q: int) -> dict:
    """Signature counts of every expanded constituent of one decorated selector."""
    return quantum_hom_polynomial(iter_P_constituents(desc), q)


@lru_cache(maxsize=256)
def _merged_piece(desc: GadgetDescriptor, expansion_limit: int) -> QuantumGraph:
    return unlabel(expand_P(desc, expansion_limit), merge=True)
