"""Finite graphs, grouped-root graphs and quantum (rooted) graphs.

Roots are encoded positionally: a rooted graph with group sizes
``(s_1, ..., s_q)`` has its roots on vertices ``0 .. s_1+...+s_q-1``, the
first ``s_1`` of them forming group 0, the next ``s_2`` group 1 and so on.
Every other vertex is a non-root.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product as iproduct
from typing import Iterable, Iterator, Sequence

DEFAULT_EXPANSION_LIMIT = 10**6
DEFAULT_ISO_LIMIT = 16


class GraphError(ValueError):
    pass


class RootMismatch(GraphError):
    pass


class ParallelRootEdge(GraphError):
    pass


class ExpansionTooLarge(GraphError):
    pass


class TooLarge(GraphError):
    pass


def _edge(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on vertices ``0 .. n-1``."""

    n: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.n < 0:
            raise GraphError("vertex count must be nonnegative")
        norm = set()
        for e in self.edges:
            u, v = e
            if u == v:
                raise GraphError(f"loop at vertex {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise GraphError(f"edge {e} out of range for n={self.n}")
            norm.add(_edge(u, v))
        object.__setattr__(self, "edges", frozenset(norm))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> "Graph":
        edges = list(edges)
        norm = {_edge(*e) for e in edges}
        if len(norm) != len(edges):
            raise GraphError("parallel edges")
        return cls(n, frozenset(norm))

    @property
    def m(self) -> int:
        return len(self.edges)

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def neighbors(self) -> list[set[int]]:
        nb: list[set[int]] = [set() for _ in range(self.n)]
        for u, v in self.edges:
            nb[u].add(v)
            nb[v].add(u)
        return nb

    def degrees(self) -> list[int]:
        return [len(s) for s in self.neighbors()]

    def has_edge(self, u: int, v: int) -> bool:
        return _edge(u, v) in self.edges

    def add_edges(self, extra: Iterable[Sequence[int]]) -> "Graph":
        extra = [_edge(*e) for e in extra]
        if len(set(extra)) != len(extra) or self.edges.intersection(extra):
            raise GraphError("adding edges would create parallel edges")
        return Graph(self.n, self.edges.union(extra))

    def remove_edge(self, u: int, v: int) -> "Graph":
        return Graph(self.n, self.edges - {_edge(u, v)})

    def remove_vertex(self, w: int) -> "Graph":
        """Delete ``w`` and shift the labels above it down by one."""
        def f(x):
            return x - 1 if x > w else x
        return Graph(self.n - 1, frozenset((f(u), f(v)) for u, v in self.edges if w not in (u, v)))

    def relabel(self, perm: Sequence[int]) -> "Graph":
        """Vertex ``v`` becomes ``perm[v]``."""
        return Graph(self.n, frozenset(_edge(perm[u], perm[v]) for u, v in self.edges))

    def disjoint_union(self, other: "Graph") -> "Graph":
        off = self.n
        return Graph(self.n + other.n, self.edges | {(u + off, v + off) for u, v in other.edges})

    def induced(self, vertices: Sequence[int]) -> "Graph":
        idx = {v: i for i, v in enumerate(vertices)}
        return Graph(len(vertices), frozenset(
            _edge(idx[u], idx[v]) for u, v in self.edges if u in idx and v in idx))

    def components(self) -> list[list[int]]:
        nb = self.neighbors()
        seen = [False] * self.n
        comps = []
        for s in range(self.n):
            if seen[s]:
                continue
            seen[s] = True
            stack, comp = [s], []
            while stack:
                x = stack.pop()
                comp.append(x)
                for y in nb[x]:
                    if not seen[y]:
                        seen[y] = True
                        stack.append(y)
            comps.append(sorted(comp))
        return comps

    def isolated_vertices(self) -> list[int]:
        return [v for v, d in enumerate(self.degrees()) if d == 0]

    # -- serialization ---------------------------------------------------
    def to_edgelist(self) -> str:
        lines = [f"{self.n} {self.m}"]
        lines += [f"{u} {v}" for u, v in self.sorted_edges()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_edgelist(cls, text: str) -> "Graph":
        rows = [ln.split() for ln in text.strip().splitlines() if ln.strip() and not ln.startswith("#")]
        if not rows or len(rows[0]) != 2:
            raise GraphError("edge list must start with an 'n m' header")
        n, m = int(rows[0][0]), int(rows[0][1])
        body = [(int(a), int(b)) for a, b in rows[1:]]
        if len(body) != m:
            raise GraphError(f"header announces {m} edges, found {len(body)}")
        return cls.from_edges(n, body)

    def to_graph6(self) -> str:
        import networkx as nx

        if self.n > 62:
            raise TooLarge("graph6 export supports n <= 62")
        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(self.edges)
        return nx.to_graph6_bytes(g, header=False).decode().strip()

    @classmethod
    def from_graph6(cls, text: str) -> "Graph":
        import networkx as nx

        g = nx.from_graph6_bytes(text.strip().encode())
        return cls(g.number_of_nodes(), frozenset(_edge(u, v) for u, v in g.edges()))

    def __repr__(self):
        return f"Graph(n={self.n}, edges={self.sorted_edges()})"


# -- named graphs -----------------------------------------------------------

def complete_graph(n: int) -> Graph:
    return Graph(n, frozenset(combinations(range(n), 2)))


def cycle_graph(n: int) -> Graph:
    return Graph(n, frozenset(_edge(i, (i + 1) % n) for i in range(n)))


def path_graph(n: int) -> Graph:
    return Graph(n, frozenset((i, i + 1) for i in range(n - 1)))


def star_graph(leaves: int) -> Graph:
    return Graph(leaves + 1, frozenset((0, i) for i in range(1, leaves + 1)))


def named_graph(name: str) -> Graph:
    """``k1``..``k9``, ``c3``..``c9``, ``p1``..``p9``."""
    name = name.lower()
    kind, num = name[0], name[1:]
    if not num.isdigit():
        raise GraphError(f"unknown named graph {name!r}")
    n = int(num)
    if kind == "k" and n >= 1:
        return complete_graph(n)
    if kind == "c" and n >= 3:
        return cycle_graph(n)
    if kind == "p" and n >= 1:
        return path_graph(n)
    raise GraphError(f"unknown named graph {name!r}")


# -- canonical labeling -----------------------------------------------------

def _refine(adj: list[int], cells: list[list[int]]) -> list[list[int]]:
    """Equitable refinement; cell order depends on invariants only."""
    while True:
        masks = [sum(1 << v for v in c) for c in cells]
        new_cells = []
        changed = False
        for c in cells:
            if len(c) == 1:
                new_cells.append(c)
                continue
            sig: dict[tuple, list[int]] = {}
            for v in c:
                key = tuple((adj[v] & mk).bit_count() for mk in masks)
                sig.setdefault(key, []).append(v)
            if len(sig) > 1:
                changed = True
                for key in sorted(sig):
                    new_cells.append(sig[key])
            else:
                new_cells.append(c)
        cells = new_cells
        if not changed:
            return cells


def _connected_canon(g: Graph) -> tuple:
    n = g.n
    nb = g.neighbors()
    adj = [sum(1 << w for w in nb[v]) for v in range(n)]
    best: list = [None]

    def leaf(cells):
        pos = {c[0]: i for i, c in enumerate(cells)}
        key = tuple(sorted(_edge(pos[u], pos[v]) for u, v in g.edges))
        if best[0] is None or key < best[0]:
            best[0] = key

    def search(cells):
        cells = _refine(adj, cells)
        if len(cells) == n:
            leaf(cells)
            return
        target = min((i for i, c in enumerate(cells) if len(c) > 1), key=lambda i: (len(cells[i]), i))
        reps: list[int] = []
        for v in cells[target]:
            # swapping twins inside one cell is an automorphism of the search state
            if any(adj[r] == adj[v] or adj[r] | (1 << r) == adj[v] | (1 << v) for r in reps):
                continue
            reps.append(v)
            rest = [w for w in cells[target] if w != v]
            search(cells[:target] + [[v], rest] + cells[target + 1:])

    search([list(range(n))])
    return (n, best[0])


def canonical_form(g: Graph, iso_limit: int = DEFAULT_ISO_LIMIT) -> tuple:
    """Isomorphism-invariant key: equal keys iff the graphs are isomorphic."""
    if g.n > iso_limit:
        raise TooLarge(f"canonical_form limited to {iso_limit} vertices, got {g.n}")
    keys = sorted(_connected_canon(g.induced(c)) for c in g.components())
    return (g.n, tuple(keys))


def is_isomorphic(g: Graph, h: Graph, iso_limit: int = DEFAULT_ISO_LIMIT) -> bool:
    if g.n != h.n or g.m != h.m or sorted(g.degrees()) != sorted(h.degrees()):
        return False
    return canonical_form(g, iso_limit) == canonical_form(h, iso_limit)


# -- rooted graphs ----------------------------------------------------------

@dataclass(frozen=True)
class RootedGraph:
    graph: Graph
    group_sizes: tuple = ()

    def __post_init__(self):
        gs = tuple(int(s) for s in self.group_sizes)
        if any(s < 0 for s in gs):
            raise GraphError("group sizes must be nonnegative")
        if sum(gs) > self.graph.n:
            raise GraphError("more roots than vertices")
        object.__setattr__(self, "group_sizes", gs)

    @property
    def k(self) -> int:
        return sum(self.group_sizes)

    @property
    def n(self) -> int:
        return self.graph.n

    def root_edges(self) -> frozenset:
        k = self.k
        return frozenset(e for e in self.graph.edges if e[1] < k)

    def group_of(self, r: int) -> int:
        acc = 0
        for i, s in enumerate(self.group_sizes):
            acc += s
            if r < acc:
                return i
        raise GraphError(f"vertex {r} is not a root")

    def group_roots(self, i: int) -> range:
        off = sum(self.group_sizes[:i])
        return range(off, off + self.group_sizes[i])

    def unlabel(self) -> Graph:
        return self.graph

    def add_root_edges(self, extra: Iterable[Sequence[int]]) -> "RootedGraph":
        extra = list(extra)
        if any(max(e) >= self.k for e in extra):
            raise GraphError("decorations may only join roots")
        return RootedGraph(self.graph.add_edges(extra), self.group_sizes)

    def __mul__(self, other: "RootedGraph") -> "RootedGraph":
        return product(self, other)


def product(h: RootedGraph, h2: RootedGraph) -> RootedGraph:
    """Glue two rooted graphs along their roots; non-roots stay disjoint."""
    if h.group_sizes != h2.group_sizes:
        raise RootMismatch(f"group sizes {h.group_sizes} vs {h2.group_sizes}")
    k = h.k
    shared = h.root_edges() & h2.root_edges()
    if shared:
        raise ParallelRootEdge(f"root pairs {sorted(shared)} are edges in both factors")
    shift = h.n - k

    def f(x):
        return x if x < k else x + shift
    edges = h.graph.edges | {_edge(f(u), f(v)) for u, v in h2.graph.edges}
    return RootedGraph(Graph(h.n + h2.n - k, frozenset(edges)), h.group_sizes)


def _as_fraction(c) -> Fraction:
    return c if isinstance(c, Fraction) else Fraction(c)


class QuantumRootedGraph:
    """Rational combination of rooted graphs sharing group sizes and root edges."""

    def __init__(self, terms: Iterable[tuple]):
        cleaned = []
        for c, h in terms:
            c = _as_fraction(c)
            if c != 0:
                cleaned.append((c, h))
        if cleaned:
            gs = cleaned[0][1].group_sizes
            re = cleaned[0][1].root_edges()
            for _, h in cleaned[1:]:
                if h.group_sizes != gs:
                    raise RootMismatch("constituents with different group sizes")
                if h.root_edges() != re:
                    raise GraphError("constituents must induce the same graph on the roots")
        self.terms: tuple = tuple(cleaned)

    @classmethod
    def single(cls, h: RootedGraph, coeff=1) -> "QuantumRootedGraph":
        return cls([(coeff, h)])

    @property
    def group_sizes(self):
        return self.terms[0][1].group_sizes if self.terms else None

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def scale(self, c) -> "QuantumRootedGraph":
        return QuantumRootedGraph((c * a, h) for a, h in self.terms)

    def __add__(self, other: "QuantumRootedGraph") -> "QuantumRootedGraph":
        return QuantumRootedGraph(self.terms + other.terms)

    def __sub__(self, other: "QuantumRootedGraph") -> "QuantumRootedGraph":
        return self + other.scale(-1)

    def __mul__(self, other: "QuantumRootedGraph") -> "QuantumRootedGraph":
        return expand_quantum_product([self, other])

    def add_root_edges(self, extra) -> "QuantumRootedGraph":
        extra = list(extra)
        return QuantumRootedGraph((c, h.add_root_edges(extra)) for c, h in self.terms)

    def max_vertices(self) -> int:
        return max((h.n for _, h in self.terms), default=0)


class QuantumGraph:
    """Rational combination of unrooted graphs."""

    def __init__(self, terms: Iterable[tuple]):
        self.terms: tuple = tuple((_as_fraction(c), g) for c, g in terms if c != 0)

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def constituents(self) -> Iterator[tuple]:
        return iter(self.terms)

    def max_vertices(self) -> int:
        return max((g.n for _, g in self.terms), default=0)

    def scale(self, c) -> "QuantumGraph":
        return QuantumGraph((c * a, g) for a, g in self.terms)

    def __add__(self, other: "QuantumGraph") -> "QuantumGraph":
        return QuantumGraph(self.terms + other.terms)

    def __sub__(self, other: "QuantumGraph") -> "QuantumGraph":
        return self + other.scale(-1)

    def merged(self, iso_limit: int = DEFAULT_ISO_LIMIT) -> "QuantumGraph":
        """Combine isomorphic constituents, dropping zero sums."""
        acc: dict = {}
        rep: dict = {}
        for c, g in self.terms:
            key = canonical_form(g, iso_limit)
            acc[key] = acc.get(key, Fraction(0)) + c
            rep.setdefault(key, g)
        return QuantumGraph((acc[k], rep[k]) for k in acc if acc[k] != 0)

    def to_json(self) -> str:
        return json.dumps([{"coeff": format_fraction(c), "graph": g.to_edgelist()} for c, g in self.terms])

    @classmethod
    def from_json(cls, text: str) -> "QuantumGraph":
        return cls((parse_fraction(t["coeff"]), Graph.from_edgelist(t["graph"])) for t in json.loads(text))


def unlabel(q: QuantumRootedGraph, merge: bool = False, iso_limit: int = DEFAULT_ISO_LIMIT) -> QuantumGraph:
    out = QuantumGraph((c, h.graph) for c, h in q.terms)
    return out.merged(iso_limit) if merge else out


def expand_quantum_product(factors: Sequence[QuantumRootedGraph],
                           expansion_limit: int = DEFAULT_EXPANSION_LIMIT) -> QuantumRootedGraph:
    """Fully distribute a product of rooted quantum graphs."""
    if not factors:
        raise GraphError("empty product has no group sizes; pass at least one factor")
    gs = factors[0].group_sizes
    for f in factors:
        if f.group_sizes != gs:
            raise RootMismatch("factors with different group sizes")
    total = math.prod(len(f) for f in factors)
    if total > expansion_limit:
        raise ExpansionTooLarge(f"{total} constituents exceed expansion_limit={expansion_limit}")
    terms = list(factors[0].terms)
    for f in factors[1:]:
        terms = [(c1 * c2, product(h1, h2)) for (c1, h1), (c2, h2) in iproduct(terms, f.terms)]
    return QuantumRootedGraph(terms)


# -- rationals ----------------------------------------------------------------

def format_fraction(x) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def parse_fraction(s) -> Fraction:
    if isinstance(s, (int, Fraction)):
        return Fraction(s)
    if isinstance(s, float):
        raise GraphError("floats are not exact rationals")
    return Fraction(str(s).strip())
