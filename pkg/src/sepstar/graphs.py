"""Directed acyclic weighted multigraphs with one source and one sink.

A graph is stored as a list of internal vertex types and an edge-multiplicity
matrix over ``[source, internal..., sink]`` (source index 0, sink index
``R + 1``).  Canonical forms come from color refinement followed by an
exhaustive search over permutations inside each color class; the number of
permutations that reproduce the minimal matrix is the vertex part of the
automorphism group.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from functools import cached_property, lru_cache
from itertools import permutations, product
from typing import Callable, Iterable, Iterator, Mapping, NamedTuple, Sequence

from gmpy2 import mpq

__all__ = [
    "AdmissiblePartition",
    "Graph",
    "GraphError",
    "GraphSeries",
    "GraphType",
    "VertexType",
    "admissible_partitions",
    "enumerate_by_operator_weight",
    "enumerate_by_type",
    "enumerate_by_weight",
    "front_layer",
    "lambda_graph",
    "multiplicity_functions",
    "symbolic_compose",
    "u_graph_of_type",
    "validate_graph",
]


class GraphError(ValueError):
    pass


class VertexType(NamedTuple):
    p: int  # incoming edges
    q: int  # outgoing edges
    r: int  # weight

    @property
    def operator_weight(self) -> int:
        return self.q + self.r

    def is_valid(self) -> bool:
        return self.p >= 1 and self.q >= 1 and self.r >= -1 and self.p + self.q + self.r >= 2


def _check_type(t: VertexType) -> VertexType:
    t = VertexType(*t)
    if not t.is_valid():
        raise GraphError(f"invalid vertex type {tuple(t)}")
    return t


@dataclass(frozen=True)
class GraphType:
    """``(sink degree, source degree, multiplicity function)``."""

    sink_degree: int
    source_degree: int
    multiplicity: tuple[tuple[VertexType, int], ...] = ()

    @classmethod
    def of(cls, sink_degree: int, source_degree: int,
           multiplicity: Mapping[tuple, int] | Iterable[tuple[tuple, int]] = ()) -> "GraphType":
        items = multiplicity.items() if isinstance(multiplicity, Mapping) else multiplicity
        m = Counter()
        for t, c in items:
            if c:
                m[_check_type(t)] += c
        return cls(sink_degree, source_degree, tuple(sorted(m.items())))

    @property
    def m(self) -> dict[VertexType, int]:
        return dict(self.multiplicity)

    @property
    def vertex_count(self) -> int:
        return sum(c for _, c in self.multiplicity)

    @property
    def operator_weight(self) -> int:
        return sum(t.operator_weight * c for t, c in self.multiplicity)

    @property
    def weight(self) -> int:
        return self.operator_weight + self.source_degree

    @property
    def edge_count(self) -> int:
        return self.source_degree + sum(t.q * c for t, c in self.multiplicity)

    def is_balanced(self) -> bool:
        heads = self.sink_degree + sum(t.p * c for t, c in self.multiplicity)
        return heads == self.edge_count

    def pre_feynman_order(self) -> int:
        """Order of the automorphism group of the pre-Feynman diagram of this type."""
        g = math.factorial(self.sink_degree) * math.factorial(self.source_degree)
        for t, c in self.multiplicity:
            g *= math.factorial(c) * (math.factorial(t.p) * math.factorial(t.q)) ** c
        return g

    def __add__(self, other: "GraphType") -> "GraphType":
        """Type of a composite: source of ``self``, sink of ``other``."""
        m = Counter(dict(self.multiplicity))
        m.update(dict(other.multiplicity))
        return GraphType(other.sink_degree, self.source_degree, tuple(sorted(m.items())))


@dataclass(frozen=True, eq=False)
class Graph:
    types: tuple[VertexType, ...]
    adj: tuple[tuple[int, ...], ...]

    # -- basic structure ----------------------------------------------
    @property
    def R(self) -> int:
        return len(self.types)

    @property
    def sink(self) -> int:
        return len(self.types) + 1

    @cached_property
    def source_degree(self) -> int:
        return sum(self.adj[0])

    @cached_property
    def sink_degree(self) -> int:
        return sum(row[self.sink] for row in self.adj)

    @cached_property
    def edge_count(self) -> int:
        return sum(map(sum, self.adj))

    @property
    def direct_edges(self) -> int:
        return self.adj[0][self.sink]

    @cached_property
    def weight(self) -> int:
        return self.edge_count + sum(t.r for t in self.types)

    @cached_property
    def operator_weight(self) -> int:
        return sum(t.q + t.r for t in self.types)

    @cached_property
    def graph_type(self) -> GraphType:
        return GraphType.of(self.sink_degree, self.source_degree, Counter(self.types))

    @cached_property
    def in_u(self) -> bool:
        """True when no edge joins two internal vertices."""
        return all(self.adj[i][j] == 0 for i in range(1, self.sink) for j in range(1, self.sink))

    def stats(self) -> dict[str, int]:
        return {"W": self.weight, "W_hat": self.operator_weight, "N": self.edge_count,
                "sink_degree": self.sink_degree, "source_degree": self.source_degree,
                "R": self.R, "D": self.direct_edges}

    def edges(self) -> Iterator[tuple[int, int, int]]:
        for i, row in enumerate(self.adj):
            for j, mult in enumerate(row):
                if mult:
                    yield i, j, mult

    def edge_list(self) -> list[tuple[int, int]]:
        """Edges with repetition, in a fixed order."""
        return [(i, j) for i, j, mult in self.edges() for _ in range(mult)]

    # -- canonical data -------------------------------------------------
    @cached_property
    def _canon(self) -> tuple[bytes, "Graph", int]:
        return _canonicalize(self)

    @property
    def key(self) -> bytes:
        return self._canon[0]

    def canonical(self) -> "Graph":
        return self._canon[1]

    @cached_property
    def aut_order(self) -> int:
        n = self._canon[2]
        for _, _, mult in self.edges():
            n *= math.factorial(mult)
        return n

    def sort_key(self) -> tuple:
        return (self.operator_weight, self.source_degree, self.key)

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.types == other.types and self.adj == other.adj

    def __hash__(self):
        return hash((self.types, self.adj))

    def isomorphic(self, other: "Graph") -> bool:
        return self.key == other.key

    def __repr__(self):
        t = ",".join(f"({p},{q},{r})" for p, q, r in self.types)
        e = " ".join(f"{i}->{j}x{m}" for i, j, m in self.edges())
        return f"Graph([{t}] {e})"

    # -- serialization ------------------------------------------------
    def to_json(self) -> dict:
        return {"internal": [{"p": t.p, "q": t.q, "r": t.r} for t in self.types],
                "edges": [[i, j, m] for i, j, m in self.edges()]}

    @classmethod
    def from_json(cls, data: Mapping) -> "Graph":
        types = [(v["p"], v["q"], v["r"]) for v in data["internal"]]
        return validate_graph(types, [tuple(e) for e in data["edges"]])


def validate_graph(types: Sequence[Sequence[int]], edges: Iterable[Sequence[int]]) -> Graph:
    """Build a graph from vertex types and ``(from, to, multiplicity)`` triples.

    Index 0 is the source and ``len(types) + 1`` the sink.
    """
    vtypes = tuple(_check_type(t) for t in types)
    n = len(vtypes) + 2
    sink = n - 1
    adj = [[0] * n for _ in range(n)]
    for e in edges:
        if len(e) != 3:
            raise GraphError(f"edge {e} must be (from, to, multiplicity)")
        i, j, mult = (int(x) for x in e)
        if not (0 <= i < n and 0 <= j < n):
            raise GraphError(f"edge {e} refers to a missing vertex")
        if mult < 0:
            raise GraphError(f"negative multiplicity on edge {e}")
        if i == sink:
            raise GraphError("the sink cannot have outgoing edges")
        if j == 0:
            raise GraphError("the source cannot have incoming edges")
        adj[i][j] += mult
    for v, t in enumerate(vtypes, start=1):
        indeg = sum(adj[u][v] for u in range(n))
        outdeg = sum(adj[v])
        if (indeg, outdeg) != (t.p, t.q):
            raise GraphError(f"vertex {v} of type {tuple(t)} has in/out degree {indeg}/{outdeg}")
    if _has_cycle(adj):
        raise GraphError("graph has a directed cycle")
    return Graph(vtypes, tuple(tuple(row) for row in adj))


def _has_cycle(adj) -> bool:
    n = len(adj)
    indeg = [sum(1 for u in range(n) if adj[u][v]) for v in range(n)]
    stack = [v for v in range(n) if indeg[v] == 0]
    seen = 0
    while stack:
        u = stack.pop()
        seen += 1
        for v in range(n):
            if adj[u][v]:
                indeg[v] -= 1
                if indeg[v] == 0:
                    stack.append(v)
    return seen != n


def lambda_graph(n: int) -> Graph:
    return Graph((), ((0, n), (0, 0)))


# -- canonicalization -----------------------------------------------------

def _refine(g: Graph) -> list[int]:
    sink, adj = g.sink, g.adj
    sig = [(tuple(g.types[i - 1]), adj[0][i], adj[i][sink]) for i in range(1, sink)]
    colors = _rank(sig)
    while True:
        sig = [(colors[i - 1],
                tuple(sorted((colors[j - 1], adj[i][j]) for j in range(1, sink) if adj[i][j])),
                tuple(sorted((colors[j - 1], adj[j][i]) for j in range(1, sink) if adj[j][i])))
               for i in range(1, sink)]
        new = _rank(sig)
        if len(set(new)) == len(set(colors)):
            return new
        colors = new


def _rank(sig: list) -> list[int]:
    order = {s: k for k, s in enumerate(sorted(set(sig)))}
    return [order[s] for s in sig]


def _canonicalize(g: Graph) -> tuple[bytes, Graph, int]:
    R = g.R
    if R == 0:
        return _encode(g.types, g.adj), g, 1
    colors = _refine(g)
    classes: dict[int, list[int]] = {}
    for v, c in enumerate(colors, start=1):
        classes.setdefault(c, []).append(v)
    groups = [classes[c] for c in sorted(classes)]
    best = None
    ties = 0
    adj = g.adj
    for choice in product(*(permutations(grp) for grp in groups)):
        order = [0] + [v for part in choice for v in part] + [R + 1]
        mat = tuple(tuple(adj[i][j] for j in order) for i in order)
        if best is None or mat < best[0]:
            best = (mat, order)
            ties = 1
        elif mat == best[0]:
            ties += 1
    mat, order = best
    types = tuple(g.types[v - 1] for v in order[1:-1])
    canon = Graph(types, mat)
    key = _encode(types, mat)
    canon.__dict__["_canon"] = (key, canon, ties)
    return key, canon, ties


def _encode(types, mat) -> bytes:
    t = ";".join(f"{p},{q},{r}" for p, q, r in types)
    m = ",".join(str(x) for row in mat for x in row)
    return f"{len(types)}|{t}|{m}".encode()


# -- enumeration ------------------------------------------------------------

def _multiset_permutations(items: Sequence) -> Iterator[tuple]:
    counts = Counter(items)
    keys = sorted(counts)
    n = len(items)
    out: list = []

    def rec():
        if len(out) == n:
            yield tuple(out)
            return
        for k in keys:
            if counts[k]:
                counts[k] -= 1
                out.append(k)
                yield from rec()
                out.pop()
                counts[k] += 1

    return rec()


def _compositions(total: int, caps: Sequence[int]) -> Iterator[tuple[int, ...]]:
    if not caps:
        if total == 0:
            yield ()
        return
    rest = sum(caps[1:])
    for x in range(max(0, total - rest), min(total, caps[0]) + 1):
        for tail in _compositions(total - x, caps[1:]):
            yield (x,) + tail


def _wirings(order: Sequence[VertexType], source_degree: int, sink_degree: int) -> Iterator[tuple]:
    """Upper-triangular multiplicity matrices for a fixed topological order."""
    n = len(order) + 2
    out_deg = [source_degree] + [t.q for t in order] + [0]
    col_rem = [0] + [t.p for t in order] + [sink_degree]
    rows: list[tuple[int, ...]] = []

    def rec(i):
        if i == n - 1:
            if col_rem[n - 1] == 0:
                yield tuple(rows) + ((0,) * n,)
            return
        if col_rem[i] != 0:
            return
        caps = col_rem[i + 1:]
        for comp in _compositions(out_deg[i], caps):
            for j, x in enumerate(comp, start=i + 1):
                col_rem[j] -= x
            rows.append((0,) * (i + 1) + comp)
            yield from rec(i + 1)
            rows.pop()
            for j, x in enumerate(comp, start=i + 1):
                col_rem[j] += x

    return rec(0)


@lru_cache(maxsize=None)
def enumerate_by_type(gtype: GraphType) -> tuple[Graph, ...]:
    """One canonical representative per isomorphism class of the given type."""
    if not gtype.is_balanced():
        return ()
    vertices = [t for t, c in gtype.multiplicity for _ in range(c)]
    seen: dict[bytes, Graph] = {}
    for order in _multiset_permutations(vertices):
        for mat in _wirings(order, gtype.source_degree, gtype.sink_degree):
            g = Graph(tuple(order), mat)
            if g.key not in seen:
                seen[g.key] = g.canonical()
    return tuple(sorted(seen.values(), key=Graph.sort_key))


def _candidate_types(s: int, source_degree: int) -> list[VertexType]:
    qb = source_degree
    out = []
    for p in range(1, qb + s + 2):
        for q in range(1, s + 2):
            for r in range(-1, s):
                t = VertexType(p, q, r)
                if t.is_valid() and q + r <= s:
                    out.append(t)
    return out


def multiplicity_functions(s: int, source_degree: int,
                           allowed: Callable[[VertexType], bool] | None = None) -> Iterator[GraphType]:
    """Graph types with operator weight ``s`` and the given source degree.

    The search space is finite: a vertex type (p, q, r) can occur only if
    ``p <= qbar + s + 1``, ``q <= s + 1``, ``r <= s - 1``, each multiplicity is
    at most ``qbar + s`` and ``sum (p + r) m <= qbar + s``.
    """
    qb = source_degree
    types = [t for t in _candidate_types(s, qb) if allowed is None or allowed(t)]
    bound = qb + s
    chosen: list[tuple[VertexType, int]] = []

    def rec(idx, w_left, pr_left):
        if w_left == 0:
            sink = qb + s - (bound - pr_left)
            yield GraphType(sink, qb, tuple(sorted(chosen)))
        if idx == len(types):
            return
        for k in range(idx, len(types)):
            t = types[k]
            ow, pr = t.q + t.r, t.p + t.r
            c = 1
            while c <= bound and ow * c <= w_left and pr * c <= pr_left:
                chosen.append((t, c))
                yield from rec(k + 1, w_left - ow * c, pr_left - pr * c)
                chosen.pop()
                c += 1

    # Each multiplicity function is produced once: types are taken in
    # increasing list order and rec() yields at the point w_left hits 0.
    seen = set()
    for gt in rec(0, s, bound):
        if gt not in seen:
            seen.add(gt)
            yield gt


@lru_cache(maxsize=None)
def _by_operator_weight(s: int, source_degree: int, allowed) -> tuple[Graph, ...]:
    out: list[Graph] = []
    for gt in multiplicity_functions(s, source_degree, allowed):
        out.extend(enumerate_by_type(gt))
    return tuple(sorted(out, key=Graph.sort_key))


def enumerate_by_operator_weight(s: int, source_degree: int,
                                 allowed: Callable[[VertexType], bool] | None = None) -> list[Graph]:
    """All classes with operator weight ``s`` and the given source degree.

    ``allowed`` optionally restricts to vertex types satisfying the predicate
    (used to skip vertices whose tensors vanish for a given potential); it must
    be hashable for caching.
    """
    if s < 0 or source_degree < 0:
        raise ValueError("operator weight and source degree must be nonnegative")
    return list(_by_operator_weight(s, source_degree, allowed))


def enumerate_by_weight(w_max: int, allowed: Callable[[VertexType], bool] | None = None) -> list[Graph]:
    """All classes with ``W <= w_max``, sorted by (operator weight, source degree, key)."""
    if w_max < 0:
        raise ValueError("w_max must be nonnegative")
    out: list[Graph] = []
    for w in range(w_max + 1):
        for qb in range(w + 1):
            out.extend(_by_operator_weight(w - qb, qb, allowed))
    return sorted(out, key=Graph.sort_key)


def u_graph_of_type(gtype: GraphType) -> Graph:
    """The unique graph of this type whose internal vertices are pairwise unconnected."""
    m = gtype.multiplicity
    d_src = gtype.source_degree - sum(t.p * c for t, c in m)
    d_sink = gtype.sink_degree - sum(t.q * c for t, c in m)
    if d_src < 0 or d_sink < 0 or d_src != d_sink:
        raise GraphError(f"type {gtype} is not realizable without internal edges")
    vertices = [t for t, c in m for _ in range(c)]
    n = len(vertices) + 2
    adj = [[0] * n for _ in range(n)]
    for v, t in enumerate(vertices, start=1):
        adj[0][v] = t.p
        adj[v][n - 1] = t.q
    adj[0][n - 1] = d_src
    return Graph(tuple(vertices), tuple(tuple(r) for r in adj)).canonical()


# -- partitions ---------------------------------------------------------------

@dataclass(frozen=True)
class AdmissiblePartition:
    front: frozenset[int]
    back: frozenset[int]
    crossing: int
    front_graph: Graph
    back_graph: Graph


def _subgraph(g: Graph, keep: Sequence[int], merge_into_sink: bool) -> Graph:
    """Keep ``keep`` internal vertices; the rest collapse into the sink or source."""
    sink = g.sink
    kept = list(keep)
    if merge_into_sink:
        idx = [0] + kept
        n = len(kept) + 2
        adj = [[0] * n for _ in range(n)]
        for a, i in enumerate(idx):
            for j in range(sink + 1):
                mult = g.adj[i][j]
                if not mult:
                    continue
                b = idx.index(j) if j in idx else n - 1
                adj[a][b] += mult
    else:
        idx = kept + [sink]
        n = len(kept) + 2
        adj = [[0] * n for _ in range(n)]
        for i in range(sink + 1):
            for b, j in enumerate(idx, start=1):
                mult = g.adj[i][j]
                if not mult:
                    continue
                a = idx.index(i) + 1 if i in idx else 0
                adj[a][b] += mult
    types = tuple(g.types[v - 1] for v in kept)
    return Graph(types, tuple(tuple(r) for r in adj))


def admissible_partitions(g: Graph) -> list[AdmissiblePartition]:
    """Splits of the internal vertices with every crossing edge pointing front to back."""
    R, sink, adj = g.R, g.sink, g.adj
    verts = range(1, sink)
    out = []
    for mask in range(1 << R):
        front = [v for v in verts if mask >> (v - 1) & 1]
        back = [v for v in verts if not mask >> (v - 1) & 1]
        if any(adj[b][f] for b in back for f in front):
            continue
        left = [0] + front
        right = back + [sink]
        crossing = sum(adj[i][j] for i in left for j in right)
        out.append(AdmissiblePartition(frozenset(front), frozenset(back), crossing,
                                       _subgraph(g, front, True), _subgraph(g, back, False)))
    return out


def front_layer(g: Graph) -> frozenset[int]:
    """Internal vertices with no incoming edge from another internal vertex."""
    sink = g.sink
    return frozenset(v for v in range(1, sink) if all(g.adj[u][v] == 0 for u in range(1, sink)))


# -- graph series and the composition formula ---------------------------------

@dataclass
class GraphSeries:
    """``sum_G c_G nu**W_hat(G) G_hat / |Aut(G)|`` with exact rational ``c_G``.

    Coefficients are exact for graphs with operator weight ``<= s_max`` and
    source degree ``<= q_max``; ``math.inf`` bounds mean the stored support is
    the whole series.
    """

    coefficients: dict[bytes, mpq]
    graphs: dict[bytes, Graph]
    s_max: float = math.inf
    q_max: float = math.inf

    @classmethod
    def from_graphs(cls, items: Iterable[tuple[Graph, object]], s_max: float = math.inf,
                    q_max: float = math.inf) -> "GraphSeries":
        coeffs: dict[bytes, mpq] = {}
        graphs: dict[bytes, Graph] = {}
        for g, c in items:
            c = mpq(c)
            if g.operator_weight > s_max or g.source_degree > q_max:
                raise GraphError(f"{g} lies outside the series bounds")
            k = g.key
            coeffs[k] = coeffs.get(k, mpq(0)) + c
            graphs[k] = g.canonical()
        coeffs = {k: v for k, v in coeffs.items() if v}
        return cls(coeffs, {k: graphs[k] for k in coeffs}, s_max, q_max)

    @classmethod
    def from_function(cls, fn: Callable[[Graph], object], s_max: int, q_max: int,
                      u_only: bool = False) -> "GraphSeries":
        items = []
        for qb in range(q_max + 1):
            for s in range(s_max + 1):
                for g in enumerate_by_operator_weight(s, qb):
                    if u_only and not g.in_u:
                        continue
                    items.append((g, fn(g)))
        return cls.from_graphs(items, s_max, q_max)

    @classmethod
    def identity(cls, q_max: int) -> "GraphSeries":
        """``sum_n Lambda_n_hat``: coefficient n! on Lambda_n, exact at every operator weight."""
        return cls.from_graphs([(lambda_graph(n), math.factorial(n)) for n in range(q_max + 1)],
                               math.inf, q_max)

    def coefficient(self, g: Graph) -> mpq:
        if g.operator_weight > self.s_max or g.source_degree > self.q_max:
            raise GraphError(f"{g} lies outside the series bounds")
        return self.coefficients.get(g.key, mpq(0))

    def items(self) -> list[tuple[Graph, mpq]]:
        keys = sorted(self.coefficients, key=lambda k: self.graphs[k].sort_key())
        return [(self.graphs[k], self.coefficients[k]) for k in keys]

    def __len__(self):
        return len(self.coefficients)

    def equals(self, other: "GraphSeries") -> bool:
        return self.coefficients == other.coefficients

    def first_difference(self, other: "GraphSeries") -> tuple[Graph, mpq, mpq] | None:
        for k in sorted(set(self.coefficients) | set(other.coefficients)):
            a = self.coefficients.get(k, mpq(0))
            b = other.coefficients.get(k, mpq(0))
            if a != b:
                g = self.graphs.get(k) or other.graphs[k]
                return g, a, b
        return None


@lru_cache(maxsize=200_000)
def _partition_keys(g: Graph) -> tuple[tuple[bytes, bytes, int], ...]:
    return tuple((p.front_graph.key, p.back_graph.key, p.crossing) for p in admissible_partitions(g))


def symbolic_compose(a: GraphSeries, b: GraphSeries) -> GraphSeries:
    """Product of two graph series by summing over admissible partitions.

    The coefficient of G in the product is ``sum_pi a(G'_pi) b(G''_pi) / n_pi!``.
    """
    s_res = min(a.s_max, b.s_max)
    q_res = min(a.q_max, b.q_max - s_res) if s_res != math.inf else min(a.q_max, b.q_max)
    if b.q_max == math.inf:
        q_res = a.q_max
    if q_res < 0:
        raise GraphError("series bounds are incompatible: the right factor needs a larger source degree")
    types_a = {a.graphs[k].graph_type for k in a.coefficients}
    types_b = {b.graphs[k].graph_type for k in b.coefficients}
    targets = set()
    for ta in types_a:
        for tb in types_b:
            if ta.sink_degree != tb.source_degree:
                continue
            t = ta + tb
            if t.operator_weight <= s_res and t.source_degree <= q_res:
                targets.add(t)
    items = []
    for t in targets:
        for g in enumerate_by_type(t):
            total = mpq(0)
            for ka, kb, n in _partition_keys(g):
                ca = a.coefficients.get(ka)
                if ca is None:
                    continue
                cb = b.coefficients.get(kb)
                if cb is None:
                    continue
                total += ca * cb / math.factorial(n)
            if total:
                items.append((g, total))
    return GraphSeries.from_graphs(items, s_res, q_res)


def catalog_record(g: Graph) -> dict:
    return {"type": {"sink_degree": g.sink_degree, "source_degree": g.source_degree,
                     "multiplicity": [[list(t), c] for t, c in g.graph_type.multiplicity]},
            "W": g.weight, "W_hat": g.operator_weight, "N": g.edge_count, "aut": g.aut_order,
            "key": g.key.decode(), "in_U": g.in_u, "graph": g.to_json()}


def dumps_graph(g: Graph) -> str:
    return json.dumps(g.to_json(), sort_keys=True)
