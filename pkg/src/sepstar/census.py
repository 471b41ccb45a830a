"""Brute-force census of labeled wirings, independent of the canonical-form code.

For a graph type, fix the half-edges: every vertex carries its heads and its
tails, the source only tails and the sink only heads.  A labeled wiring is a
bijection from tails to heads.  Wirings that produce a loop or a directed
cycle are discarded; the rest are grouped into isomorphism classes by trying
every type-preserving relabeling of the internal vertices.
"""

from __future__ import annotations

from collections import Counter
from itertools import permutations

from .graphs import Graph, GraphType, VertexType, multiplicity_functions

__all__ = ["WiringCensus", "census", "orbit_sizes_match", "types_up_to"]


class WiringCensus:
    """Labeled wirings of one type, grouped by isomorphism class.

    ``classes`` maps a brute-force class key to the number of labeled wirings
    in that class; ``total`` is their sum.
    """

    def __init__(self, gtype: GraphType, classes: Counter, representatives: dict):
        self.gtype = gtype
        self.classes = classes
        self.representatives = representatives

    @property
    def total(self) -> int:
        return sum(self.classes.values())

    def __len__(self):
        return len(self.classes)


def _vertex_list(gtype: GraphType) -> list[VertexType]:
    return [t for t, c in gtype.multiplicity for _ in range(c)]


def _acyclic(n: int, adj: list[list[int]]) -> bool:
    state = [0] * n

    def visit(u):
        state[u] = 1
        for v in range(n):
            if adj[u][v]:
                if state[v] == 1 or (state[v] == 0 and not visit(v)):
                    return False
        state[u] = 2
        return True

    return all(state[u] or visit(u) for u in range(n))


def _brute_key(types: list[VertexType], adj: list[list[int]]) -> tuple:
    """Lexicographically least (types, adjacency) over all type-preserving relabelings."""
    R = len(types)
    n = R + 2
    best = None
    for perm in permutations(range(1, R + 1)):
        if any(types[perm[i] - 1] != types[i] for i in range(R)):
            continue
        order = [0, *perm, n - 1]
        mat = tuple(tuple(adj[order[a]][order[b]] for b in range(n)) for a in range(n))
        if best is None or mat < best:
            best = mat
    return tuple(types), best


def census(gtype: GraphType) -> WiringCensus:
    """Enumerate every bijection from tails to heads for the type."""
    verts = _vertex_list(gtype)
    R = len(verts)
    n = R + 2
    tails = [0] * gtype.source_degree
    heads = []
    for v, t in enumerate(verts, start=1):
        tails += [v] * t.q
        heads += [v] * t.p
    heads += [n - 1] * gtype.sink_degree
    if len(tails) != len(heads):
        return WiringCensus(gtype, Counter(), {})
    classes: Counter = Counter()
    reps: dict = {}
    for match in permutations(range(len(heads))):
        adj = [[0] * n for _ in range(n)]
        ok = True
        for ti, hi in enumerate(match):
            a, b = tails[ti], heads[hi]
            if a == b:
                ok = False
                break
            adj[a][b] += 1
        if not ok or not _acyclic(n, adj):
            continue
        key = _brute_key(verts, adj)
        classes[key] += 1
        if key not in reps:
            reps[key] = Graph(tuple(verts), tuple(tuple(r) for r in adj))
    return WiringCensus(gtype, classes, reps)


def types_up_to(operator_weight: int, source_degree: int) -> list[GraphType]:
    """All graph types with operator weight and source degree within the bounds."""
    out = []
    for qb in range(source_degree + 1):
        for s in range(operator_weight + 1):
            out.extend(multiplicity_functions(s, qb))
    return sorted(set(out), key=lambda t: (t.operator_weight, t.source_degree, t.sink_degree,
                                           t.multiplicity))


def orbit_sizes_match(wc: WiringCensus) -> list[tuple[Graph, int, int]]:
    """Classes whose count of labeled wirings differs from ``gamma / |Aut|``."""
    gamma = wc.gtype.pre_feynman_order()
    bad = []
    for key, count in wc.classes.items():
        g = wc.representatives[key]
        expected = gamma // g.aut_order
        if gamma % g.aut_order or expected != count:
            bad.append((g, count, expected))
    return bad

