"""Partition operators and the Fock-space operators C and E built from graphs.

The partition operator of a graph uses one index per edge.  A vertex of type
(p, q, r) carries ``-d_K dbar_L Phi_r`` with its antiholomorphic indices
raised by ``g^{li}``, so an internal edge is a plain index identification and
a direct source-sink edge is a Kronecker delta.  Free indices on source edges
form the row ``K`` (``|K|`` = source degree) and those on sink edges the
column ``I`` (``|I|`` = sink degree).  Everything is evaluated at the base
point.
"""

from __future__ import annotations

import math
from itertools import product

from gmpy2 import mpq

from .contract import contract, symmetrize
from .fock import FockOperator
from .graphs import (
    Graph,
    GraphSeries,
    enumerate_by_operator_weight,
    multiplicity_functions,
    u_graph_of_type,
)
from .potential import MetricData, PotentialSpec, metric_point
from .series import INF, ONE, ZERO, ExactComplex

__all__ = [
    "c_graph_series",
    "e_graph_series",
    "operator_C_graphs",
    "operator_E_graphs",
    "partition_operator",
    "realize",
]


class _Raised:
    """Base-point vertex tensors with raised antiholomorphic indices."""

    def __init__(self, pot: PotentialSpec, metric: MetricData | None):
        self.pot = pot
        self.upper = metric_point(pot)[1] if metric is None else metric.upper_point
        self._cache: dict = {}

    def __call__(self, r: int, holo: tuple, upper: tuple):
        key = (r, holo, upper)
        if key in self._cache:
            return self._cache[key]
        m = self.pot.dim
        acc = ZERO
        for ls in product(range(m), repeat=len(upper)):
            w = ONE
            for l, i in zip(ls, upper):
                w = w * self.upper[l][i]
                if not w:
                    break
            if not w:
                continue
            d = self.pot.derivative_at_base(r, holo, tuple(sorted(ls)))
            if d:
                acc = acc - d * w
        val = acc if acc else None
        self._cache[key] = val
        return val


def _operator_factors(graph: Graph, raised: _Raised):
    sink = graph.sink
    ins: dict[int, list[int]] = {v: [] for v in range(sink + 1)}
    outs: dict[int, list[int]] = {v: [] for v in range(sink + 1)}
    for e, (i, j) in enumerate(graph.edge_list()):
        outs[i].append(e)
        ins[j].append(e)
    factors = []
    for v, t in enumerate(graph.types, start=1):
        p = len(ins[v])

        def look(vals, r=t.r, p=p):
            return raised(r, tuple(sorted(vals[:p])), tuple(sorted(vals[p:])))

        factors.append((ins[v] + outs[v], look))
    for e in set(outs[0]) & set(ins[sink]):
        factors.append(((e,), lambda vals: ONE))
    return factors, outs[0], ins[sink]


def partition_operator(graph: Graph, pot: PotentialSpec,
                       metric: MetricData | None = None,
                       _raised: _Raised | None = None) -> dict[tuple, ExactComplex]:
    """Symmetrized matrix of the partition operator, keyed by (sorted K, sorted I)."""
    raised = _raised or _Raised(pot, metric)
    factors, src, snk = _operator_factors(graph, raised)
    raw = contract(factors, pot.dim, ONE, (src, snk))
    return {k: v for k, v in symmetrize(raw).items() if v}


def _accumulate(ent: dict, graph: Graph, coeff, pot: PotentialSpec, raised: _Raised) -> None:
    s = graph.operator_weight
    w = mpq(coeff) / graph.aut_order
    for (K, I), v in partition_operator(graph, pot, _raised=raised).items():
        key = (s, K, I)
        ent[key] = ent.get(key, ZERO) + v * w


def realize(series: GraphSeries, pot: PotentialSpec, metric: MetricData | None = None) -> FockOperator:
    """``sum c_G nu**W_hat(G) G_hat / |Aut(G)|`` as a Fock operator.

    The operator is complete for ``s <= s_max`` and ``|K| <= q_max`` of the series.
    """
    raised = _Raised(pot, metric)
    ent: dict = {}
    for g, c in series.items():
        _accumulate(ent, g, c, pot, raised)
    cap_s = INF if series.s_max == math.inf else series.s_max
    cap_q = INF if series.q_max == math.inf else series.q_max
    return FockOperator(pot.dim, ent, cap_s, cap_q, 0)


def operator_C_graphs(pot: PotentialSpec, nu_cap: int, index_cap: int,
                      metric: MetricData | None = None) -> FockOperator:
    """``C = sum over all graph classes of nu**W_hat p! / |Aut| G_hat``."""
    raised = _Raised(pot, metric)
    allowed = pot.type_filter(pointwise=True)
    ent: dict = {}
    for qb in range(index_cap + 1):
        for s in range(nu_cap + 1):
            for g in enumerate_by_operator_weight(s, qb, allowed):
                _accumulate(ent, g, math.factorial(g.sink_degree), pot, raised)
    return FockOperator(pot.dim, ent, nu_cap, index_cap, 0)


def _u_graphs(s: int, qb: int, allowed=None):
    for gt in multiplicity_functions(s, qb, allowed):
        if gt.source_degree - sum(t.p * c for t, c in gt.multiplicity) >= 0:
            yield u_graph_of_type(gt)


def operator_E_graphs(pot: PotentialSpec, nu_cap: int, index_cap: int,
                      metric: MetricData | None = None) -> FockOperator:
    """``E = sum over unconnected-vertex classes of (-1)**R nu**W_hat p! / |Aut| G_hat``."""
    raised = _Raised(pot, metric)
    allowed = pot.type_filter(pointwise=True)
    ent: dict = {}
    for qb in range(index_cap + 1):
        for s in range(nu_cap + 1):
            for g in _u_graphs(s, qb, allowed):
                _accumulate(ent, g, (-1) ** g.R * math.factorial(g.sink_degree), pot, raised)
    return FockOperator(pot.dim, ent, nu_cap, index_cap, 0)


def c_graph_series(s_max: int, q_max: int) -> GraphSeries:
    """Potential-independent coefficients ``p!`` on every class."""
    return GraphSeries.from_function(lambda g: math.factorial(g.sink_degree), s_max, q_max)


def e_graph_series(s_max: int, q_max: int) -> GraphSeries:
    """Coefficients ``(-1)**R p!`` on the unconnected-vertex classes."""
    items = [(g, (-1) ** g.R * math.factorial(g.sink_degree))
             for qb in range(q_max + 1) for s in range(s_max + 1) for g in _u_graphs(s, qb)]
    return GraphSeries.from_graphs(items, s_max, q_max)
