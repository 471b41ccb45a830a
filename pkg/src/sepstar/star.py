"""Partition functions and the star product they assemble.

``f * g = sum_G nu**W(G) / |Aut(G)| * G_G(f, g)`` summed over acyclic graph
classes.  Grouping the graph sum by source and sink degree gives the
coefficient tensors ``C_r^{LK}`` of ``f * g = C^{LK} dbar_L f d_K g``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from gmpy2 import mpq

from .contract import contract, symmetrize
from .graphs import Graph, enumerate_by_operator_weight, enumerate_by_weight
from .potential import MetricData, PotentialSpec, metric_from_potential, metric_point
from .series import (
    INF,
    ONE,
    ZERO,
    CapError,
    ExactComplex,
    FormalScalar,
    Jet,
    VarGroup,
    index_arrangements,
)

__all__ = [
    "StarProductData",
    "assemble_star",
    "partition_function",
    "partition_tensor",
    "star_apply",
    "star_coefficient_tensors",
    "star_product",
]


def _nonzero(x):
    if isinstance(x, Jet):
        return None if x.is_zero() else x
    return x if x else None


_MISSING = object()


class _Tensors:
    """Vertex and metric values for a potential, as jets or base-point values."""

    def __init__(self, pot: PotentialSpec, metric: MetricData | None, max_degree: int | None):
        self.pot = pot
        self.max_degree = max_degree
        self.jets = max_degree is not None
        if self.jets:
            self.upper = metric.g_upper
            self.one = Jet.constant(pot.dim, max_degree, 1)
        else:
            self.upper = metric_point(pot)[1] if metric is None else metric.upper_point
            self.one = ONE
        self._vertex: dict = {}
        self._upper_nz = [[_nonzero(x) for x in row] for row in self.upper]

    def vertex(self, r: int, holo: tuple, antiholo: tuple):
        key = (r, holo, antiholo)
        v = self._vertex.get(key, _MISSING)
        if v is _MISSING:
            if self.jets:
                v = _nonzero(self.pot.vertex_jet(r, holo, antiholo, self.max_degree))
            else:
                v = _nonzero(-self.pot.derivative_at_base(r, holo, antiholo))
            self._vertex[key] = v
        return v

    def g_up(self, l: int, k: int):
        return self._upper_nz[l][k]


def _factors(graph: Graph, tens: _Tensors, f=None, g=None):
    """Factors of the raw partition function; two variables per edge."""
    edges = graph.edge_list()
    sink = graph.sink
    ins: dict[int, list[int]] = {v: [] for v in range(sink + 1)}
    outs: dict[int, list[int]] = {v: [] for v in range(sink + 1)}
    for e, (i, j) in enumerate(edges):
        outs[i].append(2 * e)       # antiholomorphic slot at the tail
        ins[j].append(2 * e + 1)    # holomorphic slot at the head
    factors = []
    for v, t in enumerate(graph.types, start=1):
        p = len(ins[v])

        def vlook(vals, r=t.r, p=p):
            return tens.vertex(r, tuple(sorted(vals[:p])), tuple(sorted(vals[p:])))

        factors.append((ins[v] + outs[v], vlook))
    if f is not None:
        fcache: dict = {}

        def flook(vals):
            key = tuple(sorted(vals))
            if key not in fcache:
                fcache[key] = _nonzero(f.diff_multi(VarGroup.ZBAR, key))
            return fcache[key]

        factors.append((outs[0], flook))
    if g is not None:
        gcache: dict = {}

        def glook(vals):
            key = tuple(sorted(vals))
            if key not in gcache:
                gcache[key] = _nonzero(g.diff_multi(VarGroup.Z, key))
            return gcache[key]

        factors.append((ins[sink], glook))
    for e in range(len(edges)):
        factors.append(((2 * e, 2 * e + 1), lambda vals: tens.g_up(vals[0], vals[1])))
    return factors, outs[0], ins[sink]


def partition_function(graph: Graph, pot: PotentialSpec, f: Jet, g: Jet,
                       metric: MetricData | None = None) -> Jet:
    """``G_Gamma(f, g)`` by direct contraction of all vertex tensors along the edges."""
    if f.dim != pot.dim or g.dim != pot.dim or f.max_degree != g.max_degree:
        raise CapError("f, g and the potential must share dim and max_degree")
    deg = f.max_degree
    if metric is None:
        metric = metric_from_potential(pot, deg)
    tens = _Tensors(pot, metric, deg)
    factors, _, _ = _factors(graph, tens, f, g)
    res = contract(factors, pot.dim, tens.one)
    return res.get((), Jet.zero(pot.dim, deg)) if res else Jet.zero(pot.dim, deg)


def partition_tensor(graph: Graph, pot: PotentialSpec, metric: MetricData | None = None,
                     max_degree: int | None = None) -> dict[tuple, object]:
    """Symmetrized ``G_Gamma^{LK}`` keyed by (sorted L, sorted K).

    With ``max_degree`` the values are jets; otherwise base-point values.
    """
    if max_degree is not None and metric is None:
        metric = metric_from_potential(pot, max_degree)
    tens = _Tensors(pot, metric, max_degree)
    factors, src, snk = _factors(graph, tens)
    raw = contract(factors, pot.dim, tens.one, (src, snk))
    return {(L, K): v for (L, K), v in symmetrize(raw).items() if _nonzero(v) is not None}


@dataclass
class StarProductData:
    """Coefficient tensors ``C_r^{LK}`` keyed by ``(r, sorted L, sorted K)``.

    Entries are complete for ``r <= nu_order``, ``|L| <= source_cap``,
    ``|K| <= sink_cap`` and ``r - |L| <= operator_weight_cap``.
    """

    dim: int
    nu_order: int
    source_cap: float
    sink_cap: float
    operator_weight_cap: float
    points: dict = field(default_factory=dict)
    jets: dict | None = None
    max_degree: int | None = None
    graph_count: int = 0

    def covers(self, r: int, n_source: int, n_sink: int) -> bool:
        return (r <= self.nu_order and n_source <= self.source_cap and n_sink <= self.sink_cap
                and r - n_source <= self.operator_weight_cap)

    def point(self, r: int, L: tuple, K: tuple) -> ExactComplex:
        if not self.covers(r, len(L), len(K)):
            raise CapError(f"C_{r}^{{{L},{K}}} lies outside the computed range")
        return self.points.get((r, tuple(sorted(L)), tuple(sorted(K))), ZERO)

    def is_complete_bidifferential(self) -> bool:
        return self.jets is not None and self.source_cap >= self.nu_order and self.sink_cap >= self.nu_order


def star_coefficient_tensors(pot: PotentialSpec, nu_order: int, *, jet_degree: int | None = None,
                             source_cap: float | None = None, sink_cap: float | None = None,
                             operator_weight_cap: float | None = None,
                             metric: MetricData | None = None,
                             fault: Mapping[tuple, object] | None = None) -> StarProductData:
    """Sum graph contributions into ``C_r^{LK}``.

    With ``jet_degree`` the tensors are jets (needed to act on functions);
    without it only base-point values are computed.  ``fault`` adds the given
    values to chosen entries and exists for negative controls.
    """
    if nu_order < 0:
        raise ValueError("nu_order must be nonnegative")
    src_cap = nu_order if source_cap is None else source_cap
    snk_cap = nu_order if sink_cap is None else sink_cap
    ow_cap = nu_order if operator_weight_cap is None else operator_weight_cap
    jets = jet_degree is not None
    if jets and metric is None:
        metric = metric_from_potential(pot, jet_degree)
    allowed = pot.type_filter(pointwise=not jets)
    data = StarProductData(pot.dim, nu_order, src_cap, snk_cap, ow_cap,
                           jets={} if jets else None, max_degree=jet_degree)
    for qb in range(int(min(src_cap, nu_order)) + 1):
        for s in range(int(min(ow_cap, nu_order - qb)) + 1):
            for graph in enumerate_by_operator_weight(s, qb, allowed):
                if graph.sink_degree > snk_cap:
                    continue
                data.graph_count += 1
                w = graph.weight
                inv = mpq(1, graph.aut_order)
                for (L, K), val in partition_tensor(graph, pot, metric, jet_degree).items():
                    key = (w, L, K)
                    contrib = val * inv
                    store = data.jets if jets else data.points
                    store[key] = store[key] + contrib if key in store else contrib
    for key, delta in (fault or {}).items():
        r, L, K = key
        key = (r, tuple(sorted(L)), tuple(sorted(K)))
        if jets:
            d = Jet.constant(pot.dim, jet_degree, delta)
            data.jets[key] = data.jets[key] + d if key in data.jets else d
        else:
            data.points[key] = data.points.get(key, ZERO) + delta
    if jets:
        data.jets = {k: v for k, v in data.jets.items() if not v.is_zero()}
        data.points = {k: v.constant_term() for k, v in data.jets.items() if v.constant_term()}
    else:
        data.points = {k: v for k, v in data.points.items() if v}
    return data


def _as_scalar(x, dim: int, max_degree: int) -> FormalScalar:
    if isinstance(x, FormalScalar):
        return x
    if isinstance(x, Jet):
        return FormalScalar.from_jet(x, INF)
    return FormalScalar.constant(dim, max_degree, INF, x)


def star_apply(data: StarProductData, f, g) -> FormalScalar:
    """``C^{LK} dbar_L f d_K g`` for jets or formal scalars ``f``, ``g``.

    The result is exact up to ``nu_order + min_order(f) + min_order(g)`` and
    the usual honest caps of the operands.
    """
    if not data.is_complete_bidifferential():
        raise CapError("star_apply needs jet tensors complete in every index length")
    f = _as_scalar(f, data.dim, data.max_degree)
    g = _as_scalar(g, data.dim, data.max_degree)
    if f.max_degree != data.max_degree or g.max_degree != data.max_degree:
        raise CapError("operands must use the jet degree of the star tensors")
    dim, deg = data.dim, data.max_degree
    df: dict = {}
    dg: dict = {}
    out = FormalScalar(dim, deg, {}, INF)
    for (r, L, K), c in sorted(data.jets.items()):
        if L not in df:
            df[L] = f.diff_multi(VarGroup.ZBAR, L)
        if K not in dg:
            dg[K] = g.diff_multi(VarGroup.Z, K)
        if df[L].is_zero() or dg[K].is_zero():
            continue
        weight = index_arrangements(L) * index_arrangements(K)
        coef = FormalScalar(dim, deg, {r: c.scale(weight)}, INF)
        out = out + coef * df[L] * dg[K]
    fm = min(f.min_order, f.nu_cap + 1)
    gm = min(g.min_order, g.nu_cap + 1)
    cap = min(out.nu_cap, data.nu_order + fm + gm, f.nu_cap + gm, g.nu_cap + fm)
    return out.truncate_nu(cap) if cap < out.nu_cap else out


def _check_jet_caps(f: Jet, g: Jet, nu_order: int) -> None:
    deg = f.max_degree
    if f.is_exact() and g.is_exact():
        need = 2 * nu_order + max(f.degree(), 0) + max(g.degree(), 0)
        if deg < need:
            raise CapError(f"jet degree {deg} is below 2N + deg(fg) = {need}")


def star_product(pot: PotentialSpec, f: Jet, g: Jet, nu_order: int,
                 data: StarProductData | None = None) -> FormalScalar:
    """``f * g`` mod ``nu**(nu_order+1)`` through the coefficient tensors."""
    _check_jet_caps(f, g, nu_order)
    if data is None:
        data = star_coefficient_tensors(pot, nu_order, jet_degree=f.max_degree)
    return star_apply(data, f, g).truncate_nu(nu_order)


def assemble_star(pot: PotentialSpec, f: Jet, g: Jet, nu_order: int,
                  metric: MetricData | None = None) -> FormalScalar:
    """``f * g`` mod ``nu**(nu_order+1)`` as a direct sum of partition functions."""
    _check_jet_caps(f, g, nu_order)
    deg = f.max_degree
    if metric is None:
        metric = metric_from_potential(pot, deg)
    terms: dict[int, Jet] = {}
    for graph in enumerate_by_weight(nu_order, pot.type_filter(pointwise=False)):
        val = partition_function(graph, pot, f, g, metric)
        if val.is_zero():
            continue
        val = val.scale(mpq(1, graph.aut_order))
        w = graph.weight
        terms[w] = terms[w] + val if w in terms else val
    return FormalScalar(pot.dim, deg, terms, nu_order)
