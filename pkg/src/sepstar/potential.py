"""Polynomial formal potentials and the metric they define at a base point."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Sequence

from .graphs import VertexType
from .series import (
    ZERO,
    DegenerateMetricError,
    ExactComplex,
    FormalScalar,
    Jet,
    VarGroup,
    as_exact,
    jet_matrix_invert,
    matrix_inverse,
)

__all__ = ["MetricData", "PotentialSpec", "TypeFilter", "metric_from_potential"]

Monomial = tuple[tuple[int, ...], tuple[int, ...]]


def _shift_poly(poly: Mapping[Monomial, ExactComplex], base: Sequence[ExactComplex]) -> dict:
    """Re-expand ``sum c z^a zbar^b`` in ``w = z - base`` (``zbar`` around ``conj(base)``)."""
    dim = len(base)
    conj = [b.conjugate() for b in base]
    out: dict[Monomial, ExactComplex] = {}
    for (a, b), c in poly.items():
        # each variable x^e = (x0 + w)^e expands binomially
        parts = [((), (), c)]
        for i in range(dim):
            parts = [(pa + (j,), pb, cc * math.comb(a[i], j) * base[i] ** (a[i] - j))
                     for pa, pb, cc in parts for j in range(a[i] + 1)]
        for i in range(dim):
            parts = [(pa, pb + (j,), cc * math.comb(b[i], j) * conj[i] ** (b[i] - j))
                     for pa, pb, cc in parts for j in range(b[i] + 1)]
        for pa, pb, cc in parts:
            if cc:
                key = (pa, pb)
                out[key] = out.get(key, ZERO) + cc
    return {k: v for k, v in out.items() if v}


@dataclass(frozen=True)
class TypeFilter:
    """Vertex types whose tensors can be nonzero for a potential.

    ``support`` holds ``(r, z-degree, zbar-degree)`` of every monomial of every
    ``Phi_r``.  With ``pointwise`` the filter keeps types with nonzero value at
    the base point; otherwise it keeps types with a nonzero tensor anywhere.
    """

    support: frozenset
    pointwise: bool

    def __call__(self, t: VertexType) -> bool:
        if self.pointwise:
            return (t.r, t.p, t.q) in self.support
        return any(r == t.r and a >= t.p and b >= t.q for r, a, b in self.support)


class PotentialSpec:
    """``Phi = sum_r nu**r Phi_r`` with polynomial ``Phi_r`` in (z, zbar), r >= -1.

    Coefficients are given in the original coordinates and stored re-expanded
    around ``base_point``; every jet produced here is in the centered
    coordinates ``w = z - base_point``.
    """

    def __init__(self, dim: int, orders: Mapping[int, Mapping[Monomial, object]],
                 base_point: Sequence | None = None):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = dim
        self.base_point = tuple(as_exact(b) for b in (base_point or [0] * dim))
        if len(self.base_point) != dim:
            raise ValueError("base_point must have dim entries")
        raw: dict[int, dict[Monomial, ExactComplex]] = {}
        for r, poly in orders.items():
            r = int(r)
            if r < -1:
                raise ValueError(f"potential order {r} < -1")
            terms = {}
            for (a, b), c in poly.items():
                a, b = tuple(a), tuple(b)
                if len(a) != dim or len(b) != dim or min(a + b, default=0) < 0:
                    raise ValueError(f"bad monomial degrees {a}, {b} for dim {dim}")
                c = as_exact(c)
                if c:
                    terms[(a, b)] = terms.get((a, b), ZERO) + c
            terms = {k: v for k, v in terms.items() if v}
            if terms:
                raw[r] = terms
        if -1 not in raw:
            raise ValueError("the potential needs a nonzero order -1 part")
        self.raw_orders = raw
        self.orders = {r: _shift_poly(p, self.base_point) for r, p in sorted(raw.items())}
        self.orders = {r: p for r, p in self.orders.items() if p}

    # -- construction helpers ---------------------------------------------
    @classmethod
    def flat(cls, dim: int = 1, metric: Sequence[Sequence] | None = None) -> "PotentialSpec":
        """``(1/nu) g_kl z^k zbar^l`` with a constant matrix (identity by default)."""
        if metric is None:
            metric = [[1 if k == l else 0 for l in range(dim)] for k in range(dim)]
        poly = {}
        for k in range(dim):
            for l in range(dim):
                if metric[k][l]:
                    a = tuple(1 if i == k else 0 for i in range(dim))
                    b = tuple(1 if i == l else 0 for i in range(dim))
                    poly[(a, b)] = metric[k][l]
        return cls(dim, {-1: poly})

    @classmethod
    def from_json(cls, data: Mapping) -> "PotentialSpec":
        from .serialize import parse_complex

        dim = int(data["dim"])
        base = [parse_complex(x) for x in data.get("base_point", [[0, 0]] * dim)]
        orders: dict[int, dict] = {}
        for term in data["terms"]:
            key = (tuple(int(x) for x in term["zdeg"]), tuple(int(x) for x in term["zbardeg"]))
            bucket = orders.setdefault(int(term["nu"]), {})
            bucket[key] = bucket.get(key, ZERO) + parse_complex(term["coeff"])
        return cls(dim, orders, base)

    def to_json(self) -> dict:
        from .serialize import format_complex

        terms = [{"nu": r, "zdeg": list(a), "zbardeg": list(b), "coeff": format_complex(c)}
                 for r, poly in sorted(self.raw_orders.items()) for (a, b), c in sorted(poly.items())]
        return {"dim": self.dim, "base_point": [format_complex(b) for b in self.base_point],
                "terms": terms}

    # -- inspection -----------------------------------------------------
    @property
    def max_order(self) -> int:
        return max(self.orders)

    @property
    def max_degree(self) -> int:
        return max(sum(a) + sum(b) for p in self.orders.values() for a, b in p)

    def type_filter(self, pointwise: bool) -> TypeFilter:
        support = frozenset((r, sum(a), sum(b)) for r, p in self.orders.items() for a, b in p)
        return TypeFilter(support, pointwise)

    # -- jets -----------------------------------------------------------
    def jet(self, r: int, max_degree: int) -> Jet:
        """``Phi_r`` as an exact jet in the centered coordinates."""
        return self._jet(r, max_degree)

    @lru_cache(maxsize=None)
    def _jet(self, r, max_degree):
        m = self.dim
        coeffs = {}
        for (a, b), c in self.orders.get(r, {}).items():
            coeffs[a + b + (0,) * (3 * m)] = c
        return Jet(m, max_degree, coeffs)

    @lru_cache(maxsize=None)
    def vertex_jet(self, r: int, holo: tuple[int, ...], antiholo: tuple[int, ...], max_degree: int) -> Jet:
        """``-d^{p+q} Phi_r / dz^K dzbar^L`` for sorted index tuples."""
        j = self._jet(r, max_degree).diff_multi(VarGroup.Z, holo).diff_multi(VarGroup.ZBAR, antiholo)
        return -j

    @lru_cache(maxsize=None)
    def derivative_at_base(self, r: int, holo: tuple[int, ...], antiholo: tuple[int, ...]) -> ExactComplex:
        """``d^{p+q} Phi_r / dz^K dzbar^L`` at the base point."""
        a = tuple(holo.count(i) for i in range(self.dim))
        b = tuple(antiholo.count(i) for i in range(self.dim))
        c = self.orders.get(r, {}).get((a, b))
        if c is None:
            return ZERO
        f = 1
        for e in a + b:
            f *= math.factorial(e)
        return c * f

    def formal(self, max_degree: int, nu_cap: int) -> FormalScalar:
        """``Phi`` itself as a formal scalar (polar part nu**-1)."""
        terms = {r: self._jet(r, max_degree) for r in self.orders}
        return FormalScalar(self.dim, max_degree, terms, nu_cap)

    def __repr__(self):
        return f"PotentialSpec(dim={self.dim}, orders={sorted(self.orders)})"


@dataclass(frozen=True)
class MetricData:
    g_lower: tuple[tuple[Jet, ...], ...]
    g_upper: tuple[tuple[Jet, ...], ...]  # g_upper[l][k] = g^{lk}
    lower_point: tuple[tuple[ExactComplex, ...], ...]
    upper_point: tuple[tuple[ExactComplex, ...], ...]

    @property
    def dim(self) -> int:
        return len(self.lower_point)


def metric_point(pot: PotentialSpec) -> tuple[tuple, tuple]:
    """Metric and its inverse at the base point, without jets."""
    m = pot.dim
    lower = [[pot.derivative_at_base(-1, (k,), (l,)) for l in range(m)] for k in range(m)]
    try:
        upper = matrix_inverse(lower)
    except ZeroDivisionError:
        raise DegenerateMetricError("degenerate pseudo-Kahler metric at base point") from None
    return tuple(map(tuple, lower)), tuple(map(tuple, upper))


def metric_from_potential(pot: PotentialSpec, max_degree: int) -> MetricData:
    """``g_kl = d^2 Phi_-1 / dz^k dzbar^l`` and its inverse as jets."""
    m = pot.dim
    lower = [[-pot.vertex_jet(-1, (k,), (l,), max_degree) for l in range(m)] for k in range(m)]
    upper = jet_matrix_invert(lower)
    lp, up = metric_point(pot)
    return MetricData(tuple(map(tuple, lower)), tuple(map(tuple, upper)), lp, up)
