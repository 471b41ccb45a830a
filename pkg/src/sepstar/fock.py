"""Operators on the formal Fock space C[[nu, eta]] as graded symmetric matrices.

An operator ``A`` is stored by its nonzero entries ``A_{s,K}^I`` keyed by
``(s, sorted K, sorted I)``; the value is the symmetric tensor component.
Contractions over a repeated index sum over all tuples, so a sorted index
``J`` is weighted by its number of arrangements.

Each operator records the region where its entries are complete:
``s <= nu_cap`` and ``|K| <= index_cap``.  ``min_order`` is a lower bound for
the stored ``s`` and is what makes composition caps computable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations, product
from typing import Iterator, Sequence

from gmpy2 import mpq

from .series import (
    INF,
    ONE,
    ZERO,
    CapError,
    DegenerateMetricError,
    ExactComplex,
    as_exact,
    index_arrangements,
    matrix_inverse,
    sorted_indices,
)

__all__ = [
    "FockOperator",
    "FockVector",
    "InverseReport",
    "apply",
    "cmatrix_from_bidiff",
    "compose",
    "delta_op",
    "ematrix_from_calabi",
    "g_tensors",
    "is_inverse_pair",
]

Key = tuple[int, tuple[int, ...], tuple[int, ...]]


def _sorted(idx) -> tuple[int, ...]:
    return tuple(sorted(idx))


@dataclass
class FockVector:
    """``f = sum nu**s f_{s,K} eta^K`` with symmetric ``f_{s,K}``."""

    dim: int
    entries: dict[tuple[int, tuple[int, ...]], ExactComplex]
    nu_cap: float
    index_cap: float

    def __post_init__(self):
        clean = {}
        for (s, K), v in self.entries.items():
            v = as_exact(v)
            if v:
                clean[(s, _sorted(K))] = clean.get((s, _sorted(K)), ZERO) + v
        self.entries = {k: v for k, v in sorted(clean.items()) if v}

    def get(self, s: int, K) -> ExactComplex:
        if s > self.nu_cap or len(K) > self.index_cap:
            raise CapError(f"entry ({s}, {tuple(K)}) is outside the vector caps")
        return self.entries.get((s, _sorted(K)), ZERO)

    @property
    def min_order(self) -> float:
        return min((s for s, _ in self.entries), default=self.nu_cap + 1)

    def equals_within(self, other: "FockVector", nu_cap: int, index_cap: int) -> bool:
        keys = set(self.entries) | set(other.entries)
        return all(self.entries.get(k, ZERO) == other.entries.get(k, ZERO)
                   for k in keys if k[0] <= nu_cap and len(k[1]) <= index_cap)


@dataclass
class FockOperator:
    dim: int
    entries: dict[Key, ExactComplex]
    nu_cap: float
    index_cap: float
    min_order: float = 0

    def __post_init__(self):
        clean: dict[Key, ExactComplex] = {}
        for (s, K, I), v in self.entries.items():
            v = as_exact(v)
            if not v:
                continue
            key = (s, _sorted(K), _sorted(I))
            clean[key] = clean.get(key, ZERO) + v
        self.entries = dict(sorted((k, v) for k, v in clean.items() if v))
        low = min((k[0] for k in self.entries), default=self.min_order)
        if low < self.min_order:
            raise ValueError(f"entry at nu order {low} below declared min_order {self.min_order}")

    def get(self, s: int, K, I) -> ExactComplex:
        if s > self.nu_cap or len(K) > self.index_cap:
            raise CapError(f"entry ({s}, {tuple(K)}, {tuple(I)}) is outside the operator caps")
        return self.entries.get((s, _sorted(K), _sorted(I)), ZERO)

    def rows(self) -> dict[tuple[int, tuple], list[tuple[tuple, ExactComplex]]]:
        out: dict = {}
        for (s, K, I), v in self.entries.items():
            out.setdefault((s, K), []).append((I, v))
        return out

    def restrict(self, nu_cap: float, index_cap: float) -> "FockOperator":
        if nu_cap > self.nu_cap or index_cap > self.index_cap:
            raise CapError("cannot restrict an operator to larger caps")
        ent = {k: v for k, v in self.entries.items() if k[0] <= nu_cap and len(k[1]) <= index_cap}
        return FockOperator(self.dim, ent, nu_cap, index_cap, self.min_order)

    def __add__(self, other: "FockOperator") -> "FockOperator":
        if self.dim != other.dim:
            raise CapError("dimension mismatch")
        ent = dict(self.entries)
        for k, v in other.entries.items():
            ent[k] = ent.get(k, ZERO) + v
        return FockOperator(self.dim, ent, min(self.nu_cap, other.nu_cap),
                            min(self.index_cap, other.index_cap), min(self.min_order, other.min_order))

    def scale(self, c) -> "FockOperator":
        c = as_exact(c)
        return FockOperator(self.dim, {k: v * c for k, v in self.entries.items()}, self.nu_cap,
                            self.index_cap, self.min_order)

    def first_difference(self, other: "FockOperator", nu_cap: float | None = None,
                         index_cap: float | None = None) -> tuple[Key, ExactComplex, ExactComplex] | None:
        """First entry (in key order) where the operators differ inside the common caps."""
        nc = min(self.nu_cap, other.nu_cap) if nu_cap is None else nu_cap
        ic = min(self.index_cap, other.index_cap) if index_cap is None else index_cap
        if nc > min(self.nu_cap, other.nu_cap) or ic > min(self.index_cap, other.index_cap):
            raise CapError("comparison caps exceed the operator caps")
        for k in sorted(set(self.entries) | set(other.entries)):
            if k[0] > nc or len(k[1]) > ic:
                continue
            a = self.entries.get(k, ZERO)
            b = other.entries.get(k, ZERO)
            if a != b:
                return k, a, b
        return None

    def support_ok(self) -> bool:
        """Weight-graded support: ``s >= 0`` and ``|I| <= s + |K|``."""
        return all(s >= 0 and len(I) <= s + len(K) for s, K, I in self.entries)


def delta_op(dim: int, index_cap: int, nu_cap: float = INF) -> FockOperator:
    """The identity matrix: ``Delta_K^K = alpha!/n!`` at sorted ``K``, zero elsewhere."""
    ent = {}
    for n in range(int(index_cap) + 1):
        for K in sorted_indices(dim, n):
            ent[(0, K, K)] = ExactComplex(mpq(1, index_arrangements(K)))
    return FockOperator(dim, ent, nu_cap, index_cap, 0)


def g_tensors(g_point: Sequence[Sequence], index_cap: int) -> tuple[FockOperator, FockOperator]:
    """``G_KL`` (at nu order ``-|K|``) and ``G^LK`` (at ``+|K|``) for ``|K| <= index_cap``.

    ``G_{KL} = 1/(nu^r (r!)^2) sum_sigma prod g_{k l_sigma}`` and
    ``G^{LK} = nu^r sum_sigma prod g^{l k_sigma}``.
    """
    m = len(g_point)
    lower = [[as_exact(x) for x in row] for row in g_point]
    try:
        upper = matrix_inverse(lower)
    except ZeroDivisionError:
        raise DegenerateMetricError("degenerate pseudo-Kahler metric at base point") from None
    low, up = {}, {}
    for r in range(int(index_cap) + 1):
        norm = mpq(1, math.factorial(r) ** 2)
        for K in sorted_indices(m, r):
            for L in sorted_indices(m, r):
                a = _perm_sum(lower, K, L)
                if a:
                    low[(-r, K, L)] = a * norm
                b = _perm_sum(upper, L, K)
                if b:
                    up[(r, L, K)] = b
    return (FockOperator(m, low, INF, index_cap, -index_cap),
            FockOperator(m, up, INF, index_cap, 0))


def _perm_sum(mat, rows: Sequence[int], cols: Sequence[int]) -> ExactComplex:
    """``sum_sigma prod mat[rows_i][cols_sigma(i)]`` (a permanent)."""
    n = len(rows)
    if n == 0:
        return ONE
    memo: dict = {}

    def rec(i, used):
        if i == n:
            return ONE
        key = (i, used)
        if key in memo:
            return memo[key]
        acc = ZERO
        for j in range(n):
            if not used >> j & 1:
                x = mat[rows[i]][cols[j]]
                if x:
                    acc = acc + x * rec(i + 1, used | 1 << j)
        memo[key] = acc
        return acc

    return rec(0, 0)


def _result_caps(a: FockOperator, b_nu_cap: float, b_min: float) -> float:
    return min(a.nu_cap + b_min, b_nu_cap + a.min_order)


def compose(a: FockOperator, b: FockOperator) -> FockOperator:
    """``(AB)_{s,K}^I = sum_{s1+s2=s} sum_J A_{s1,K}^J B_{s2,J}^I``.

    Rows are produced for ``|K| <= a.index_cap``.  Raises ``CapError`` if some
    needed intermediate ``J`` lies beyond ``b.index_cap``.
    """
    if a.dim != b.dim:
        raise CapError("dimension mismatch")
    cap = _result_caps(a, b.nu_cap, b.min_order)
    b_rows = b.rows()
    out: dict[Key, ExactComplex] = {}
    for (s1, K, J), av in a.entries.items():
        if s1 + b.min_order > cap or len(K) > a.index_cap:
            continue
        if len(J) > b.index_cap:
            raise CapError(f"composition needs row |J|={len(J)} of the right factor "
                           f"(index_cap {b.index_cap})")
        w = index_arrangements(J)
        for s2 in _orders(b, cap - s1):
            for I, bv in b_rows.get((s2, J), ()):
                key = (s1 + s2, K, I)
                out[key] = out.get(key, ZERO) + av * bv * w
    return FockOperator(a.dim, out, cap, a.index_cap, a.min_order + b.min_order)


def _orders(b: FockOperator, upto: float) -> Iterator[int]:
    seen = sorted({k[0] for k in b.entries})
    return (s for s in seen if s <= upto)


def apply(a: FockOperator, f: FockVector) -> FockVector:
    """``(Af)_K = A_K^I f_I`` graded in nu."""
    if a.dim != f.dim:
        raise CapError("dimension mismatch")
    cap = min(a.nu_cap + f.min_order, f.nu_cap + a.min_order)
    out: dict = {}
    fe = f.entries
    by_index: dict = {}
    for (s, I), v in fe.items():
        by_index.setdefault(I, []).append((s, v))
    for (s1, K, I), av in a.entries.items():
        if len(I) > f.index_cap and av:
            raise CapError(f"application needs f at |I|={len(I)} beyond its index_cap")
        w = index_arrangements(I)
        for s2, fv in by_index.get(I, ()):
            if s1 + s2 <= cap:
                key = (s1 + s2, K)
                out[key] = out.get(key, ZERO) + av * fv * w
    return FockVector(a.dim, out, cap, a.index_cap)


def cmatrix_from_bidiff(c_tensors, g_point: Sequence[Sequence], nu_cap: int,
                        index_cap: int) -> FockOperator:
    """``C_{s,K}^I = p! g_{k1 l1}...g_{kr lr} C_{s+r}^{L I}`` with r = |K|, p = |I|.

    ``c_tensors`` provides ``points[(r, sorted L, sorted K)]`` and a
    ``covers(r, |L|, |K|)`` predicate.
    """
    m = len(g_point)
    g = [[as_exact(x) for x in row] for row in g_point]
    ent: dict[Key, ExactComplex] = {}
    for s in range(nu_cap + 1):
        for r in range(index_cap + 1):
            for p in range(s + r + 1):
                if not c_tensors.covers(s + r, r, p):
                    raise CapError(f"C_{s + r} with |L|={r}, |K|={p} was not supplied")
            for Ltuple in product(range(m), repeat=r):
                Ls = _sorted(Ltuple)
                for (t, L, I), c in c_tensors.points.items():
                    if t != s + r or L != Ls:
                        continue
                    pf = math.factorial(len(I))
                    for K in sorted_indices(m, r):
                        w = ONE
                        for k, l in zip(K, Ltuple):
                            w = w * g[k][l]
                            if not w:
                                break
                        if w:
                            key = (s, K, I)
                            ent[key] = ent.get(key, ZERO) + w * c * pf
    return FockOperator(m, ent, nu_cap, index_cap, 0)


def ematrix_from_calabi(e_tensors, g_point: Sequence[Sequence], nu_cap: int,
                        index_cap: int) -> FockOperator:
    """``E_{s,K}^I = p! E_{s-p, K L} g^{l1 i1}...g^{lp ip}`` with p = |I|.

    ``e_tensors`` provides ``points[(t, sorted K, sorted L)]`` and a
    ``covers(t, |K|, |L|)`` predicate.
    """
    m = len(g_point)
    try:
        gu = matrix_inverse([[as_exact(x) for x in row] for row in g_point])
    except ZeroDivisionError:
        raise DegenerateMetricError("degenerate pseudo-Kahler metric at base point") from None
    ent: dict[Key, ExactComplex] = {}
    for s in range(nu_cap + 1):
        for n in range(index_cap + 1):
            for p in range(s + n + 1):
                if not e_tensors.covers(s - p, n, p):
                    raise CapError(f"E_{s - p} with |K|={n}, |L|={p} was not supplied")
    for (t, K, L), e in e_tensors.points.items():
        p = len(L)
        s = t + p
        if s > nu_cap or len(K) > index_cap:
            continue
        pf = math.factorial(p)
        # sum over the tuples (l1..lp) whose sorted form is L
        for Lt in set(_arrangements(L)):
            for I in sorted_indices(m, p):
                w = _raise_weight(gu, Lt, I)
                if w:
                    key = (s, K, I)
                    ent[key] = ent.get(key, ZERO) + w * e * pf
    return FockOperator(m, ent, nu_cap, index_cap, 0)


def _arrangements(L: tuple[int, ...]) -> Iterator[tuple[int, ...]]:
    return permutations(L)


def _raise_weight(gu, Lt: tuple[int, ...], I: tuple[int, ...]) -> ExactComplex:
    w = ONE
    for l, i in zip(Lt, I):
        w = w * gu[l][i]
        if not w:
            break
    return w


@dataclass
class InverseReport:
    passed: bool
    first_violation: tuple | None = None
    order: str | None = None

    def __bool__(self):
        return self.passed


def is_inverse_pair(a: FockOperator, b: FockOperator, nu_cap: int, index_cap: int) -> InverseReport:
    """Check ``AB = Delta = BA`` for ``s <= nu_cap``, ``|K| <= index_cap``."""
    ident = delta_op(a.dim, index_cap)
    for name, x, y in (("AB", a, b), ("BA", b, a)):
        prod = compose(x.restrict(x.nu_cap, index_cap) if x.index_cap > index_cap else x, y)
        if prod.nu_cap < nu_cap or prod.index_cap < index_cap:
            raise CapError(f"{name} is exact only for s <= {prod.nu_cap}, |K| <= {prod.index_cap}")
        diff = prod.first_difference(ident, nu_cap, index_cap)
        if diff is not None:
            return InverseReport(False, diff, name)
    return InverseReport(True)
