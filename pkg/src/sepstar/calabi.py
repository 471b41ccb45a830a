"""The formal Calabi function, its exponential and the vacuum vectors ``Xi_L 1``.

All series live at the base point: ``D`` is a formal scalar in the formal
variables (eta, etabar), and ``Xi_L 1`` is a formal scalar in eta.  Exact
polynomial potentials give exact (uncapped) nu-expansions; only the degree
in the formal variables is truncated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

from gmpy2 import mpq

from .potential import PotentialSpec
from .series import (
    INF,
    ZERO,
    CapError,
    ExactComplex,
    FormalScalar,
    VarGroup,
    sorted_indices,
)

__all__ = [
    "CalabiData",
    "XiVacuum",
    "calabi_expansion",
    "eta_table",
    "exp_calabi",
    "system_solution_witness",
    "xi_vacuum",
    "xi_vacuum_direct",
]


def _indices(alpha: Iterable[int]) -> tuple[int, ...]:
    return tuple(i for i, e in enumerate(alpha) for _ in range(e))


def _tensor_points(fs: FormalScalar, hol_cap: int, antihol_cap: int) -> dict:
    """Symmetric tensor values ``X_{t,KL}`` of ``sum nu^t X_{t,KL} eta^K etabar^L``.

    A monomial coefficient ``c`` of ``eta^a etabar^b`` is spread over the
    ``|K|!/a!`` and ``|L|!/b!`` tuples with those exponents.
    """
    m = fs.dim
    e0, b0 = int(VarGroup.ETA) * m, int(VarGroup.ETABAR) * m
    out = {}
    for t, jet in fs.terms.items():
        for mono, c in jet.items():
            a, b = mono[e0:e0 + m], mono[b0:b0 + m]
            na, nb = sum(a), sum(b)
            if na > hol_cap or nb > antihol_cap:
                continue
            w = 1
            for e in a + b:
                w *= math.factorial(e)
            out[(t, _indices(a), _indices(b))] = c * mpq(w, math.factorial(na) * math.factorial(nb))
    return out


@dataclass
class CalabiData:
    """``D`` and optionally ``exp(D)`` at the base point.

    Tensor values are complete for ``|K| <= hol_cap`` and ``|L| <= antihol_cap``
    at every nu order (the potential is polynomial, so nothing is cut in nu).
    """

    dim: int
    hol_cap: int
    antihol_cap: int
    d_series: FormalScalar
    d_points: dict
    e_series: FormalScalar | None = None
    e_points: dict | None = None

    def covers(self, t: int, n_hol: int, n_antihol: int) -> bool:
        return self.e_points is not None and n_hol <= self.hol_cap and n_antihol <= self.antihol_cap

    @property
    def points(self) -> dict:
        if self.e_points is None:
            raise CapError("exp_calabi has not been applied")
        return self.e_points


def calabi_expansion(pot: PotentialSpec, hol_cap: int, antihol_cap: int) -> CalabiData:
    """``D = Phi(z+eta, zbar+etabar) - Phi(z+eta, zbar) - Phi(z, zbar+etabar) + Phi(z, zbar)`` at the base point."""
    m = pot.dim
    deg = hol_cap + antihol_cap
    terms = {}
    for r in pot.orders:
        phi = pot.jet(r, deg)
        both = phi.shift(VarGroup.Z, VarGroup.ETA).shift(VarGroup.ZBAR, VarGroup.ETABAR)
        hol = phi.shift(VarGroup.Z, VarGroup.ETA)
        anti = phi.shift(VarGroup.ZBAR, VarGroup.ETABAR)
        d = (both - hol - anti + phi).set_zero(VarGroup.Z, VarGroup.ZBAR)
        if not d.is_zero():
            terms[r] = d
    fs = FormalScalar(m, deg, terms, INF)
    return CalabiData(m, hol_cap, antihol_cap, fs, _tensor_points(fs, hol_cap, antihol_cap))


def exp_calabi(cd: CalabiData) -> CalabiData:
    """Attach ``exp(D)`` and its tensor values ``E_{t,KL}``."""
    e = cd.d_series.exp() if not cd.d_series.is_zero() else FormalScalar.constant(
        cd.dim, cd.d_series.max_degree, INF)
    return CalabiData(cd.dim, cd.hol_cap, cd.antihol_cap, cd.d_series, cd.d_points, e,
                      _tensor_points(e, cd.hol_cap, cd.antihol_cap))


def eta_table(fs: FormalScalar, degree: int) -> dict[tuple[int, tuple[int, ...]], ExactComplex]:
    """``{(nu power, eta exponent): coeff}`` for a series in eta alone, eta-degree <= degree."""
    m = fs.dim
    e0 = int(VarGroup.ETA) * m
    out = {}
    for s, jet in fs.terms.items():
        if jet.trusted_degree < degree:
            raise CapError(f"series trusted only to degree {jet.trusted_degree} < {degree}")
        for mono, c in jet.items():
            if any(mono[i] for i in range(len(mono)) if not e0 <= i < e0 + m):
                raise ValueError("eta_table expects a series in eta only")
            a = mono[e0:e0 + m]
            if sum(a) <= degree:
                out[(s, tuple(a))] = c
    return out


def _shift_difference(pot: PotentialSpec, deg: int) -> FormalScalar:
    """``Phi(z+eta, zbar) - Phi(z, zbar)`` as jets in (Z, ZBAR, ETA)."""
    terms = {}
    for r in pot.orders:
        phi = pot.jet(r, deg)
        d = phi.shift(VarGroup.Z, VarGroup.ETA) - phi
        if not d.is_zero():
            terms[r] = d
    return FormalScalar(pot.dim, deg, terms, INF)


def xi_vacuum_direct(pot: PotentialSpec, max_length: int, eta_degree: int) -> dict[tuple, dict]:
    """``Xi_L 1`` for every sorted ``L`` with ``|L| <= max_length`` by iterating
    ``Xi_l = dbar_l + dbar_l(Phi(z+eta, zbar) - Phi(z, zbar))`` at the base point.

    Returns ``{L: eta_table}``.
    """
    m = pot.dim
    deg = max_length + eta_degree
    delta = _shift_difference(pot, deg).map_jets(lambda j: j.set_zero(VarGroup.Z))
    ddelta = [delta.diff(VarGroup.ZBAR, l) for l in range(m)]
    states: dict[tuple, FormalScalar] = {(): FormalScalar.constant(m, deg, INF)}
    out = {}
    for n in range(max_length + 1):
        for L in sorted_indices(m, n):
            if n:
                prev = states[L[1:]]
                l = L[0]
                states[L] = prev.diff(VarGroup.ZBAR, l) + ddelta[l] * prev
            x = states[L].map_jets(lambda j: j.set_zero(VarGroup.ZBAR))
            out[L] = eta_table(_trust(x, deg - n), eta_degree)
    return out


def _trust(fs: FormalScalar, degree: int) -> FormalScalar:
    return fs.map_jets(lambda j: j.with_trusted(min(j.trusted_degree, degree)))


def xi_from_exp(cd: CalabiData, L: tuple[int, ...], eta_degree: int) -> dict:
    """``(d/d etabar)^L exp(D)`` at ``etabar = 0``."""
    if cd.e_series is None:
        raise CapError("exp_calabi has not been applied")
    if len(L) > cd.antihol_cap or eta_degree > cd.hol_cap:
        raise CapError("Calabi data does not cover the requested index lengths")
    x = cd.e_series.diff_multi(VarGroup.ETABAR, L).map_jets(lambda j: j.set_zero(VarGroup.ETABAR))
    return eta_table(_trust(x, cd.d_series.max_degree - len(L)), eta_degree)


@dataclass
class XiVacuum:
    tables: dict[tuple, dict]
    agrees: bool
    witness: tuple | None = None


def _table_difference(a: dict, b: dict):
    for k in sorted(set(a) | set(b)):
        x, y = a.get(k, ZERO), b.get(k, ZERO)
        if x != y:
            return k, x, y
    return None


def xi_vacuum(pot: PotentialSpec, max_length: int, eta_degree: int,
              cd: CalabiData | None = None) -> XiVacuum:
    """``Xi_L 1`` for ``|L| <= max_length``, computed directly and from ``exp(D)``.

    ``agrees`` records whether both routes coincide for eta-degree <= eta_degree;
    ``witness`` is ``(L, (nu power, exponent), direct, from_exp)`` otherwise.
    """
    if cd is None or cd.e_series is None or cd.antihol_cap < max_length or cd.hol_cap < eta_degree:
        cd = exp_calabi(calabi_expansion(pot, eta_degree, max_length))
    direct = xi_vacuum_direct(pot, max_length, eta_degree)
    for L, tab in direct.items():
        diff = _table_difference(tab, xi_from_exp(cd, L, eta_degree))
        if diff is not None:
            return XiVacuum(direct, False, (L,) + diff)
    return XiVacuum(direct, True)


def system_solution_witness(pot: PotentialSpec, degree: int):
    """Check that ``g = exp(Phi(z+eta, zbar) - Phi(z, zbar))`` solves
    ``dg/d eta^k = (d_k Phi + d_k) g``; ``None`` on success, else
    ``(k, nu power, monomial)``.
    """
    m = pot.dim
    deg = degree + 1
    g = _shift_difference(pot, deg).exp()
    phi = pot.formal(deg, INF)
    for k in range(m):
        lhs = g.diff(VarGroup.ETA, k)
        rhs = phi.diff(VarGroup.Z, k) * g + g.diff(VarGroup.Z, k)
        bad = lhs.first_difference(rhs, degree=degree)
        if bad is not None:
            return (k,) + bad
    return None
