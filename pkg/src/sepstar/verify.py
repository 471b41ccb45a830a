"""Verification suites: each returns a ``Report`` of named checks with witnesses."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from itertools import combinations_with_replacement, product
from typing import Mapping

from gmpy2 import mpq

from .calabi import calabi_expansion, exp_calabi, system_solution_witness, xi_vacuum
from .census import census, orbit_sizes_match, types_up_to
from .fock import FockOperator, cmatrix_from_bidiff, compose, ematrix_from_calabi, is_inverse_pair
from .graphs import (
    GraphSeries,
    _partition_keys,
    admissible_partitions,
    enumerate_by_operator_weight,
    enumerate_by_type,
    enumerate_by_weight,
    symbolic_compose,
)
from .operators import (
    _Raised,
    c_graph_series,
    e_graph_series,
    operator_C_graphs,
    operator_E_graphs,
    partition_operator,
)
from .potential import PotentialSpec, metric_from_potential, metric_point
from .serialize import format_complex
from .series import (
    I_UNIT,
    ONE,
    ZERO,
    ExactComplex,
    FormalScalar,
    Jet,
    VarGroup,
    index_arrangements,
    sorted_indices,
)
from .star import star_apply, star_coefficient_tensors

__all__ = [
    "DEFAULT_C_FAULT",
    "DEFAULT_E_FAULT",
    "CheckResult",
    "Report",
    "sample_functions",
    "verify_axioms",
    "verify_composition",
    "verify_enumeration",
    "verify_fundamental",
    "verify_inversion",
]

DEFAULT_C_FAULT = {(2, (0,), (0, 0)): 1}
DEFAULT_E_FAULT = {(1, (0,), (0,)): 1}


def _plain(x):
    """JSON-friendly form of witness values."""
    if isinstance(x, ExactComplex):
        return format_complex(x)
    if isinstance(x, bytes):
        return x.decode()
    if isinstance(x, (tuple, list)):
        return [_plain(y) for y in x]
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (int, str, bool)) or x is None:
        return x
    return str(x)


@dataclass
class CheckResult:
    name: str
    passed: bool
    witness: dict | None = None
    detail: str = ""

    def to_json(self) -> dict:
        out = {"name": self.name, "passed": self.passed}
        if self.detail:
            out["detail"] = self.detail
        if self.witness is not None:
            out["witness"] = _plain(self.witness)
        return out


@dataclass
class Report:
    suite: str
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def add(self, name: str, witness=None, detail: str = "") -> CheckResult:
        c = CheckResult(name, witness is None, witness, detail)
        self.checks.append(c)
        return c

    def to_json(self) -> dict:
        return {"suite": self.suite, "passed": self.passed,
                "checks": [c.to_json() for c in self.checks]}


# -- samples ----------------------------------------------------------------

def _mono_name(dim: int, a, b) -> str:
    parts = []
    for i, e in enumerate(a):
        if e:
            parts.append(f"z{i}" + (f"^{e}" if e > 1 else ""))
    for i, e in enumerate(b):
        if e:
            parts.append(f"zb{i}" + (f"^{e}" if e > 1 else ""))
    return "*".join(parts) or "1"


def _jet(dim: int, deg: int, terms: Mapping) -> Jet:
    coeffs = {tuple(a) + tuple(b) + (0,) * (3 * dim): c for (a, b), c in terms.items()}
    return Jet(dim, deg, coeffs)


def _exponents(dim: int, degree: int):
    for n in range(degree + 1):
        for idx in combinations_with_replacement(range(2 * dim), n):
            e = [idx.count(i) for i in range(2 * dim)]
            yield tuple(e[:dim]), tuple(e[dim:])


def sample_functions(dim: int, jet_degree: int, *, monomial_degree: int = 2,
                     random_count: int = 2, random_degree: int = 3, seed: int = 0):
    """Monomials up to ``monomial_degree`` and seeded random polynomials.

    Returns ``(general, holomorphic, antiholomorphic)`` lists of (name, jet).
    """
    rng = random.Random(seed)
    general, hol, anti = [], [], []
    for a, b in _exponents(dim, monomial_degree):
        j = _jet(dim, jet_degree, {(a, b): 1})
        name = _mono_name(dim, a, b)
        general.append((name, j))
        if sum(b) == 0 and sum(a) > 0:
            hol.append((name, j))
        if sum(a) == 0 and sum(b) > 0:
            anti.append((name, j))

    def rand_poly(kind):
        terms = {}
        for a, b in _exponents(dim, random_degree):
            if kind == "hol" and sum(b) or kind == "anti" and sum(a):
                continue
            if rng.random() < 0.5:
                terms[(a, b)] = ExactComplex(mpq(rng.randint(-5, 5), rng.randint(1, 4)),
                                             mpq(rng.randint(-3, 3), rng.randint(1, 4)))
        return _jet(dim, jet_degree, terms)

    for i in range(random_count):
        general.append((f"random[{seed}:{i}]", rand_poly("any")))
        hol.append((f"random_hol[{seed}:{i}]", rand_poly("hol")))
        anti.append((f"random_anti[{seed}:{i}]", rand_poly("anti")))
    return general, hol, anti


def _mono_witness(dim: int, mono) -> dict:
    return {"zdeg": list(mono[:dim]), "zbardeg": list(mono[dim:2 * dim])}


def _compare(fa: FormalScalar, fb: FormalScalar, nu_cap: int):
    bad = fa.first_difference(fb, nu_cap)
    if bad is None:
        return None
    s, mono = bad
    return s, mono, fa[s].coefficient(mono), fb[s].coefficient(mono)


# -- axioms -----------------------------------------------------------------

def poisson_bracket(f: Jet, g: Jet, g_upper) -> Jet:
    """``{f, g} = i g^{lk} (d_k f dbar_l g - d_k g dbar_l f)``."""
    m = f.dim
    out = Jet.zero(m, f.max_degree)
    for l in range(m):
        for k in range(m):
            t = f.diff(VarGroup.Z, k) * g.diff(VarGroup.ZBAR, l) - g.diff(VarGroup.Z, k) * f.diff(VarGroup.ZBAR, l)
            out = out + g_upper[l][k] * t
    return out.scale(I_UNIT)


def verify_axioms(pot: PotentialSpec, nu_order: int = 3, jet_degree: int = 12, *, seed: int = 0,
                  random_count: int = 2, fault: Mapping | None = None) -> Report:
    """Unit, separation of variables, the Poisson condition and associativity mod nu^(N+1)."""
    rep = Report("axioms")
    N, m = nu_order, pot.dim
    metric = metric_from_potential(pot, jet_degree)
    data = star_coefficient_tensors(pot, N, jet_degree=jet_degree, metric=metric, fault=fault)
    general, hol, anti = sample_functions(m, jet_degree, seed=seed, random_count=random_count)
    one = Jet.constant(m, jet_degree, 1)

    def star(f, g):
        return star_apply(data, f, g).truncate_nu(N)

    def pointwise(f):
        return FormalScalar.from_jet(f, N)

    # unit
    wit = None
    for name, f in general:
        for label, res in (("f*1", star(f, one)), ("1*f", star(one, f))):
            d = _compare(res, pointwise(f), N)
            if d:
                wit = {"axiom": "unit", "case": label, "f": name, "nu": d[0],
                       "monomial": _mono_witness(m, d[1]), "lhs": d[2], "rhs": d[3]}
                break
        if wit:
            break
    rep.add("unit", wit)

    # separation of variables
    wit = None
    for (an, a), (fn, f) in product(hol, general):
        d = _compare(star(a, f), pointwise(a * f), N)
        if d:
            wit = {"axiom": "separation", "case": "a*f", "a": an, "f": fn, "nu": d[0],
                   "monomial": _mono_witness(m, d[1]), "lhs": d[2], "rhs": d[3]}
            break
    if wit is None:
        for (fn, f), (bn, b) in product(general, anti):
            d = _compare(star(f, b), pointwise(f * b), N)
            if d:
                wit = {"axiom": "separation", "case": "f*b", "f": fn, "b": bn, "nu": d[0],
                       "monomial": _mono_witness(m, d[1]), "lhs": d[2], "rhs": d[3]}
                break
    rep.add("separation", wit)

    # Poisson condition
    wit = None
    if N >= 1:
        for (fn, f), (gn, g) in product(general, repeat=2):
            c1 = star_apply(data, f, g)[1] - star_apply(data, g, f)[1]
            pb = poisson_bracket(f, g, metric.g_upper)
            bad = c1.agrees_with(pb.scale(I_UNIT))
            if bad is not None:
                wit = {"axiom": "poisson", "f": fn, "g": gn, "monomial": _mono_witness(m, bad),
                       "lhs": c1.coefficient(bad), "rhs": (pb.scale(I_UNIT)).coefficient(bad)}
                break
    rep.add("poisson", wit)

    # associativity over all triples of nonconstant monomials and the random samples
    wit = None
    monos = [x for x in general if x[0] != "1" and not x[0].startswith("random")]
    if len(monos) > 6:
        monos = [x for x in monos if x[1].degree() <= 1]
    rands = [x for x in general if x[0].startswith("random")]
    triples = list(product(monos, repeat=3)) + [tuple(rands[i % len(rands)] for i in range(k, k + 3))
                                                  for k in range(len(rands))]
    cache: dict = {}

    def star_c(x, y):
        key = (x[0], y[0])
        if key not in cache:
            cache[key] = star(x[1], y[1])
        return cache[key]

    for x, y, z in triples:
        left = star_apply(data, star_c(x, y), z[1]).truncate_nu(N)
        right = star_apply(data, x[1], star_c(y, z)).truncate_nu(N)
        d = _compare(left, right, N)
        if d:
            wit = {"axiom": "associativity", "f": x[0], "g": y[0], "h": z[0], "nu": d[0],
                   "monomial": _mono_witness(m, d[1]), "lhs": d[2], "rhs": d[3]}
            break
    rep.add("associativity", wit, f"{len(triples)} triples")
    return rep


# -- inversion --------------------------------------------------------------

def _with_fault(op: FockOperator, fault: Mapping | None) -> FockOperator:
    if not fault:
        return op
    ent = dict(op.entries)
    for (s, K, I), v in fault.items():
        key = (s, tuple(sorted(K)), tuple(sorted(I)))
        ent[key] = ent.get(key, ZERO) + v
    return FockOperator(op.dim, ent, op.nu_cap, op.index_cap, op.min_order)


def _entry_witness(diff) -> dict | None:
    if diff is None:
        return None
    (s, K, I), a, b = diff
    return {"s": s, "K": list(K), "I": list(I), "actual": a, "expected": b}


def _inverse_witness(res) -> dict | None:
    if res.passed:
        return None
    w = _entry_witness(res.first_violation)
    w["order"] = res.order
    return w


def verify_inversion(pot: PotentialSpec, nu_order: int = 3, index_cap: int = 3, *,
                     symbolic_caps: tuple[int, int] | None = (2, 2),
                     fault: Mapping | None = None) -> Report:
    """C and E are inverse, by graphs, by matrices, and symbolically.

    Operators are built at the production index cap ``index_cap + nu_order``
    so compositions are exact on the check caps.  ``fault`` adds values to
    entries ``(s, K, I)`` of the graph-built E.
    """
    rep = Report("inversion")
    N, L = nu_order, index_cap
    P = L + N
    g_point = metric_point(pot)[0]
    C = operator_C_graphs(pot, N, P)
    E = _with_fault(operator_E_graphs(pot, N, P), fault)
    rep.add("graph_operators_inverse", _inverse_witness(is_inverse_pair(C, E, N, L)))

    data = star_coefficient_tensors(pot, N + P, source_cap=P, operator_weight_cap=N)
    Cm = cmatrix_from_bidiff(data, g_point, N, P)
    cd = exp_calabi(calabi_expansion(pot, P, N + P))
    Em = ematrix_from_calabi(cd, g_point, N, P)
    rep.add("matrix_operators_inverse", _inverse_witness(is_inverse_pair(Cm, Em, N, L)))
    rep.add("C_graphs_equals_bidifferential", _entry_witness(C.first_difference(Cm, N, P)))
    rep.add("E_graphs_equals_calabi", _entry_witness(E.first_difference(Em, N, P)))

    if symbolic_caps is not None:
        s, q = symbolic_caps
        ident = GraphSeries.identity(q)
        for name, a, b in (("EC", e_graph_series(s, q), c_graph_series(s, q + s)),
                           ("CE", c_graph_series(s, q), e_graph_series(s, q + s))):
            diff = symbolic_compose(a, b).first_difference(ident)
            wit = None if diff is None else {"graph": diff[0].to_json(), "coefficient": str(diff[1]),
                                             "expected": str(diff[2])}
            rep.add(f"symbolic_{name}_identity", wit, f"operator weight <= {s}, source degree <= {q}")
    return rep


# -- fundamental identity ---------------------------------------------------

def _eta_monomial(dim: int, K) -> tuple[int, ...]:
    return tuple(K.count(i) for i in range(dim))


def verify_fundamental(pot: PotentialSpec, nu_order: int = 3, degree: int | None = None, *,
                       fault: Mapping | None = None) -> Report:
    """``C^{LK} (Xi_L 1) zeta_K = exp(eta zeta)`` and its two corollaries.

    The identity is compared coefficientwise for nu powers ``<= nu_order`` and
    total eta and zeta degree ``<= degree`` (default ``nu_order``).  ``fault``
    is added to the star product tensors ``C_r^{LK}`` keyed ``(r, L, K)``.
    """
    rep = Report("fundamental")
    N = nu_order
    d = N if degree is None else degree
    m = pot.dim
    Lmax = N + d
    cd = exp_calabi(calabi_expansion(pot, d, Lmax))
    xv = xi_vacuum(pot, Lmax, d, cd)
    rep.add("xi_two_routes", None if xv.agrees else {"L": list(xv.witness[0]), "key": xv.witness[1],
                                                      "direct": xv.witness[2], "from_exp": xv.witness[3]})
    bad = system_solution_witness(pot, d + 2)
    rep.add("shifted_exponential_solves_system",
            None if bad is None else {"k": bad[0], "nu": bad[1], "monomial": list(bad[2])})
    xi = xv.tables
    data = star_coefficient_tensors(pot, Lmax, source_cap=Lmax, sink_cap=d, fault=fault)

    def contract_C(K) -> dict:
        """``sum_L arr(L) C^{LK}(nu) Xi_L 1`` as an eta table, nu <= N."""
        out: dict = {}
        for (r, L, K2), c in data.points.items():
            if K2 != K:
                continue
            w = c * index_arrangements(L)
            for (t, a), x in xi[L].items():
                if r + t <= N:
                    key = (r + t, a)
                    out[key] = out.get(key, ZERO) + w * x
        return {k: v for k, v in out.items() if v}

    def first_mismatch(got: dict, want: dict):
        for k in sorted(set(got) | set(want)):
            if got.get(k, ZERO) != want.get(k, ZERO):
                return k, got.get(k, ZERO), want.get(k, ZERO)
        return None

    fund = xieta = None
    for n in range(d + 1):
        for K in sorted_indices(m, n):
            base = contract_C(K)
            alpha = _eta_monomial(m, K)
            afact = math.prod(math.factorial(e) for e in alpha)
            got = {k: v * index_arrangements(K) for k, v in base.items()}
            want = {(0, alpha): ExactComplex(mpq(1, afact))}
            if fund is None and (bad := first_mismatch(got, want)):
                fund = {"zeta_index": list(K), "nu": bad[0][0], "eta": list(bad[0][1]),
                        "actual": bad[1], "expected": bad[2]}
            got = {k: v * math.factorial(n) for k, v in base.items()}
            if xieta is None and (bad := first_mismatch(got, {(0, alpha): ONE})):
                xieta = {"I": list(K), "nu": bad[0][0], "eta": list(bad[0][1]),
                         "actual": bad[1], "expected": bad[2]}
    rep.add("fundamental_identity", fund, f"nu <= {N}, degree <= {d}")
    rep.add("xi_eta", xieta)

    etaxi = None
    for n in range(Lmax + 1):
        for L in sorted_indices(m, n):
            got: dict = {}
            for (t, K, L2), e in cd.e_points.items():
                if L2 != L or t > N:
                    continue
                key = (t, _eta_monomial(m, K))
                got[key] = got.get(key, ZERO) + e * index_arrangements(K) * math.factorial(n)
            got = {k: v for k, v in got.items() if v}
            want = {k: v for k, v in xi[L].items() if k[0] <= N}
            if etaxi is None and (bad := first_mismatch(got, want)):
                etaxi = {"L": list(L), "nu": bad[0][0], "eta": list(bad[0][1]),
                         "actual": bad[1], "expected": bad[2]}
    rep.add("eta_xi", etaxi)
    return rep


# -- composition formula ----------------------------------------------------

def verify_composition(pot: PotentialSpec, operator_weight: int = 2, source_degree: int = 2) -> Report:
    """``realize(A B) = realize(A) realize(B)`` for every pair of single-class series."""
    rep = Report("composition")
    graphs = [g for q in range(source_degree + 1) for s in range(operator_weight + 1)
              for g in enumerate_by_operator_weight(s, q)]
    raised = _Raised(pot, None)
    blocks: dict[bytes, FockOperator] = {}

    def realized(g) -> FockOperator:
        if g.key not in blocks:
            w = mpq(1, g.aut_order)
            ent = {(g.operator_weight, K, I): v * w
                   for (K, I), v in partition_operator(g, pot, _raised=raised).items()}
            blocks[g.key] = FockOperator(pot.dim, ent, math.inf, math.inf, 0)
        return blocks[g.key]

    # Each target graph is visited once; its admissible partitions feed the pairs they split into.
    by_key = {g.key: g for g in graphs}
    lhs: dict[tuple[bytes, bytes], FockOperator] = {}
    targets = {g1.graph_type + g2.graph_type for g1 in graphs for g2 in graphs
               if g1.sink_degree == g2.source_degree}
    for t in sorted(targets, key=lambda t: (t.weight, t.sink_degree, t.source_degree, t.multiplicity)):
        for g in enumerate_by_type(t):
            for ka, kb, n in _partition_keys(g):
                if ka in by_key and kb in by_key:
                    term = realized(g).scale(mpq(1, math.factorial(n)))
                    lhs[(ka, kb)] = lhs[(ka, kb)] + term if (ka, kb) in lhs else term
    empty = FockOperator(pot.dim, {}, math.inf, math.inf, 0)
    pairs = 0
    wit = None
    for g1 in graphs:
        for g2 in graphs:
            if g1.sink_degree != g2.source_degree:
                continue
            pairs += 1
            rhs = compose(realized(g1), realized(g2))
            diff = lhs.get((g1.key, g2.key), empty).first_difference(rhs, math.inf, math.inf)
            if diff is not None:
                wit = {"front": g1.to_json(), "back": g2.to_json(), **_entry_witness(diff)}
                break
        if wit:
            break
    rep.add("composition_formula", wit, f"{pairs} composable pairs")
    return rep


# -- enumeration ------------------------------------------------------------

def verify_enumeration(max_weight: int = 2, oracle_operator_weight: int = 2,
                       oracle_source_degree: int = 2, cancellation_weight: int = 3) -> Report:
    """Class counts and orbit sizes against the wiring census, and the sign cancellation."""
    rep = Report("enumeration")
    counts = {w: 0 for w in range(max_weight + 1)}
    for g in enumerate_by_weight(max_weight):
        counts[g.weight] += 1
    oracle_counts = {w: 0 for w in range(max_weight + 1)}
    wit = None
    for gt in types_up_to(max(oracle_operator_weight, max_weight), max(oracle_source_degree, max_weight)):
        in_orbit_range = gt.operator_weight <= oracle_operator_weight and gt.source_degree <= oracle_source_degree
        in_count_range = gt.weight <= max_weight
        if not (in_orbit_range or in_count_range):
            continue
        wc = census(gt)
        ours = enumerate_by_type(gt)
        if in_count_range:
            oracle_counts[gt.weight] += len(wc)
        if in_orbit_range and wit is None:
            total = sum(mpq(gt.pre_feynman_order(), g.aut_order) for g in ours)
            bad = orbit_sizes_match(wc)
            if len(wc) != len(ours) or total != wc.total or bad:
                wit = {"type": str(gt), "classes": len(ours), "oracle_classes": len(wc),
                       "orbit_sum": str(total), "labeled_wirings": wc.total}
    rep.add("class_counts", None if counts == oracle_counts else
            {"enumerated": counts, "oracle": oracle_counts}, f"counts by weight: {counts}")
    rep.add("orbit_identity", wit,
            f"operator weight <= {oracle_operator_weight}, source degree <= {oracle_source_degree}")

    wit = None
    for g in enumerate_by_weight(cancellation_weight):
        if g.R == 0:
            continue
        total = sum((-1) ** p.front_graph.R for p in admissible_partitions(g) if p.front_graph.in_u)
        if total:
            wit = {"graph": g.to_json(), "signed_sum": total}
            break
    rep.add("sign_cancellation", wit, f"weight <= {cancellation_weight}")
    return rep
