from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sepstar.fock import (
    FockOperator,
    FockVector,
    apply,
    cmatrix_from_bidiff,
    compose,
    delta_op,
    ematrix_from_calabi,
    g_tensors,
    is_inverse_pair,
)
from sepstar.series import INF, CapError, DegenerateMetricError, ExactComplex, sorted_indices

DIM = 2
small = st.integers(-3, 3).filter(bool).map(ExactComplex)


def _sym_ops(max_len=2, nu=2):
    keys = [(s, K, I) for s in range(nu + 1) for a in range(max_len + 1) for K in sorted_indices(DIM, a)
            for b in range(min(s + a, max_len) + 1) for I in sorted_indices(DIM, b)]
    return st.dictionaries(st.sampled_from(keys), small, max_size=6).map(
        lambda d: FockOperator(DIM, d, INF, INF, 0))


def _full(op):
    """Entry lookup on unsorted index tuples."""
    def get(s, Kt, It):
        return op.entries.get((s, tuple(sorted(Kt)), tuple(sorted(It))), ExactComplex(0))
    return get


def _brute_compose(a, b, s_max, max_len, mid_len):
    ga, gb = _full(a), _full(b)
    res = {}
    for s in range(s_max + 1):
        for n in range(max_len + 1):
            for K in sorted_indices(DIM, n):
                for p in range(mid_len + 1):
                    for I in sorted_indices(DIM, p):
                        acc = ExactComplex(0)
                        for j in range(mid_len + 1):
                            for Jt in product(range(DIM), repeat=j):
                                for s1 in range(s + 1):
                                    acc = acc + ga(s1, K, Jt) * gb(s - s1, Jt, I)
                        if acc:
                            res[(s, K, I)] = acc
    return res


def test_delta_applies_as_identity():
    d = delta_op(DIM, 3)
    f = FockVector(DIM, {(0, ()): 2, (1, (0, 1)): ExactComplex(1, 1), (2, (1, 1, 1)): 5}, 4, 3)
    assert apply(d, f).equals_within(f, 4, 3)
    assert compose(d, d).first_difference(d, 10, 3) is None
    assert delta_op(1, 3).get(0, (0, 0, 0), (0, 0, 0)) == ExactComplex(1)


def test_zero_operator_kills_vector():
    z = FockOperator(DIM, {}, INF, 3)
    f = FockVector(DIM, {(0, (0,)): 1}, 2, 3)
    assert apply(z, f).entries == {}


def test_rank_one_application():
    a = FockOperator(1, {(1, (), (0, 0)): 3}, INF, 2)
    f = FockVector(1, {(0, (0, 0)): 2, (0, ()): 7}, 2, 2)
    assert apply(a, f).entries == {(1, ()): ExactComplex(6)}


@pytest.mark.parametrize("g", [[[1]], [[1, 0], [0, 2]], [[2, 1], [ExactComplex(0, 1), 3]]])
def test_g_tensors_are_inverse(g):
    m = len(g)
    low, up = g_tensors(g, 3)
    ident = delta_op(m, 3)
    assert compose(low, up).first_difference(ident, 0, 3) is None
    assert compose(up, low).first_difference(ident, 0, 3) is None


def test_g_tensor_values():
    low, up = g_tensors([[1, 0], [0, 2]], 1)
    assert low.get(-1, (1,), (1,)) == ExactComplex(2)
    assert up.get(1, (1,), (1,)) == ExactComplex(1, 0) / 2
    assert low.get(0, (), ()) == ExactComplex(1) == up.get(0, (), ())
    with pytest.raises(DegenerateMetricError):
        g_tensors([[1, 1], [1, 1]], 1)


def test_is_inverse_pair_reports_violation():
    d = delta_op(1, 2)
    assert is_inverse_pair(d, d, 3, 2)
    bad = is_inverse_pair(d, d.scale(2), 3, 2)
    assert not bad and bad.first_violation[0] == (0, (), ())


@given(_sym_ops(), _sym_ops())
@settings(max_examples=25, deadline=None)
def test_compose_matches_brute_force(a, b):
    got = compose(a, b)
    want = _brute_compose(a, b, 2, 2, 4)
    for (s, K, I), v in want.items():
        if s <= 2:
            assert got.entries.get((s, K, I), ExactComplex(0)) == v
    for (s, K, I), v in got.entries.items():
        if s <= 2:
            assert want.get((s, K, I), ExactComplex(0)) == v


@given(_sym_ops(), _sym_ops(), _sym_ops())
@settings(max_examples=20, deadline=None)
def test_compose_associative_and_support_preserving(a, b, c):
    assert compose(compose(a, b), c).first_difference(compose(a, compose(b, c)), 2, 2) is None
    for x in (a, b):
        assert x.support_ok()
    assert compose(a, b).support_ok()


def test_compose_needs_index_room():
    a = FockOperator(1, {(1, (0,), (0, 0)): 1}, INF, 1)
    b = delta_op(1, 1)
    with pytest.raises(CapError):
        compose(a, b)


class _Points:
    def __init__(self, points, ok=lambda *a: True):
        self.points = points
        self._ok = ok

    def covers(self, *a):
        return self._ok(*a)


def _wick_c(nmax):
    # m = 1, g = 1: C_r^{LK} = 1/r! at |L| = |K| = r, and E_{-r,KL} is the same.
    from math import factorial
    return _Points({(r, (0,) * r, (0,) * r): ExactComplex(1) / factorial(r) for r in range(nmax + 1)})


def _wick_e(nmax):
    from math import factorial
    return _Points({(-r, (0,) * r, (0,) * r): ExactComplex(1) / factorial(r) for r in range(nmax + 1)})


def test_anti_wick_matrices_are_delta():
    c = cmatrix_from_bidiff(_wick_c(8), [[1]], 3, 3)
    e = ematrix_from_calabi(_wick_e(8), [[1]], 3, 3)
    ident = delta_op(1, 3)
    assert c.first_difference(ident, 3, 3) is None
    assert e.first_difference(ident, 3, 3) is None


def test_pointwise_only_c_tensor():
    c = cmatrix_from_bidiff(_Points({(0, (), ()): ExactComplex(1)}), [[1]], 2, 2)
    assert c.entries == {(0, (), ()): ExactComplex(1)}


def test_unit_calabi_kills_positive_lengths():
    e = ematrix_from_calabi(_Points({(0, (), ()): ExactComplex(1)}), [[1]], 2, 2)
    assert e.entries == {(0, (), ()): ExactComplex(1)}


def test_missing_tensor_data_raises():
    with pytest.raises(CapError):
        cmatrix_from_bidiff(_Points({}, lambda *a: False), [[1]], 1, 1)
    with pytest.raises(CapError):
        ematrix_from_calabi(_Points({}, lambda *a: False), [[1]], 1, 1)


def test_perturbed_e_matches_substitution():
    # E_{s,K}^I = p! E_{s-p,KL} g^{l i}, m = 1, g = 2.
    pts = {(0, (), ()): ExactComplex(1), (-1, (0,), (0,)): ExactComplex(3), (0, (0,), (0, 0)): ExactComplex(5)}
    e = ematrix_from_calabi(_Points(pts), [[2]], 2, 1)
    assert e.get(0, (0,), (0,)) == ExactComplex(3, 0) / 2
    assert e.get(2, (0,), (0, 0)) == ExactComplex(2 * 5, 0) / 4
