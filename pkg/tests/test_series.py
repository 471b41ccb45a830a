import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sepstar.series import (
    CapError,
    DegenerateMetricError,
    ExactComplex,
    FormalScalar,
    Jet,
    UntrustedCoefficientError,
    VarGroup,
    index_arrangements,
    jet_matrix_invert,
    matrix_inverse,
    sorted_indices,
)

rationals = st.fractions(min_value=-5, max_value=5, max_denominator=7)
complexes = st.builds(ExactComplex, rationals, rationals)
nonzero = complexes.filter(bool)

DIM, DEG = 1, 6
NV = 5 * DIM


def _exponents(positions):
    mono = [0] * NV
    for p in positions:
        mono[p] += 1
    return tuple(mono)


def monomials(max_total=3):
    return st.lists(st.integers(0, NV - 1), max_size=max_total).map(_exponents)


jets = st.dictionaries(monomials(), complexes, max_size=5).map(lambda d: Jet(DIM, DEG, d))


@given(complexes, complexes, complexes)
def test_complex_ring_laws(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert a * (b + c) == a * b + a * c
    assert a * b == b * a


@given(nonzero)
def test_complex_inverse(a):
    assert a * a.inverse() == ExactComplex(1)
    assert (a / a) == ExactComplex(1)


def test_complex_conjugate_and_power():
    i = ExactComplex(0, 1)
    assert i ** 2 == ExactComplex(-1)
    assert i.conjugate() == -i
    assert ExactComplex(Fraction(1, 2), 3).to_pair() == ["1/2", "3"]


def test_index_arrangements():
    assert index_arrangements(()) == 1
    assert index_arrangements((0, 0, 1)) == 3
    assert index_arrangements((0, 1, 2)) == 6
    assert list(sorted_indices(2, 2)) == [(0, 0), (0, 1), (1, 1)]


@given(jets, jets, jets)
@settings(max_examples=40)
def test_jet_multiplication_is_commutative_ring(f, g, h):
    assert f * g == g * f
    assert (f * g) * h == f * (g * h)
    assert f * (g + h) == f * g + f * h


@given(jets, jets, st.sampled_from(list(VarGroup)))
@settings(max_examples=40)
def test_leibniz_rule(f, g, group):
    lhs = (f * g).diff(group, 0)
    rhs = f.diff(group, 0) * g + f * g.diff(group, 0)
    # Truncation loses the top degree after differentiating.
    assert lhs.agrees_with(rhs, DEG - 1) is None


@given(jets)
@settings(max_examples=40)
def test_shift_then_zero_is_identity(f):
    g = f.shift(VarGroup.Z, VarGroup.ETA).set_zero(VarGroup.ETA)
    assert g == f.set_zero(VarGroup.ETA)


def test_shift_expands_binomially():
    z = Jet.variable(1, 4, VarGroup.Z, 0)
    got = (z ** 3).shift(VarGroup.Z, VarGroup.ETA)
    for j in range(4):
        mono = (3 - j, 0, j, 0, 0)
        assert got.coefficient(mono) == math.comb(3, j)


def test_truncation_lowers_trust():
    z = Jet.variable(1, 3, VarGroup.Z, 0)
    assert (z ** 2).is_exact()
    p = (z ** 2) * (z ** 2)
    assert p.is_zero() and p.trusted_degree == 3
    with pytest.raises(UntrustedCoefficientError):
        Jet(1, 2, {(1, 0, 0, 0, 0): 1}, trusted_degree=1).coefficient((2, 0, 0, 0, 0))
    assert z.diff(VarGroup.Z, 0).is_exact()


def test_jet_mismatch_raises():
    with pytest.raises(CapError):
        Jet.constant(1, 2) + Jet.constant(1, 3)


def test_formal_polar_part_lowers_cap():
    one = Jet.constant(1, 3)
    a = FormalScalar(1, 3, {-1: one}, 2)
    b = FormalScalar(1, 3, {0: one}, 2)
    assert (a * b).nu_cap == 1
    assert (a * a).nu_cap == 1


@given(st.lists(complexes, min_size=3, max_size=3), st.lists(complexes, min_size=3, max_size=3))
@settings(max_examples=30)
def test_exp_is_a_homomorphism(ca, cb):
    d = 4
    eta = Jet.variable(1, d, VarGroup.ETA, 0)
    etabar = Jet.variable(1, d, VarGroup.ETABAR, 0)
    a = FormalScalar(1, d, {0: eta.scale(ca[0]) + (eta * etabar).scale(ca[1]), 1: etabar.scale(ca[2])}, 3)
    b = FormalScalar(1, d, {0: etabar.scale(cb[0]), 2: (eta * eta).scale(cb[1]) + eta.scale(cb[2])}, 3)
    assert (a + b).exp().first_difference(a.exp() * b.exp()) is None


def test_exp_needs_nilpotent_argument():
    with pytest.raises(ValueError):
        FormalScalar.constant(1, 3, 2).exp()


def test_exp_of_eta():
    d = 5
    e = FormalScalar.from_jet(Jet.variable(1, d, VarGroup.ETA, 0), 0).exp()
    for n in range(d + 1):
        assert e.coefficient_at(0, (0, 0, n, 0, 0)) == ExactComplex(Fraction(1, math.factorial(n)))


def test_matrix_inverse_and_singular():
    a = [[ExactComplex(2), ExactComplex(1)], [ExactComplex(0, 1), ExactComplex(3)]]
    inv = matrix_inverse(a)
    for i in range(2):
        for j in range(2):
            s = sum((a[i][k] * inv[k][j] for k in range(2)), ExactComplex(0))
            assert s == ExactComplex(1 if i == j else 0)
    with pytest.raises(ZeroDivisionError):
        matrix_inverse([[1, 2], [2, 4]])


def test_jet_matrix_invert():
    d = 4
    z = Jet.variable(1, d, VarGroup.Z, 0)
    h = [[Jet.constant(1, d, 1) + z * z]]
    inv = jet_matrix_invert(h)[0][0]
    assert (inv * h[0][0]).agrees_with(Jet.constant(1, d, 1)) is None
    with pytest.raises(DegenerateMetricError):
        jet_matrix_invert([[z]])
