import math

import pytest

from sepstar.fock import compose, delta_op, is_inverse_pair
from sepstar.graphs import GraphSeries, GraphType, lambda_graph, u_graph_of_type, validate_graph
from sepstar.operators import (
    c_graph_series,
    e_graph_series,
    operator_C_graphs,
    operator_E_graphs,
    partition_operator,
    realize,
)
from sepstar.potential import PotentialSpec
from sepstar.series import ExactComplex


def test_lambda_operator_is_projection(quartic):
    for n in range(4):
        op = partition_operator(lambda_graph(n), quartic)
        # The bare Lambda_n operator is Delta restricted to |K| = n.
        assert op == {((0,) * n, (0,) * n): ExactComplex(1)}


def test_example_graph_operator():
    pot = PotentialSpec(1, {-1: {((1,), (1,)): 1}, 3: {((1,), (2,)): 2, ((2,), (2,)): 1}})
    graph = validate_graph([(1, 2, 3)], [(0, 1, 1), (1, 2, 2)])
    # -d dbar^2 Phi_3 at 0 is -2 * 2 = -4; g = 1.
    assert partition_operator(graph, pot) == {((0,), (0, 0)): ExactComplex(-4)}


def test_operator_on_constants_needs_empty_sink():
    pot = PotentialSpec(1, {-1: {((1,), (1,)): 1, ((1,), (2,)): 1}, 0: {((2,), (1,)): 1}})
    for g in [validate_graph([(1, 2, -1)], [(0, 1, 1), (1, 2, 2)]),
              validate_graph([(2, 1, 0)], [(0, 1, 2), (1, 2, 1)])]:
        for (K, I) in partition_operator(g, pot):
            assert len(I) == g.sink_degree and len(K) == g.source_degree


def test_flat_operators_are_identity(flat):
    ident = delta_op(1, 3)
    assert operator_C_graphs(flat, 3, 3).first_difference(ident, 3, 3) is None
    assert operator_E_graphs(flat, 3, 3).first_difference(ident, 3, 3) is None


def test_flat_two_dim_operators_are_identity():
    pot = PotentialSpec.flat(2, [[1, ExactComplex(0, 1)], [0, 2]])
    ident = delta_op(2, 2)
    assert operator_C_graphs(pot, 2, 2).first_difference(ident, 2, 2) is None
    assert operator_E_graphs(pot, 2, 2).first_difference(ident, 2, 2) is None


def test_identity_series_realizes_delta(quartic):
    op = realize(GraphSeries.identity(3), quartic)
    assert op.first_difference(delta_op(1, 3), 5, 3) is None


def test_u_type_nn0_contributes_lambda(quartic):
    g = u_graph_of_type(GraphType.of(2, 2))
    assert g == lambda_graph(2)
    e = e_graph_series(0, 2)
    assert e.coefficient(g) == math.factorial(2)


def test_graph_operators_invert(quartic):
    c = operator_C_graphs(quartic, 2, 4)
    e = operator_E_graphs(quartic, 2, 4)
    assert is_inverse_pair(c, e, 2, 2)


def test_e_fault_breaks_inversion(quartic):
    c = operator_C_graphs(quartic, 2, 4)
    e = operator_E_graphs(quartic, 2, 4)
    e.entries[(1, (0,), (0,))] = e.entries.get((1, (0,), (0,)), ExactComplex(0)) + 1
    rep = is_inverse_pair(c, e, 2, 2)
    assert not rep and rep.first_violation[0][0] == 1


def test_symbolic_series_invert():
    c = c_graph_series(1, 3)
    e = e_graph_series(1, 3)
    assert symbolic_identity(e, c, 2)
    assert symbolic_identity(c, e, 2)


def symbolic_identity(a, b, q):
    from sepstar.graphs import symbolic_compose
    prod = symbolic_compose(a, b)
    ident = GraphSeries.identity(q)
    for g, coef in prod.items():
        if g.source_degree <= q and coef != ident.coefficient(g):
            return False
    return all(prod.coefficient(lambda_graph(n)) == math.factorial(n) for n in range(q + 1))


@pytest.mark.parametrize("s_max,q_max", [(1, 1), (2, 1)])
def test_realized_series_match_operators(quartic, s_max, q_max):
    c = realize(c_graph_series(s_max, q_max), quartic)
    direct = operator_C_graphs(quartic, s_max, q_max)
    assert c.first_difference(direct, s_max, q_max) is None


def test_composition_of_realizations(quartic):
    a = c_graph_series(1, 2)
    b = e_graph_series(1, 3)
    from sepstar.graphs import symbolic_compose
    lhs = realize(symbolic_compose(a, b), quartic)
    rhs = compose(realize(a, quartic), realize(b, quartic))
    assert lhs.first_difference(rhs, 1, 2) is None
