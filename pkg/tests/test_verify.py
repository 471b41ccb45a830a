import json

from sepstar import verify as V
from sepstar.graphs import lambda_graph
from sepstar.series import ExactComplex


def test_report_structure():
    rep = V.Report("demo")
    rep.add("ok")
    rep.add("bad", {"where": (1, ExactComplex(2, -1)), "key": b"k"}, "detail")
    assert not rep.passed and [c.name for c in rep.failures()] == ["bad"]
    data = rep.to_json()
    assert json.loads(json.dumps(data)) == {
        "suite": "demo", "passed": False,
        "checks": [{"name": "ok", "passed": True},
                   {"name": "bad", "passed": False, "detail": "detail",
                    "witness": {"where": [1, ["2", "-1"]], "key": "k"}}]}


def test_sample_functions_are_deterministic():
    a = V.sample_functions(1, 8, seed=3)
    b = V.sample_functions(1, 8, seed=3)
    assert [str(x) for x in a] == [str(x) for x in b]


def test_axioms_fault_witness(quartic):
    rep = V.verify_axioms(quartic, 2, 10, fault=V.DEFAULT_C_FAULT)
    bad = {c.name for c in rep.failures()}
    assert "associativity" in bad
    assert all(c.witness for c in rep.failures())


def test_inversion_fault_reports_entry(quartic):
    rep = V.verify_inversion(quartic, 2, 2, fault=V.DEFAULT_E_FAULT)
    assert not rep.passed
    wit = next(c for c in rep.failures() if c.name == "graph_operators_inverse").witness
    assert wit is not None


def test_fundamental_passes_on_quartic(quartic):
    rep = V.verify_fundamental(quartic, 2)
    assert rep.passed, rep.to_json()


def test_fundamental_fault(quartic):
    assert not V.verify_fundamental(quartic, 2, fault=V.DEFAULT_C_FAULT).passed


def test_composition_small_bounds(quartic):
    rep = V.verify_composition(quartic, 1, 2)
    assert rep.passed and rep.checks[0].detail == "161 composable pairs"


def test_composition_detects_tampered_realization(quartic, monkeypatch):
    real = V.partition_operator
    lam1 = lambda_graph(1).key

    def tampered(g, pot, **kw):
        out = real(g, pot, **kw)
        if g.key == lam1:
            out = {k: v + 1 for k, v in out.items()}
        return out

    monkeypatch.setattr(V, "partition_operator", tampered)
    rep = V.verify_composition(quartic, 1, 1)
    assert not rep.passed and rep.checks[0].witness is not None


def test_enumeration_report_small():
    rep = V.verify_enumeration(max_weight=1, oracle_operator_weight=1, oracle_source_degree=1,
                               cancellation_weight=2)
    assert rep.passed
    assert [c.name for c in rep.checks] == ["class_counts", "orbit_identity", "sign_cancellation"]
