import pytest

from qtw import instantons as inst
from qtw.ncengine import NcPoly, RewriteError


def test_report_semantics():
    rep = inst.VerificationReport("demo")
    assert not rep.passed
    rep.add("zero", "", lambda: {"a": NcPoly(), "b": [NcPoly()]})
    assert rep.passed

    def boom():
        raise RewriteError("no rule")

    res = rep.add("err", "", boom)
    assert isinstance(res, inst.CheckError) and str(res).startswith("error:")
    assert not rep.passed
    assert [c.passed for c in rep.checks] == [True, False]


def test_thooft_self_duality(thooft):
    rep = inst.thooft_selfduality_check(thooft)
    assert rep.passed, [c.id for c in rep.checks if not c.passed]
    assert "control" in rep.checks[1].id


def test_thooft_traces(thooft):
    assert not any(inst.thooft_trace_checks(thooft).values())
    scan = inst.scan_trace_weights(thooft)
    assert [k for k, ok in scan.items() if ok] == [inst.TRACE_WEIGHTS]


def test_thooft_gauge_algebra(thooft):
    assert not any(inst.eq16_residual(thooft).values())
    assert inst.scan_eq16(thooft) == {"A1": True, "A2": False}


def test_prefactor_is_unique():
    scan = inst.scan_prefactor()
    assert [m for m, ok in scan.items() if ok] == [inst.A_PREFACTOR_EXP]


def test_connection_needs_one_instanton():
    cfg = inst.build_thooft(2)
    assert cfg.connection is None
    with pytest.raises(ValueError):
        inst.thooft_connection(cfg.ts)


@pytest.mark.parametrize("size", inst.ADHM_SIZES)
def test_adhm(size):
    cfg = inst.build_adhm(*size)
    assert cfg.gram_is_eps
    for rep in (inst.adhm_relations_check(cfg, diagnostics=False),
                inst.adhm_completeness_check(cfg),
                inst.adhm_curvature_check(cfg)):
        assert rep.passed, [c.id for c in rep.checks if not c.passed]


def test_adhm_control_has_generic_gram():
    cfg = inst.build_adhm(1, 1, projector="-")
    assert not cfg.gram_is_eps
    f = inst._curvature_checks(cfg, inst.VerificationReport("x"))
    assert not inst.asd_part(f).is_zero()


def test_adhm_exchange_weights():
    scan = inst.scan_adhm_weights()
    assert {k for k, ok in scan.items() if ok} == {k for k in scan if sum(k) == 0}


def test_g_is_not_q_central(adhm11):
    assert inst.g_centrality(adhm11) == {"z": [], "dz": [], "bA": [], "bt": []}


def test_adhm_rejects_bad_input():
    with pytest.raises(ValueError):
        inst.build_adhm(3, 2)
    with pytest.raises(ValueError):
        inst.build_adhm(1, 1, projector="+-")
