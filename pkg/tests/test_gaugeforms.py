import itertools

import pytest
from hypothesis import given, strategies as st

from qtw import gaugeforms as gf
from qtw import twistoralg as tw
from qtw.exactcore import qpow
from qtw.ncengine import NcPoly, ZERO_POLY
from qtw.rmx import build_glq_rmatrix

pair = st.tuples(st.integers(0, 1), st.integers(0, 3), st.integers(0, 1), st.integers(0, 3))
coord = st.none() | st.tuples(st.integers(0, 1), st.integers(0, 3))
coeff = st.tuples(st.integers(-2, 2).filter(bool), st.integers(-2, 2)).map(lambda t: qpow(t[1], t[0]))


@pytest.fixture(scope="module")
def ctx(twistor):
    return gf.FormContext.from_twistor(twistor)


def two_form(ctx, terms):
    alpha = ctx.alphabet
    p = ZERO_POLY
    for (al, a, be, b), z, c in terms:
        w = alpha.gen("dz", al, a) * alpha.gen("dz", be, b) * c
        if z is not None:
            w = alpha.gen("z", *z) * w
        p = p + w
    return gf.TwoForm(ctx, {(0, 0): ctx.nf(p)}, 1)


forms = st.lists(st.tuples(pair, coord, coeff), min_size=1, max_size=4)


@given(forms)
def test_star_is_an_involution(ctx, terms):
    f = two_form(ctx, terms)
    assert gf.duality_star(gf.duality_star(f)).entries == f.entries


@given(forms)
def test_parts_add_up_and_project(ctx, terms):
    f = two_form(ctx, terms)
    sd, asd = gf.sd_part(f), gf.asd_part(f)
    assert ctx.nf(sd.entries[(0, 0)] + asd.entries[(0, 0)]) == f.entries[(0, 0)]
    assert gf.asd_part(sd).is_zero()
    assert gf.sd_part(asd).is_zero()
    assert gf.sd_part(sd).entries == sd.entries


@given(forms)
def test_star_fixes_exactly_the_self_dual_forms(ctx, terms):
    f = two_form(ctx, terms)
    star = gf.duality_star(f)
    self_dual = gf.asd_part(f).is_zero()
    assert (star.entries == f.entries) == self_dual
    assert gf.asd_part(gf.sd_part(f)).is_zero()


def test_same_greek_pairs_are_classically_anti_self_dual():
    ts = tw.build_twistor_system(None, q0=1)
    ctx = gf.FormContext.from_twistor(ts)
    for al, a, b in itertools.product(range(2), range(4), range(4)):
        f = gf.TwoForm(ctx, {(0, 0): ts.nf(ts.dz(al, a) * ts.dz(al, b))}, 1)
        assert gf.sd_part(f).is_zero()


def test_non_basis_entry_is_rejected(ctx, twistor):
    with pytest.raises(gf.FormError):
        gf.latin_pair_action(ctx, twistor.dz(0, 0), ctx.latin_projectors()[0])
    with pytest.raises(gf.FormError):
        gf.ConnectionForm(ctx, {(0, 0): twistor.z(0, 0)}, 1)


def test_zero_connection(ctx):
    zero = gf.ConnectionForm(ctx, {k: ZERO_POLY for k in itertools.product(range(2), repeat=2)}, 2)
    assert gf.curvature(zero).is_zero()
    assert gf.gauge_algebra_residual(zero, build_glq_rmatrix(2)).is_zero()
    assert not any(gf.trace_constraints(zero, [qpow(-1), qpow(1)]).values())


def test_abelian_curvature_is_exact(ctx, twistor):
    a = twistor.dz(0, 1) * twistor.z(1, 2)
    conn = gf.ConnectionForm(ctx, {(0, 0): twistor.nf(a)}, 1)
    f = gf.curvature(conn)
    assert f.entries[(0, 0)] == twistor.nf(twistor.d(a) - a * a)
    assert conn.realization()[(0, 0)]


def test_q_trace():
    m = {(0, 0): NcPoly.const(2), (1, 1): NcPoly.const(3), (0, 1): NcPoly.const(7),
         (1, 0): ZERO_POLY}
    assert gf.q_trace(m, [qpow(-1), qpow(1)]) == NcPoly.const(1) * (qpow(-1, 2) + qpow(1, 3))


def test_gauge_algebra_reading_is_checked(ctx):
    zero = gf.ConnectionForm(ctx, {k: ZERO_POLY for k in itertools.product(range(2), repeat=2)}, 2)
    with pytest.raises(ValueError):
        gf.gauge_algebra_residual(zero, build_glq_rmatrix(2), "A3")
    with pytest.raises(ValueError):
        gf.gauge_algebra_residual(zero, build_glq_rmatrix(3))
