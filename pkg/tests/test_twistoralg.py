import itertools
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from qtw.exactcore import ZERO
from qtw.instantons import laplace_residual, scan_leibniz_twist
from qtw.ncengine import NcPoly, ZERO_POLY, exterior_d
from qtw import twistoralg as tw

G2, L4 = range(2), range(4)


def test_relations_are_sound_and_confluent(twistor):
    assert not any(tw.soundness(twistor).values())
    assert tw.confluence(twistor).confluent


def test_z_overlap_count_matches_brute_force(twistor):
    alpha = twistor.alphabet
    z = [alpha.id("z", al, a) for al, a in itertools.product(G2, L4)]
    heads = set(twistor.rs.rules)
    brute = sum(1 for g1, g2, g3 in itertools.product(z, repeat=3)
                if (g1, g2) in heads and (g2, g3) in heads)
    assert tw.confluence(twistor, ["z"]).overlaps == brute


def test_cubic_identity_and_yy(twistor):
    assert not any(tw.eq10_residuals(twistor).values())
    assert not any(tw.projection_residuals(twistor).values())
    assert not tw.yy_residual(twistor)


def test_y_entries_are_independent(twistor):
    # the six y_ab with a < b span a 6-dimensional space
    ys = [twistor.y(a, b) for a, b in tw.PAIRS]
    words = sorted({w for y in ys for w in y.terms})
    m = [[y.terms.get(w, ZERO).evaluate(Fraction(3, 2)) for y in ys] for w in words]
    rank, rows = 0, [r[:] for r in m]
    for col in range(6):
        piv = next((i for i in range(rank, len(rows)) if rows[i][col]), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        for i in range(len(rows)):
            if i != rank and rows[i][col]:
                f = rows[i][col] / rows[rank][col]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[rank])]
        rank += 1
    assert rank == 6


def test_y_classical_antisymmetry():
    ts = tw.build_twistor_system(None, q0=1)
    for a, c in itertools.product(L4, L4):
        assert ts.nf(ts.y(a, c) + ts.y(c, a)) == ZERO_POLY


def test_partial_on_coordinates(twistor):
    ts1 = tw.build_twistor_system(None, q0=1)
    for be, b, a, al in itertools.product(G2, L4, L4, G2):
        v = twistor.partial(twistor.z(be, b), a, al)
        assert bool(v) == ((a, al) == (b, be))
        v1 = ts1.partial(ts1.z(be, b), a, al)
        assert v1 == (NcPoly.const(1) if (a, al) == (b, be) else ZERO_POLY)
    assert twistor.partial(NcPoly.const(1), 0, 0) == ZERO_POLY


zdz = st.lists(st.tuples(st.sampled_from(["z", "dz"]), st.integers(0, 1), st.integers(0, 3)),
               min_size=1, max_size=3)


@given(st.lists(st.tuples(zdz, st.integers(-2, 2).filter(bool)), min_size=1, max_size=3))
def test_d_is_well_defined_on_the_quotient(twistor, terms):
    alpha = twistor.alphabet
    p = ZERO_POLY
    for word, c in terms:
        w = NcPoly.const(c)
        for name, al, a in word:
            w = w * alpha.gen(name, al, a)
        p = p + w
    nf = twistor.nf
    assert nf(exterior_d(nf(p), alpha)) == nf(exterior_d(p, alpha))
    assert nf(exterior_d(exterior_d(p, alpha), alpha)) == ZERO_POLY


def test_inverse_generators(bsector1):
    ts = bsector1
    assert ts.nf(ts.X(0) * ts.Xinv(0)) == NcPoly.const(1)
    assert not any(tw.soundness(ts).values())
    assert not ts.clear_inverses(ts.nf(ts.Xinv(0) * ts.X(0) - NcPoly.const(1)))
    assert not tw.bb_residual(ts)


def test_substitution_same_label(bsector1):
    assert not any(tw.substitution_check(bsector1).values())


def test_braided_model_is_the_only_consistent_exchange():
    rows = tw.scan_b_exchange()
    good = [r["model"].exchange for r in rows if r.get("confluent")
            and all(r["residual_zero"].values())]
    assert good == ["braided"]


def test_laplacian_of_phi(bsector1):
    assert not any(laplace_residual(bsector1).values())
    assert not any(laplace_residual(bsector1, bsector1.z(0, 0)).values())


def test_leibniz_twist_is_unique():
    scan = scan_leibniz_twist()
    assert [m for m, ok in scan.items() if ok] == [2]


def test_bsector_validation():
    with pytest.raises(ValueError):
        tw.BSector(0)
    with pytest.raises(ValueError):
        tw.BSector(1, exchange="teleport")
