import itertools
from fractions import Fraction
from math import comb

import pytest
from hypothesis import given, strategies as st

from qtw.exactcore import ONE, qpow
from qtw.ncengine import (
    CLOSED, Alphabet, CentralityError, Family, NcPoly, NonInvertiblePivot, RewriteError,
    StepLimitExceeded, UndeclaredDifferential, ZERO_POLY, adjoin_inverse, build_rtt_system,
    check_local_confluence, compile_rules, complete, exterior_d, form_degree,
)


def free_alphabet(*names):
    # names outside the engine precedence table order alphabetically
    return Alphabet([Family(n, ()) for n in names])


def graded_alphabet():
    return Alphabet([
        Family("x", (2,), d="dx"), Family("y", (), d="dy"),
        Family("dx", (2,), parity=1, d=CLOSED), Family("dy", (), parity=1, d=CLOSED),
    ])


GRADED = graded_alphabet()
small_coeffs = st.integers(-3, 3).map(lambda k: qpow(k % 3 - 1, k))


def polys(alpha, max_len=3):
    words = st.lists(st.integers(0, len(alpha.gens) - 1), max_size=max_len).map(tuple)
    return st.dictionaries(words, small_coeffs, max_size=4).map(NcPoly)


def homogeneous(alpha, max_len=3):
    return polys(alpha, max_len).map(
        lambda p: NcPoly({w: c for w, c in p.terms.items() if alpha.word_parity(w) % 2 == 0}))


@given(polys(GRADED), polys(GRADED), polys(GRADED))
def test_algebra_axioms(a, b, c):
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert (a + b) * c == a * c + b * c
    assert a - a == ZERO_POLY


@given(polys(GRADED, 4))
def test_d_squares_to_zero(p):
    assert exterior_d(exterior_d(p, GRADED), GRADED) == ZERO_POLY


@given(polys(GRADED), polys(GRADED))
def test_graded_leibniz(a, b):
    for par in (0, 1):
        a_h = NcPoly({w: c for w, c in a.terms.items() if GRADED.word_parity(w) % 2 == par})
        lhs = exterior_d(a_h * b, GRADED)
        rhs = exterior_d(a_h, GRADED) * b + a_h * exterior_d(b, GRADED) * (-1) ** par
        assert lhs == rhs


def test_d_of_generators():
    x0 = GRADED.gen("x", 0)
    assert exterior_d(x0, GRADED) == GRADED.gen("dx", 0)
    assert exterior_d(GRADED.gen("dy"), GRADED) == ZERO_POLY
    assert form_degree(GRADED.gen("dx", 1) * x0 * GRADED.gen("dy"), GRADED) == {2}


def test_undeclared_differential():
    alpha = Alphabet([Family("x", ())])
    with pytest.raises(UndeclaredDifferential):
        exterior_d(alpha.gen("x"), alpha)


def test_alphabet_errors():
    alpha = free_alphabet("x")
    with pytest.raises(KeyError):
        alpha.id("nope")
    with pytest.raises(IndexError):
        Alphabet([Family("x", (2,))]).id("x", 5)
    with pytest.raises(ValueError):
        alpha.add_family(Family("x", (3,)))


def test_orientation_and_pivot_checks():
    alpha = free_alphabet("e", "f")
    x, y = alpha.gen("e"), alpha.gen("f")
    rs = compile_rules([y * x - x * y * qpow(1)], alpha)
    assert rs.normal_form(y * y * x) == x * y * y * qpow(2)
    ok = compile_rules([(y * x) * (qpow(0) + qpow(2)) - x * y], alpha)
    assert ok.normal_form(y * x) == x * y * (qpow(0) + qpow(2)).inverse()
    with pytest.raises(NonInvertiblePivot):
        compile_rules([(y * x) * (qpow(0) + qpow(1)) - x * y], alpha)
    with pytest.raises(RewriteError):
        compile_rules([x - y], alpha)


def test_step_limit():
    alpha = free_alphabet("e", "f")
    x, y = alpha.gen("e"), alpha.gen("f")
    rs = compile_rules([y * x - x * y], alpha, max_steps=3)
    with pytest.raises(StepLimitExceeded):
        rs.normal_form(y * y * y * x * x)


def test_adjoin_inverse():
    alpha = free_alphabet("a", "b")
    a, b = alpha.gen("a"), alpha.gen("b")
    rs = compile_rules([b * a - a * b * qpow(-1)], alpha)  # a b = q b a
    with pytest.raises(CentralityError):
        adjoin_inverse(rs, "a", {"b": -1})
    rs2 = adjoin_inverse(rs, "a", {"b": 1})
    ai = alpha.gen("ainv")
    assert rs2.normal_form(a * ai) == NcPoly.const(1)
    assert rs2.normal_form(ai * a) == NcPoly.const(1)
    assert rs2.normal_form(ai * b - b * ai * qpow(-1)) == ZERO_POLY
    assert check_local_confluence(rs2).confluent


# -- ideal membership against an independent linear-algebra oracle ----------

def _rank(vectors):
    """Rank of Fraction vectors given as dicts (plain Gaussian elimination)."""
    rows = [dict(v) for v in vectors if v]
    basis: dict = {}
    for row in rows:
        while row:
            piv = max(row)
            if piv not in basis:
                basis[piv] = row
                break
            f = row[piv] / basis[piv][piv]
            for k, v in basis[piv].items():
                s = row.get(k, 0) - f * v
                if s:
                    row[k] = s
                else:
                    row.pop(k, None)
    return len(basis)


def quotient_dim(alpha, relations, deg, q0=Fraction(3, 2)):
    n = len(alpha.gens)
    span = []
    for rel in relations:
        rdeg = len(next(iter(rel.terms)))
        for left in range(deg - rdeg + 1):
            for a in itertools.product(range(n), repeat=left):
                for b in itertools.product(range(n), repeat=deg - rdeg - left):
                    span.append({a + w + b: c.evaluate(q0) for w, c in rel.terms.items()})
    return n ** deg - _rank(span)


def normal_count(rs, deg):
    n = len(rs.alphabet.gens)
    return sum(1 for w in itertools.product(range(n), repeat=deg) if not rs.is_reducible(w))


quadratic = st.lists(
    st.dictionaries(st.sampled_from(list(itertools.product(range(3), repeat=2))),
                    st.integers(-2, 2).filter(bool), min_size=1, max_size=3),
    min_size=1, max_size=3)


@given(quadratic)
def test_completion_decides_membership(rels_raw):
    alpha = free_alphabet("e", "f", "h")
    rels = [NcPoly({w: ONE * c for w, c in r.items()}) for r in rels_raw]
    rs = complete(compile_rules(rels, alpha), 4)
    assert check_local_confluence(rs, max_len=4).confluent
    for deg in (2, 3, 4):
        assert normal_count(rs, deg) == quotient_dim(alpha, rels, deg)


def test_completion_rejects_inhomogeneous():
    alpha = free_alphabet("e", "f")
    x, y = alpha.gen("e"), alpha.gen("f")
    rs = compile_rules([y * x - x], alpha)
    with pytest.raises(RewriteError):
        complete(rs, 3)


@pytest.mark.parametrize("q0", [None, 2, Fraction(5, 7)])
def test_rtt_pbw(q0):
    rs = build_rtt_system(2, q0)
    assert len(rs.rules) == 6
    assert check_local_confluence(rs).confluent
    for deg in range(1, 5):
        assert normal_count(rs, deg) == comb(deg + 3, 3)


def test_rtt_gl3_is_confluent():
    rs = build_rtt_system(3)
    assert len(rs.rules) == 36
    assert check_local_confluence(rs).confluent


def test_rtt_quantum_plane_relations():
    rs = build_rtt_system(2)
    alpha = rs.alphabet
    a, b, c, d = (alpha.gen("T", i, j) for i, j in itertools.product(range(2), repeat=2))
    # exactly one of the two determinant candidates is central
    central = []
    for s in (1, -1):
        det = a * d - b * c * qpow(s)
        central.append(all(not rs.normal_form(det * t - t * det) for t in (a, b, c, d)))
    assert sorted(central) == [False, True]
    assert not rs.normal_form(b * c - c * b)


words = st.lists(st.integers(0, 255), min_size=2, max_size=5).map(tuple)


@given(words)
def test_strategy_independence(twistor, w):
    rs = twistor.rs
    n = len(rs.alphabet.gens)
    w = tuple(i % n for i in w)
    p = NcPoly({w: ONE})
    nf = rs.normal_form(p)
    assert rs.reduce_with_strategy(p, "leftmost") == nf
    assert rs.reduce_with_strategy(p, "rightmost") == nf
    assert rs.normal_form(nf) == nf
