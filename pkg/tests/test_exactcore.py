from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qtw.exactcore import (
    DOWN, GREEK, LATIN, ONE, UP, ZERO, IndexSpace, Laurent, Registry, Tensor, contract,
    delta, ls_bar, ls_eval, ls_mul, nullspace, qnum, qpow, render, row_reduce,
)

coeffs = st.fractions(min_value=-5, max_value=5, max_denominator=4)
laurents = st.dictionaries(st.integers(-3, 3), coeffs, max_size=4).map(Laurent)
points = st.sampled_from([Fraction(2), Fraction(3, 2), Fraction(5, 7), Fraction(-1, 3)])


def poly_value(terms: dict, q0: Fraction) -> Fraction:
    return sum((Fraction(c) * q0 ** e for e, c in terms.items()), Fraction(0))


@given(laurents, laurents, laurents)
def test_ring_axioms(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a + b == b + a and a * b == b * a
    assert a - a == ZERO and a * ONE == a


@given(laurents, laurents, points)
def test_evaluation_is_a_homomorphism(a, b, q0):
    # oracle: plain Fraction arithmetic on the term dictionaries
    va, vb = poly_value(a.terms, q0), poly_value(b.terms, q0)
    assert (a * b).evaluate(q0) == va * vb
    assert (a + b).evaluate(q0) == va + vb
    assert ls_mul(a, b).evaluate(q0) == ls_eval(a, q0) * ls_eval(b, q0)


@given(laurents, points)
def test_inverse(a, q0):
    if not a:
        with pytest.raises(ZeroDivisionError):
            a.inverse()
        return
    inv = a.inverse()
    assert a * inv == ONE
    v = a.evaluate(q0)
    if v:
        assert inv.evaluate(q0) == 1 / v


@given(laurents)
def test_bar_is_an_involution(a):
    assert ls_bar(ls_bar(a)) == a
    assert (a * qpow(2)).bar() == a.bar() * qpow(-2)


def test_bar_on_fraction():
    x = (qpow(0) + qpow(2)).inverse() * qpow(1)
    assert x.bar() == x


@given(st.integers(1, 6), points)
def test_quantum_integers(n, q0):
    assert qnum(n).evaluate(q0) == (q0 ** n - q0 ** -n) / (q0 - 1 / q0)
    assert qnum(n).evaluate(1) == n


def test_render():
    assert render(Laurent({-1: -1, 0: 2, 3: 1})) == "-q^-1 + 2 + q^3"
    assert render(ZERO) == "0"
    assert render(Laurent({1: Fraction(1, 2)})) == "1/2*q"
    assert str((qpow(0) + qpow(2)).inverse()) == "(1)/(1 + q^2)"


def test_denominator_normalization():
    x = (qpow(1) + qpow(-1)).inverse()
    # 1/(q + q^-1) = q/(1 + q^2)
    assert x == qpow(1) * (qpow(0) + qpow(2)).inverse()
    assert x * (qpow(1) + qpow(-1)) == ONE
    assert x.evaluate(2) == Fraction(2, 5)


def test_evaluate_at_zero_is_rejected():
    with pytest.raises(ValueError):
        qpow(1).evaluate(0)


def test_registry():
    reg = Registry()
    sp = reg.add("colour", 3)
    assert reg["colour"] is sp
    with pytest.raises(ValueError):
        reg.add("colour", 3)
    with pytest.raises(ValueError):
        IndexSpace("empty", 0)


small = st.integers(-3, 3).map(Laurent.const)


@given(st.lists(small, min_size=8, max_size=8), st.lists(small, min_size=8, max_size=8))
def test_contract_matches_loops(xs, ys):
    a = Tensor((( LATIN, UP), (GREEK, DOWN)), np.array(xs, dtype=object).reshape(4, 2))
    b = Tensor(((GREEK, UP), (LATIN, DOWN)), np.array(ys, dtype=object).reshape(2, 4))
    c = contract(a, b, [(1, 0)])
    for i in range(4):
        for j in range(4):
            expect = sum((a.data[i, k] * b.data[k, j] for k in range(2)), ZERO)
            assert c.data[i, j] == expect
    assert c.axes == ((LATIN, UP), (LATIN, DOWN))


def test_contract_checks_variance():
    a = delta(LATIN)
    with pytest.raises(ValueError):
        contract(a, a, [(0, 0)])
    assert contract(a, a, [(1, 0)]) == a


def _rank(rows, cols):
    # oracle: Fraction Gaussian elimination at a generic point
    m = [[r.get(c, ZERO).evaluate(Fraction(7, 3)) for c in cols] for r in rows]
    rank, col = 0, 0
    while rank < len(m) and col < len(cols):
        piv = next((i for i in range(rank, len(m)) if m[i][col]), None)
        if piv is None:
            col += 1
            continue
        m[rank], m[piv] = m[piv], m[rank]
        for i in range(len(m)):
            if i != rank and m[i][col]:
                f = m[i][col] / m[rank][col]
                m[i] = [x - f * y for x, y in zip(m[i], m[rank])]
        rank += 1
        col += 1
    return rank


row_st = st.dictionaries(st.integers(0, 5), st.integers(-2, 2).map(
    lambda k: qpow(k) + Laurent.const(k)), max_size=4)


@given(st.lists(row_st, max_size=5))
def test_nullspace(rows):
    cols = list(range(6))
    basis = nullspace(rows, cols)
    for vec in basis:
        for r in rows:
            assert sum((c * vec.get(k, ZERO) for k, c in r.items()), ZERO) == ZERO
    assert len(basis) == len(cols) - _rank(rows, cols)


@given(st.lists(row_st, max_size=5))
def test_row_reduce_is_reduced(rows):
    red = row_reduce(rows)
    pivots = [p for p, _ in red]
    assert pivots == sorted(pivots, reverse=True)
    for p, r in red:
        assert r[p] == ONE
        assert max(r) == p
        for p2, r2 in red:
            if p2 != p:
                assert p not in r2
