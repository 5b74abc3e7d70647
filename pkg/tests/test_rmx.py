import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qtw.exactcore import ONE, ZERO, qpow
from qtw.rmx import (
    EQ9_READING, build_glq_rmatrix, build_q_epsilon4, build_slq2_rmatrix, compose,
    epsilon_down, epsilon_up, eq9_residual, hecke_residual, levi_civita, projectors,
    solve_q_epsilon4, ybe_residual,
)

points = st.sampled_from([Fraction(2), Fraction(3, 2), Fraction(5, 7), Fraction(-3)])


def as_matrix(r, q0):
    """R^{ab}_{cd} as an n^2 x n^2 Fraction matrix, rows (a,b), columns (c,d)."""
    n = r.n
    m = np.empty((n * n, n * n), dtype=object)
    for a, b, c, d in itertools.product(range(n), repeat=4):
        m[a * n + b, c * n + d] = r(a, b, c, d).evaluate(q0)
    return m


def ident(k):
    m = np.full((k, k), Fraction(0), dtype=object)
    for i in range(k):
        m[i, i] = Fraction(1)
    return m


@pytest.mark.parametrize("n", [1, 2, 3, 4, 6])
def test_hecke_and_ybe_exact(n):
    r = build_glq_rmatrix(n)
    assert hecke_residual(r).is_zero()
    assert ybe_residual(r).is_zero()


@pytest.mark.parametrize("n", [2, 3, 4])
@given(q0=points)
def test_braid_relation_with_kronecker_oracle(n, q0):
    m = as_matrix(build_glq_rmatrix(n), q0)
    r12 = np.kron(m, ident(n))
    r23 = np.kron(ident(n), m)
    assert (r12.dot(r23).dot(r12) == r23.dot(r12).dot(r23)).all()
    hecke = m.dot(m) - ident(n * n) - (q0 - 1 / q0) * m
    assert not hecke.any()


@pytest.mark.parametrize("n", [2, 3, 4])
def test_spectrum(n):
    # R = q P+ - q^-1 P- with ranks n(n+1)/2 and n(n-1)/2
    q0 = 1.7
    m = np.array(as_matrix(build_glq_rmatrix(n), Fraction(17, 10)), dtype=float)
    ev = np.linalg.eigvals(m)
    assert np.sum(np.isclose(ev, q0)) == n * (n + 1) // 2
    assert np.sum(np.isclose(ev, -1 / q0)) == n * (n - 1) // 2


@pytest.mark.parametrize("n", [2, 4])
def test_classical_limit_is_the_flip(n):
    r = build_glq_rmatrix(n, q0=1)
    for a, b, c, d in itertools.product(range(n), repeat=4):
        assert r(a, b, c, d) == (ONE if (a, b) == (d, c) else ZERO)


@pytest.mark.parametrize("n", [2, 4])
def test_projectors(n):
    r = build_glq_rmatrix(n)
    pp, pm = projectors(r)
    assert compose(pp, pp) == pp
    assert compose(pm, pm) == pm
    assert compose(pp, pm).is_zero()
    assert (pp + pm) == compose(pp + pm, pp + pm)
    rank_p = sum(pp.data[a, b, a, b] for a, b in itertools.product(range(n), repeat=2))
    assert rank_p == ONE * (n * (n + 1) // 2)
    assert pp.scale(qpow(1)) - pm.scale(qpow(-1)) == r.tensor


def test_inverse():
    r = build_glq_rmatrix(3)
    ident4 = compose(r.tensor, r.inverse().tensor)
    for (a, b, c, d), v in ident4.nonzero():
        assert (a, b) == (c, d) and v == ONE


def test_slq2_equals_glq2():
    assert build_slq2_rmatrix().tensor == build_glq_rmatrix(2).tensor


def test_epsilon_raise_lower():
    eu, ed = epsilon_up(), epsilon_down()
    for a, c in itertools.product(range(2), repeat=2):
        s = sum((eu.data[a, b] * ed.data[b, c] for b in range(2)), ZERO)
        assert s == (ONE if a == c else ZERO)
    tr = sum((eu.data[a, b] * ed.data[a, b] for a, b in itertools.product(range(2), repeat=2)), ZERO)
    assert tr == -(qpow(1) + qpow(-1))


def test_q_epsilon4():
    eps, dim = solve_q_epsilon4()
    assert dim == 1
    assert all(t.is_zero() for t in eq9_residual(eps).values())
    for perm in itertools.permutations(range(4)):
        inv = sum(1 for i, j in itertools.combinations(range(4), 2) if perm[i] > perm[j])
        assert eps.data[perm] == qpow(-inv, (-1) ** inv)
    assert sum(1 for _ in eps.nonzero()) == 24


@given(points)
def test_q_epsilon4_specializes(q0):
    eps = build_q_epsilon4(EQ9_READING, q0)
    assert all(t.is_zero() for t in eq9_residual(eps, EQ9_READING, q0).values())


def test_q_epsilon4_classical():
    assert build_q_epsilon4(q0=1) == levi_civita(4)


def test_eq9_reading_is_checked():
    with pytest.raises(ValueError):
        solve_q_epsilon4("sideways")
