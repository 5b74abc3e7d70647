"""Hecke R-matrices, deformed epsilon symbols and spectral projectors."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .exactcore import (
    DOWN, GREEK, LATIN, ONE, Q, QINV, UP, ZERO, IndexSpace, Laurent, Tensor,
    nullspace,
)

# pinned convention for the 2D deformed antisymmetric symbol
EPSILON_CONVENTION = "eps^12=1, eps^21=-q, eps_12=-q^-1, eps_21=1"

EQ9_READINGS = ("direct", "literal")
# with "literal" the cubic twistor identity and (y, y) = 0 follow from the z relations
EQ9_READING = "literal"


@dataclass(frozen=True)
class RMatrix:
    """Braid-form R-matrix; ``tensor[a, b, c, d]`` is R^{ab}_{cd}."""

    tensor: Tensor
    name: str
    convention: str = "hat"
    q: Laurent = Q

    @property
    def n(self) -> int:
        return self.tensor.shape[0]

    @property
    def space(self) -> IndexSpace:
        return self.tensor.axes[0][0]

    def __call__(self, a: int, b: int, c: int, d: int) -> Laurent:
        return self.tensor.data[a, b, c, d]

    def columns(self) -> dict:
        """(c, d) -> [((a, b), R^{ab}_{cd}), ...] over non-zero entries."""
        cols: dict = {}
        for (a, b, c, d), v in self.tensor.nonzero():
            cols.setdefault((c, d), []).append(((a, b), v))
        return cols

    def specialize(self, q0) -> "RMatrix":
        return RMatrix(self.tensor.specialize(q0), self.name, self.convention,
                       self.q.specialize(q0))

    def inverse(self) -> "RMatrix":
        """R^-1 = R - (q - q^-1) Id, valid for Hecke matrices."""
        ident = _identity4(self.space)
        inv = self.tensor - ident.scale(self.q - self.q.inverse())
        return RMatrix(inv, self.name + "^-1", self.convention, self.q)


def _axes(space: IndexSpace):
    return ((space, UP), (space, UP), (space, DOWN), (space, DOWN))


def _identity4(space: IndexSpace) -> Tensor:
    return Tensor.from_function(
        _axes(space), lambda a, b, c, d: ONE if (a, b) == (c, d) else ZERO)


def _space_for(n: int) -> IndexSpace:
    if n == 2:
        return GREEK
    if n == 4:
        return LATIN
    return IndexSpace(f"gl{n}", n)


def build_glq_rmatrix(n: int, q0=None, space: IndexSpace | None = None) -> RMatrix:
    if n < 1:
        raise ValueError("n must be positive")
    sp = space or _space_for(n)
    band = Q - QINV

    def entry(a, b, c, d):
        if a == b == c == d:
            return Q
        if a != b and (a, b) == (d, c):
            return ONE
        if a < b and (a, b) == (c, d):
            return band
        return ZERO

    r = RMatrix(Tensor.from_function(_axes(sp), entry), f"GL_q({n})")
    return r.specialize(q0) if q0 is not None else r


def identity_rmatrix(n: int, space: IndexSpace | None = None) -> RMatrix:
    return RMatrix(_identity4(space or _space_for(n)), f"Id({n})", "identity")


@dataclass(frozen=True)
class EpsilonPair:
    eps_up: Tensor
    eps_down: Tensor
    eps4: Tensor | None = None


def epsilon_up(q0=None) -> Tensor:
    t = Tensor.zeros(((GREEK, UP), (GREEK, UP)))
    t.data[0, 1] = ONE
    t.data[1, 0] = -Q
    return t.specialize(q0) if q0 is not None else t


def epsilon_down(q0=None) -> Tensor:
    t = Tensor.zeros(((GREEK, DOWN), (GREEK, DOWN)))
    t.data[0, 1] = -QINV
    t.data[1, 0] = ONE
    return t.specialize(q0) if q0 is not None else t


def build_slq2_rmatrix(q0=None) -> RMatrix:
    eu, ed = epsilon_up(), epsilon_down()

    def entry(a, b, c, d):
        v = eu.data[a, b] * ed.data[c, d]
        return v + Q if (a, b) == (c, d) else v

    r = RMatrix(Tensor.from_function(_axes(GREEK), entry), "SL_q(2)")
    return r.specialize(q0) if q0 is not None else r


def eq9_constraints(r: RMatrix, reading: str = EQ9_READING) -> list[dict]:
    """Linear rows whose common kernel is the q-antisymmetric rank-4 symbol.

    ``direct`` imposes R^{ab}_{ef} eps^{..ef..} = -q^-1 eps^{..ab..} on each
    adjacent slot pair; ``literal`` uses the index placement
    R^{ba}_{fe} eps^{..ef..} = -q^-1 eps^{..ab..}.
    """
    if reading not in EQ9_READINGS:
        raise ValueError(f"unknown Eq-9 reading {reading!r}")
    n = r.n
    minus_qinv = -r.q.inverse()
    rows = []
    for pos in range(3):
        for free in itertools.product(range(n), repeat=2):
            for a, b in itertools.product(range(n), repeat=2):
                row: dict = {}

                def put(x, y, coef):
                    idx = list(free)
                    idx[pos:pos] = [x, y]
                    key = tuple(idx)
                    s = row.get(key, ZERO) + coef
                    if s:
                        row[key] = s
                    else:
                        row.pop(key, None)

                for e, f in itertools.product(range(n), repeat=2):
                    v = r(a, b, e, f) if reading == "direct" else r(b, a, f, e)
                    if v:
                        put(e, f, v)
                put(a, b, -minus_qinv)
                if row:
                    rows.append(row)
    return rows


def solve_q_epsilon4(reading: str = EQ9_READING, q0=None) -> tuple[Tensor, int]:
    """Solve the Eq-9 eigen-constraints; returns (normalized symbol, kernel dim)."""
    r = build_glq_rmatrix(4, q0)
    cols = list(itertools.product(range(4), repeat=4))
    kernel = nullspace(eq9_constraints(r, reading), cols)
    if len(kernel) != 1:
        raise ValueError(
            f"Eq-9 constraint kernel has dimension {len(kernel)} under reading "
            f"{reading!r}; expected 1")
    vec = kernel[0]
    norm = vec.get((0, 1, 2, 3), ZERO)
    if not norm:
        raise ValueError("solved q-epsilon symbol vanishes on (1,2,3,4)")
    inv = norm.inverse()
    t = Tensor.zeros(((LATIN, UP),) * 4)
    for k, v in vec.items():
        t.data[k] = v * inv
    return t, len(kernel)


_EPS4_CACHE: dict = {}


def build_q_epsilon4(reading: str = EQ9_READING, q0=None) -> Tensor:
    key = (reading, q0)
    if key not in _EPS4_CACHE:
        if q0 is None:
            _EPS4_CACHE[key] = solve_q_epsilon4(reading)[0]
        else:
            _EPS4_CACHE[key] = build_q_epsilon4(reading).specialize(q0)
    return _EPS4_CACHE[key]


def epsilon_pair(reading: str = EQ9_READING, q0=None) -> EpsilonPair:
    return EpsilonPair(epsilon_up(q0), epsilon_down(q0), build_q_epsilon4(reading, q0))


def eq9_residual(eps4: Tensor, reading: str = EQ9_READING, q0=None) -> dict:
    """Per slot pair ``pos``, the tensor ``R eps + q^-1 eps`` acting on slots (pos, pos+1)."""
    r = build_glq_rmatrix(4, q0)
    qinv = r.q.inverse()
    out = {}
    for pos in range(3):
        res = Tensor.zeros(eps4.axes)
        for idx in itertools.product(range(4), repeat=4):
            a, b = idx[pos], idx[pos + 1]
            acc = eps4.data[idx] * qinv
            for e, f in itertools.product(range(4), repeat=2):
                v = r(a, b, e, f) if reading == "direct" else r(b, a, f, e)
                if v:
                    src = idx[:pos] + (e, f) + idx[pos + 2:]
                    acc = acc + v * eps4.data[src]
            res.data[idx] = acc
        out[pos] = res
    return out


def levi_civita(n: int) -> Tensor:
    """The classical antisymmetric symbol with eps^{12..n} = 1."""
    t = Tensor.zeros(((_space_for(n), UP),) * n)
    for perm in itertools.permutations(range(n)):
        inv = sum(1 for i, j in itertools.combinations(range(n), 2) if perm[i] > perm[j])
        t.data[perm] = ONE if inv % 2 == 0 else -ONE
    return t


def compose(r1: Tensor, r2: Tensor) -> Tensor:
    """Operator product (r1 r2)^{ab}_{cd} = r1^{ab}_{ef} r2^{ef}_{cd}."""
    n = r1.shape[0]
    m1 = r1.data.reshape(n * n, n * n)
    m2 = r2.data.reshape(n * n, n * n)
    return Tensor(r1.axes, np.dot(m1, m2).reshape(n, n, n, n))


def projectors(r: RMatrix) -> tuple[Tensor, Tensor]:
    """(P+, P-) with R = q P+ - q^-1 P-."""
    if not hecke_residual(r).is_zero():
        raise ValueError(f"{r.name} does not satisfy the Hecke relation")
    qv = r.q
    qi = qv.inverse()
    norm = (qv + qi).inverse()
    ident = _identity4(r.space)
    p_minus = (ident.scale(qv) - r.tensor).scale(norm)
    p_plus = (ident.scale(qi) + r.tensor).scale(norm)
    return p_plus, p_minus


def hecke_residual(r: RMatrix) -> Tensor:
    """R^2 - Id - (q - q^-1) R."""
    sq = compose(r.tensor, r.tensor)
    return sq - _identity4(r.space) - r.tensor.scale(r.q - r.q.inverse())


def _apply_pair(cols: dict, vec: dict, slot: int) -> dict:
    out: dict = {}
    for idx, v in vec.items():
        src = (idx[slot], idx[slot + 1])
        for (a, b), rv in cols.get(src, ()):
            new = list(idx)
            new[slot], new[slot + 1] = a, b
            key = tuple(new)
            s = out.get(key, ZERO) + rv * v
            if s:
                out[key] = s
            else:
                out.pop(key, None)
    return out


def ybe_residual(r: RMatrix) -> Tensor:
    """R12 R23 R12 - R23 R12 R23 on the threefold tensor space.

    Result axes are (up, up, up, down, down, down).
    """
    n = r.n
    cols = r.columns()
    sp = r.space
    res = Tensor.zeros(((sp, UP),) * 3 + ((sp, DOWN),) * 3)
    for inp in itertools.product(range(n), repeat=3):
        vec = {inp: ONE}
        lhs = _apply_pair(cols, _apply_pair(cols, _apply_pair(cols, vec, 0), 1), 0)
        rhs = _apply_pair(cols, _apply_pair(cols, _apply_pair(cols, vec, 1), 0), 1)
        for out in set(lhs) | set(rhs):
            diff = lhs.get(out, ZERO) - rhs.get(out, ZERO)
            if diff:
                res.data[out + inp] = diff
    return res
