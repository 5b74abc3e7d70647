"""Exact scalars in the deformation parameter q and dense tensors over them.

The scalar type :class:`Laurent` is a Laurent polynomial in ``q`` with
rational coefficients.  Division is allowed by polynomials with non-zero
constant term (in practice only powers of ``q + 1/q`` ever occur), so the
type is closed under the operations the rest of the package needs while
still being a plain Laurent polynomial whenever the denominator is 1.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from gmpy2 import mpq

_ZERO = mpq(0)
_ONE = mpq(1)


# ---------------------------------------------------------------------------
# dense polynomial helpers (ascending coefficient lists, no trailing zeros)
# ---------------------------------------------------------------------------

def _ptrim(p: list) -> list:
    while p and p[-1] == 0:
        p.pop()
    return p


def _pmul(a: Sequence, b: Sequence) -> list:
    if not a or not b:
        return []
    out = [_ZERO] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return _ptrim(out)


def _pdivmod(a: Sequence, b: Sequence) -> tuple[list, list]:
    a = list(a)
    if len(a) < len(b):
        return [], a
    lead = b[-1]
    quot = [_ZERO] * (len(a) - len(b) + 1)
    for k in range(len(a) - len(b), -1, -1):
        c = a[k + len(b) - 1] / lead
        quot[k] = c
        if c:
            for j, y in enumerate(b):
                a[k + j] -= c * y
    return _ptrim(quot), _ptrim(a[: len(b) - 1])


def _pmonic(p: list) -> list:
    lead = p[-1]
    return [c / lead for c in p]


def _pgcd(a: list, b: list) -> list:
    a, b = list(a), list(b)
    while b:
        _, r = _pdivmod(a, b)
        a, b = b, r
    return _pmonic(a) if a else a


def _as_coeff(c) -> mpq:
    if isinstance(c, Fraction):
        return mpq(c.numerator, c.denominator)
    return mpq(c)


# ---------------------------------------------------------------------------
# Laurent scalars
# ---------------------------------------------------------------------------

class Laurent:
    """Exact element of Q[q, 1/q], optionally divided by a polynomial.

    ``terms`` maps exponents to non-zero rational coefficients.  ``den`` is
    ``None`` for a genuine Laurent polynomial, otherwise a tuple of ascending
    polynomial coefficients (monic, non-zero constant term, coprime to the
    numerator).
    """

    __slots__ = ("terms", "den", "_hash")

    def __init__(self, terms=None, den=None):
        if terms is None:
            terms = {}
        elif not isinstance(terms, dict):
            terms = {0: terms}
        self.terms = {e: _as_coeff(c) for e, c in terms.items() if c != 0}
        self.den = None
        self._hash = None
        if den is not None and self.terms:
            self._set_den(list(map(_as_coeff, den)))

    # -- construction -----------------------------------------------------
    @classmethod
    def _raw(cls, terms: dict, den=None) -> "Laurent":
        obj = object.__new__(cls)
        obj.terms = terms
        obj.den = den
        obj._hash = None
        return obj

    @classmethod
    def const(cls, c) -> "Laurent":
        c = _as_coeff(c)
        return cls._raw({0: c} if c else {})

    @classmethod
    def mono(cls, exp: int, c=1) -> "Laurent":
        c = _as_coeff(c)
        return cls._raw({exp: c} if c else {})

    def _set_den(self, den: list) -> None:
        den = _ptrim(den)
        if not den:
            raise ZeroDivisionError("division by zero Laurent scalar")
        lo = next(i for i, c in enumerate(den) if c)
        # a q-power in the denominator is a unit: move it to the numerator
        terms = {e - lo: c for e, c in self.terms.items()}
        den = den[lo:]
        lead = den[-1]
        if lead != 1:
            den = [c / lead for c in den]
            terms = {e: c / lead for e, c in terms.items()}
        if len(den) > 1:
            shift = min(terms)
            num = [_ZERO] * (max(terms) - shift + 1)
            for e, c in terms.items():
                num[e - shift] = c
            g = _pgcd(num, den)
            if len(g) > 1:
                num, _ = _pdivmod(num, g)
                den, _ = _pdivmod(den, g)
                lead = den[-1]
                if lead != 1:
                    den = [c / lead for c in den]
                    num = [c / lead for c in num]
            terms = {i + shift: c for i, c in enumerate(num) if c}
        self.terms = terms
        self.den = tuple(den) if len(den) > 1 else None

    # -- predicates --------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_laurent(self) -> bool:
        return self.den is None

    def is_unit(self) -> bool:
        """True for ``c * q^k`` with rational ``c != 0``."""
        return self.den is None and len(self.terms) == 1

    def is_const(self) -> bool:
        return self.den is None and (not self.terms or set(self.terms) == {0})

    # -- arithmetic --------------------------------------------------------
    def _coerce(self, other) -> "Laurent":
        if isinstance(other, Laurent):
            return other
        if isinstance(other, (int, Fraction, type(_ONE))):
            return Laurent.const(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if not other.terms:
            return self
        if not self.terms:
            return other
        if self.den is None and other.den is None:
            out = dict(self.terms)
            for e, c in other.terms.items():
                s = out.get(e, _ZERO) + c
                if s:
                    out[e] = s
                else:
                    out.pop(e, None)
            return Laurent._raw(out)
        if self.den == other.den:
            num = dict(self.terms)
            for e, c in other.terms.items():
                s = num.get(e, _ZERO) + c
                if s:
                    num[e] = s
                else:
                    num.pop(e, None)
            res = Laurent._raw(num)
            if num:
                res._set_den(list(self.den))
            return res
        d1 = list(self.den) if self.den else [_ONE]
        d2 = list(other.den) if other.den else [_ONE]
        num = _lmul_poly(self.terms, d2)
        for e, c in _lmul_poly(other.terms, d1).items():
            s = num.get(e, _ZERO) + c
            if s:
                num[e] = s
            else:
                num.pop(e, None)
        res = Laurent._raw(num)
        if num:
            res._set_den(_pmul(d1, d2))
        return res

    __radd__ = __add__

    def __neg__(self) -> "Laurent":
        return Laurent._raw({e: -c for e, c in self.terms.items()}, self.den)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if not self.terms or not other.terms:
            return ZERO
        a, b = self.terms, other.terms
        if len(b) == 1 and other.den is None:
            (eb, cb), = b.items()
            return Laurent._raw({e + eb: c * cb for e, c in a.items()}, self.den)
        if len(a) == 1 and self.den is None:
            (ea, ca), = a.items()
            return Laurent._raw({e + ea: c * ca for e, c in b.items()}, other.den)
        out: dict = {}
        for ea, ca in a.items():
            for eb, cb in b.items():
                e = ea + eb
                out[e] = out.get(e, _ZERO) + ca * cb
        out = {e: c for e, c in out.items() if c}
        if self.den is None and other.den is None:
            return Laurent._raw(out)
        res = Laurent._raw(out)
        if out:
            d1 = list(self.den) if self.den else [_ONE]
            d2 = list(other.den) if other.den else [_ONE]
            res._set_den(_pmul(d1, d2))
        return res

    __rmul__ = __mul__

    def inverse(self) -> "Laurent":
        """Multiplicative inverse; the numerator becomes the denominator."""
        if not self.terms:
            raise ZeroDivisionError("inverse of zero")
        lo = min(self.terms)
        num_poly = [_ZERO] * (max(self.terms) - lo + 1)
        for e, c in self.terms.items():
            num_poly[e - lo] = c
        new_num = _lmul_poly({-lo: _ONE}, list(self.den) if self.den else [_ONE])
        res = Laurent._raw(new_num)
        res._set_den(num_poly)
        return res

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.inverse()

    def __pow__(self, n: int) -> "Laurent":
        if n < 0:
            return self.inverse() ** (-n)
        out = ONE
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    # -- comparison --------------------------------------------------------
    def __eq__(self, other) -> bool:
        if not isinstance(other, Laurent):
            other = self._coerce(other)
            if other is NotImplemented:
                return NotImplemented
        return self.terms == other.terms and self.den == other.den

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((frozenset(self.terms.items()), self.den))
        return self._hash

    # -- maps --------------------------------------------------------------
    def bar(self) -> "Laurent":
        """Substitute q -> 1/q."""
        num = {-e: c for e, c in self.terms.items()}
        if self.den is None:
            return Laurent._raw(num)
        d = list(self.den)
        # den(1/q) = q^-deg * reversed(den)
        res = Laurent._raw({e + len(d) - 1: c for e, c in num.items()})
        res._set_den(d[::-1])
        return res

    def evaluate(self, q0) -> Fraction:
        q0 = _as_coeff(q0)
        if q0 == 0:
            raise ValueError("cannot evaluate a Laurent polynomial at q = 0")
        num = sum((c * q0 ** e for e, c in self.terms.items()), _ZERO)
        if self.den is not None:
            dval = sum((c * q0 ** i for i, c in enumerate(self.den)), _ZERO)
            if dval == 0:
                raise ZeroDivisionError(f"denominator vanishes at q = {q0}")
            num = num / dval
        return Fraction(int(num.numerator), int(num.denominator))

    def specialize(self, q0) -> "Laurent":
        return Laurent.const(self.evaluate(q0))

    # -- rendering ---------------------------------------------------------
    def __str__(self) -> str:
        return render(self)

    def __repr__(self) -> str:
        return f"Laurent({render(self)!r})"


def _lmul_poly(terms: dict, poly: Sequence) -> dict:
    out: dict = {}
    for e, c in terms.items():
        for i, p in enumerate(poly):
            if p:
                out[e + i] = out.get(e + i, _ZERO) + c * p
    return {e: c for e, c in out.items() if c}


ZERO = Laurent._raw({})
ONE = Laurent._raw({0: _ONE})
Q = Laurent._raw({1: _ONE})
QINV = Laurent._raw({-1: _ONE})


def qpow(k: int, c=1) -> Laurent:
    return Laurent.mono(k, c)


def as_scalar(x) -> Laurent:
    if isinstance(x, Laurent):
        return x
    return Laurent.const(x)


def _fmt_coeff(c) -> str:
    if c.denominator == 1:
        return str(int(c.numerator))
    return f"{int(c.numerator)}/{int(c.denominator)}"


def _render_terms(items: Iterable[tuple[int, object]]) -> str:
    parts: list[str] = []
    for e, c in items:
        neg = c < 0
        a = -c if neg else c
        if e == 0:
            body = _fmt_coeff(a)
        else:
            var = "q" if e == 1 else f"q^{e}"
            body = var if a == 1 else f"{_fmt_coeff(a)}*{var}"
        if not parts:
            parts.append(("-" if neg else "") + body)
        else:
            parts.append((" - " if neg else " + ") + body)
    return "".join(parts) if parts else "0"


def render(x: Laurent) -> str:
    """Canonical text: ascending exponents, e.g. ``-q^-1 + 2 + q^3``."""
    num = _render_terms(sorted(x.terms.items()))
    if x.den is None:
        return num
    den = _render_terms((i, c) for i, c in enumerate(x.den) if c)
    return f"({num})/({den})"


# ---------------------------------------------------------------------------
# public scalar operations
# ---------------------------------------------------------------------------

def ls_mul(a: Laurent, b: Laurent) -> Laurent:
    return a * b


def ls_eval(a: Laurent, q0) -> Fraction:
    return a.evaluate(q0)


def ls_bar(a: Laurent) -> Laurent:
    return a.bar()


def qnum(n: int) -> Laurent:
    """Quantum integer [n] = (q^n - q^-n)/(q - q^-1)."""
    return Laurent({k: 1 for k in range(-(n - 1), n, 2)})


# ---------------------------------------------------------------------------
# tensors
# ---------------------------------------------------------------------------

class IndexSpace:
    __slots__ = ("name", "dim")

    def __init__(self, name: str, dim: int):
        if dim < 1:
            raise ValueError(f"index space {name!r} needs dim >= 1, got {dim}")
        self.name = name
        self.dim = dim

    def __eq__(self, other):
        return isinstance(other, IndexSpace) and (self.name, self.dim) == (other.name, other.dim)

    def __hash__(self):
        return hash((self.name, self.dim))

    def __repr__(self):
        return f"IndexSpace({self.name!r}, {self.dim})"


class Registry:
    """Name -> IndexSpace with uniqueness of names."""

    def __init__(self):
        self._spaces: dict[str, IndexSpace] = {}

    def add(self, name: str, dim: int) -> IndexSpace:
        if name in self._spaces:
            raise ValueError(f"index space {name!r} already registered")
        sp = IndexSpace(name, dim)
        self._spaces[name] = sp
        return sp

    def __getitem__(self, name: str) -> IndexSpace:
        return self._spaces[name]


GREEK = IndexSpace("greek", 2)
LATIN = IndexSpace("latin", 4)

UP, DOWN = True, False


class Tensor:
    """Dense multi-index array with (space, variance) metadata per axis.

    Entries are either all :class:`Laurent` or all NcPoly values.  Indices are
    0-based internally.
    """

    __slots__ = ("axes", "data")

    def __init__(self, axes, data):
        self.axes = tuple(axes)
        arr = np.asarray(data, dtype=object) if not isinstance(data, np.ndarray) else data
        shape = tuple(sp.dim for sp, _ in self.axes)
        if arr.shape != shape:
            raise ValueError(f"entry array shape {arr.shape} does not match axes {shape}")
        self.data = arr

    @classmethod
    def zeros(cls, axes, zero=None) -> "Tensor":
        axes = tuple(axes)
        arr = np.empty(tuple(sp.dim for sp, _ in axes), dtype=object)
        arr.fill(ZERO if zero is None else zero)
        return cls(axes, arr)

    @classmethod
    def from_function(cls, axes, fn) -> "Tensor":
        t = cls.zeros(axes)
        for idx in np.ndindex(t.data.shape):
            t.data[idx] = fn(*idx)
        return t

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def __getitem__(self, idx):
        return self.data[idx]

    def entries(self):
        for idx in np.ndindex(self.data.shape):
            yield idx, self.data[idx]

    def map(self, fn) -> "Tensor":
        out = np.empty(self.data.shape, dtype=object)
        for idx in np.ndindex(self.data.shape):
            out[idx] = fn(self.data[idx])
        return Tensor(self.axes, out)

    def is_zero(self) -> bool:
        return all(v.is_zero() for _, v in self.entries())

    def nonzero(self) -> list[tuple[tuple[int, ...], object]]:
        return [(i, v) for i, v in self.entries() if not v.is_zero()]

    def _check(self, other: "Tensor"):
        if self.axes != other.axes:
            raise ValueError("tensor axes differ")

    def __add__(self, other: "Tensor") -> "Tensor":
        self._check(other)
        return Tensor(self.axes, self.data + other.data)

    def __sub__(self, other: "Tensor") -> "Tensor":
        self._check(other)
        return Tensor(self.axes, self.data + (-other.data))

    def __neg__(self) -> "Tensor":
        return Tensor(self.axes, -self.data)

    def scale(self, c) -> "Tensor":
        c = as_scalar(c)
        return self.map(lambda v: c * v)

    def transpose(self, perm: Sequence[int]) -> "Tensor":
        return Tensor([self.axes[p] for p in perm], np.transpose(self.data, perm))

    def evaluate(self, q0) -> np.ndarray:
        """Entry-wise exact value at q = q0 (scalar-valued tensors)."""
        out = np.empty(self.data.shape, dtype=object)
        for idx in np.ndindex(self.data.shape):
            out[idx] = self.data[idx].evaluate(q0)
        return out

    def specialize(self, q0) -> "Tensor":
        return self.map(lambda v: v.specialize(q0))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Tensor) or self.axes != other.axes:
            return False
        return all(a == b for a, b in zip(self.data.flat, other.data.flat))

    def __repr__(self):
        names = ",".join(("^" if up else "_") + sp.name for sp, up in self.axes)
        return f"Tensor[{names}]"


def contract(t1: Tensor, t2: Tensor, pairs: Sequence[tuple[int, int]]) -> Tensor:
    """Sum over paired axes; free axes of ``t1`` come first, then ``t2``.

    Entries of ``t1`` multiply entries of ``t2`` from the left, so word order is
    preserved for noncommutative entries.
    """
    ax1 = [p[0] for p in pairs]
    ax2 = [p[1] for p in pairs]
    if len(set(ax1)) != len(ax1) or len(set(ax2)) != len(ax2):
        raise ValueError("an axis is paired twice")
    for i, j in pairs:
        (s1, v1), (s2, v2) = t1.axes[i], t2.axes[j]
        if s1.dim != s2.dim:
            raise ValueError(f"dim mismatch on contraction: {s1} vs {s2}")
        if v1 == v2:
            raise ValueError(f"variance mismatch on contraction of axes {i} and {j}")
    data = np.tensordot(t1.data, t2.data, axes=(ax1, ax2))
    axes = [a for k, a in enumerate(t1.axes) if k not in ax1]
    axes += [a for k, a in enumerate(t2.axes) if k not in ax2]
    if not axes:
        return Tensor((), np.asarray(data, dtype=object).reshape(()))
    return Tensor(axes, np.asarray(data, dtype=object))


def delta(space: IndexSpace) -> Tensor:
    """Kronecker symbol with axes (up, down)."""
    return Tensor.from_function(((space, UP), (space, DOWN)), lambda a, b: ONE if a == b else ZERO)


def outer(t1: Tensor, t2: Tensor) -> Tensor:
    return contract(t1, t2, [])


# ---------------------------------------------------------------------------
# sparse linear algebra over the scalar field
# ---------------------------------------------------------------------------

def row_reduce(rows: Iterable[dict], key=None) -> list[tuple[object, dict]]:
    """Reduced row echelon form of sparse rows ``{column: Laurent}``.

    Pivots are chosen as the maximal column of each row under ``key`` (default:
    natural ordering of the columns), so the result is the unique reduced basis
    whose leading columns are as large as possible.  Returns ``(pivot, row)``
    pairs with the pivot coefficient normalized to 1.
    """
    keyf = key or (lambda c: c)
    basis: dict = {}  # pivot column -> row
    for row in rows:
        row = {c: v for c, v in row.items() if v}
        while row:
            piv = max(row, key=keyf)
            if piv in basis:
                f = row[piv]
                for c, v in basis[piv].items():
                    s = row.get(c, ZERO) - f * v
                    if s:
                        row[c] = s
                    else:
                        row.pop(c, None)
                continue
            inv = row[piv].inverse()
            row = {c: v * inv for c, v in row.items()}
            basis[piv] = row
            break
    # back substitution, from the smallest pivot upward
    order = sorted(basis, key=keyf)
    for i, p in enumerate(order):
        prow = basis[p]
        for p2 in order[i + 1:]:
            r2 = basis[p2]
            f = r2.get(p)
            if f:
                for c, v in prow.items():
                    s = r2.get(c, ZERO) - f * v
                    if s:
                        r2[c] = s
                    else:
                        r2.pop(c, None)
    return [(p, basis[p]) for p in sorted(basis, key=keyf, reverse=True)]


def nullspace(rows: Iterable[dict], columns: Sequence) -> list[dict]:
    """Basis of solutions ``x`` with ``sum(row[c] * x[c]) == 0`` for all rows."""
    pos = {c: i for i, c in enumerate(columns)}
    red = row_reduce(rows, key=pos.__getitem__)
    pivots = {p: r for p, r in red}
    free = [c for c in columns if c not in pivots]
    basis = []
    for f in free:
        vec = {f: ONE}
        for p, r in pivots.items():
            v = r.get(f)
            if v:
                vec[p] = -v
        basis.append(vec)
    return basis
