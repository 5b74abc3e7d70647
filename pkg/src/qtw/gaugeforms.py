"""Matrix-valued forms: connections, curvature, duality and the quantum trace.

In normal form a 2-form entry is a sum of words ``c * dz[al,a] * dz[be,b] * c'``
with 0-form words ``c`` and ``c'`` (``c'`` is empty in the t'Hooft sector,
where the differentials move to the right).  The duality operator acts on the
Latin indices of the dz pair.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .exactcore import DOWN, ONE, UP, Laurent, Tensor, qpow
from .ncengine import Alphabet, NcPoly, ZERO_POLY
from .rmx import RMatrix, projectors

# the pair dz[al,c] dz[be,d] is contracted with P^{dc}_{ba}; this is the only
# placement compatible with the dz dz exchange relations
DUALITY_PLACEMENT = "P^{dc}_{ba}"

EQ16_READINGS = ("A1", "A2")

TRACE_WEIGHT_CANDIDATES = {
    "diag(1,q^-2)": (0, -2),
    "diag(q^-2,1)": (-2, 0),
    "diag(q,q^-1)": (1, -1),
    "diag(q^-1,q)": (-1, 1),
}


@dataclass
class FormContext:
    """What the form operations need from an algebra.

    ``zero`` maps a normal form to the element whose vanishing decides
    equality (clearing of inverse generators for the t'Hooft sector, the
    identity elsewhere).
    """

    alphabet: Alphabet
    nf: Callable[[NcPoly], NcPoly]
    d: Callable[[NcPoly], NcPoly]
    r_latin: RMatrix
    q0: object = None
    zero: Callable[[NcPoly], NcPoly] = lambda p: p
    dz: str = "dz"
    _proj: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_twistor(cls, ts) -> "FormContext":
        return cls(ts.alphabet, ts.nf, ts.d, ts.r_latin, ts.q0,
                   zero=lambda p: ts.clear_inverses(ts.nf(p)))

    def qp(self, m: int) -> Laurent:
        x = qpow(m)
        return x.specialize(self.q0) if self.q0 is not None else x

    def latin_projectors(self) -> tuple[Tensor, Tensor]:
        """(P+, P-) rearranged so that ``t[c, d, a, b] = P^{dc}_{ba}``."""
        if not self._proj:
            pp, pm = projectors(self.r_latin)
            for name, p in (("+", pp), ("-", pm)):
                self._proj[name] = Tensor(p.axes, np.transpose(p.data, (1, 0, 3, 2)))
        return self._proj["+"], self._proj["-"]

    def residual(self, p: NcPoly) -> NcPoly:
        return self.zero(self.nf(p))


class FormError(ValueError):
    pass


def _matmul(a: dict, b: dict, n: int) -> dict:
    out = {}
    for i, k in itertools.product(range(n), repeat=2):
        s = ZERO_POLY
        for l in range(n):
            x, y = a[(i, l)], b[(l, k)]
            if x and y:
                s = s + x * y
        out[(i, k)] = s
    return out


@dataclass
class ConnectionForm:
    """Square matrix of 1-forms ``A[i, k]``."""

    ctx: FormContext
    entries: dict
    size: int

    def __post_init__(self):
        alpha = self.ctx.alphabet
        for key, p in self.entries.items():
            for w in p.terms:
                if alpha.word_parity(w) != 1:
                    raise FormError(f"entry {key} is not homogeneous of form degree 1")

    def __getitem__(self, key) -> NcPoly:
        return self.entries[key]

    def realization(self) -> dict:
        """Per entry, 0-form coefficients of each ``dz`` (``dz * c`` reading)."""
        alpha = self.ctx.alphabet
        out = {}
        for key, p in self.entries.items():
            parts: dict = {}
            for w, c in p.terms.items():
                ones = [k for k, g in enumerate(w) if alpha.parity[g]]
                if len(ones) != 1 or alpha.gens[w[ones[0]]][0] != self.ctx.dz:
                    raise FormError(f"entry {key} is not of the form dz * (0-form)")
                parts.setdefault(w[ones[0]], []).append((w, c))
            out[key] = parts
        return out

    def square(self) -> dict:
        return {k: self.ctx.nf(v) for k, v in _matmul(self.entries, self.entries, self.size).items()}


@dataclass
class TwoForm:
    ctx: FormContext
    entries: dict
    size: int
    _parts: tuple | None = field(default=None, repr=False)

    def parts(self) -> tuple["TwoForm", "TwoForm"]:
        """(self-dual, anti-self-dual) parts; they add up to the form."""
        if self._parts is None:
            pp, pm = self.ctx.latin_projectors()
            sd = {k: latin_pair_action(self.ctx, v, pp) for k, v in self.entries.items()}
            asd = {k: latin_pair_action(self.ctx, v, pm) for k, v in self.entries.items()}
            self._parts = (TwoForm(self.ctx, sd, self.size), TwoForm(self.ctx, asd, self.size))
        return self._parts

    def residuals(self) -> dict:
        return {k: self.ctx.zero(v) for k, v in self.entries.items()}

    def is_zero(self) -> bool:
        return not any(self.residuals().values())


def latin_pair_action(ctx: FormContext, p: NcPoly, t: Tensor) -> NcPoly:
    """``c dz[al,a] dz[be,b] c' -> c dz[al,c] dz[be,d] c' t[c,d,a,b]``, normal-formed.

    Every word of the normal form must contain exactly two odd letters, both
    ``dz`` and adjacent; ``c`` and ``c'`` are 0-form words.
    """
    alpha = ctx.alphabet
    p = ctx.nf(p)
    out = ZERO_POLY
    for w, c in p.terms.items():
        odd = [k for k, g in enumerate(w) if alpha.parity[g]]
        if len(odd) != 2 or odd[1] != odd[0] + 1:
            raise FormError("entry is not reducible to the dz dz basis")
        k = odd[0]
        (n1, i1), (n2, i2) = alpha.gens[w[k]], alpha.gens[w[k + 1]]
        if n1 != ctx.dz or n2 != ctx.dz:
            raise FormError("entry is not reducible to the dz dz basis")
        (al, a), (be, b) = i1, i2
        pre, post = NcPoly({w[:k]: c}), NcPoly({w[k + 2:]: ONE})
        for cc, d in itertools.product(range(4), range(4)):
            v = t.data[cc, d, a, b]
            if v:
                out = out + pre * alpha.gen(ctx.dz, al, cc) * alpha.gen(ctx.dz, be, d) * post * v
    return ctx.nf(out)


def duality_star(f: TwoForm) -> TwoForm:
    """``*`` acts as ``P+ - P-`` on the Latin indices of each dz pair."""
    sd, asd = f.parts()
    return TwoForm(f.ctx, {k: f.ctx.nf(sd.entries[k] - asd.entries[k]) for k in f.entries},
                   f.size)


def asd_part(f: TwoForm) -> TwoForm:
    return f.parts()[1]


def sd_part(f: TwoForm) -> TwoForm:
    return f.parts()[0]


def curvature(a: ConnectionForm) -> TwoForm:
    """``F = dA - A A``."""
    ctx = a.ctx
    sq = _matmul(a.entries, a.entries, a.size)
    return TwoForm(ctx, {k: ctx.nf(ctx.d(a.entries[k]) - sq[k]) for k in a.entries}, a.size)


def q_trace(m: dict, weights, size: int | None = None) -> NcPoly:
    """``sum_i D_i m[i, i]``; ``weights`` is a sequence of scalars or a diagonal Tensor."""
    if isinstance(weights, Tensor):
        weights = [weights.data[i, i] for i in range(weights.shape[0])]
    n = size or len(weights)
    out = ZERO_POLY
    for i in range(n):
        w = weights[i]
        if m[(i, i)] and w:
            out = out + m[(i, i)] * w
    return out


def trace_weights(ctx: FormContext, name: str) -> list[Laurent]:
    return [ctx.qp(e) for e in TRACE_WEIGHT_CANDIDATES[name]]


def _slot_operator(a: ConnectionForm, slot: int) -> dict:
    n = a.size
    out = {}
    for i, k, m, p in itertools.product(range(n), repeat=4):
        if slot == 1:
            out[(i, k, m, p)] = a.entries[(i, m)] if k == p else ZERO_POLY
        else:
            out[(i, k, m, p)] = a.entries[(k, p)] if i == m else ZERO_POLY
    return out


def _r_operator(r: RMatrix) -> dict:
    n = r.n
    return {key: (NcPoly.const(r(*key)) if r(*key) else ZERO_POLY)
            for key in itertools.product(range(n), repeat=4)}


def _compose(n: int, *ops: dict) -> dict:
    cur = ops[0]
    for op in ops[1:]:
        new = {}
        for i, k, m, p in itertools.product(range(n), repeat=4):
            s = ZERO_POLY
            for x, y in itertools.product(range(n), repeat=2):
                u, v = cur[(i, k, x, y)], op[(x, y, m, p)]
                if u and v:
                    s = s + u * v
            new[(i, k, m, p)] = s
        cur = new
    return cur


def gauge_algebra_residual(a: ConnectionForm, r_g: RMatrix, reading: str = "A1") -> Tensor:
    """``A R A + R A R A R`` on two tensor slots, entries normal-formed.

    ``A1`` lets A act on the first slot, ``A2`` on the second.  Entry
    ``[i, k, m, p]`` carries the upper indices (i, k) and lower (m, p).
    """
    if reading not in EQ16_READINGS:
        raise ValueError(f"unknown reading {reading!r}")
    if r_g.n != a.size:
        raise ValueError("R-matrix size does not match the connection")
    n = a.size
    ao = _slot_operator(a, 1 if reading == "A1" else 2)
    ro = _r_operator(r_g)
    e1 = _compose(n, ao, ro, ao)
    e2 = _compose(n, ro, ao, ro, ao, ro)
    t = Tensor.zeros(((r_g.space, UP),) * 2 + ((r_g.space, DOWN),) * 2, ZERO_POLY)
    for key in e1:
        t.data[key] = a.ctx.nf(e1[key] + e2[key])
    return t


def trace_constraints(a: ConnectionForm, weights) -> dict[str, NcPoly]:
    """Residuals of ``alpha^2 = 0``, ``Tr_q A^2 = 0`` and ``d alpha = 0``."""
    ctx = a.ctx
    alpha = ctx.nf(q_trace(a.entries, weights, a.size))
    return {
        "alpha^2": ctx.residual(alpha * alpha),
        "Tr_q A^2": ctx.residual(q_trace(a.square(), weights, a.size)),
        "d alpha": ctx.residual(ctx.d(alpha)),
    }


__all__ = [
    "ConnectionForm", "DUALITY_PLACEMENT", "EQ16_READINGS", "FormContext", "FormError",
    "TRACE_WEIGHT_CANDIDATES", "TwoForm", "asd_part", "curvature", "duality_star",
    "gauge_algebra_residual", "latin_pair_action", "q_trace", "sd_part", "trace_constraints",
    "trace_weights",
]
