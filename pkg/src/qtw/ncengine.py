"""Noncommutative polynomials and the quadratic rewriting engine.

Generators are grouped in families (``z`` with a Greek and a Latin index,
``dz``, ``u`` ...).  An :class:`Alphabet` interns every concrete generator as
an integer; words are tuples of those integers and a :class:`NcPoly` maps
words to :class:`~qtw.exactcore.Laurent` coefficients.

A :class:`RewriteSystem` holds directed rules whose left sides are words of
length at least 2 and whose right sides are strictly smaller in the weighted
degree-lexicographic order induced by the family weights and precedence.
"""
from __future__ import annotations

import itertools
import sys
import time
from math import comb
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .exactcore import ONE, ZERO, Laurent, as_scalar, qpow, row_reduce

sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))

DEFAULT_MAX_STEPS = 10 ** 7

# family precedence: 0-forms first, differentials last
PRECEDENCE = (
    "z", "w", "y", "b", "bA", "bt", "X", "Xinv", "u", "ut", "v", "vt", "g", "ginv", "winv",
    "T", "D", "dz", "dginv", "dwinv", "du", "dut",
)


class RewriteError(Exception):
    pass


class NonInvertiblePivot(RewriteError):
    pass


class StepLimitExceeded(RewriteError):
    pass


class CentralityError(RewriteError):
    pass


class UndeclaredDifferential(RewriteError):
    pass


CLOSED = "closed"


@dataclass
class Family:
    name: str
    dims: tuple[int, ...]
    parity: int = 0
    rank: float = 0.0
    # name of the image family, CLOSED, a callable idx -> NcPoly, or None (undeclared)
    d: object = None
    label: str = ""
    # explicit index tuples; default is the full product of ``dims``
    indices: tuple | None = None
    weight: int = 1

    def __post_init__(self):
        if self.parity not in (0, 1):
            raise ValueError("parity must be 0 or 1")

    def index_tuples(self) -> list[tuple[int, ...]]:
        if self.indices is not None:
            return [tuple(i) for i in self.indices]
        return list(itertools.product(*(range(d) for d in self.dims)))


class Alphabet:
    """Families and their interned generators."""

    def __init__(self, families: Iterable[Family] = ()):
        self.families: dict[str, Family] = {}
        self.gens: list[tuple[str, tuple[int, ...]]] = []
        self.ids: dict[tuple[str, tuple[int, ...]], int] = {}
        self.keys: list[tuple] = []
        self.parity: list[int] = []
        self.weights: list[int] = []
        for f in families:
            self.add_family(f)

    def add_family(self, fam: Family) -> Family:
        if fam.name in self.families:
            old = self.families[fam.name]
            if old.dims != fam.dims or old.parity != fam.parity:
                raise ValueError(f"family {fam.name!r} redeclared with a different shape")
            return old
        if not fam.rank:
            fam.rank = PRECEDENCE.index(fam.name) if fam.name in PRECEDENCE else len(PRECEDENCE)
        self.families[fam.name] = fam
        for idx in fam.index_tuples():
            self.ids[(fam.name, idx)] = len(self.gens)
            self.gens.append((fam.name, idx))
            self.keys.append((fam.rank, fam.name, idx))
            self.parity.append(fam.parity)
            self.weights.append(fam.weight)
        return fam

    def family(self, name: str) -> Family:
        return self.families[name]

    def id(self, name: str, *idx: int) -> int:
        try:
            return self.ids[(name, tuple(idx))]
        except KeyError:
            if name not in self.families:
                raise KeyError(f"unknown generator family {name!r}") from None
            raise IndexError(f"index {tuple(i + 1 for i in idx)} out of range for {name!r}") from None

    def gen(self, name: str, *idx: int) -> "NcPoly":
        return NcPoly({(self.id(name, *idx),): ONE})

    def word_key(self, word: Sequence[int]) -> tuple:
        """Weighted degree, then length, then lexicographic by precedence."""
        w = self.weights
        return (sum(w[i] for i in word), len(word), tuple(self.keys[i] for i in word))

    def word_parity(self, word: Sequence[int]) -> int:
        return sum(self.parity[i] for i in word)

    def render_gen(self, i: int) -> str:
        name, idx = self.gens[i]
        if not idx:
            return name
        return f"{name}[{','.join(str(k + 1) for k in idx)}]"

    def render_word(self, word: Sequence[int]) -> str:
        return "*".join(self.render_gen(i) for i in word) if word else "1"

    def render(self, p: "NcPoly") -> str:
        if not p.terms:
            return "0"
        parts = []
        for w in sorted(p.terms, key=self.word_key):
            c = p.terms[w]
            cs = str(c)
            if not w:
                body = cs
            elif cs == "1":
                body = self.render_word(w)
            elif cs == "-1":
                body = "-" + self.render_word(w)
            else:
                if len(c.terms) > 1 or c.den is not None:
                    cs = f"({cs})"
                body = f"{cs}*{self.render_word(w)}"
            parts.append(body)
        out = parts[0]
        for s in parts[1:]:
            out += " - " + s[1:] if s.startswith("-") else " + " + s
        return out


class NcPoly:
    """Finite sum of coefficient * word; immutable by convention."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict | None = None):
        self.terms = {w: c for w, c in (terms or {}).items() if c}

    @classmethod
    def const(cls, c) -> "NcPoly":
        c = as_scalar(c)
        return cls({(): c} if c else {})

    @classmethod
    def _raw(cls, terms: dict) -> "NcPoly":
        obj = object.__new__(cls)
        obj.terms = terms
        return obj

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def _coerce(self, other):
        if isinstance(other, NcPoly):
            return other
        if isinstance(other, (Laurent, int)):
            return NcPoly.const(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        out = dict(self.terms)
        _accumulate(out, other.terms)
        return NcPoly._raw(out)

    __radd__ = __add__

    def __neg__(self):
        return NcPoly._raw({w: -c for w, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (Laurent, int)):
            c = as_scalar(other)
            if not c:
                return NcPoly._raw({})
            return NcPoly._raw({w: v * c for w, v in self.terms.items()})
        if not isinstance(other, NcPoly):
            return NotImplemented
        out: dict = {}
        for w1, c1 in self.terms.items():
            for w2, c2 in other.terms.items():
                w = w1 + w2
                s = out.get(w, ZERO) + c1 * c2
                if s:
                    out[w] = s
                else:
                    out.pop(w, None)
        return NcPoly._raw(out)

    def __rmul__(self, other):
        if isinstance(other, (Laurent, int)):
            return self * other
        return NotImplemented

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def degree(self) -> int:
        return max((len(w) for w in self.terms), default=-1)

    def map_coeffs(self, fn: Callable[[Laurent], Laurent]) -> "NcPoly":
        return NcPoly({w: fn(c) for w, c in self.terms.items()})

    def specialize(self, q0) -> "NcPoly":
        return self.map_coeffs(lambda c: c.specialize(q0))

    def coefficients(self):
        return self.terms.values()

    def __repr__(self):
        return f"NcPoly({len(self.terms)} terms)"


ZERO_POLY = NcPoly()
ONE_POLY = NcPoly.const(1)


def _accumulate(out: dict, terms: dict, scale: Laurent | None = None) -> None:
    for w, c in terms.items():
        if scale is not None:
            c = c * scale
        s = out.get(w, ZERO) + c
        if s:
            out[w] = s
        else:
            out.pop(w, None)


def _is_bracket_power(c: Laurent) -> bool:
    """Denominator is 1 or a power of (1 + q^2)."""
    if c.den is None:
        return True
    k, rem = divmod(len(c.den) - 1, 2)
    if rem:
        return False
    expected = [0] * (2 * k + 1)
    for j in range(k + 1):
        expected[2 * j] = comb(k, j)
    return list(c.den) == expected


# ---------------------------------------------------------------------------
# rewrite system
# ---------------------------------------------------------------------------

@dataclass
class ConfluenceReport:
    overlaps: int
    mismatches: list = field(default_factory=list)  # (word, difference NcPoly)
    seconds: float = 0.0

    @property
    def confluent(self) -> bool:
        return not self.mismatches


class RewriteSystem:
    """Directed rules plus memoized normal forms.

    ``rules`` maps a left-side word (length >= 2) to a dict of right-side
    words and coefficients.  After construction the rule table is treated as
    immutable; the normal-form cache is private state.
    """

    def __init__(self, alphabet: Alphabet, rules: dict | None = None,
                 relations: Sequence[NcPoly] = (), max_steps: int = DEFAULT_MAX_STEPS,
                 notes: Sequence[str] = ()):
        self.alphabet = alphabet
        self.rules: dict[tuple[int, ...], dict] = dict(rules or {})
        self.relations = list(relations)
        self.max_steps = max_steps
        self.notes = list(notes)
        self._memo: dict = {}
        self.steps = 0
        self._lens = sorted({len(k) for k in self.rules})

    # -- rule table --------------------------------------------------------
    def heads(self) -> list[tuple[int, ...]]:
        return list(self.rules)

    def is_reducible(self, word: Sequence[int]) -> bool:
        word = tuple(word)
        return any(word[i:i + k] in self.rules
                   for k in self._lens for i in range(len(word) - k + 1))

    def reset_cache(self) -> None:
        self._memo.clear()

    # -- normal forms ------------------------------------------------------
    def _bump(self):
        self.steps += 1
        if self.steps > self.max_steps:
            raise StepLimitExceeded(f"rewrite step bound {self.max_steps} exceeded")

    def nf_word(self, word: tuple) -> dict:
        memo = self._memo
        hit = memo.get(word)
        if hit is not None:
            return hit
        if len(word) <= 1:
            res = {word: ONE}
        else:
            res = {}
            last = word[-1]
            for u, c in self.nf_word(word[:-1]).items():
                _accumulate(res, self._append(u, last), c)
        memo[word] = res
        return res

    def _append(self, u: tuple, x: int) -> dict:
        rules = self.rules
        # u is normal, so the only possible redex is a suffix of u x
        for k in self._lens:
            if k > len(u) + 1:
                break
            rhs = rules.get(u[len(u) - k + 1:] + (x,))
            if rhs is not None:
                self._bump()
                res: dict = {}
                stem = u[:len(u) - k + 1]
                for r, c in rhs.items():
                    _accumulate(res, self.nf_word(stem + r), c)
                return res
        return {u + (x,): ONE}

    def normal_form(self, p: NcPoly) -> NcPoly:
        out: dict = {}
        for w, c in p.terms.items():
            _accumulate(out, self.nf_word(w), c)
        return NcPoly._raw(out)

    def reduce_with_strategy(self, p: NcPoly, strategy: str = "leftmost") -> NcPoly:
        """Unmemoized reduction applying one redex at a time.

        Used to cross-check strategy independence of :meth:`normal_form`.
        """
        todo = dict(p.terms)
        done: dict = {}
        steps = 0
        while todo:
            w, c = todo.popitem()
            pos = self._find_redex(w, strategy)
            if pos is None:
                _accumulate(done, {w: c})
                continue
            i, k = pos
            steps += 1
            if steps > self.max_steps:
                raise StepLimitExceeded("rewrite step bound exceeded")
            for r, rc in self.rules[w[i:i + k]].items():
                _accumulate(todo, {w[:i] + r + w[i + k:]: rc * c})
        return NcPoly._raw(done)

    def _find_redex(self, w: tuple, strategy: str):
        rng = range(len(w) - 1)
        if strategy == "rightmost":
            rng = reversed(rng)
        for i in rng:
            for k in reversed(self._lens):
                if w[i:i + k] in self.rules:
                    return i, k
        return None

    # -- checks ------------------------------------------------------------
    def soundness(self, relations: Sequence[NcPoly] | None = None) -> list[NcPoly]:
        """Normal forms of relations that fail to reduce to zero."""
        bad = []
        for rel in self.relations if relations is None else relations:
            nf = self.normal_form(rel)
            if nf:
                bad.append(nf)
        return bad

    def specialize(self, q0) -> "RewriteSystem":
        rules = {h: {w: c.specialize(q0) for w, c in r.items()} for h, r in self.rules.items()}
        rules = {h: {w: c for w, c in r.items() if c} for h, r in rules.items()}
        return RewriteSystem(self.alphabet, rules,
                             [r.specialize(q0) for r in self.relations], self.max_steps,
                             self.notes)


# ---------------------------------------------------------------------------
# compilation
# ---------------------------------------------------------------------------

def compile_rules(relations: Sequence[NcPoly], alphabet: Alphabet, *,
                  base: RewriteSystem | None = None, require_laurent: bool = True,
                  max_steps: int = DEFAULT_MAX_STEPS, notes: Sequence[str] = ()) -> RewriteSystem:
    """Turn relations (each ``lhs - rhs``) into a reduced rule table.

    Gaussian elimination over the scalar field solves every relation for its
    order-maximal word.  Leading words must have length at least 2.  With ``base``
    the new relations are first reduced by the existing rules and the two rule
    sets are merged (the base rules must not be reducible by the new ones).
    """
    rels = list(relations)
    if base is not None:
        rels_nf = [base.normal_form(r) for r in rels]
    else:
        rels_nf = rels
    rows = [dict(r.terms) for r in rels_nf if r]
    red = row_reduce(rows, key=alphabet.word_key)
    rules: dict = dict(base.rules) if base is not None else {}
    for pivot, row in red:
        if len(pivot) < 2:
            raise RewriteError(
                f"relation with leading word {alphabet.render_word(pivot)} of length "
                f"{len(pivot)} cannot be oriented as a quadratic rule")
        rhs = {}
        for w, c in row.items():
            if w == pivot:
                continue
            if require_laurent and not _is_bracket_power(c):
                raise NonInvertiblePivot(
                    f"non-invertible pivot: rule for {alphabet.render_word(pivot)} "
                    f"needs coefficient {c}")
            rhs[w] = -c
        if pivot in rules:
            raise RewriteError(f"duplicate leading word {alphabet.render_word(pivot)}")
        rules[pivot] = rhs
    all_rels = (base.relations if base is not None else []) + rels
    return RewriteSystem(alphabet, rules, all_rels, max_steps,
                         list(base.notes if base else []) + list(notes))


def _overlaps(rs: RewriteSystem, max_len: int | None = None):
    """Yield ``(word, h1, h2, k)`` for every suffix/prefix overlap of two heads."""
    by_prefix: dict[tuple, list] = {}
    for h in rs.rules:
        for k in range(1, len(h)):
            by_prefix.setdefault(h[:k], []).append(h)
    for h1 in rs.rules:
        for k in range(1, len(h1)):
            for h2 in by_prefix.get(h1[-k:], ()):
                word = h1 + h2[k:]
                if max_len is None or len(word) <= max_len:
                    yield word, h1, h2, k


def _s_poly(rs: RewriteSystem, h1: tuple, h2: tuple, k: int) -> NcPoly:
    left: dict = {}
    for r, c in rs.rules[h1].items():
        _accumulate(left, rs.nf_word(r + h2[k:]), c)
    right: dict = {}
    for r, c in rs.rules[h2].items():
        _accumulate(right, rs.nf_word(h1[:-k] + r), c)
    return NcPoly(left) - NcPoly(right)


def check_local_confluence(rs: RewriteSystem, families: Iterable[str] | None = None,
                           max_len: int | None = None) -> ConfluenceReport:
    """Resolve every overlap of two rule heads both ways."""
    t0 = time.perf_counter()
    alpha = rs.alphabet
    fams = set(families) if families is not None else None
    overlaps = 0
    mismatches = []
    for word, h1, h2, k in _overlaps(rs, max_len):
        if fams is not None and not all(alpha.gens[i][0] in fams for i in word):
            continue
        overlaps += 1
        diff = _s_poly(rs, h1, h2, k)
        if diff:
            mismatches.append((word, diff))
    return ConfluenceReport(overlaps, mismatches, time.perf_counter() - t0)


def complete(rs: RewriteSystem, max_degree: int,
             keep: Callable[[tuple], bool] | None = None) -> RewriteSystem:
    """Degree-truncated completion of a system with homogeneous rules.

    Unresolved overlaps are oriented as new rules, degree by degree, up to
    ``max_degree`` letters.  For homogeneous relations the result decides
    ideal membership exactly for polynomials of degree at most ``max_degree``:
    such a polynomial lies in the ideal iff its normal form vanishes.

    ``keep`` restricts the overlaps to words it accepts.  When every rule
    preserves a grading (say the multiset of families in a word), filtering by
    "contained in the grade of the target" keeps the decision exact for
    targets of that grade.
    """
    alpha = rs.alphabet
    for h, rhs in rs.rules.items():
        if any(len(w) != len(h) for w in rhs):
            raise RewriteError("completion needs homogeneous rules")
    cur = rs
    lo = min((len(h) for h in rs.rules), default=2) + 1
    for deg in range(lo, max_degree + 1):
        diffs = [_s_poly(cur, h1, h2, k) for word, h1, h2, k in _overlaps(cur, deg)
                 if len(word) == deg and (keep is None or keep(word))]
        rows = [dict(d.terms) for d in diffs if d]
        if not rows:
            continue
        rules = dict(cur.rules)
        for pivot, row in row_reduce(rows, key=alpha.word_key):
            rules[pivot] = {w: -c for w, c in row.items() if w != pivot}
        cur = RewriteSystem(alpha, rules, cur.relations, cur.max_steps,
                            cur.notes + [f"completed through degree {deg}"])
    return cur


def adjoin_inverse(rs: RewriteSystem, x: str, weights: dict[str, int],
                   inv_name: str | None = None, inv_rank: float | None = None,
                   verify: bool = True) -> RewriteSystem:
    """Adjoin the inverse family of the q-central family ``x``.

    ``weights[g] = m`` declares ``x g = q^m g x`` for every generator of
    family ``g`` (same-label generators of ``x`` itself included).  The
    declaration is checked against ``rs`` before the inverse is added.
    """
    alpha = rs.alphabet
    xf = alpha.family(x)
    inv_name = inv_name or x + "inv"
    if verify:
        for g, m in weights.items():
            for (fname, gidx), gid in list(alpha.ids.items()):
                if fname != g:
                    continue
                for xidx in xf.index_tuples():
                    xp = alpha.gen(x, *xidx)
                    gp = NcPoly({(gid,): ONE})
                    if rs.normal_form(xp * gp - gp * xp * qpow(m)):
                        raise CentralityError(
                            f"{x}{list(xidx)} is not q^{m}-central for family {g!r}")
    fam = Family(inv_name, xf.dims, xf.parity, inv_rank or 0.0, indices=xf.indices,
                 weight=xf.weight)
    alpha.add_family(fam)
    rels = []
    for xidx in xf.index_tuples():
        xp = alpha.gen(x, *xidx)
        xi = alpha.gen(inv_name, *xidx)
        rels.append(xp * xi - ONE_POLY)
        rels.append(xi * xp - ONE_POLY)
        for g, m in weights.items():
            for (fname, gidx), gid in list(alpha.ids.items()):
                if fname != g:
                    continue
                gp = NcPoly({(gid,): ONE})
                if g == x and gidx == xidx:
                    continue
                rels.append(xi * gp - gp * xi * qpow(-m))
        for yidx in xf.index_tuples():
            if yidx != xidx and x in weights:
                m = weights[x]
                yi = alpha.gen(inv_name, *yidx)
                rels.append(xi * yi - yi * xi * qpow(m))
    return compile_rules(rels, alpha, base=rs, max_steps=rs.max_steps,
                         notes=[f"adjoined {inv_name} with weights {weights}"])


# ---------------------------------------------------------------------------
# exterior derivative
# ---------------------------------------------------------------------------

def exterior_d(p: NcPoly, alphabet: Alphabet) -> NcPoly:
    """Graded Leibniz extension of the per-family differential."""
    out: dict = {}
    cache: dict[int, NcPoly] = {}

    def dgen(i: int) -> NcPoly:
        if i in cache:
            return cache[i]
        name, idx = alphabet.gens[i]
        fam = alphabet.families[name]
        if fam.d is None:
            raise UndeclaredDifferential(f"family {name!r} has no declared differential")
        if fam.d == CLOSED:
            res = ZERO_POLY
        elif callable(fam.d):
            res = fam.d(idx)
        else:
            res = alphabet.gen(fam.d, *idx)
        cache[i] = res
        return res

    for w, c in p.terms.items():
        sign = 1
        for k, g in enumerate(w):
            dg = dgen(g)
            if dg:
                coef = c if sign > 0 else -c
                for dw, dc in dg.terms.items():
                    nw = w[:k] + dw + w[k + 1:]
                    _accumulate(out, {nw: dc * coef})
            if alphabet.parity[g]:
                sign = -sign
    return NcPoly._raw(out)


def form_degree(p: NcPoly, alphabet: Alphabet) -> set[int]:
    return {alphabet.word_parity(w) for w in p.terms}


# ---------------------------------------------------------------------------
# quantum matrices
# ---------------------------------------------------------------------------

def rtt_relations(alpha: Alphabet, r, name: str = "T") -> list[NcPoly]:
    """``R T T' - T T' R`` for every index quadruple, as ``lhs - rhs``."""
    n = r.n
    t = lambda i, j: alpha.gen(name, i, j)
    rels = []
    for i, k, m, p in itertools.product(range(n), repeat=4):
        poly = ZERO_POLY
        for l, s in itertools.product(range(n), repeat=2):
            v = r(i, k, l, s)
            if v:
                poly = poly + t(l, m) * t(s, p) * v
            v = r(l, s, m, p)
            if v:
                poly = poly - t(i, l) * t(k, s) * v
        if poly:
            rels.append(poly)
    return rels


def build_rtt_system(n: int, q0=None) -> RewriteSystem:
    """Quantum matrix algebra of GL_q(n) from the RTT relations."""
    from .rmx import build_glq_rmatrix

    r = build_glq_rmatrix(n, q0)
    alpha = Alphabet([Family("T", (n, n))])
    rs = compile_rules(rtt_relations(alpha, r), alpha, notes=[f"RTT relations for GL_q({n})"])
    return rs
