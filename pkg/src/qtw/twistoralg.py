"""The q-twistor algebra, its derivatives, and the t'Hooft parameter sector.

The presentation has three layers:

* twistors ``z[alpha,a]``, their differentials ``dz`` and the partial
  derivatives ``D[a,alpha]`` (Weyl-type algebra with an inhomogeneous
  exchange rule ``D z -> delta + z D``);
* isotropic 6-vectors ``b[i,c,d]`` (``c < d``, ``b[i,d,c] = -q^-1 b[i,c,d]``)
  whose quadratic relations are the linear dependencies among products of the
  twistor bilinears ``y``, so that ``(b, b) = 0`` is one of them;
* primitive ``X[i]`` and ``Xinv[i]`` standing for ``(y, b^i)`` and its
  inverse, with postulated exchange weights.  The link with the composite
  ``eps_q y b`` is a separate, explicit check.

Laurent coefficients live in the field generated by ``q`` and ``1/(1+q^2)``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .exactcore import (
    DOWN, LATIN, ONE, ZERO, Laurent, Tensor, nullspace, qpow, row_reduce,
)
from .ncengine import (
    CLOSED, Alphabet, Family, NcPoly, ONE_POLY, RewriteError, RewriteSystem,
    ZERO_POLY, check_local_confluence, compile_rules, exterior_d,
)
from .rmx import (
    EQ9_READING, RMatrix, build_glq_rmatrix, build_q_epsilon4, build_slq2_rmatrix,
    epsilon_down, epsilon_up, projectors,
)

G2 = range(2)
L4 = range(4)
PAIRS = tuple((a, b) for a in L4 for b in L4 if a < b)
PAIR_INDEX = {p: k for k, p in enumerate(PAIRS)}

# postulated exchange weights of X (X g = q^m g X); Xinv uses -m
X_WEIGHTS = {"z": 0, "b": 0, "X": 0, "Xinv": 0, "dz": 2}
# D X = (D |> X) + q^m X D
X_DERIVATIVE_WEIGHT = 2
B_EXCHANGE_MODELS = ("braided", "commuting")


def _scalar(x, q0):
    x = x if isinstance(x, Laurent) else Laurent.const(x)
    return x.specialize(q0) if q0 is not None else x


@dataclass
class BSector:
    """Instanton parameters ``b^i`` and the model for their exchange with z."""

    k_inst: int = 1
    isotropic: bool = True
    exchange: str = "braided"
    # only used by the commuting model: dz b = q^m b dz
    dz_weight: int = 0
    # D X = (D |> X) + q^m X D; the Leibniz twist of D past Xinv is q^-m
    derivative_weight: int = X_DERIVATIVE_WEIGHT

    def __post_init__(self):
        if self.k_inst < 1:
            raise ValueError("k_inst must be positive")
        if self.exchange not in B_EXCHANGE_MODELS:
            raise ValueError(f"unknown b exchange model {self.exchange!r}")


@dataclass
class TwistorSystem:
    rs: RewriteSystem
    r_greek: RMatrix
    r_latin: RMatrix
    eps_up: Tensor
    eps_down: Tensor
    eps4: Tensor
    q0: object = None
    bsector: BSector | None = None
    relation_sets: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def alphabet(self) -> Alphabet:
        return self.rs.alphabet

    @property
    def k_inst(self) -> int:
        return self.bsector.k_inst if self.bsector else 0

    def scalar(self, x) -> Laurent:
        return _scalar(x, self.q0)

    def qp(self, m: int) -> Laurent:
        return self.scalar(qpow(m))

    # -- generators ----------------------------------------------------------
    def z(self, al: int, a: int) -> NcPoly:
        return self.alphabet.gen("z", al, a)

    def dz(self, al: int, a: int) -> NcPoly:
        return self.alphabet.gen("dz", al, a)

    def D(self, a: int, al: int) -> NcPoly:
        return self.alphabet.gen("D", a, al)

    def b(self, i: int, c: int, d: int) -> NcPoly:
        if c == d:
            return ZERO_POLY
        if c < d:
            return self.alphabet.gen("b", i, c, d)
        return self.alphabet.gen("b", i, d, c) * self.scalar(-qpow(-1))

    def X(self, i: int) -> NcPoly:
        return self.alphabet.gen("X", i)

    def Xinv(self, i: int) -> NcPoly:
        return self.alphabet.gen("Xinv", i)

    def nf(self, p: NcPoly) -> NcPoly:
        return self.rs.normal_form(p)

    # -- composites ----------------------------------------------------------
    def y(self, a: int, c: int) -> NcPoly:
        key = ("y", a, c)
        if key not in self._cache:
            self._cache[key] = self.nf(_y_raw(self.alphabet, self.eps_down, a, c))
        return self._cache[key]

    def x_composite(self, i: int) -> NcPoly:
        key = ("X", i)
        if key not in self._cache:
            self._cache[key] = self.nf(_x_raw(self.alphabet, self.eps_down, self.eps4, i,
                                              self.q0))
        return self._cache[key]

    def phi(self) -> NcPoly:
        return sum((self.Xinv(i) for i in range(self.k_inst)), ZERO_POLY)

    def x_power(self, i: int, n: int) -> NcPoly:
        key = ("Xpow", i, n)
        if key not in self._cache:
            self._cache[key] = ONE_POLY if n == 0 else self.nf(
                self.x_composite(i) * self.x_power(i, n - 1))
        return self._cache[key]

    # -- derivative action ---------------------------------------------------
    def partial(self, f: NcPoly, a: int, al: int) -> NcPoly:
        """``D[a,al] |> f``: the derivative-free part of ``nf(D f)``."""
        _require_function(self.alphabet, f)
        full = self.nf(self.D(a, al) * f)
        alpha = self.alphabet
        return NcPoly({w: c for w, c in full.terms.items()
                       if not any(alpha.gens[g][0] == "D" for g in w)})

    def d(self, p: NcPoly) -> NcPoly:
        return self.nf(exterior_d(p, self.alphabet))

    def clear_inverses(self, p: NcPoly) -> NcPoly:
        """Multiply by powers of X and substitute the composite ``eps_q y b``.

        Every ``X``/``Xinv`` letter is moved to the front with its exchange
        weight, the element is multiplied on the left by the smallest power of
        ``X`` that makes all exponents non-negative, and the primitive ``X`` is
        replaced by its composite.  Terms are grouped by the instanton label
        they involve and each group is cleared separately; a term mixing two
        labels is rejected.  The result vanishes exactly when ``p`` does in
        the localized algebra.
        """
        alpha = self.alphabet
        groups: dict = {}
        for w, c in p.terms.items():
            label = None
            exp = 0
            rest = []
            shift = 0
            for g in w:
                name, idx = alpha.gens[g]
                if name in ("b", "X", "Xinv"):
                    if label is not None and idx[0] != label:
                        raise RewriteError("cannot clear a term mixing instanton labels")
                    label = idx[0]
                if name in ("X", "Xinv"):
                    s = 1 if name == "X" else -1
                    for h in rest:
                        hname = alpha.gens[h][0]
                        if hname not in X_WEIGHTS:
                            _no_weight(alpha, h)
                        shift -= s * X_WEIGHTS[hname]
                    exp += s
                else:
                    rest.append(g)
            groups.setdefault(label, {}).setdefault(exp, {})
            _add_term(groups[label][exp], tuple(rest), c * self.qp(shift))
        out = ZERO_POLY
        for label, by_exp in groups.items():
            low = min(0, min(by_exp))
            for exp, terms in sorted(by_exp.items()):
                rest = NcPoly(terms)
                if label is None:
                    out = out + rest
                else:
                    out = out + self.nf(self.x_power(label, exp - low) * rest)
        return out


def _add_term(acc: dict, w, c) -> None:
    v = acc.get(w, ZERO) + c
    if v:
        acc[w] = v
    else:
        acc.pop(w, None)


def _no_weight(alpha, h):
    raise RewriteError(f"no exchange weight of X with {alpha.render_gen(h)}")


def _require_function(alpha: Alphabet, f: NcPoly) -> None:
    for w in f.terms:
        for g in w:
            if alpha.gens[g][0] in ("dz", "D"):
                raise ValueError("derivative action is defined on functions of z, b, X only")


def _y_raw(alpha, eps_down, a, c):
    p = ZERO_POLY
    for al, be in itertools.product(G2, G2):
        e = eps_down.data[al, be]
        if e:
            p = p + alpha.gen("z", al, a) * alpha.gen("z", be, c) * e
    return p


def _b_entry(alpha, i, c, d, q0):
    if c == d:
        return ZERO_POLY
    if c < d:
        return alpha.gen("b", i, c, d)
    return alpha.gen("b", i, d, c) * _scalar(-qpow(-1), q0)


def _x_raw(alpha, eps_down, eps4, i, q0):
    p = ZERO_POLY
    for a, b, c, d in itertools.product(L4, repeat=4):
        e = eps4.data[a, b, c, d]
        if e:
            p = p + _y_raw(alpha, eps_down, a, b) * _b_entry(alpha, i, c, d, q0) * e
    return p


# ---------------------------------------------------------------------------
# defining relations
# ---------------------------------------------------------------------------

def _gen(alpha, name):
    return lambda *idx: alpha.gen(name, *idx)


def twistor_relations(alpha, rg: RMatrix, rl: RMatrix) -> dict[str, list[NcPoly]]:
    """The exchange relations of z, dz and D as ``lhs - rhs`` polynomials."""
    z, dz, D = _gen(alpha, "z"), _gen(alpha, "dz"), _gen(alpha, "D")
    rels: dict[str, list[NcPoly]] = {"eq4": [], "eq5": [], "eq6": [], "eq7": [], "eq8": []}
    for al, be, a, b in itertools.product(G2, G2, L4, L4):
        p = ZERO_POLY
        for mu, nu in itertools.product(G2, G2):
            if rg(al, be, mu, nu):
                p = p + z(mu, a) * z(nu, b) * rg(al, be, mu, nu)
        for c, d in itertools.product(L4, L4):
            if rl(d, c, b, a):
                p = p - z(al, c) * z(be, d) * rl(d, c, b, a)
        rels["eq4"].append(p)
        p5 = z(al, a) * dz(be, b)
        p6 = dz(al, a) * dz(be, b)
        for mu, nu, c, d in itertools.product(G2, G2, L4, L4):
            v = rg(al, be, mu, nu) * rl(d, c, b, a)
            if v:
                p5 = p5 - dz(mu, c) * z(nu, d) * v
                p6 = p6 + dz(mu, c) * dz(nu, d) * v
        rels["eq5"].append(p5)
        rels["eq6"].append(p6)
    if "D" not in alpha.families:
        return rels
    for a, b, al, be in itertools.product(L4, L4, G2, G2):
        p = ZERO_POLY
        for c, d in itertools.product(L4, L4):
            if rl(a, b, c, d):
                p = p + D(c, al) * D(d, be) * rl(a, b, c, d)
        for mu, nu in itertools.product(G2, G2):
            if rg(nu, mu, be, al):
                p = p - D(a, mu) * D(b, nu) * rg(nu, mu, be, al)
        rels["eq7"].append(p)
    for a, al, be, b in itertools.product(L4, G2, G2, L4):
        p = D(a, al) * z(be, b)
        if a == b and al == be:
            p = p - ONE_POLY
        for mu, nu, c, d in itertools.product(G2, G2, L4, L4):
            v = rg(be, mu, al, nu) * rl(d, a, c, b)
            if v:
                p = p - z(nu, d) * D(c, mu) * v
        rels["eq8"].append(p)
    return rels


def eq10_residuals(ts: TwistorSystem) -> dict:
    """``eps_q^{abcd} z[be,b] z[mu,c] z[nu,d]`` for every free (a, be, mu, nu)."""
    out = {}
    for a, be, mu, nu in itertools.product(L4, G2, G2, G2):
        p = ZERO_POLY
        for b, c, d in itertools.product(L4, L4, L4):
            e = ts.eps4.data[a, b, c, d]
            if e:
                p = p + ts.z(be, b) * ts.z(mu, c) * ts.z(nu, d) * e
        out[(a, be, mu, nu)] = ts.nf(p)
    return out


# ---------------------------------------------------------------------------
# the b sector
# ---------------------------------------------------------------------------

def _pair_vector(c, d, q0):
    if c == d:
        return {}
    if c < d:
        return {PAIR_INDEX[(c, d)]: ONE}
    return {PAIR_INDEX[(d, c)]: _scalar(-qpow(-1), q0)}


def y_dependencies(rs_z: RewriteSystem, eps_down: Tensor) -> list[dict]:
    """Linear relations among the 36 ordered products ``y_P y_Q``."""
    alpha = rs_z.alphabet
    prods = {(p1, p2): rs_z.normal_form(_y_raw(alpha, eps_down, *p1) * _y_raw(alpha, eps_down, *p2))
             for p1 in PAIRS for p2 in PAIRS}
    keys = list(prods)
    words = sorted({w for v in prods.values() for w in v.terms})
    rows = [{k: prods[k].terms[w] for k in keys if w in prods[k].terms} for w in words]
    return nullspace(rows, keys)


def isotropy_form(alpha, eps4, i, q0, name="b") -> NcPoly:
    """``(b^i, b^i) = eps_q^{abcd} b_ab b_cd``."""
    p = ZERO_POLY
    for a, b, c, d in itertools.product(L4, repeat=4):
        e = eps4.data[a, b, c, d]
        if e:
            p = p + _b_entry(alpha, i, a, b, q0) * _b_entry(alpha, i, c, d, q0) * e
    return p


def b_quadratic_relations(alpha, deps, k_inst, isotropic):
    """Exchange relations among the b^i, with or without isotropy.

    ``deps`` spans the exchange relations together with ``(b, b) = 0``;
    without isotropy only the two-term (exchange) rows of its reduced
    echelon form are kept.  Different labels commute.
    """
    rels = []
    for i in range(k_inst):
        polys = []
        for v in deps:
            p = ZERO_POLY
            for (p1, p2), c in v.items():
                p = p + alpha.gen("b", i, *p1) * alpha.gen("b", i, *p2) * c
            polys.append(p)
        if isotropic:
            rels.extend(polys)
        else:
            reduced = row_reduce([dict(p.terms) for p in polys], key=alpha.word_key)
            rels.extend(NcPoly(row) for _, row in reduced if len(row) == 2)
        for j in range(i + 1, k_inst):
            for p1, p2 in itertools.product(PAIRS, PAIRS):
                bi, bj = alpha.gen("b", i, *p1), alpha.gen("b", j, *p2)
                rels.append(bi * bj - bj * bi)
    return rels


def _braid_matrix(rl_a: RMatrix, rl_b: RMatrix, q0):
    """z_a b_P = sum b_Q z_c M[(c, Q), (a, P)]."""
    m: dict = {}
    for a, (b, e) in itertools.product(L4, PAIRS):
        for c, f, g, d in itertools.product(L4, L4, L4, L4):
            v = rl_a(g, f, e, d) * rl_b(d, c, b, a)
            if not v:
                continue
            for Q, s in _pair_vector(c, f, q0).items():
                key = ((g, Q), (a, PAIR_INDEX[(b, e)]))
                m[key] = m.get(key, ZERO) + v * s
    return {k: v for k, v in m.items() if v}


def _invert(m: dict) -> dict:
    idx = [(c, Q) for c in L4 for Q in range(6)]
    n = len(idx)
    aug = [[m.get((r, c), ZERO) for c in idx] + [ONE if i == j else ZERO for j in range(n)]
           for i, r in enumerate(idx)]
    for col in range(n):
        piv = next(r for r in range(col, n) if aug[r][col])
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = aug[col][col].inverse()
        aug[col] = [x * inv for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col]:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return {(idx[i], idx[j]): aug[i][n + j] for i in range(n) for j in range(n) if aug[i][n + j]}


def b_exchange_relations(alpha, bs: BSector, rl: RMatrix, q0) -> list[NcPoly]:
    """Exchange of b^i with z, dz and D under the chosen model.

    The braided model moves ``z`` past ``b`` with two inverse Latin
    R-matrices (the pattern of a pair of extra twistor rows); ``dz`` follows
    from ``d b = 0`` and ``D`` uses the inverse braid so that the
    inhomogeneous term of ``D z`` stays consistent.
    """
    z, dz, D = _gen(alpha, "z"), _gen(alpha, "dz"), _gen(alpha, "D")
    has_d = "D" in alpha.families
    rels = []
    if bs.exchange == "braided":
        rli = rl.inverse()
        m = _braid_matrix(rli, rli, q0)
        mi = _invert(m)
        by_col: dict = {}
        for (row, col), v in m.items():
            by_col.setdefault(col, []).append((row, v))
        by_row: dict = {}
        for ((e, R), (c, Q)), v in mi.items():
            by_row.setdefault((e, Q), []).append(((R, c), v))
    for i in range(bs.k_inst):
        bg = lambda P: alpha.gen("b", i, *PAIRS[P])
        for al, a, P in itertools.product(G2, L4, range(6)):
            for g, name in ((z, "z"), (dz, "dz")):
                p = g(al, a) * bg(P)
                if bs.exchange == "braided":
                    for (c, Q), v in by_col.get((a, P), ()):
                        p = p - bg(Q) * g(al, c) * v
                else:
                    w = 0 if name == "z" else bs.dz_weight
                    p = p - bg(P) * g(al, a) * _scalar(qpow(w), q0)
                rels.append(p)
        if not has_d:
            continue
        for e, al, Q in itertools.product(L4, G2, range(6)):
            p = D(e, al) * bg(Q)
            if bs.exchange == "braided":
                for (R, c), v in by_row.get((e, Q), ()):
                    p = p - bg(R) * D(c, al) * v
            else:
                p = p - bg(Q) * D(e, al)
            rels.append(p)
    return rels


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def _alphabet(bs: BSector | None, derivatives: bool) -> Alphabet:
    fams = [Family("z", (2, 4), d="dz"), Family("dz", (2, 4), parity=1, d=CLOSED)]
    if derivatives:
        # weight 4 keeps the D Xinv rule decreasing
        fams.append(Family("D", (4, 2), weight=4))
    if bs is not None:
        fams.append(Family("b", (bs.k_inst, 4, 4), d=CLOSED,
                           indices=tuple((i,) + p for i in range(bs.k_inst) for p in PAIRS)))
    return Alphabet(fams)


@lru_cache(maxsize=None)
def _z_system(q0):
    rg, rl = build_slq2_rmatrix(q0), build_glq_rmatrix(4, q0)
    alpha = Alphabet([Family("z", (2, 4)), Family("dz", (2, 4), parity=1)])
    rels = twistor_relations(alpha, rg, rl)["eq4"]
    return compile_rules(rels, alpha)


def build_twistor_system(bsector: BSector | None = None, *, derivatives: bool = True,
                         q0=None, latin_r: RMatrix | None = None,
                         with_inverses: bool = True) -> TwistorSystem:
    """Compile the twistor presentation, optionally with the b sector.

    ``latin_r`` replaces the Latin R-matrix (used for negative controls);
    ``q0`` specializes every scalar before compilation.
    """
    rg = build_slq2_rmatrix(q0)
    rl = latin_r if latin_r is not None else build_glq_rmatrix(4, q0)
    eps4 = build_q_epsilon4(EQ9_READING, q0)
    eu, ed = epsilon_up(q0), epsilon_down(q0)
    alpha = _alphabet(bsector, derivatives)
    sets = twistor_relations(alpha, rg, rl)
    if not derivatives:
        sets.pop("eq7"), sets.pop("eq8")
    notes = [f"Eq-9 reading: {EQ9_READING}"]
    all_rels = [p for v in sets.values() for p in v]
    if bsector is not None:
        deps = y_dependencies(_z_system(q0), ed)
        sets["bb"] = b_quadratic_relations(alpha, deps, bsector.k_inst, bsector.isotropic)
        sets["zb"] = b_exchange_relations(alpha, bsector, rl, q0)
        all_rels += sets["bb"] + sets["zb"]
        notes.append(f"b exchange model: {bsector.exchange}; isotropy imposed: {bsector.isotropic}")
    rs = compile_rules(all_rels, alpha)
    ts = TwistorSystem(rs, rg, rl, eu, ed, eps4, q0, bsector, sets, notes)
    if bsector is not None and with_inverses:
        ts = _adjoin_x(ts, derivatives)
    return ts


def _adjoin_x(ts: TwistorSystem, derivatives: bool) -> TwistorSystem:
    """Add primitive X^i and Xinv^i with their postulated exchange rules."""
    alpha = ts.alphabet
    k = ts.k_inst
    xc = [ts.x_composite(i) for i in range(k)]
    dx = [ts.d(xc[i]) for i in range(k)]
    dpart = {}
    if derivatives:
        for i in range(k):
            for a, al in itertools.product(L4, G2):
                dpart[(i, a, al)] = ts.partial(xc[i], a, al)
    alpha.add_family(Family("X", (k,), d=lambda idx: dx[idx[0]]))

    def d_inv(idx):
        xi = alpha.gen("Xinv", *idx)
        return -(xi * dx[idx[0]] * xi)

    alpha.add_family(Family("Xinv", (k,), d=d_inv))
    qp = ts.qp
    rels = []
    for i in range(k):
        x, xi = alpha.gen("X", i), alpha.gen("Xinv", i)
        rels += [x * xi - ONE_POLY, xi * x - ONE_POLY]
        for (fname, idx), gid in list(alpha.ids.items()):
            g = NcPoly({(gid,): ONE})
            if fname in ("z", "b", "dz"):
                m = X_WEIGHTS[fname]
                rels.append(x * g - g * x * qp(m))
                rels.append(xi * g - g * xi * qp(-m))
            elif fname in ("X", "Xinv") and idx[0] > i:
                rels.append(x * g - g * x)
                rels.append(xi * g - g * xi)
        if derivatives:
            m = ts.bsector.derivative_weight
            for a, al in itertools.product(L4, G2):
                dd = alpha.gen("D", a, al)
                dp = dpart[(i, a, al)]
                rels.append(dd * x - dp - x * dd * qp(m))
                rels.append(dd * xi - xi * dd * qp(-m) + xi * dp * xi * qp(-m))
    rs = compile_rules(rels, alpha, base=ts.rs,
                       notes=["adjoined X, Xinv with weights " + str(X_WEIGHTS)])
    ts.relation_sets["x"] = rels
    out = TwistorSystem(rs, ts.r_greek, ts.r_latin, ts.eps_up, ts.eps_down, ts.eps4,
                        ts.q0, ts.bsector, ts.relation_sets, ts.notes + rs.notes[-1:])
    out._cache.update({key: v for key, v in ts._cache.items() if key[0] in ("y", "X")})
    return out


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------

def soundness(ts: TwistorSystem, names=None) -> dict[str, list[NcPoly]]:
    """Per relation family, the normal forms that fail to vanish."""
    out = {}
    for name, rels in ts.relation_sets.items():
        if names is not None and name not in names:
            continue
        out[name] = [r for r in (ts.nf(p) for p in rels) if r]
    return out


def confluence(ts: TwistorSystem, families=None):
    return check_local_confluence(ts.rs, families)


def y_components(ts: TwistorSystem) -> Tensor:
    t = Tensor.zeros(((LATIN, DOWN), (LATIN, DOWN)), ZERO_POLY)
    for a, c in itertools.product(L4, L4):
        t.data[a, c] = ts.y(a, c)
    return t


def projection_residuals(ts: TwistorSystem) -> dict:
    """``y_ab - P-^{dc}_{ba} y_cd`` for every (a, b)."""
    _, pm = projectors(ts.r_latin)
    out = {}
    for a, b in itertools.product(L4, L4):
        p = ts.y(a, b)
        for c, d in itertools.product(L4, L4):
            v = pm.data[d, c, b, a]
            if v:
                p = p - ts.y(c, d) * v
        out[(a, b)] = ts.nf(p)
    return out


def yy_residual(ts: TwistorSystem) -> NcPoly:
    p = ZERO_POLY
    for a, b, c, d in itertools.product(L4, repeat=4):
        e = ts.eps4.data[a, b, c, d]
        if e:
            p = p + ts.y(a, b) * ts.y(c, d) * e
    return ts.nf(p)


def bb_residual(ts: TwistorSystem, i: int = 0) -> NcPoly:
    return ts.nf(isotropy_form(ts.alphabet, ts.eps4, i, ts.q0))


def substitution_check(ts: TwistorSystem, i: int = 0, *,
                       same_label: bool = True) -> dict[str, NcPoly]:
    """Residuals of the X relations with X replaced by ``eps_q y b``.

    Keys name the partner family; each value is the normal form of
    ``X g - q^m g X`` summed over the family with independent random-free
    weights (every generator contributes its own word set, so a single zero
    means all vanish).  With ``same_label`` only b^i is used as a partner;
    otherwise every b^j is; in the braided model that fails for k_inst > 1.
    """
    xc = ts.x_composite(i)
    out = {}
    alpha = ts.alphabet
    for fname in ("z", "b", "dz"):
        m = X_WEIGHTS[fname]
        res = ZERO_POLY
        for (name, idx), gid in alpha.ids.items():
            if name != fname or (name == "b" and same_label and idx[0] != i):
                continue
            g = NcPoly({(gid,): ONE})
            res = res + ts.nf(xc * g - g * xc * ts.qp(m))
        out[fname] = res
    if "D" in alpha.families:
        res = ZERO_POLY
        for a, al in itertools.product(L4, G2):
            dd = ts.D(a, al)
            full = ts.nf(dd * xc)
            braid = NcPoly({w: c for w, c in full.terms.items()
                            if w and alpha.gens[w[-1]][0] == "D"})
            res = res + ts.nf(braid - xc * dd * ts.qp(X_DERIVATIVE_WEIGHT))
        out["D"] = res
    return out


def scan_b_exchange(q0=None) -> list[dict]:
    """Test the X relations on the composite for each b exchange model.

    The commuting model is scanned over dz weights {0, 2, 4}; the braided
    model is the one used by default.
    """
    rows = []
    candidates = [BSector(1, True, "commuting", m) for m in (0, 2, 4)]
    candidates.append(BSector(1, True, "braided"))
    for bs in candidates:
        try:
            ts = build_twistor_system(bs, q0=q0, with_inverses=False)
        except RewriteError as exc:
            rows.append({"model": bs, "error": str(exc)})
            continue
        conf = confluence(ts)
        res = substitution_check(ts)
        rows.append({"model": bs, "confluent": conf.confluent,
                     "mismatches": len(conf.mismatches),
                     "residual_zero": {k: not v for k, v in res.items()}})
    return rows


# ---------------------------------------------------------------------------
# Laplace operator
# ---------------------------------------------------------------------------

def laplace_first_form(ts: TwistorSystem, f: NcPoly) -> dict:
    """``q/(1+q^2) eps^{al be} D[b,be] |> D[a,al] |> f`` for every (b, a)."""
    pref = ts.scalar(qpow(1)) * ts.scalar(qpow(0) + qpow(2)).inverse()
    first = {(a, al): ts.partial(f, a, al) for a, al in itertools.product(L4, G2)}
    out = {}
    for b, a in itertools.product(L4, L4):
        p = ZERO_POLY
        for al, be in itertools.product(G2, G2):
            e = ts.eps_up.data[al, be]
            if e and first[(a, al)]:
                p = p + ts.partial(first[(a, al)], b, be) * e
        out[(b, a)] = p * pref
    return out


LEIBNIZ_TWISTS = (-2, 0, 2)


@dataclass
class SixVectorCalculus:
    """Formal first-order derivative ``d6[b,a]`` on words in y, b, X, Xinv.

    ``d6[b,a] y_cd = P-^{ab}_{dc}``, ``d6[b,a] Xinv = -q^-2 Xinv^2 bup^{ab}``
    with ``bup^{ab} = eps_q^{cdef} P-^{ab}_{dc} b_ef``, ``d6 b = 0``, and
    the twisted Leibniz rule ``d6(f g) = (d6 f) g + lam(f) f (d6 g)`` where
    ``lam`` is ``q^twist`` for Xinv, ``q^-twist`` for X and 1 otherwise.
    Words are tuples of ('y', a, c) / ('b', i, P) / ('X', i) / ('Xinv', i).
    """

    ts: TwistorSystem
    twist: int = 0

    def __post_init__(self):
        _, self.pm = projectors(self.ts.r_latin)

    def bup(self, i, a, b):
        out = {}
        eps4 = self.ts.eps4
        for c, d, e, f in itertools.product(L4, repeat=4):
            v = eps4.data[c, d, e, f]
            if not v:
                continue
            pv = self.pm.data[a, b, d, c]
            if not pv:
                continue
            for P, s in _pair_vector(e, f, self.ts.q0).items():
                key = (("b", i, P),)
                out[key] = out.get(key, ZERO) + v * pv * s
        return {k: v for k, v in out.items() if v}

    def d_letter(self, letter, b, a) -> dict:
        kind = letter[0]
        if kind == "y":
            v = self.pm.data[a, b, letter[2], letter[1]]
            return {(): v} if v else {}
        if kind == "b":
            return {}
        i = letter[1]
        coeff = -self.ts.qp(-2)
        if kind == "Xinv":
            return {(("Xinv", i), ("Xinv", i)) + w: c * coeff for w, c in self.bup(i, a, b).items()}
        # X = Xinv^-1: d6 X = -X (d6 Xinv) X up to the twist
        lam = self.ts.qp(-self.twist)
        return {(("X", i),) + (("Xinv", i), ("Xinv", i)) + w + (("X", i),): -c * coeff * lam
                for w, c in self.bup(i, a, b).items()}

    def weight(self, letter) -> Laurent:
        if letter[0] == "Xinv":
            return self.ts.qp(self.twist)
        if letter[0] == "X":
            return self.ts.qp(-self.twist)
        return ONE

    def apply(self, poly: dict, b, a) -> dict:
        out: dict = {}
        for w, c in poly.items():
            lam = ONE
            for k, letter in enumerate(w):
                for dw, dc in self.d_letter(letter, b, a).items():
                    nw = w[:k] + dw + w[k + 1:]
                    out[nw] = out.get(nw, ZERO) + c * lam * dc
                lam = lam * self.weight(letter)
        return {k: v for k, v in out.items() if v}

    def realize(self, poly: dict) -> NcPoly:
        """Map formal words into the twistor system and normal-form."""
        ts = self.ts
        out = ZERO_POLY
        for w, c in poly.items():
            p = ONE_POLY
            for letter in w:
                kind = letter[0]
                if kind == "y":
                    g = ts.y(letter[1], letter[2])
                elif kind == "b":
                    g = ts.alphabet.gen("b", letter[1], *PAIRS[letter[2]])
                else:
                    g = ts.alphabet.gen(kind, letter[1])
                p = p * g
            out = out + p * c
        return ts.nf(out)


def laplace_second_form(ts: TwistorSystem, f: dict, twist: int) -> dict:
    """``(d6^{ba} + 1/2 y_cd d6^{dc} d6^{ba}) f`` realized in the twistor system."""
    calc = SixVectorCalculus(ts, twist)
    half = Laurent.const(Fraction(1, 2))
    out = {}
    for b, a in itertools.product(L4, L4):
        first = calc.apply(f, b, a)
        total = dict(first)
        for c, d in itertools.product(L4, L4):
            second = calc.apply(first, d, c)
            for w, v in second.items():
                key = (("y", c, d),) + w
                total[key] = total.get(key, ZERO) + v * half
        out[(b, a)] = calc.realize({k: v for k, v in total.items() if v})
    return out
