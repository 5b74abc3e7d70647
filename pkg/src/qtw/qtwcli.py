"""Expression parser, suite runner and report emitter behind the ``qtw`` command."""
from __future__ import annotations

import argparse
import itertools
import json
import re
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from . import gaugeforms as gf
from . import instantons as inst
from . import rmx
from . import twistoralg as tw
from .exactcore import Laurent, Tensor, qpow
from .ncengine import Alphabet, NcPoly, ZERO_POLY, exterior_d

SCHEMA_VERSION = 1


# ---------------------------------------------------------------------------
# expressions
# ---------------------------------------------------------------------------

class ParseError(ValueError):
    """Syntax or validation error with a 0-based source offset."""

    def __init__(self, msg: str, pos: int):
        super().__init__(f"{msg} at offset {pos}")
        self.pos = pos


@dataclass(frozen=True)
class Num:
    value: Fraction


@dataclass(frozen=True)
class QPow:
    exp: int


@dataclass(frozen=True)
class Gen:
    name: str
    idx: tuple[int, ...]  # 1-based, as written


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class Diff:
    arg: object


@dataclass(frozen=True)
class Prod:
    factors: tuple


@dataclass(frozen=True)
class Sum:
    # (sign, term) pairs; the first sign is always "+"
    terms: tuple


ExprAst = Num | QPow | Gen | Neg | Diff | Prod | Sum

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\S))")


def _tokenize(src: str) -> list[tuple[str, str, int]]:
    out = []
    pos = 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None or m.end() == pos:
            break
        if m.group(1):
            out.append(("int", m.group(1), m.start(1)))
        elif m.group(2):
            out.append(("name", m.group(2), m.start(2)))
        elif m.group(3):
            out.append(("op", m.group(3), m.start(3)))
        pos = m.end()
    out.append(("end", "", len(src)))
    return out


class _Parser:
    def __init__(self, src: str, alphabet: Alphabet | None):
        self.toks = _tokenize(src)
        self.i = 0
        self.alphabet = alphabet

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, op: str):
        kind, val, pos = self.take()
        if kind != "op" or val != op:
            raise ParseError(f"expected {op!r}, found {val or 'end of input'!r}", pos)

    def is_op(self, op: str) -> bool:
        kind, val, _ = self.peek()
        return kind == "op" and val == op

    def parse(self):
        e = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected {val!r}", pos)
        return e

    def expr(self):
        terms = [("+", self.term())]
        while self.is_op("+") or self.is_op("-"):
            terms.append((self.take()[1], self.term()))
        return terms[0][1] if len(terms) == 1 else Sum(tuple(terms))

    def term(self):
        factors = [self.unary()]
        while self.is_op("*"):
            self.take()
            factors.append(self.unary())
        return factors[0] if len(factors) == 1 else Prod(tuple(factors))

    def unary(self):
        if self.is_op("-"):
            self.take()
            return Neg(self.unary())
        return self.factor()

    def factor(self):
        kind, val, pos = self.take()
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "int":
            num = Fraction(int(val))
            if self.is_op("/"):
                self.take()
                k2, v2, p2 = self.take()
                if k2 != "int" or int(v2) == 0:
                    raise ParseError("malformed rational literal", p2)
                num = num / int(v2)
            return Num(num)
        if kind == "name":
            if val == "q":
                return QPow(self.exponent() if self.is_op("^") else 1)
            if val == "d" and self.is_op("("):
                self.take()
                e = self.expr()
                self.expect(")")
                return Diff(e)
            return self.atom(val, pos)
        raise ParseError(f"unexpected {val or 'end of input'!r}", pos)

    def exponent(self) -> int:
        _, _, pos = self.take()
        sign = 1
        if self.is_op("-"):
            self.take()
            sign = -1
        kind, val, p = self.take()
        if kind != "int":
            raise ParseError("malformed exponent", p)
        if self.is_op(".") or self.is_op("/"):
            raise ParseError("malformed exponent", self.peek()[2])
        return sign * int(val)

    def atom(self, name: str, pos: int):
        if self.alphabet is not None and name not in self.alphabet.families:
            raise ParseError(f"unknown generator family {name!r}", pos)
        self.expect("[")
        idx = []
        while True:
            kind, val, p = self.take()
            if kind != "int":
                raise ParseError("expected an index", p)
            idx.append((int(val), p))
            if self.is_op(","):
                self.take()
                continue
            self.expect("]")
            break
        if self.alphabet is not None:
            fam = self.alphabet.families[name]
            if len(idx) != len(fam.dims):
                raise ParseError(f"{name} takes {len(fam.dims)} indices, got {len(idx)}", pos)
            for (v, p), dim in zip(idx, fam.dims):
                if not 1 <= v <= dim:
                    raise ParseError(f"index {v} out of range 1..{dim} for {name}", p)
            zero_based = tuple(v - 1 for v, _ in idx)
            if zero_based not in set(fam.index_tuples()):
                raise ParseError(f"{name}{list(v for v, _ in idx)} is not a declared generator",
                                 pos)
        return Gen(name, tuple(v for v, _ in idx))


def parse(source: str, alphabet: Alphabet | None = None) -> ExprAst:
    """Parse an expression; with ``alphabet`` the atoms are validated against it."""
    return _Parser(source, alphabet).parse()


def render_ast(e: ExprAst) -> str:
    if isinstance(e, Num):
        return str(e.value)
    if isinstance(e, QPow):
        return "q" if e.exp == 1 else f"q^{e.exp}"
    if isinstance(e, Gen):
        return f"{e.name}[{','.join(map(str, e.idx))}]"
    if isinstance(e, Neg):
        inner = render_ast(e.arg)
        return f"-({inner})" if isinstance(e.arg, (Sum, Prod)) else f"-{inner}"
    if isinstance(e, Diff):
        return f"d({render_ast(e.arg)})"
    if isinstance(e, Prod):
        return " * ".join(f"({render_ast(f)})" if isinstance(f, (Sum, Prod)) else render_ast(f)
                          for f in e.factors)
    if isinstance(e, Sum):
        parts = []
        for k, (sign, t) in enumerate(e.terms):
            s = f"({render_ast(t)})" if isinstance(t, Sum) else render_ast(t)
            parts.append(s if k == 0 else f" {sign} {s}")
        return "".join(parts)
    raise TypeError(f"not an expression node: {e!r}")


def evaluate(e: ExprAst, alphabet: Alphabet, d: Callable[[NcPoly], NcPoly] | None = None) -> NcPoly:
    """The element of the free algebra on ``alphabet`` denoted by ``e``."""
    if isinstance(e, Num):
        return NcPoly.const(Laurent.const(e.value))
    if isinstance(e, QPow):
        return NcPoly.const(qpow(e.exp))
    if isinstance(e, Gen):
        return alphabet.gen(e.name, *(i - 1 for i in e.idx))
    if isinstance(e, Neg):
        return -evaluate(e.arg, alphabet, d)
    if isinstance(e, Diff):
        arg = evaluate(e.arg, alphabet, d)
        return d(arg) if d is not None else exterior_d(arg, alphabet)
    if isinstance(e, Prod):
        out = evaluate(e.factors[0], alphabet, d)
        for f in e.factors[1:]:
            out = out * evaluate(f, alphabet, d)
        return out
    if isinstance(e, Sum):
        out = ZERO_POLY
        for sign, t in e.terms:
            v = evaluate(t, alphabet, d)
            out = out + v if sign == "+" else out - v
        return out
    raise TypeError(f"not an expression node: {e!r}")


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------

class UsageError(ValueError):
    """Bad suite name or parameters; the CLI maps it to exit code 2."""


@dataclass
class SuiteParams:
    n: int | None = None
    k: int | None = None
    k_inst: int | None = None
    q0: Fraction | None = None
    r: str | None = None


PINNED_CONVENTIONS = {
    "epsilon": rmx.EPSILON_CONVENTION,
    "leibniz_twist": inst.twist_label(tw.X_DERIVATIVE_WEIGHT),
    "trace_weights": inst.TRACE_WEIGHTS,
    "eq16_reading": inst.EQ16_READING,
    "eq9_reading": rmx.EQ9_READING,
    "duality_placement": gf.DUALITY_PLACEMENT,
    "thooft_prefactor": f"q^{inst.A_PREFACTOR_EXP}",
    "adhm_exchange": "z b = q^%d b z, z bt = q^%d bt z" % inst.ADHM_EXCHANGE_WEIGHTS,
    "eq35_placement": inst.EQ35_PLACEMENT,
    "g_normalization": "g = %sq/(1+q^2) b bt y" % ("-" if inst.G_SIGN < 0 else ""),
}


def _rmatrix(name: str, q0) -> rmx.RMatrix:
    if name == "slq2":
        return rmx.build_slq2_rmatrix(q0)
    m = re.fullmatch(r"glq:(\d+)", name)
    if m and int(m.group(1)) >= 1:
        return rmx.build_glq_rmatrix(int(m.group(1)), q0)
    if name == "eps4":
        raise UsageError("eps4 is not an R-matrix; use the rmx:eps suite")
    raise UsageError(f"unknown constructor {name!r} (expected glq:<n>, slq2 or eps4)")


def _rmatrices(p: SuiteParams) -> list[tuple[str, rmx.RMatrix]]:
    if p.r is not None:
        names = [p.r]
    elif p.n is not None:
        names = [f"glq:{p.n}"]
    else:
        names = ["glq:2", "glq:4", "glq:6"]
    return [(name, _rmatrix(name, p.q0)) for name in names]


def _suite_hecke(p: SuiteParams) -> inst.VerificationReport:
    rep = inst.VerificationReport("rmx:hecke")
    for name, r in _rmatrices(p):
        rep.add(f"hecke {name}", "R^2 = 1 + (q - q^-1) R", lambda r=r: rmx.hecke_residual(r))

        def spectral(r=r):
            pp, pm = rmx.projectors(r)
            ident = rmx.identity_rmatrix(r.n, r.space).tensor
            return {"P+ + P- - 1": pp + pm - ident,
                    "P+ P+ - P+": rmx.compose(pp, pp) - pp,
                    "P+ P-": rmx.compose(pp, pm),
                    "q P+ - q^-1 P- - R": pp.scale(r.q) - pm.scale(r.q.inverse()) - r.tensor}

        rep.add(f"projectors {name}", "R = q P+ - q^-1 P-", spectral)
    return rep


def _suite_ybe(p: SuiteParams) -> inst.VerificationReport:
    rep = inst.VerificationReport("rmx:ybe")
    for name, r in _rmatrices(p):
        rep.add(f"ybe {name}", "R12 R23 R12 = R23 R12 R23", lambda r=r: rmx.ybe_residual(r))
    return rep


def _suite_eps(p: SuiteParams) -> inst.VerificationReport:
    q0 = p.q0
    rep = inst.VerificationReport("rmx:eps")
    rep.add("slq2 = glq:2", "R = q 1 + eps eps",
            lambda: rmx.build_slq2_rmatrix(q0).tensor - rmx.build_glq_rmatrix(2, q0).tensor)
    eu, ed = rmx.epsilon_up(q0), rmx.epsilon_down(q0)

    def raise_lower():
        return {(a, c): sum((eu.data[a, b] * ed.data[b, c] for b in range(2)), Laurent())
                - (1 if a == c else 0) for a in range(2) for c in range(2)}

    rep.add("eps raise/lower", "eps^{ab} eps_{bc} = delta^a_c", raise_lower)
    qv = Laurent.mono(1).specialize(q0) if q0 is not None else Laurent.mono(1)
    rep.add("eps trace", "eps^{ab} eps_{ab} = -(q + q^-1)",
            lambda: sum((eu.data[a, b] * ed.data[a, b] for a in range(2) for b in range(2)),
                        Laurent()) + qv + qv.inverse())
    _, dim = rmx.solve_q_epsilon4(rmx.EQ9_READING, q0)
    rep.add("eps4 kernel", "the constraint system has a one-dimensional solution",
            lambda: Laurent.const(dim - 1))
    eps4 = rmx.build_q_epsilon4(rmx.EQ9_READING, q0)
    rep.add("eq9", "R eps_q = -q^-1 eps_q on every adjacent slot pair",
            lambda: rmx.eq9_residual(eps4, rmx.EQ9_READING, q0))
    rep.add("eps4 classical", "eps_q at q = 1 is the Levi-Civita symbol",
            lambda: rmx.build_q_epsilon4(rmx.EQ9_READING, 1) - rmx.levi_civita(4))
    return rep


def _twistor(p: SuiteParams) -> tw.TwistorSystem:
    return tw.build_twistor_system(None, q0=p.q0)


def _suite_relations(p: SuiteParams) -> inst.VerificationReport:
    ts = _twistor(p)
    rep = inst.VerificationReport("twistor:relations", alphabet=ts.alphabet)
    for name, rels in ts.relation_sets.items():
        rep.add(name, f"{name} reduces to zero", lambda rels=rels: [ts.nf(r) for r in rels])
    conf = tw.confluence(ts)
    rep.add("confluence", "every degree-3 overlap resolves",
            lambda: [d for _, d in conf.mismatches])
    rep.notes.append(f"{len(ts.rs.rules)} rules, {conf.overlaps} overlaps")
    return rep


def _suite_eq10(p: SuiteParams) -> inst.VerificationReport:
    ts = _twistor(p)
    rep = inst.VerificationReport("twistor:eq10", alphabet=ts.alphabet)
    rep.add("eq10", "eps_q^{abcd} z z z = 0", lambda: tw.eq10_residuals(ts))
    rep.notes.append("derived from the z relations; no cubic rule adjoined")
    return rep


def _suite_yy(p: SuiteParams) -> inst.VerificationReport:
    ts = _twistor(p)
    rep = inst.VerificationReport("twistor:yy", alphabet=ts.alphabet)
    rep.add("eq11", "y = P- y", lambda: tw.projection_residuals(ts))
    rep.add("eq12", "(y, y) = 0", lambda: tw.yy_residual(ts))
    return rep


def _distinct_twists(q0) -> dict[int, Laurent]:
    """Scanned twists with their value at q0; the pinned one wins a coincidence."""
    out: dict = {}
    for m in (tw.X_DERIVATIVE_WEIGHT,) + tuple(tw.LEIBNIZ_TWISTS):
        lam = qpow(-m).specialize(q0) if q0 is not None else qpow(-m)
        if lam not in out.values():
            out[m] = lam
    return out


def _suite_twistor_laplace(p: SuiteParams) -> inst.VerificationReport:
    ts = tw.build_twistor_system(tw.BSector(1), q0=p.q0)
    rep = inst.VerificationReport("twistor:laplace", alphabet=ts.alphabet)
    rep.add("laplace(1)", "Delta 1 = 0", lambda: inst.laplace_residual(ts, NcPoly.const(1)))
    rep.add("laplace(1/X)", "Delta X^-1 = 0 with (b, b) = 0", lambda: inst.laplace_residual(ts))
    twists = _distinct_twists(p.q0)
    scan = inst.scan_leibniz_twist(p.q0, twists=tuple(twists))
    passing = sorted(m for m, ok in scan.items() if ok)
    rep.add("twist scan", "exactly the pinned twist annihilates X^-1",
            lambda: ZERO_POLY if passing == [tw.X_DERIVATIVE_WEIGHT]
            else NcPoly.const(len(passing) + 1))
    rep.notes.append("twist scan: " + ", ".join(
        f"{inst.twist_label(m)}: {'zero' if ok else 'non-zero'}" for m, ok in sorted(scan.items())))
    rep.notes.append("second form of the Laplacian, evaluated independently: "
                     + _second_form_note(ts))
    return rep


def _second_form_note(ts: tw.TwistorSystem) -> str:
    res = tw.laplace_second_form(ts, {(("Xinv", 0),): Laurent.const(1)}, tw.X_DERIVATIVE_WEIGHT)
    zero = not any(ts.clear_inverses(v) for v in res.values())
    return "agrees (annihilates X^-1)" if zero else "disagrees (does not annihilate X^-1)"


def _thooft(p: SuiteParams, default_k: int = 1) -> inst.ThooftConfig:
    k = p.k_inst if p.k_inst is not None else default_k
    if k != 1:
        raise UsageError("the connection is built for --k-inst 1 only")
    return inst.build_thooft(1, q0=p.q0)


def _suite_thooft_trace(p: SuiteParams) -> inst.VerificationReport:
    cfg = _thooft(p)
    rep = inst.VerificationReport("thooft:trace", alphabet=cfg.ts.alphabet)
    res = inst.thooft_trace_checks(cfg)
    pref = f"q^{inst.A_PREFACTOR_EXP}"
    rep.add("eq23 Tr_q A", f"Tr_q A = -{pref} dPhi Phi^-1", lambda: res["Tr_q A"])
    rep.add("eq23 Tr_q dA", "Tr_q dA = 0", lambda: res["Tr_q dA"])
    rep.add("Tr_q F", "the curvature is q-traceless", lambda: res["Tr_q F"])
    scan = inst.scan_trace_weights(cfg)
    rep.notes.append("trace weight scan: " + ", ".join(
        f"{k}: {'holds' if v else 'fails'}" for k, v in scan.items()))
    return rep


def _suite_thooft_laplace(p: SuiteParams) -> inst.VerificationReport:
    k = p.k_inst if p.k_inst is not None else 2
    if not 1 <= k <= 3:
        raise UsageError("--k-inst must be 1, 2 or 3")
    ts = tw.build_twistor_system(tw.BSector(k), q0=p.q0)
    rep = inst.VerificationReport("thooft:laplace", alphabet=ts.alphabet)
    for i in range(k):
        rep.add(f"eq20 (b{i + 1}, b{i + 1})", "(b, b) = 0", lambda i=i: tw.bb_residual(ts, i))
        rep.add(f"eq21-22 X{i + 1}", "X = (y, b) has the postulated exchange relations",
                lambda i=i: tw.substitution_check(ts, i))
        rep.add(f"laplace(1/X{i + 1})", "Delta X^-1 = 0",
                lambda i=i: inst.laplace_residual(ts, ts.Xinv(i)))
    rep.add("eq24", "Delta Phi = 0 for Phi = sum 1/X", lambda: inst.laplace_residual(ts))
    if k > 1:
        cross = tw.substitution_check(ts, 0, same_label=False)["b"]
        rep.notes.append("X1 against b2: " + ("commutes" if not cross else
                         f"does not commute ({len(cross.terms)} residual words); "
                         "labels are checked separately"))
    return rep


def _suite_thooft_sd(p: SuiteParams) -> inst.VerificationReport:
    cfg = _thooft(p)
    rep = inst.thooft_selfduality_check(cfg)
    rep.alphabet = cfg.ts.alphabet
    scan = inst.scan_prefactor(p.q0)
    rep.notes.append("prefactor scan: " + ", ".join(
        f"q^{m}: {'self-dual' if v else 'not self-dual'}" for m, v in sorted(scan.items())))
    return rep


def _suite_eq16(p: SuiteParams) -> inst.VerificationReport:
    cfg = _thooft(p)
    rep = inst.VerificationReport("gauge:eq16", alphabet=cfg.ts.alphabet)
    rep.add(f"eq16 {inst.EQ16_READING}", "A R A + R A R A R = 0", lambda: inst.eq16_residual(cfg))
    rep.add("eq17", "every entry of A is dz times a 0-form",
            lambda: ZERO_POLY if cfg.connection.realization() is not None else NcPoly.const(1))
    scan = inst.scan_eq16(cfg)
    rep.notes.append("reading scan: " + ", ".join(
        f"{k}: {'zero' if v else 'non-zero'}" for k, v in scan.items()))
    return rep


def _suite_gauge_trace(p: SuiteParams) -> inst.VerificationReport:
    cfg = _thooft(p)
    rep = inst.VerificationReport("gauge:trace", alphabet=cfg.ts.alphabet)
    for n in (1, 2, 3):
        ident = {(i, k): NcPoly.const(1) if i == k else ZERO_POLY
                 for i in range(n) for k in range(n)}
        rep.add(f"Tr Id({n})", "unit weights give the matrix size",
                lambda ident=ident, n=n: gf.q_trace(ident, [Laurent.const(1)] * n, n)
                - NcPoly.const(n))
    w = gf.trace_weights(cfg.ctx, inst.TRACE_WEIGHTS)
    res = gf.trace_constraints(cfg.connection, w)
    for key, anchor in (("alpha^2", "alpha = Tr_q A squares to zero"),
                        ("Tr_q A^2", "Tr_q A^2 = 0"), ("d alpha", "d alpha = 0")):
        rep.add(key, anchor, lambda key=key: res[key])
    return rep


def _suite_duality(p: SuiteParams) -> inst.VerificationReport:
    cfg = _thooft(p)
    ctx = cfg.ctx
    rep = inst.VerificationReport("gauge:duality", alphabet=cfg.ts.alphabet)
    f = gf.curvature(cfg.connection)
    sd, asd = f.parts()
    star = gf.duality_star(f)
    rep.add("sd + asd = F", "the two parts add up to the form",
            lambda: {k: ctx.zero(ctx.nf(sd.entries[k] + asd.entries[k] - f.entries[k]))
                     for k in f.entries})
    rep.add("star star = 1", "the duality operator is an involution",
            lambda: {k: ctx.zero(ctx.nf(v - f.entries[k]))
                     for k, v in gf.duality_star(star).entries.items()})
    rep.add("star F - F = -2 asd F", "star F = F exactly when asd F = 0",
            lambda: {k: ctx.zero(ctx.nf(star.entries[k] - f.entries[k]
                                        + asd.entries[k] * Laurent.const(2)))
                     for k in f.entries})
    rep.add("eps dz dz self-dual", "eps_{al be} dz^al_a dz^be_b lies in the P+ part",
            lambda: _eps_dzdz_asd(p))
    return rep


def _eps_dzdz_asd(p: SuiteParams) -> dict:
    ts = _twistor(p)
    ctx = gf.FormContext(ts.alphabet, ts.nf, ts.d, ts.r_latin, ts.q0)
    pp, pm = ctx.latin_projectors()
    out = {}
    for a, b in itertools.product(range(4), repeat=2):
        v = ZERO_POLY
        for al, be in itertools.product(range(2), repeat=2):
            e = ts.eps_down.data[al, be]
            if e:
                v = v + ts.dz(al, a) * ts.dz(be, b) * e
        out[(a, b)] = gf.latin_pair_action(ctx, v, pm)
    return out


def _adhm(p: SuiteParams) -> inst.AdhmConfig:
    n = p.n if p.n is not None else 1
    k = p.k if p.k is not None else 1
    if (n, k) not in inst.ADHM_SIZES:
        raise UsageError(f"(--n, --k) must be one of {list(inst.ADHM_SIZES)}")
    return inst.build_adhm(n, k, q0=p.q0)


def _suite_adhm(check: Callable) -> Callable:
    def run(p: SuiteParams) -> inst.VerificationReport:
        cfg = _adhm(p)
        rep = check(cfg)
        rep.alphabet = cfg.alphabet
        rep.notes[:0] = cfg.notes
        return rep
    return run


SUITES: dict[str, Callable[[SuiteParams], inst.VerificationReport]] = {
    "rmx:hecke": _suite_hecke,
    "rmx:ybe": _suite_ybe,
    "rmx:eps": _suite_eps,
    "twistor:relations": _suite_relations,
    "twistor:eq10": _suite_eq10,
    "twistor:yy": _suite_yy,
    "twistor:laplace": _suite_twistor_laplace,
    "gauge:eq16": _suite_eq16,
    "gauge:trace": _suite_gauge_trace,
    "gauge:duality": _suite_duality,
    "thooft:trace": _suite_thooft_trace,
    "thooft:laplace": _suite_thooft_laplace,
    "thooft:sd": _suite_thooft_sd,
    "adhm:relations": _suite_adhm(inst.adhm_relations_check),
    "adhm:completeness": _suite_adhm(inst.adhm_completeness_check),
    "adhm:curvature": _suite_adhm(inst.adhm_curvature_check),
}


def run_suite(name: str, params: SuiteParams | dict | None = None) -> inst.VerificationReport:
    """Run a registered suite; unknown names and bad parameters raise UsageError."""
    if name not in SUITES:
        raise UsageError(f"unknown suite {name!r}; known: {', '.join(SUITES)}")
    if params is None:
        params = SuiteParams()
    elif isinstance(params, dict):
        params = SuiteParams(**params)
    if params.q0 is not None and params.q0 == 0:
        raise UsageError("--q must be a non-zero rational")
    rep = SUITES[name](params)
    rep.suite = name
    rep.conventions = dict(PINNED_CONVENTIONS)
    return rep


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

MAX_ENTRIES = 3
MAX_TERMS = 6


def _render_key(key) -> str:
    if isinstance(key, tuple):
        return "[" + ",".join(str(k + 1) if isinstance(k, int) else str(k) for k in key) + "]"
    return str(key)


def _render_poly(p: NcPoly, alphabet: Alphabet | None) -> str:
    if alphabet is None:
        return f"<{len(p.terms)} terms>"
    if len(p.terms) <= MAX_TERMS:
        return alphabet.render(p)
    head = NcPoly({w: p.terms[w] for w in sorted(p.terms, key=alphabet.word_key)[:MAX_TERMS]})
    return f"{alphabet.render(head)} + ... ({len(p.terms)} terms)"


def _flatten(res, key=()) -> list[tuple[tuple, object]]:
    """Non-zero leaves of a nested residual, in a fixed order."""
    if isinstance(res, dict):
        out = []
        for k in sorted(res, key=lambda k: (str(type(k)), k)):
            out += _flatten(res[k], key + (k,))
        return out
    if isinstance(res, (list, tuple)):
        out = []
        for i, v in enumerate(res):
            out += _flatten(v, key + (i,))
        return out
    if isinstance(res, Tensor):
        return [(key + (idx,), v) for idx, v in sorted(res.nonzero(), key=lambda t: t[0])]
    return [(key, res)] if res else []


def render_residual(res, alphabet: Alphabet | None = None) -> str:
    """Canonical, truncated text for a residual; exactly "0" when it vanishes."""
    leaves = _flatten(res)
    if not leaves:
        return "0"
    parts = []
    for key, v in leaves[:MAX_ENTRIES]:
        body = _render_poly(v, alphabet) if isinstance(v, NcPoly) else str(v)
        label = "".join(_render_key(k) for k in key)
        parts.append(f"{label} {body}" if label else body)
    if len(leaves) > MAX_ENTRIES:
        parts.append(f"... ({len(leaves)} non-zero entries)")
    return "; ".join(parts)


def report_dict(rep: inst.VerificationReport, *, timings: bool = True,
                params: SuiteParams | None = None) -> dict:
    checks = []
    for c in rep.checks:
        residual = render_residual(c.residual, rep.alphabet)
        checks.append({"id": c.id, "anchor": c.anchor, "residual": residual,
                       "pass": residual == "0",
                       "ms": int(round(c.seconds * 1000)) if timings else 0})
    out = {"suite": rep.suite, "schema_version": SCHEMA_VERSION,
           "pinned_conventions": rep.conventions, "checks": checks}
    if params is not None:
        out["q"] = "generic" if params.q0 is None else str(params.q0)
    out["notes"] = list(rep.notes)
    return out


def render_json(rep: inst.VerificationReport, **kw) -> str:
    return json.dumps(report_dict(rep, **kw), indent=2) + "\n"


def render_text(rep: inst.VerificationReport, **kw) -> str:
    d = report_dict(rep, **kw)
    lines = [f"suite {d['suite']} (schema {d['schema_version']}, q = {d.get('q', 'generic')})"]
    for k, v in d["pinned_conventions"].items():
        lines.append(f"  pinned {k}: {v}")
    for c in d["checks"]:
        verdict = "PASS" if c["pass"] else "FAIL"
        timing = f" [{c['ms']} ms]" if kw.get("timings", True) else ""
        lines.append(f"{verdict} {c['id']}: {c['anchor']}{timing}")
        if not c["pass"]:
            lines.append(f"     residual: {c['residual']}")
    for note in d["notes"]:
        lines.append(f"  note: {note}")
    passed = all(c["pass"] for c in d["checks"]) and d["checks"]
    lines.append(f"{'PASS' if passed else 'FAIL'} {d['suite']}: "
                 f"{sum(c['pass'] for c in d['checks'])}/{len(d['checks'])} checks")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# command line
# ---------------------------------------------------------------------------

def _rational(text: str) -> Fraction:
    try:
        v = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}")
    if v == 0:
        raise argparse.ArgumentTypeError("q must be non-zero")
    return v


SYSTEMS = ("twistor", "thooft", "adhm")


def expression_system(name: str, q0=None):
    """(alphabet, normal form) used by ``reduce`` and ``parse``."""
    if name == "twistor":
        ts = tw.build_twistor_system(None, q0=q0)
        return ts.alphabet, ts.nf
    if name == "thooft":
        ts = tw.build_twistor_system(tw.BSector(1), q0=q0)
        return ts.alphabet, ts.nf
    if name == "adhm":
        cfg = inst.build_adhm(1, 1, q0=q0)
        return cfg.alphabet, cfg.full.normal_form
    raise UsageError(f"unknown system {name!r}")


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qtw", description="exact checks for q-deformed twistor "
                                 "gauge theory")
    sub = ap.add_subparsers(dest="command", required=True)
    c = sub.add_parser("check", help="run a verification suite")
    c.add_argument("suite", help="one of: " + ", ".join(SUITES))
    c.add_argument("--n", type=int)
    c.add_argument("--k", type=int)
    c.add_argument("--k-inst", type=int, dest="k_inst")
    c.add_argument("--r", help="R-matrix constructor for rmx suites: glq:<n> or slq2")
    c.add_argument("--q", type=_rational, help="specialize q to this non-zero rational")
    c.add_argument("--report", choices=("text", "json"), default="text")
    c.add_argument("--out", help="write the report to this file instead of stdout")
    c.add_argument("--no-timings", action="store_true",
                   help="report 0 ms for every check (byte-stable output)")
    for name, hlp in (("reduce", "print the normal form of an expression file"),
                      ("parse", "validate an expression file")):
        s = sub.add_parser(name, help=hlp)
        s.add_argument("file")
        s.add_argument("--system", choices=SYSTEMS, default="twistor")
        s.add_argument("--q", type=_rational)
    return ap


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "check":
            params = SuiteParams(args.n, args.k, args.k_inst, args.q, args.r)
            rep = run_suite(args.suite, params)
            render = render_json if args.report == "json" else render_text
            text = render(rep, timings=not args.no_timings, params=params)
            if args.out:
                with open(args.out, "w", encoding="utf-8") as fh:
                    fh.write(text)
            else:
                sys.stdout.write(text)
            return 0 if rep.passed else 1
        source = _read(args.file)
        alphabet, nf = expression_system(args.system, args.q)
        ast = parse(source, alphabet)
        if args.command == "parse":
            sys.stdout.write(render_ast(ast) + "\n")
            return 0
        poly = evaluate(ast, alphabet)
        if args.q is not None:
            poly = poly.specialize(args.q)
        sys.stdout.write(alphabet.render(nf(poly)) + "\n")
        return 0
    except ParseError as exc:
        sys.stderr.write(f"{args.file}: parse error: {exc}\n")
        return 2
    except (UsageError, OSError) as exc:
        sys.stderr.write(f"qtw: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
