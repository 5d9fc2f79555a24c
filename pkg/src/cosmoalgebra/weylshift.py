"""Noncommutative operator algebras: normal-ordered Weyl operators with
rational-function coefficients, the shift algebra acting on exponent
variables, annihilator generators for reciprocals of polynomials, and the
algebraic Mellin transform sending one to the other.

Normal order keeps variable powers left of derivative powers; products are
reordered with Leibniz's rule.  With the Laurent flag set, variable
exponents may be negative (the natural domain of the Mellin transform).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Tuple

from .errors import MissingTableEntry, VariableMismatch, ZeroPolynomial
from .symcore import (MPoly, QQ, Q_ONE, RatFun, VarTable, ratfun_normalize,
                      render_ratfun)


@dataclass(frozen=True)
class WeylContext:
    """Variable split for a Weyl algebra: which table names are
    differential variables; the rest parameterize the coefficient field."""
    table: VarTable
    diff: Tuple[str, ...]
    laurent: bool = False

    def __post_init__(self):
        missing = [d for d in self.diff if d not in self.table]
        if missing:
            raise VariableMismatch(f"unknown differential variables {missing}")

    @property
    def ndiff(self) -> int:
        return len(self.diff)

    def diff_indices(self) -> tuple:
        return tuple(self.table.index[d] for d in self.diff)

    def params(self) -> tuple:
        return tuple(n for n in self.table.names if n not in self.diff)


def _coeff_ok(ctx: WeylContext, c: RatFun) -> bool:
    bad = set(ctx.diff)
    return not (set(c.num.variables()) & bad or set(c.den.variables()) & bad)


class WeylOp:
    """Normal-ordered operator: sum of coeff * x^a * D^b terms.

    ``terms`` maps (variable exponents, derivative exponents) over the
    context's differential variables to RatFun coefficients in the
    parameter variables only.
    """

    __slots__ = ("ctx", "terms", "_hash")

    def __init__(self, ctx: WeylContext, terms: dict):
        clean = {}
        for (a, b), c in terms.items():
            if c.is_zero():
                continue
            a, b = tuple(a), tuple(b)
            if len(a) != ctx.ndiff or len(b) != ctx.ndiff:
                raise VariableMismatch("exponent length does not match context")
            if not ctx.laurent and any(x < 0 for x in a):
                raise VariableMismatch("negative variable power without Laurent flag")
            if any(x < 0 for x in b):
                raise VariableMismatch("negative derivative power")
            if not _coeff_ok(ctx, c):
                raise VariableMismatch("coefficient involves a differential variable")
            clean[(a, b)] = c
        object.__setattr__(self, "ctx", ctx)
        object.__setattr__(self, "terms", clean)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, *a):
        raise AttributeError("WeylOp is immutable")

    # -- constructors --------------------------------------------------------

    @staticmethod
    def zero(ctx: WeylContext) -> "WeylOp":
        return WeylOp(ctx, {})

    @staticmethod
    def const(ctx: WeylContext, c) -> "WeylOp":
        z = (0,) * ctx.ndiff
        cc = c if isinstance(c, RatFun) else RatFun.const(ctx.table, c)
        return WeylOp(ctx, {(z, z): cc})

    @staticmethod
    def variable(ctx: WeylContext, name: str, power: int = 1) -> "WeylOp":
        z = (0,) * ctx.ndiff
        if name in ctx.diff:
            i = ctx.diff.index(name)
            a = tuple(power if j == i else 0 for j in range(ctx.ndiff))
            return WeylOp(ctx, {(a, z): RatFun.const(ctx.table, 1)})
        if name not in ctx.table:
            raise VariableMismatch(f"unknown variable {name}")
        coeff = ratfun_normalize(MPoly.var(ctx.table, name) ** max(power, 0),
                                 MPoly.var(ctx.table, name) ** max(-power, 0))
        return WeylOp(ctx, {(z, z): coeff})

    @staticmethod
    def derivative(ctx: WeylContext, name: str, power: int = 1) -> "WeylOp":
        if name not in ctx.diff:
            raise VariableMismatch(f"{name} is not a differential variable")
        if power < 0:
            raise VariableMismatch("negative derivative power")
        i = ctx.diff.index(name)
        z = (0,) * ctx.ndiff
        b = tuple(power if j == i else 0 for j in range(ctx.ndiff))
        return WeylOp(ctx, {(z, b): RatFun.const(ctx.table, 1)})

    @staticmethod
    def from_poly(ctx: WeylContext, p: MPoly) -> "WeylOp":
        """Multiplication operator by a polynomial of the full table."""
        if p.table != ctx.table:
            p = p.rebased(ctx.table)
        didx = ctx.diff_indices()
        z = (0,) * ctx.ndiff
        terms = {}
        for e, c in p.terms.items():
            a = tuple(e[i] for i in didx)
            rest = list(e)
            for i in didx:
                rest[i] = 0
            coeff = RatFun.from_poly(MPoly(ctx.table, {tuple(rest): c}))
            key = (a, z)
            terms[key] = terms.get(key, RatFun.const(ctx.table, 0)) + coeff
        return WeylOp(ctx, terms)

    # -- structure -----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def order(self) -> int:
        return max((sum(b) for _, b in self.terms), default=0)

    def coefficient_only(self) -> Optional[RatFun]:
        """The coefficient when the operator is a pure scalar, else None."""
        if not self.terms:
            return RatFun.const(self.ctx.table, 0)
        if len(self.terms) == 1:
            ((a, b), c), = self.terms.items()
            if not any(a) and not any(b):
                return c
        return None

    def _check(self, other: "WeylOp"):
        if self.ctx != other.ctx:
            raise VariableMismatch("operators live in different Weyl algebras")

    def __eq__(self, other):
        if not isinstance(other, WeylOp):
            return NotImplemented
        return self.ctx == other.ctx and self.terms == other.terms

    def __hash__(self):
        h = self._hash
        if h is None:
            h = hash((self.ctx, frozenset(self.terms.items())))
            object.__setattr__(self, "_hash", h)
        return h

    def __add__(self, other):
        if not isinstance(other, WeylOp):
            other = WeylOp.const(self.ctx, other)
        self._check(other)
        terms = dict(self.terms)
        zero = RatFun.const(self.ctx.table, 0)
        for k, c in other.terms.items():
            s = terms.get(k, zero) + c
            if s.is_zero():
                terms.pop(k, None)
            else:
                terms[k] = s
        return WeylOp(self.ctx, terms)

    __radd__ = __add__

    def __neg__(self):
        return WeylOp(self.ctx, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, WeylOp):
            other = WeylOp.const(self.ctx, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, WeylOp):
            other = WeylOp.const(self.ctx, other)
        return weyl_mul(self, other)

    def __rmul__(self, other):
        return WeylOp.const(self.ctx, other) * self

    def __pow__(self, n: int):
        if n < 0:
            raise VariableMismatch("negative power of an operator")
        result = WeylOp.const(self.ctx, 1)
        for _ in range(n):
            result = result * self
        return result

    def __str__(self):
        return render_weyl(self)

    def __repr__(self):
        return f"WeylOp({render_weyl(self)!r})"


def _falling(e: int, k: int) -> int:
    out = 1
    for j in range(k):
        out *= (e - j)
    return out


def _binom(n: int, k: int) -> int:
    from math import comb
    return comb(n, k)


def weyl_mul(P: WeylOp, Q: WeylOp) -> WeylOp:
    """Normal-ordered product via Leibniz reordering of D^b x^e."""
    P._check(Q)
    ctx = P.ctx
    nd = ctx.ndiff
    zero = RatFun.const(ctx.table, 0)
    terms = {}
    for (a, b), c1 in P.terms.items():
        for (e, f), c2 in Q.terms.items():
            c = c1 * c2
            ranges = [range(0, min(b[i], e[i]) + 1 if e[i] >= 0 else b[i] + 1)
                      for i in range(nd)]
            for k in itertools.product(*ranges):
                scale = 1
                for i in range(nd):
                    if k[i]:
                        scale *= _binom(b[i], k[i]) * _falling(e[i], k[i])
                if scale == 0:
                    continue
                key = (tuple(a[i] + e[i] - k[i] for i in range(nd)),
                       tuple(b[i] - k[i] + f[i] for i in range(nd)))
                acc = terms.get(key, zero) + c * scale
                if acc.is_zero():
                    terms.pop(key, None)
                else:
                    terms[key] = acc
    return WeylOp(ctx, terms)


def weyl_apply(P: WeylOp, f: RatFun) -> RatFun:
    """Action P . f with exact quotient-rule differentiation."""
    ctx = P.ctx
    if f.table != ctx.table:
        raise VariableMismatch("function lives on a different variable table")
    total = RatFun.const(ctx.table, 0)
    cache = {(0,) * ctx.ndiff: f}

    def derived(b: tuple) -> RatFun:
        if b in cache:
            return cache[b]
        i = next(j for j, x in enumerate(b) if x > 0)
        prev = b[:i] + (b[i] - 1,) + b[i + 1:]
        val = derived(prev).diff(ctx.diff[i])
        cache[b] = val
        return val

    for (a, b), c in P.terms.items():
        piece = derived(b)
        mono_num = MPoly.const(ctx.table, 1)
        mono_den = MPoly.const(ctx.table, 1)
        for i, k in enumerate(a):
            v = MPoly.var(ctx.table, ctx.diff[i])
            if k > 0:
                mono_num = mono_num * v ** k
            elif k < 0:
                mono_den = mono_den * v ** (-k)
        total = total + c * piece * ratfun_normalize(mono_num, mono_den)
    return total


def ann_generators(p: MPoly, ctx: WeylContext) -> list:
    """The operators p*D_i + dp/dx_i, one per differential variable; each
    annihilates 1/p."""
    if p.is_zero():
        raise ZeroPolynomial("cannot annihilate the reciprocal of zero")
    if p.table != ctx.table:
        p = p.rebased(ctx.table)
    mult = WeylOp.from_poly(ctx, p)
    out = []
    for name in ctx.diff:
        gen = mult * WeylOp.derivative(ctx, name) + WeylOp.from_poly(ctx, p.diff(name))
        out.append(gen)
    return out


def render_weyl(P: WeylOp) -> str:
    if not P.terms:
        return "0"
    ctx = P.ctx
    parts = []
    order = sorted(P.terms, key=lambda k: (sum(k[1]), k[1], sum(k[0]), k[0]), reverse=True)
    for idx, key in enumerate(order):
        a, b = key
        c = P.terms[key]
        factors = []
        cs = render_ratfun(c)
        neg = cs.startswith("-") and "+" not in cs[1:] and "-" not in cs[1:]
        body_parts = []
        for i, k in enumerate(a):
            if k == 1:
                body_parts.append(ctx.diff[i])
            elif k:
                body_parts.append(f"{ctx.diff[i]}^{k}")
        for i, k in enumerate(b):
            dname = _derivative_name(ctx.diff[i])
            if k == 1:
                body_parts.append(dname)
            elif k:
                body_parts.append(f"{dname}^{k}")
        if c == 1 and body_parts:
            term = "*".join(body_parts)
            sign = "+"
        elif c == -1 and body_parts:
            term = "*".join(body_parts)
            sign = "-"
        else:
            need_paren = ("+" in cs or "-" in cs[1:] or "/" in cs)
            coeff_txt = f"({cs})" if need_paren else cs
            sign = "+"
            if not need_paren and cs.startswith("-"):
                coeff_txt = cs[1:]
                sign = "-"
            term = "*".join([coeff_txt] + body_parts) if body_parts else coeff_txt
        if idx == 0:
            parts.append(term if sign == "+" else "-" + term)
        else:
            parts.append(sign + term)
    return "".join(parts)


def _derivative_name(var: str) -> str:
    # a1 -> d1, anything else -> d<name>
    if var.startswith("a") and var[1:].isdigit():
        return "d" + var[1:]
    return "d" + var


# -- shift algebra -------------------------------------------------------------


@dataclass(frozen=True)
class ShiftContext:
    """Shift algebra context: epsilon names inside a table that also holds
    the coefficient parameters."""
    table: VarTable
    eps: Tuple[str, ...]

    def __post_init__(self):
        missing = [e for e in self.eps if e not in self.table]
        if missing:
            raise VariableMismatch(f"unknown shift variables {missing}")

    @property
    def n(self) -> int:
        return len(self.eps)


class ShiftOp:
    """Normal-ordered shift operator: sum of g(eps) * sigma^a terms."""

    __slots__ = ("ctx", "terms", "_hash")

    def __init__(self, ctx: ShiftContext, terms: dict):
        clean = {}
        for a, c in terms.items():
            if c.is_zero():
                continue
            a = tuple(a)
            if len(a) != ctx.n:
                raise VariableMismatch("shift vector length does not match context")
            clean[a] = c
        object.__setattr__(self, "ctx", ctx)
        object.__setattr__(self, "terms", clean)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, *a):
        raise AttributeError("ShiftOp is immutable")

    @staticmethod
    def zero(ctx: ShiftContext) -> "ShiftOp":
        return ShiftOp(ctx, {})

    @staticmethod
    def const(ctx: ShiftContext, c) -> "ShiftOp":
        cc = c if isinstance(c, RatFun) else RatFun.const(ctx.table, c)
        return ShiftOp(ctx, {(0,) * ctx.n: cc})

    @staticmethod
    def coeff_var(ctx: ShiftContext, name: str) -> "ShiftOp":
        return ShiftOp.const(ctx, RatFun.var(ctx.table, name))

    @staticmethod
    def sigma(ctx: ShiftContext, i: int, power: int = 1) -> "ShiftOp":
        a = tuple(power if j == i else 0 for j in range(ctx.n))
        return ShiftOp(ctx, {a: RatFun.const(ctx.table, 1)})

    def _check(self, other):
        if self.ctx != other.ctx:
            raise VariableMismatch("operators live in different shift algebras")

    def is_zero(self):
        return not self.terms

    def __eq__(self, other):
        if not isinstance(other, ShiftOp):
            return NotImplemented
        return self.ctx == other.ctx and self.terms == other.terms

    def __hash__(self):
        h = self._hash
        if h is None:
            h = hash((self.ctx, frozenset(self.terms.items())))
            object.__setattr__(self, "_hash", h)
        return h

    def __add__(self, other):
        if not isinstance(other, ShiftOp):
            other = ShiftOp.const(self.ctx, other)
        self._check(other)
        terms = dict(self.terms)
        zero = RatFun.const(self.ctx.table, 0)
        for a, c in other.terms.items():
            s = terms.get(a, zero) + c
            if s.is_zero():
                terms.pop(a, None)
            else:
                terms[a] = s
        return ShiftOp(self.ctx, terms)

    __radd__ = __add__

    def __neg__(self):
        return ShiftOp(self.ctx, {a: -c for a, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, ShiftOp):
            other = ShiftOp.const(self.ctx, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def _shift_coeff(self, c: RatFun, a: tuple) -> RatFun:
        if not any(a):
            return c
        images = {}
        for i, k in enumerate(a):
            if k:
                name = self.ctx.eps[i]
                images[name] = MPoly.var(self.ctx.table, name) + MPoly.const(self.ctx.table, k)
        return c.subst(images, self.ctx.table)

    def __mul__(self, other):
        if not isinstance(other, ShiftOp):
            other = ShiftOp.const(self.ctx, other)
        self._check(other)
        zero = RatFun.const(self.ctx.table, 0)
        terms = {}
        for a, f in self.terms.items():
            for b, g in other.terms.items():
                key = tuple(x + y for x, y in zip(a, b))
                c = f * self._shift_coeff(g, a)
                s = terms.get(key, zero) + c
                if s.is_zero():
                    terms.pop(key, None)
                else:
                    terms[key] = s
        return ShiftOp(self.ctx, terms)

    def __rmul__(self, other):
        return ShiftOp.const(self.ctx, other) * self

    def __pow__(self, n: int):
        result = ShiftOp.const(self.ctx, 1)
        base = self
        if n < 0:
            co = None
            if len(self.terms) == 1:
                (a, c), = self.terms.items()
                if c == 1:
                    base = ShiftOp(self.ctx, {tuple(-x for x in a): c})
                    n = -n
                    co = True
            if co is None:
                raise VariableMismatch("negative power of a non-invertible shift operator")
        for _ in range(n):
            result = result * base
        return result

    def __str__(self):
        return render_shift(self)

    def __repr__(self):
        return f"ShiftOp({render_shift(self)!r})"


def render_shift(S: ShiftOp) -> str:
    if not S.terms:
        return "0"
    parts = []
    for idx, a in enumerate(sorted(S.terms, reverse=True)):
        c = S.terms[a]
        cs = render_ratfun(c)
        body = []
        for i, k in enumerate(a):
            if k == 0:
                continue
            s = f"s{i + 1}"
            body.append(s if k == 1 else f"{s}^{k}")
        if c == 1 and body:
            term, sign = "*".join(body), "+"
        elif c == -1 and body:
            term, sign = "*".join(body), "-"
        else:
            need_paren = ("+" in cs or "-" in cs[1:] or "/" in cs)
            coeff_txt = f"({cs})" if need_paren else cs
            sign = "+"
            if not need_paren and cs.startswith("-"):
                coeff_txt, sign = cs[1:], "-"
            term = "*".join([coeff_txt] + body) if body else coeff_txt
        parts.append(term if (idx == 0 and sign == "+") else
                     ("-" + term if idx == 0 else sign + term))
    return "".join(parts)


# -- Mellin transform ----------------------------------------------------------


def mellin_context(ctx: WeylContext) -> ShiftContext:
    eps = tuple(f"e{i + 1}" for i in range(ctx.ndiff))
    table = VarTable(ctx.params() + eps)
    return ShiftContext(table, eps)


def mellin(P: WeylOp) -> ShiftOp:
    """Algebraic Mellin transform: x^a D^b is rewritten as x^(a-b) times a
    product of Euler-operator factors, then x -> sigma and theta -> -eps,
    normal ordered."""
    ctx = P.ctx
    sctx = mellin_context(ctx)
    table = sctx.table
    out: dict = {}
    zero = RatFun.const(table, 0)
    for (a, b), c in P.terms.items():
        shift = tuple(x - y for x, y in zip(a, b))
        coeff = _rebase_coeff(c, table)
        for i in range(ctx.ndiff):
            eps_i = MPoly.var(table, sctx.eps[i])
            for j in range(b[i]):
                factor = -(eps_i + shift[i]) - j
                coeff = coeff * factor
        acc = out.get(shift, zero) + coeff
        if acc.is_zero():
            out.pop(shift, None)
        else:
            out[shift] = acc
    return ShiftOp(sctx, out)


def _rebase_coeff(c: RatFun, table: VarTable) -> RatFun:
    return RatFun(c.num.rebased(table), c.den.rebased(table))


def shift_apply_numeric(S: ShiftOp, table: Mapping[tuple, object], at: tuple,
                        params: Optional[Mapping[str, float]] = None):
    """Numeric residual of S acting on tabulated values around ``at``.

    Table values are floats or (value, error) pairs; returns (residual,
    propagated_error).  Coefficients are evaluated at ``params`` plus the
    base point.
    """
    point = dict(params or {})
    for name, v in zip(S.ctx.eps, at):
        point[name] = float(v)
    residual = 0.0
    err = 0.0
    for a, c in S.terms.items():
        key = tuple(float(x) + k for x, k in zip(at, a))
        if key not in table:
            raise MissingTableEntry(f"no tabulated value at {key}")
        entry = table[key]
        if isinstance(entry, tuple):
            val, e = entry
        else:
            val, e = float(entry), 0.0
        w = c.evalf(point)
        residual += w * val
        err += abs(w) * e
    return residual, err
