"""Exact symbolic arithmetic: sparse multivariate polynomials over Q,
normalized rational functions, matrices over the fraction field, and
integer lattice kernels.

Everything here is immutable and exact; no floating point enters any
symbolic path.  Monomials are ordered graded-lexicographically in the
variable-table order, and rational functions are kept in a canonical
reduced form (gcd cancelled, denominator integer-primitive with positive
leading coefficient) so that equality is plain structural comparison.
"""

from __future__ import annotations

import itertools
from typing import Iterable, Mapping, Optional, Sequence, Union

from .errors import DimensionMismatch, NotSquare, SingularGauge, ZeroDenominator

try:
    from gmpy2 import mpq as QQ
except ImportError:  # pragma: no cover - gmpy2 is normally available
    from fractions import Fraction as QQ

Q_ZERO = QQ(0)
Q_ONE = QQ(1)

Scalar = Union[int, type(Q_ONE)]


def _q(x) -> QQ:
    return x if type(x) is type(Q_ONE) else QQ(x)


class VarTable:
    """Ordered, immutable table of variable names.

    All polynomials reference variables by index into one table, so two
    values interoperate exactly when their tables are equal (same names in
    the same order).
    """

    __slots__ = ("names", "index")

    def __init__(self, names: Iterable[str]):
        names = tuple(names)
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate variable names in {names}")
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "index", {n: i for i, n in enumerate(names)})

    def __setattr__(self, *a):
        raise AttributeError("VarTable is immutable")

    def __len__(self):
        return len(self.names)

    def __eq__(self, other):
        return isinstance(other, VarTable) and self.names == other.names

    def __hash__(self):
        return hash(self.names)

    def __contains__(self, name):
        return name in self.index

    def __repr__(self):
        return f"VarTable{self.names}"

    def extend(self, extra: Iterable[str]) -> "VarTable":
        return VarTable(self.names + tuple(extra))


def grlex_key(exp: tuple) -> tuple:
    """Sort key for graded-lex order: total degree first, then lex."""
    return (sum(exp), exp)


def poly_sort_key(p: "MPoly") -> tuple:
    """Total order on polynomials sharing a table: term-by-term graded-lex."""
    return tuple((grlex_key(e), (int(c.numerator), int(c.denominator)))
                 for e, c in p.sorted_terms())


class MPoly:
    """Sparse multivariate polynomial over Q.

    ``terms`` maps exponent tuples (length = table size) to nonzero
    rational coefficients; the zero polynomial is the empty map.
    """

    __slots__ = ("table", "terms", "_hash")

    def __init__(self, table: VarTable, terms: dict):
        # internal constructor: callers must pass a clean dict
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, *a):
        raise AttributeError("MPoly is immutable")

    # -- construction ------------------------------------------------------

    @staticmethod
    def zero(table: VarTable) -> "MPoly":
        return MPoly(table, {})

    @staticmethod
    def const(table: VarTable, c) -> "MPoly":
        c = _q(c)
        if c == 0:
            return MPoly(table, {})
        return MPoly(table, {(0,) * len(table): c})

    @staticmethod
    def var(table: VarTable, name: str, power: int = 1) -> "MPoly":
        i = table.index[name]
        exp = tuple(power if j == i else 0 for j in range(len(table)))
        return MPoly(table, {exp: Q_ONE})

    @staticmethod
    def from_terms(table: VarTable, items: Mapping[tuple, Scalar]) -> "MPoly":
        terms = {}
        for exp, c in items.items():
            c = _q(c)
            if c != 0:
                exp = tuple(exp)
                acc = terms.get(exp)
                terms[exp] = c if acc is None else acc + c
        return MPoly(table, {e: c for e, c in terms.items() if c != 0})

    # -- predicates and views ---------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_const(self) -> bool:
        return all(sum(e) == 0 for e in self.terms)

    def const_value(self):
        if not self.terms:
            return Q_ZERO
        (exp, c), = self.terms.items()
        if sum(exp) != 0:
            raise ValueError("polynomial is not constant")
        return c

    def total_degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def degree_in(self, name: str) -> int:
        i = self.table.index[name]
        return max((e[i] for e in self.terms), default=0)

    def variables(self) -> tuple:
        """Names actually occurring with positive exponent."""
        used = set()
        for e in self.terms:
            for i, k in enumerate(e):
                if k:
                    used.add(i)
        return tuple(self.table.names[i] for i in sorted(used))

    def sorted_terms(self, reverse: bool = True):
        return sorted(self.terms.items(), key=lambda t: grlex_key(t[0]), reverse=reverse)

    def leading(self):
        """(exponent, coefficient) of the graded-lex leading term."""
        if not self.terms:
            raise ValueError("zero polynomial has no leading term")
        exp = max(self.terms, key=grlex_key)
        return exp, self.terms[exp]

    # -- ring operations ----------------------------------------------------

    def _check(self, other: "MPoly"):
        if self.table != other.table:
            raise ValueError(f"variable tables differ: {self.table} vs {other.table}")

    def __add__(self, other):
        if not isinstance(other, MPoly):
            other = MPoly.const(self.table, other)
        self._check(other)
        terms = dict(self.terms)
        for e, c in other.terms.items():
            acc = terms.get(e)
            s = c if acc is None else acc + c
            if s == 0:
                terms.pop(e, None)
            else:
                terms[e] = s
        return MPoly(self.table, terms)

    __radd__ = __add__

    def __neg__(self):
        return MPoly(self.table, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, MPoly):
            other = MPoly.const(self.table, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, MPoly):
            c = _q(other)
            if c == 0:
                return MPoly(self.table, {})
            return MPoly(self.table, {e: k * c for e, k in self.terms.items()})
        self._check(other)
        if len(self.terms) > len(other.terms):
            a, b = other, self
        else:
            a, b = self, other
        terms = {}
        for e1, c1 in a.terms.items():
            for e2, c2 in b.terms.items():
                e = tuple(map(sum, zip(e1, e2)))
                acc = terms.get(e)
                s = c1 * c2 if acc is None else acc + c1 * c2
                if s == 0:
                    terms.pop(e, None)
                else:
                    terms[e] = s
        return MPoly(self.table, terms)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative power of a polynomial")
        result = MPoly.const(self.table, 1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base if n > 1 else base
            n >>= 1
        return result

    def __eq__(self, other):
        if not isinstance(other, MPoly):
            if isinstance(other, (int, type(Q_ONE))):
                return self == MPoly.const(self.table, other)
            return NotImplemented
        return self.table == other.table and self.terms == other.terms

    def __hash__(self):
        h = self._hash
        if h is None:
            h = hash((self.table, frozenset(self.terms.items())))
            object.__setattr__(self, "_hash", h)
        return h

    def __repr__(self):
        return f"MPoly({render_mpoly(self)!r})"

    def __str__(self):
        return render_mpoly(self)

    # -- calculus and evaluation --------------------------------------------

    def diff(self, name: str) -> "MPoly":
        i = self.table.index[name]
        terms = {}
        for e, c in self.terms.items():
            if e[i] == 0:
                continue
            e2 = e[:i] + (e[i] - 1,) + e[i + 1:]
            acc = terms.get(e2)
            s = c * e[i] if acc is None else acc + c * e[i]
            if s == 0:
                terms.pop(e2, None)
            else:
                terms[e2] = s
        return MPoly(self.table, terms)

    def eval(self, point: Mapping[str, Scalar]):
        """Exact evaluation; every occurring variable must be assigned."""
        vals = [None] * len(self.table)
        for name, v in point.items():
            vals[self.table.index[name]] = _q(v)
        total = Q_ZERO
        for e, c in self.terms.items():
            m = c
            for i, k in enumerate(e):
                if k:
                    if vals[i] is None:
                        raise ValueError(f"no value for variable {self.table.names[i]}")
                    m *= vals[i] ** k
            total += m
        return total

    def evalf(self, point: Mapping[str, float]) -> float:
        vals = [point.get(n) for n in self.table.names]
        total = 0.0
        for e, c in self.terms.items():
            m = float(c)
            for i, k in enumerate(e):
                if k:
                    m *= vals[i] ** k
            total += m
        return total

    def subst(self, images: Mapping[str, "MPoly"], target: Optional[VarTable] = None) -> "MPoly":
        """Substitute variables by polynomials over ``target``.

        Unmapped variables must exist in the target table under the same
        name.  Images may be MPoly over the target table, or scalars.
        """
        if target is None:
            some = next((v for v in images.values() if isinstance(v, MPoly)), None)
            target = some.table if some is not None else self.table
        cache = {}

        def image_of(i: int) -> MPoly:
            if i not in cache:
                name = self.table.names[i]
                img = images.get(name)
                if img is None:
                    img = MPoly.var(target, name)
                elif not isinstance(img, MPoly):
                    img = MPoly.const(target, img)
                cache[i] = img
            return cache[i]

        total = MPoly.zero(target)
        for e, c in self.terms.items():
            m = MPoly.const(target, c)
            for i, k in enumerate(e):
                if k:
                    m = m * image_of(i) ** k
            total = total + m
        return total

    def rebased(self, target: VarTable) -> "MPoly":
        """Re-express over a different table.

        Every variable actually occurring must exist in the target; names
        that never occur may be absent from it.
        """
        if target == self.table:
            return self
        pos = [target.index.get(n) for n in self.table.names]
        width = len(target)
        terms = {}
        for e, c in self.terms.items():
            e2 = [0] * width
            for i, k in enumerate(e):
                if k:
                    if pos[i] is None:
                        raise ValueError(
                            f"variable {self.table.names[i]} missing from target table")
                    e2[pos[i]] = k
            terms[tuple(e2)] = c
        return MPoly(target, terms)

    # -- integer normalization ----------------------------------------------

    def int_content(self):
        """Rational c > 0 such that self/c has coprime integer coefficients."""
        from math import gcd
        num_gcd = 0
        den_lcm = 1
        for c in self.terms.values():
            num_gcd = gcd(num_gcd, int(c.numerator))
            d = int(c.denominator)
            den_lcm = den_lcm * d // gcd(den_lcm, d)
        if num_gcd == 0:
            return Q_ONE
        return QQ(num_gcd, den_lcm)

    def int_primitive(self) -> "MPoly":
        """Integer-primitive scalar multiple with positive leading coefficient."""
        if not self.terms:
            return self
        c = self.int_content()
        if self.leading()[1] < 0:
            c = -c
        if c == 1:
            return self
        return MPoly(self.table, {e: k / c for e, k in self.terms.items()})

    def try_div(self, d: "MPoly") -> Optional["MPoly"]:
        """Exact quotient self/d, or None when the division is not exact."""
        self._check(d)
        if d.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        if d.is_const():
            return self * (Q_ONE / d.const_value())
        r = self
        de, dc = d.leading()
        q_terms = {}
        while not r.is_zero():
            re, rc = r.leading()
            qe = tuple(a - b for a, b in zip(re, de))
            if any(x < 0 for x in qe):
                return None
            qc = rc / dc
            q_terms[qe] = q_terms.get(qe, Q_ZERO) + qc
            r = r - MPoly(self.table, {qe: qc}) * d
        return MPoly(self.table, {e: c for e, c in q_terms.items() if c != 0})


# -- gcd and factorization ---------------------------------------------------


def _coeffs_in(p: MPoly, i: int) -> dict:
    """View p as a univariate polynomial in variable index i."""
    out = {}
    for e, c in p.terms.items():
        k = e[i]
        rest = e[:i] + (0,) + e[i + 1:]
        d = out.setdefault(k, {})
        d[rest] = d.get(rest, Q_ZERO) + c
    table = p.table
    return {k: MPoly(table, {e: c for e, c in d.items() if c != 0}) for k, d in out.items()}


def _from_coeffs(table: VarTable, i: int, coeffs: dict) -> MPoly:
    terms = {}
    for k, poly in coeffs.items():
        for e, c in poly.terms.items():
            e2 = e[:i] + (k,) + e[i + 1:]
            terms[e2] = terms.get(e2, Q_ZERO) + c
    return MPoly(table, {e: c for e, c in terms.items() if c != 0})


def _content_pp(p: MPoly, i: int):
    """Content (gcd of coefficients) and primitive part of p wrt variable i."""
    coeffs = _coeffs_in(p, i)
    cont = None
    for poly in coeffs.values():
        cont = poly if cont is None else mpoly_gcd(cont, poly)
        if cont.is_const():
            cont = MPoly.const(p.table, 1)
            break
    pp = p.try_div(cont)
    assert pp is not None
    return cont, pp


def _pseudo_rem(a: MPoly, b: MPoly, i: int) -> MPoly:
    """Pseudo-remainder of a by b wrt variable i (both nonzero, deg_a >= deg_b)."""
    bc = _coeffs_in(b, i)
    db = max(bc)
    lb = bc[db]
    r = a
    table = a.table
    while not r.is_zero():
        rc = _coeffs_in(r, i)
        dr = max(rc)
        if dr < db:
            break
        lr = rc[dr]
        shift = MPoly(table, {tuple(dr - db if j == i else 0 for j in range(len(table))): Q_ONE})
        r = r * lb - b * (lr * shift)
    return r


def mpoly_gcd(p: MPoly, q: MPoly) -> MPoly:
    """Gcd over Q, returned integer-primitive with positive leading coefficient.

    Recursive content/primitive-part reduction with a primitive PRS in the
    chosen main variable; adequate for the low-degree polynomials used here.
    """
    p._check(q)
    table = p.table
    one = MPoly.const(table, 1)
    if p.is_zero():
        return q.int_primitive() if not q.is_zero() else q
    if q.is_zero():
        return p.int_primitive()
    p = p.int_primitive()
    q = q.int_primitive()
    if p.is_const() or q.is_const():
        return one
    if p == q:
        return p
    if len(p.terms) == 1 and len(q.terms) == 1:
        (ep,), (eq,) = p.terms, q.terms
        return MPoly(table, {tuple(min(a, b) for a, b in zip(ep, eq)): Q_ONE})
    vp = {table.index[n] for n in p.variables()}
    vq = {table.index[n] for n in q.variables()}
    common = vp & vq
    if not common:
        return one
    i = min(common, key=lambda j: min(p.degree_in(table.names[j]), q.degree_in(table.names[j])))
    cp, pp_p = _content_pp(p, i)
    cq, pp_q = _content_pp(q, i)
    cg = mpoly_gcd(cp, cq)
    a, b = pp_p, pp_q
    if a.degree_in(table.names[i]) < b.degree_in(table.names[i]):
        a, b = b, a
    while not b.is_zero():
        r = _pseudo_rem(a, b, i)
        if r.is_zero():
            a, b = b, r
            break
        a, b = b, _content_pp(r, i)[1]
    g = _content_pp(a, i)[1] if not a.is_const() else one
    return (cg * g).int_primitive()


def _integer_divisors(n: int):
    n = abs(n)
    if n == 0:
        return [1]
    out = []
    d = 1
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            if d != n // d:
                out.append(n // d)
        d += 1
    return sorted(out)


def factor_list(p: MPoly) -> list:
    """Factor p over Q into irreducibles, as [(factor, multiplicity), ...].

    Factors are integer-primitive with positive leading coefficient; the
    rational constant is dropped.  Complete for polynomials whose factors
    have degree one in at least one variable (the only kind produced by the
    binary arrangements handled here); a residual factor irreducible by
    this search is emitted whole.
    """
    table = p.table
    if p.is_zero():
        raise ZeroDivisionError("cannot factor the zero polynomial")
    factors: dict = {}

    def add(f: MPoly, mult: int = 1):
        f = f.int_primitive()
        factors[f] = factors.get(f, 0) + mult

    def divisor_polys(w: MPoly):
        """All monic-ish divisors of w up to rational scalar, paired with
        the integer divisors of its content."""
        w = w
        base = factor_list(w) if not w.is_const() else []
        ints = _integer_divisors(int(w.int_content().numerator)) if not w.is_zero() else [1]
        polys = [MPoly.const(table, 1)]
        for f, m in base:
            polys = [g * f ** k for g in polys for k in range(m + 1)]
        return polys, ints

    def work(q: MPoly):
        if q.is_const():
            return
        name = q.variables()[0]
        i = table.index[name]
        cont, q = _content_pp(q, i)
        if not cont.is_const():
            work(cont)
        # split off powers of the variable itself
        coeffs = _coeffs_in(q, i)
        low = min(coeffs)
        if low > 0:
            add(MPoly.var(table, name), low)
            q = _from_coeffs(table, i, {k - low: v for k, v in coeffs.items()})
            coeffs = _coeffs_in(q, i)
        if q.is_const():
            return
        if max(coeffs) == 1:
            add(q)
            return
        # hunt factors of degree one in this variable: g*v - f with
        # f | trailing coefficient, g | leading coefficient (over Z[rest])
        a0 = coeffs[0]
        ad = coeffs[max(coeffs)]
        fs, f_ints = divisor_polys(a0)
        gs, g_ints = divisor_polys(ad)
        v = MPoly.var(table, name)
        progressed = True
        while progressed and q.degree_in(name) >= 1 and not q.is_const():
            progressed = False
            for fpoly, gpoly in itertools.product(fs, gs):
                for fi, gi in itertools.product(f_ints, g_ints):
                    for sign in (1, -1):
                        cand = (v * (gpoly * gi) - fpoly * (fi * sign)).int_primitive()
                        if cand.is_const():
                            continue
                        quot = q.try_div(cand)
                        while quot is not None:
                            add(cand)
                            q = quot
                            progressed = True
                            quot = q.try_div(cand)
            if q.degree_in(name) == 1 and len(q.variables()) >= 1:
                add(q)
                return
        if not q.is_const():
            # no degree-one split in this variable; peel content wrt another
            rest = [n for n in q.variables() if n != name]
            if rest:
                c2, q2 = _content_pp(q, table.index[rest[0]])
                if not c2.is_const():
                    work(c2)
                    work(q2)
                    return
            add(q)

    work(p)
    return sorted(factors.items(), key=lambda fm: (fm[0].total_degree(), poly_sort_key(fm[0])))


# -- rational functions -------------------------------------------------------


class RatFun:
    """Rational function num/den in canonical reduced form.

    gcd(num, den) is a unit and den is integer-primitive with positive
    graded-lex leading coefficient, so equality is structural.  When the
    denominator's factorization into pairwise-coprime irreducibles is
    known, it is carried along (``den_factors``); arithmetic then cancels
    by trial division instead of multivariate gcd, which is the fast path
    for everything built from products of linear forms.  The factorization
    never participates in comparison or hashing.
    """

    __slots__ = ("num", "den", "den_factors", "_hash")

    def __init__(self, num: MPoly, den: MPoly, den_factors=None):
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)
        object.__setattr__(self, "den_factors", den_factors)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, *a):
        raise AttributeError("RatFun is immutable")

    @property
    def table(self) -> VarTable:
        return self.num.table

    @staticmethod
    def from_poly(p: MPoly) -> "RatFun":
        return RatFun(p, MPoly.const(p.table, 1), ())

    @staticmethod
    def const(table: VarTable, c) -> "RatFun":
        return RatFun(MPoly.const(table, c), MPoly.const(table, 1), ())

    @staticmethod
    def var(table: VarTable, name: str) -> "RatFun":
        return RatFun(MPoly.var(table, name), MPoly.const(table, 1), ())

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_const(self) -> bool:
        return self.num.is_const() and self.den.is_const()

    def const_value(self):
        return self.num.const_value() / self.den.const_value()

    def with_den_factors(self, factors) -> "RatFun":
        return RatFun(self.num, self.den, tuple(factors))

    def __eq__(self, other):
        if isinstance(other, (int, type(Q_ONE))):
            other = RatFun.const(self.table, other)
        if not isinstance(other, RatFun):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        h = self._hash
        if h is None:
            h = hash((self.num, self.den))
            object.__setattr__(self, "_hash", h)
        return h

    def _coerce(self, other) -> "RatFun":
        if isinstance(other, RatFun):
            return other
        if isinstance(other, MPoly):
            return RatFun.from_poly(other)
        return RatFun.const(self.table, other)

    def __add__(self, other):
        o = self._coerce(other)
        if self.is_zero():
            return o
        if o.is_zero():
            return self
        if self.den_factors is not None and o.den_factors is not None:
            fa, fb = dict(self.den_factors), dict(o.den_factors)
            common = dict(fa)
            for f, m in fb.items():
                common[f] = max(common.get(f, 0), m)
            na = self.num * _factor_product(self.table, common, fa)
            nb = o.num * _factor_product(self.table, common, fb)
            return ratfun_from_factors(na + nb, common)
        if self.den == o.den:
            return ratfun_normalize(self.num + o.num, self.den)
        g = mpoly_gcd(self.den, o.den)
        if g.is_const():
            return ratfun_normalize(self.num * o.den + o.num * self.den, self.den * o.den)
        da = self.den.try_div(g)
        db = o.den.try_div(g)
        return ratfun_normalize(self.num * db + o.num * da, da * o.den)

    __radd__ = __add__

    def __neg__(self):
        return RatFun(-self.num, self.den, self.den_factors)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if self.is_zero() or o.is_zero():
            return RatFun.const(self.table, 0)
        if self.den_factors is not None and o.den_factors is not None:
            merged = dict(self.den_factors)
            for f, m in o.den_factors:
                merged[f] = merged.get(f, 0) + m
            return ratfun_from_factors(self.num * o.num, merged)
        g1 = mpoly_gcd(self.num, o.den)
        g2 = mpoly_gcd(o.num, self.den)
        n1 = self.num if g1.is_const() else self.num.try_div(g1)
        d2 = o.den if g1.is_const() else o.den.try_div(g1)
        n2 = o.num if g2.is_const() else o.num.try_div(g2)
        d1 = self.den if g2.is_const() else self.den.try_div(g2)
        return ratfun_normalize(n1 * n2, d1 * d2)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o.is_zero():
            raise ZeroDenominator("division by the zero rational function")
        if self.den_factors is not None and o.den_factors is not None:
            inv_fac = _invert_factored(o)
            if inv_fac is not None:
                return self * inv_fac
        return self * ratfun_normalize(o.den, o.num)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __pow__(self, n: int):
        if n == 0:
            return RatFun.const(self.table, 1)
        if n < 0:
            return (RatFun.const(self.table, 1) / self) ** (-n)
        if self.den_factors is not None:
            return ratfun_from_factors(self.num ** n,
                                       {f: m * n for f, m in self.den_factors})
        return ratfun_normalize(self.num ** n, self.den ** n)

    def diff(self, name: str) -> "RatFun":
        n, d = self.num, self.den
        if self.den_factors is not None:
            # logarithmic rule on the factored denominator: no generic gcd
            factors = dict(self.den_factors)
            table = self.table
            radical = MPoly.const(table, 1)
            for f in factors:
                radical = radical * f
            total = n.diff(name) * radical
            for f, m in factors.items():
                df = f.diff(name)
                if df.is_zero():
                    continue
                cof = MPoly.const(table, m)
                for g in factors:
                    if g != f:
                        cof = cof * g
                total = total - n * df * cof
            bumped = {f: m + 1 for f, m in factors.items()}
            return ratfun_from_factors(total, bumped)
        # generic quotient rule with gcd cancellation
        return ratfun_normalize(n.diff(name) * d - n * d.diff(name), d * d)

    def eval(self, point: Mapping[str, Scalar]):
        d = self.den.eval(point)
        if d == 0:
            raise ZeroDivisionError("denominator vanishes at the evaluation point")
        return self.num.eval(point) / d

    def evalf(self, point: Mapping[str, float]) -> float:
        return self.num.evalf(point) / self.den.evalf(point)

    def subst(self, images, target: Optional[VarTable] = None) -> "RatFun":
        imgs = {}
        for k, v in images.items():
            imgs[k] = v
        num_images = {k: (v.num if isinstance(v, RatFun) else v) for k, v in imgs.items()}
        affine = all((not isinstance(v, MPoly) and not isinstance(v, RatFun))
                     or (isinstance(v, MPoly) and v.total_degree() <= 1)
                     or (isinstance(v, RatFun) and v.den.is_const()
                         and v.num.total_degree() <= 1)
                     for v in imgs.values())
        if affine and self.den_factors is not None:
            some = next((v for v in num_images.values() if isinstance(v, MPoly)), None)
            tgt = target or (some.table if some is not None else self.table)
            num = self.num.subst(num_images, tgt)
            fac = {}
            scale = Q_ONE
            for f, m in self.den_factors:
                fi = f.subst(num_images, tgt)
                if fi.is_zero():
                    raise ZeroDenominator("substitution kills a denominator factor")
                if fi.is_const():
                    scale = scale * fi.const_value() ** m
                    continue
                c = fi.int_content()
                if fi.leading()[1] < 0:
                    c = -c
                if c != 1:
                    fi = fi * (Q_ONE / c)
                    scale = scale * c ** m
                fac[fi] = fac.get(fi, 0) + m
            if scale != 1:
                num = num * (Q_ONE / scale)
            # degree-one images keep factors irreducible; anything bigger
            # falls back to the generic path below
            if all(f.total_degree() <= 1 for f in fac):
                return ratfun_from_factors(num, fac)
        if any(isinstance(v, RatFun) and not v.den.is_const() for v in imgs.values()):
            # general composition through rational images
            some = next(v for v in imgs.values() if isinstance(v, RatFun))
            tgt = target or some.table
            result = RatFun.const(tgt, 0)
            den_acc = RatFun.const(tgt, 1)
            # write each variable image as RatFun and substitute term by term
            def img(name):
                v = imgs.get(name)
                if v is None:
                    return RatFun.var(tgt, name)
                if isinstance(v, RatFun):
                    return v
                if isinstance(v, MPoly):
                    return RatFun.from_poly(v)
                return RatFun.const(tgt, v)
            def poly_image(p: MPoly) -> RatFun:
                total = RatFun.const(tgt, 0)
                for e, c in p.terms.items():
                    m = RatFun.const(tgt, c)
                    for i, k in enumerate(e):
                        if k:
                            m = m * img(p.table.names[i]) ** k
                    total = total + m
                return total
            return poly_image(self.num) / poly_image(self.den)
        num = self.num.subst(num_images, target)
        den = self.den.subst(num_images, target)
        return ratfun_normalize(num, den)

    def rebased(self, target: VarTable) -> "RatFun":
        return RatFun(self.num.rebased(target), self.den.rebased(target))

    def __repr__(self):
        return f"RatFun({render_ratfun(self)!r})"

    def __str__(self):
        return render_ratfun(self)


def ratfun_normalize(num: MPoly, den: MPoly) -> RatFun:
    """Canonical reduced rational function num/den.

    Idempotent; raises ZeroDenominator when den = 0.
    """
    num._check(den)
    if den.is_zero():
        raise ZeroDenominator("zero denominator")
    if num.is_zero():
        return RatFun(num, MPoly.const(num.table, 1), ())
    g = mpoly_gcd(num, den)
    if not g.is_const():
        num = num.try_div(g)
        den = den.try_div(g)
    c = den.int_content()
    if den.leading()[1] < 0:
        c = -c
    if c != 1:
        inv = Q_ONE / c
        den = den * inv
        num = num * inv
    return RatFun(num, den, () if den.is_const() else None)


def _factor_product(table: VarTable, total: dict, present: dict) -> MPoly:
    """prod f^(total[f] - present.get(f, 0)) for the factored common engine."""
    out = MPoly.const(table, 1)
    for f, m in total.items():
        k = m - present.get(f, 0)
        if k > 0:
            out = out * f ** k
    return out


def ratfun_from_factors(num: MPoly, factors) -> RatFun:
    """Reduced rational function num / prod(f^m) from a trusted factored
    denominator (pairwise-coprime irreducibles, primitive, positive lead).

    Cancellation is trial division of the numerator by the factors; no
    multivariate gcd is needed, which keeps derivative/sum chains over
    products of linear forms fast.
    """
    table = num.table
    if isinstance(factors, dict):
        factors = factors.items()
    fac = {}
    for f, m in factors:
        if m:
            fac[f] = fac.get(f, 0) + m
    if num.is_zero():
        return RatFun(num, MPoly.const(table, 1), ())
    reduced = {}
    for f, m in fac.items():
        if f.is_const():
            c = f.const_value()
            num = num * (Q_ONE / c) ** m
            continue
        while m > 0:
            q = num.try_div(f)
            if q is None:
                break
            num = q
            m -= 1
        if m:
            reduced[f] = m
    den = MPoly.const(table, 1)
    for f, m in reduced.items():
        den = den * f ** m
    items = tuple(sorted(reduced.items(), key=lambda fm: poly_sort_key(fm[0])))
    return RatFun(num, den, items)


def _invert_factored(rf: RatFun) -> Optional[RatFun]:
    """1/rf with a factored denominator, when rf.num is simple enough
    (constant or a monomial) to keep the factorization trusted."""
    table = rf.table
    if len(rf.num.terms) != 1:
        return None
    (exp, c), = rf.num.terms.items()
    fac = {}
    for i, k in enumerate(exp):
        if k:
            fac[MPoly.var(table, table.names[i])] = k
    num = MPoly.const(table, Q_ONE / c)
    for f, m in rf.den_factors:
        num = num * f ** m
    return ratfun_from_factors(num, fac)


def attach_den_factors(rf: RatFun, candidates: Sequence[MPoly]) -> RatFun:
    """Record a factorization of rf.den by trial division by ``candidates``
    (which must be irreducible).  Leaves rf unchanged when the candidates
    do not exhaust the denominator.
    """
    den = rf.den
    found = {}
    for f in candidates:
        if f in found:
            continue
        m = 0
        q = den.try_div(f)
        while q is not None:
            den = q
            m += 1
            q = den.try_div(f)
        if m:
            found[f] = m
    if not den.is_const() or den.const_value() != 1:
        return rf
    items = tuple(sorted(found.items(), key=lambda fm: poly_sort_key(fm[0])))
    return rf.with_den_factors(items)


# -- rendering ----------------------------------------------------------------


def _render_coeff(c) -> str:
    if c.denominator == 1:
        return str(c.numerator)
    return f"{c.numerator}/{c.denominator}"


def render_mpoly(p: MPoly) -> str:
    """Canonical text: graded-lex order, `^` powers, explicit `*`.

    A leading negative coefficient with further terms renders as -(...) so
    the output re-parses identically under the expression grammar (whose
    unary minus binds below addition).
    """
    if p.is_zero():
        return "0"
    terms = p.sorted_terms()
    if terms[0][1] < 0 and len(terms) > 1:
        return "-(" + render_mpoly(-p) + ")"
    names = p.table.names
    parts = []
    for k, (exp, c) in enumerate(terms):
        mono = []
        for i, e in enumerate(exp):
            if e == 1:
                mono.append(names[i])
            elif e > 1:
                mono.append(f"{names[i]}^{e}")
        ac = abs(c)
        if not mono:
            body = _render_coeff(ac)
        elif ac == 1:
            body = "*".join(mono)
        else:
            body = "*".join([_render_coeff(ac)] + mono)
        if k == 0:
            parts.append(("-" if c < 0 else "") + body)
        else:
            parts.append(("-" if c < 0 else "+") + body)
    return "".join(parts)


def render_ratfun(rf: RatFun) -> str:
    if rf.num.is_zero():
        return "0"
    if rf.den.is_const() and rf.den.const_value() == 1:
        return render_mpoly(rf.num)
    num = f"({render_mpoly(rf.num)})"
    if rf.den_factors:
        fs = sorted(rf.den_factors, key=lambda fm: poly_sort_key(fm[0]), reverse=True)
        body = "*".join(f"({render_mpoly(f)})" + (f"^{m}" if m > 1 else "") for f, m in fs)
        rebuilt = MPoly.const(rf.table, 1)
        for f, m in fs:
            rebuilt = rebuilt * f ** m
        if rebuilt == rf.den:
            return f"{num}/({body})"
    return f"{num}/({render_mpoly(rf.den)})"


# -- matrices over the fraction field ----------------------------------------


class FracMatrix:
    """Immutable rectangular matrix of RatFun entries."""

    __slots__ = ("table", "rows", "cols", "entries")

    def __init__(self, entries: Sequence[Sequence[RatFun]]):
        entries = tuple(tuple(row) for row in entries)
        if not entries or not entries[0]:
            raise DimensionMismatch("matrix dimensions must be positive")
        cols = len(entries[0])
        if any(len(r) != cols for r in entries):
            raise DimensionMismatch("ragged rows")
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "rows", len(entries))
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "table", entries[0][0].table)

    def __setattr__(self, *a):
        raise AttributeError("FracMatrix is immutable")

    @staticmethod
    def identity(table: VarTable, n: int) -> "FracMatrix":
        one = RatFun.const(table, 1)
        zero = RatFun.const(table, 0)
        return FracMatrix([[one if i == j else zero for j in range(n)] for i in range(n)])

    @staticmethod
    def from_rows(table: VarTable, rows) -> "FracMatrix":
        def conv(x):
            if isinstance(x, RatFun):
                return x
            if isinstance(x, MPoly):
                return RatFun.from_poly(x)
            return RatFun.const(table, x)
        return FracMatrix([[conv(x) for x in row] for row in rows])

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def __eq__(self, other):
        return isinstance(other, FracMatrix) and self.entries == other.entries

    def __hash__(self):
        return hash(self.entries)

    def __add__(self, other):
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise DimensionMismatch("matrix shapes differ")
        return FracMatrix([[a + b for a, b in zip(r1, r2)]
                           for r1, r2 in zip(self.entries, other.entries)])

    def __sub__(self, other):
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise DimensionMismatch("matrix shapes differ")
        return FracMatrix([[a - b for a, b in zip(r1, r2)]
                           for r1, r2 in zip(self.entries, other.entries)])

    def __mul__(self, other):
        if isinstance(other, FracMatrix):
            if self.cols != other.rows:
                raise DimensionMismatch("inner dimensions differ")
            cols = list(zip(*other.entries))
            return FracMatrix([[_dot(row, col) for col in cols] for row in self.entries])
        return FracMatrix([[a * other for a in row] for row in self.entries])

    def transpose(self) -> "FracMatrix":
        return FracMatrix(list(zip(*self.entries)))

    def map(self, fn) -> "FracMatrix":
        return FracMatrix([[fn(a) for a in row] for row in self.entries])

    def diff(self, name: str) -> "FracMatrix":
        return self.map(lambda a: a.diff(name))

    def __str__(self):
        return "\n".join("  ".join(render_ratfun(a) for a in row) for row in self.entries)


def _dot(row, col) -> RatFun:
    total = None
    for a, b in zip(row, col):
        p = a * b
        total = p if total is None else total + p
    return total


def frac_det(M: FracMatrix) -> RatFun:
    """Exact determinant over the fraction field (Gaussian elimination)."""
    if M.rows != M.cols:
        raise NotSquare(f"{M.rows}x{M.cols} matrix has no determinant")
    n = M.rows
    a = [list(row) for row in M.entries]
    det = RatFun.const(M.table, 1)
    sign = 1
    for k in range(n):
        piv = None
        for i in range(k, n):
            if not a[i][k].is_zero():
                piv = i
                break
        if piv is None:
            return RatFun.const(M.table, 0)
        if piv != k:
            a[k], a[piv] = a[piv], a[k]
            sign = -sign
        pivot = a[k][k]
        det = det * pivot
        for i in range(k + 1, n):
            if a[i][k].is_zero():
                continue
            f = a[i][k] / pivot
            a[i][k] = RatFun.const(M.table, 0)
            for j in range(k + 1, n):
                a[i][j] = a[i][j] - f * a[k][j]
    if sign < 0:
        det = -det
    return det


def frac_inverse(M: FracMatrix) -> FracMatrix:
    """Exact inverse; raises SingularGauge when det = 0."""
    if M.rows != M.cols:
        raise NotSquare(f"{M.rows}x{M.cols} matrix has no inverse")
    n = M.rows
    zero = RatFun.const(M.table, 0)
    one = RatFun.const(M.table, 1)
    a = [list(row) + [one if i == j else zero for j in range(n)]
         for i, row in enumerate(M.entries)]
    for k in range(n):
        piv = next((i for i in range(k, n) if not a[i][k].is_zero()), None)
        if piv is None:
            raise SingularGauge("matrix is singular")
        a[k], a[piv] = a[piv], a[k]
        inv = one / a[k][k]
        a[k] = [x * inv for x in a[k]]
        for i in range(n):
            if i == k or a[i][k].is_zero():
                continue
            f = a[i][k]
            a[i] = [x - f * y for x, y in zip(a[i], a[k])]
    return FracMatrix([row[n:] for row in a])


# -- integer matrices and lattice kernels -------------------------------------


class IntMatrix:
    """Immutable rectangular integer matrix."""

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, entries: Sequence[Sequence[int]]):
        entries = tuple(tuple(int(x) for x in row) for row in entries)
        if not entries:
            raise DimensionMismatch("empty matrix")
        cols = len(entries[0])
        if any(len(r) != cols for r in entries):
            raise DimensionMismatch("ragged rows")
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "rows", len(entries))
        object.__setattr__(self, "cols", cols)

    def __setattr__(self, *a):
        raise AttributeError("IntMatrix is immutable")

    def __getitem__(self, ij):
        return self.entries[ij[0]][ij[1]]

    def __eq__(self, other):
        return isinstance(other, IntMatrix) and self.entries == other.entries

    def __hash__(self):
        return hash(self.entries)

    def mul_vec(self, v: Sequence[int]) -> tuple:
        return tuple(sum(a * b for a, b in zip(row, v)) for row in self.entries)

    def __str__(self):
        return "\n".join(" ".join(str(x) for x in row) for row in self.entries)


def _hnf_rows(vectors: list) -> list:
    """Hermite-style canonical form of the lattice spanned by the rows."""
    rows = [list(v) for v in vectors if any(v)]
    if not rows:
        return []
    ncols = len(rows[0])
    done = []
    col = 0
    while rows and col < ncols:
        live = [r for r in rows if r[col] != 0]
        if not live:
            col += 1
            continue
        while len(live) > 1:
            live.sort(key=lambda r: abs(r[col]))
            base = live[0]
            for r in live[1:]:
                q = r[col] // base[col]
                for j in range(ncols):
                    r[j] -= q * base[j]
            live = [r for r in live if r[col] != 0]
            rows = [r for r in rows if any(r)]
        piv = live[0]
        if piv[col] < 0:
            for j in range(ncols):
                piv[j] = -piv[j]
        done.append(piv)
        rows = [r for r in rows if r is not piv and any(r)]
        col += 1
    # reduce entries above each pivot into [0, pivot)
    for i, piv in enumerate(done):
        c = next(j for j in range(ncols) if piv[j] != 0)
        for other in done[:i]:
            q = other[c] // piv[c]
            if q:
                for j in range(ncols):
                    other[j] -= q * piv[j]
    done.sort(key=lambda r: next(j for j in range(ncols) if r[j] != 0))
    return [tuple(r) for r in done]


def int_kernel_basis(A: IntMatrix) -> list:
    """Lattice basis of the integer kernel of A, in Hermite-canonical form.

    Every returned vector v satisfies A*v = 0 exactly; the empty list means
    the kernel is trivial.
    """
    m, n = A.rows, A.cols
    work = [list(col) for col in zip(*A.entries)]      # columns of A
    tracker = [[1 if i == j else 0 for i in range(n)] for j in range(n)]
    fixed = 0
    for row in range(m):
        live = [j for j in range(fixed, n) if work[j][row] != 0]
        if not live:
            continue
        while len(live) > 1:
            live.sort(key=lambda j: abs(work[j][row]))
            base = live[0]
            for j in live[1:]:
                q = work[j][row] // work[base][row]
                for i in range(m):
                    work[j][i] -= q * work[base][i]
                for i in range(n):
                    tracker[j][i] -= q * tracker[base][i]
            live = [j for j in live if work[j][row] != 0]
        base = live[0]
        work[fixed], work[base] = work[base], work[fixed]
        tracker[fixed], tracker[base] = tracker[base], tracker[fixed]
        fixed += 1
    kernel = [tracker[j] for j in range(fixed, n)]
    # also keep any early column that ended up annihilated
    kernel += [tracker[j] for j in range(fixed) if all(x == 0 for x in work[j])]
    basis = _hnf_rows(kernel)
    for v in basis:
        assert all(x == 0 for x in A.mul_vec(v))
    return basis
