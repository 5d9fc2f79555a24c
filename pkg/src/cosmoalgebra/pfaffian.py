"""Connection (Pfaffian) systems from explicit left-ideal generators.

The derivation prolongs the generators by derivative monomials up to a
bound, eliminates over the rational-function field, and reads the finite
set of standard monomials off the staircase of leading terms.  Connection
matrices follow by normal-form reduction of first derivatives of the
basis; an exact change of basis reaches any other monomial basis.  Gauge
transformations, flatness, epsilon-factorization, and singular loci are
checked exactly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Tuple

from .errors import (NotSolvable, RankNotDetermined, SingularGauge,
                     VariableMismatch)
from .symcore import (FracMatrix, MPoly, Q_ONE, RatFun, VarTable, factor_list,
                      frac_det, frac_inverse, mpoly_gcd, ratfun_normalize)
from .weylshift import WeylContext, WeylOp, weyl_mul

_STANDARD_CAP = 512


@dataclass(frozen=True)
class PfaffianSystem:
    """Monomial basis (first element the unit) and one connection matrix
    per differential variable: d_i F = M_i F."""
    ctx: WeylContext
    basis: Tuple[Tuple[int, ...], ...]
    matrices: Tuple[FracMatrix, ...]

    @property
    def dimension(self) -> int:
        return len(self.basis)

    def matrix(self, var: str) -> FracMatrix:
        return self.matrices[self.ctx.diff.index(var)]

    def basis_names(self) -> tuple:
        return tuple(_mono_name(self.ctx, b) for b in self.basis)


def _mono_name(ctx: WeylContext, exp: tuple) -> str:
    parts = []
    for name, k in zip(ctx.diff, exp):
        d = "d" + (name[1:] if name.startswith("a") and name[1:].isdigit() else name)
        if k == 1:
            parts.append(d)
        elif k:
            parts.append(f"{d}^{k}")
    return "*".join(parts) if parts else "1"


def _mono_key(exp: tuple) -> tuple:
    return (sum(exp), exp)


def _flatten(op: WeylOp) -> dict:
    """Operator as a row over derivative monomials with MPoly entries
    (coefficient denominators cleared)."""
    table = op.ctx.table
    didx = op.ctx.diff_indices()
    dens = []
    for (a, b), c in op.terms.items():
        if not c.den.is_const():
            dens.append(c.den)
    clear = MPoly.const(table, 1)
    for d in {d: None for d in dens}:
        clear = clear * d
    row = {}
    for (a, b), c in op.terms.items():
        if any(x < 0 for x in a):
            raise VariableMismatch("Laurent operators are not supported here")
        mono = MPoly.const(table, 1)
        for i, k in enumerate(a):
            if k:
                mono = mono * MPoly.var(table, op.ctx.diff[i]) ** k
        scaled = c * RatFun.from_poly(clear)
        if not scaled.den.is_const():
            raise VariableMismatch("could not clear coefficient denominators")
        poly = scaled.num * (Q_ONE / scaled.den.const_value()) * mono
        row[b] = row.get(b, MPoly.zero(table)) + poly
    return {b: p for b, p in row.items() if not p.is_zero()}


def _strip_content(row: dict) -> dict:
    g = None
    for p in row.values():
        g = p.int_primitive() if g is None else mpoly_gcd(g, p)
        if g.is_const():
            g = None
            break
    if g is not None and not g.is_const():
        row = {m: p.try_div(g) for m, p in row.items()}
    # keep integer content small as well
    c = None
    for p in row.values():
        ic = p.int_content()
        c = ic if c is None else _q_gcd(c, ic)
    if c is not None and c != 1:
        inv = Q_ONE / c
        row = {m: p * inv for m, p in row.items()}
    return row


def _q_gcd(a, b):
    from math import gcd
    num = gcd(int(a.numerator), int(b.numerator))
    den = int(a.denominator) * int(b.denominator) // gcd(int(a.denominator), int(b.denominator))
    from .symcore import QQ
    return QQ(num, den)


def _lead(row: dict) -> tuple:
    return max(row, key=_mono_key)


def _combine(row: dict, piv: dict, mono: tuple, table: VarTable) -> dict:
    """Eliminate ``mono`` from row using the pivot row (both polynomial)."""
    pc = piv[mono]
    rc = row[mono]
    out = {}
    for m, p in row.items():
        out[m] = p * pc
    for m, p in piv.items():
        q = p * rc
        out[m] = out.get(m, MPoly.zero(table)) - q
    out = {m: p for m, p in out.items() if not p.is_zero()}
    return _strip_content(out) if out else out


class _Elimination:
    """Row space of the prolonged generators, echelonized by leading
    derivative monomial."""

    def __init__(self, gens: Sequence[WeylOp], order: int):
        self.ctx = gens[0].ctx
        table = self.ctx.table
        self.table = table
        rows = []
        for g in gens:
            for gamma in _exponents_upto(self.ctx.ndiff, order):
                op = g
                for i, k in enumerate(gamma):
                    for _ in range(k):
                        op = weyl_mul(WeylOp.derivative(self.ctx, self.ctx.diff[i]), op)
                rows.append(_strip_content(_flatten(op)))
        self.pivots = {}
        empty_key = (-1, ())
        queue = sorted(rows, key=lambda r: _mono_key(_lead(r)) if r else empty_key,
                       reverse=True)
        for row in queue:
            row = self._reduce(row)
            if row:
                self.pivots[_lead(row)] = row
        self._nf_cache = {}

    def _reduce(self, row: dict) -> dict:
        while row:
            lm = _lead(row)
            piv = self.pivots.get(lm)
            if piv is None:
                return row
            row = _combine(row, piv, lm, self.table)
        return row

    def standard_monomials(self) -> Optional[tuple]:
        """Monomials outside the pivot staircase, or None when infinite
        (within the exploration cap)."""
        lead_set = set(self.pivots)
        found = []
        seen = set()
        frontier = [(0,) * self.ctx.ndiff]
        while frontier:
            mono = frontier.pop()
            if mono in seen:
                continue
            seen.add(mono)
            if any(all(x >= y for x, y in zip(mono, lm)) for lm in lead_set):
                continue
            found.append(mono)
            if len(found) > _STANDARD_CAP:
                return None
            for i in range(self.ctx.ndiff):
                nxt = mono[:i] + (mono[i] + 1,) + mono[i + 1:]
                if nxt not in seen:
                    frontier.append(nxt)
        # the complement of a monomial ideal is downward closed, so an
        # exhausted frontier below the cap means it is finite and complete
        return tuple(sorted(found, key=_mono_key))

    def normal_form(self, mono: tuple, standard: set) -> Optional[dict]:
        """mono as a combination of standard monomials, or None when the
        bounded elimination cannot decide it."""
        if mono in standard:
            return {mono: RatFun.const(self.table, 1)}
        cached = self._nf_cache.get(mono)
        if cached is not None:
            return cached
        piv = self.pivots.get(mono)
        if piv is None:
            return None
        lc = RatFun.from_poly(piv[mono])
        out = {}
        for m, p in piv.items():
            if m == mono:
                continue
            sub = self.normal_form(m, standard)
            if sub is None:
                return None
            scale = ratfun_normalize(-p, MPoly.const(self.table, 1)) / lc
            for s, c in sub.items():
                acc = out.get(s, RatFun.const(self.table, 0)) + scale * c
                if acc.is_zero():
                    out.pop(s, None)
                else:
                    out[s] = acc
        self._nf_cache[mono] = out
        return out


def _exponents_upto(n: int, total: int):
    for degree in range(total + 1):
        for combo in itertools.combinations_with_replacement(range(n), degree):
            exp = [0] * n
            for i in combo:
                exp[i] += 1
            yield tuple(exp)


def derive_pfaffian(generators: Sequence[WeylOp], max_order: int = 4,
                    basis: Optional[Sequence] = None) -> PfaffianSystem:
    """Connection matrices of the left ideal spanned by the generators.

    Prolongs by all derivative monomials of order <= k for growing k,
    eliminates, and accepts once the standard-monomial set is finite and
    stable between two consecutive orders and all needed reductions land
    in it.  ``basis`` may request a different monomial basis (strings like
    "dX1*dX2" or exponent tuples); the change of basis is exact.
    """
    if not generators:
        raise NotSolvable("no generators")
    ctx = generators[0].ctx
    for g in generators:
        if g.ctx != ctx:
            raise VariableMismatch("generators live in different algebras")
        if g.is_zero():
            raise NotSolvable("zero generator")
    prev = None
    last_error = "standard monomials did not stabilize"
    for order in range(1, max_order + 1):
        elim = _Elimination(generators, order)
        if not elim.pivots:
            raise NotSolvable("generators eliminated to zero")
        std = elim.standard_monomials()
        stable = std is not None and std == prev
        prev = std
        if not stable:
            continue
        system = _assemble(elim, std)
        if system is None:
            last_error = "normal forms exceed the prolongation order"
            continue
        if basis is not None:
            system = _change_basis(system, elim, std, basis)
        return system
    raise RankNotDetermined(f"{last_error} up to order {max_order}")


def _assemble(elim: _Elimination, std: tuple) -> Optional[PfaffianSystem]:
    ctx = elim.ctx
    std_set = set(std)
    zero = RatFun.const(elim.table, 0)
    matrices = []
    for i, var in enumerate(ctx.diff):
        rows = []
        for s in std:
            target = s[:i] + (s[i] + 1,) + s[i + 1:]
            nf = elim.normal_form(target, std_set)
            if nf is None:
                return None
            rows.append([nf.get(t, zero) for t in std])
        matrices.append(FracMatrix(rows))
    return PfaffianSystem(ctx, std, tuple(matrices))


def _parse_basis_entry(ctx: WeylContext, entry) -> tuple:
    if isinstance(entry, tuple):
        return entry
    text = str(entry).strip()
    exp = [0] * ctx.ndiff
    if text in ("1", ""):
        return tuple(exp)
    for part in text.split("*"):
        part = part.strip()
        if "^" in part:
            part, k = part.split("^")
            k = int(k)
        else:
            k = 1
        if not part.startswith("d"):
            raise NotSolvable(f"bad basis monomial {entry!r}")
        name = part[1:]
        if name not in ctx.diff and f"a{name}" in ctx.diff:
            name = f"a{name}"
        if name not in ctx.diff:
            raise NotSolvable(f"bad basis monomial {entry!r}")
        exp[ctx.diff.index(name)] += k
    return tuple(exp)


def _change_basis(system: PfaffianSystem, elim: _Elimination, std: tuple,
                  basis: Sequence) -> PfaffianSystem:
    ctx = system.ctx
    wanted = [_parse_basis_entry(ctx, b) for b in basis]
    if len(wanted) != len(std):
        raise NotSolvable(
            f"requested basis has {len(wanted)} monomials, rank is {len(std)}")
    std_set = set(std)
    zero = RatFun.const(elim.table, 0)
    rows = []
    for w in wanted:
        nf = elim.normal_form(w, std_set)
        if nf is None:
            raise NotSolvable(f"cannot reduce requested monomial {w}")
        rows.append([nf.get(t, zero) for t in std])
    C = FracMatrix(rows)
    try:
        transformed = gauge_transform(system, C)
    except SingularGauge:
        raise NotSolvable("requested monomials are not a basis")
    return PfaffianSystem(ctx, tuple(wanted), transformed.matrices)


def gauge_transform(system: PfaffianSystem, G: FracMatrix) -> PfaffianSystem:
    """Basis change F -> G F: each matrix maps to G M G^-1 + (dG) G^-1."""
    if G.rows != G.cols or G.rows != system.dimension:
        raise SingularGauge("gauge matrix dimensions do not match the system")
    if frac_det(G).is_zero():
        raise SingularGauge("gauge matrix is singular")
    Ginv = frac_inverse(G)
    out = []
    for var, M in zip(system.ctx.diff, system.matrices):
        out.append(G * M * Ginv + G.diff(var) * Ginv)
    return PfaffianSystem(system.ctx, system.basis, tuple(out))


def check_flat(system: PfaffianSystem) -> bool:
    """Integrability: d_i M_j + M_j M_i symmetric in (i, j), exactly."""
    mats = system.matrices
    names = system.ctx.diff
    for i in range(len(mats)):
        for j in range(i + 1, len(mats)):
            lhs = mats[j].diff(names[i]) + mats[j] * mats[i]
            rhs = mats[i].diff(names[j]) + mats[i] * mats[j]
            if lhs != rhs:
                return False
    return True


def singular_locus(system: PfaffianSystem) -> set:
    """Normalized irreducible factors of the least common denominator of
    all connection-matrix entries."""
    table = system.ctx.table
    lcm = MPoly.const(table, 1)
    for M in system.matrices:
        for row in M.entries:
            for entry in row:
                d = entry.den
                if d.is_const():
                    continue
                g = mpoly_gcd(lcm, d)
                extra = d.try_div(g) if not g.is_const() else d
                lcm = lcm * extra
    out = set()
    if lcm.is_const():
        return out
    for f, _ in factor_list(lcm):
        out.add(_normalize_factor(f))
    return out


def _normalize_factor(p: MPoly) -> MPoly:
    p = p.int_primitive()
    first = min((i for e in p.terms for i, k in enumerate(e) if k), default=None)
    if first is not None:
        lead = max((e for e in p.terms if e[first]), key=lambda e: e)
        if p.terms[lead] < 0:
            p = -p
    return p


def eps_factorized(system: PfaffianSystem, eps: str = "eps") -> bool:
    """True when every entry equals eps times an eps-free rational
    function (exact coefficient inspection)."""
    table = system.ctx.table
    eps_rf = RatFun.var(table, eps)
    for M in system.matrices:
        for row in M.entries:
            for entry in row:
                if entry.is_zero():
                    continue
                q = entry / eps_rf
                if q.num.degree_in(eps) or q.den.degree_in(eps):
                    return False
    return True
