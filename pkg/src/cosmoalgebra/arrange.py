"""Hyperplane-arrangement analytics: shifted forms, the coefficient matrix
and its maximal minors (the Euler discriminant), physical singularities
from totally time-ordered terms, and bounded-chamber counts via the
intersection poset and Zaslavsky's formula.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence, Tuple

from .errors import DegeneratePoint
from .graphkit import KinGraph, distinct_linear_forms, pf_decomposition
from .symcore import (FracMatrix, MPoly, QQ, Q_ONE, Q_ZERO, RatFun, VarTable,
                      frac_det, poly_sort_key)


@dataclass(frozen=True)
class ShiftedForm:
    """A subgraph linear form with its vertex shifts made explicit:
    L = sum(alpha_v over participating vertices) + constant(X, Y)."""
    alpha_coeffs: Tuple[int, ...]
    constant: MPoly

    def column(self) -> tuple:
        """Coefficient column T: alpha coefficients stacked over the
        constant."""
        return self.alpha_coeffs + (self.constant,)


def shifted_forms(G: KinGraph) -> list:
    """One ShiftedForm per distinct connected-subgraph linear form, in the
    canonical form order."""
    out = []
    for form in distinct_linear_forms(G):
        coeffs = tuple(1 if form.degree_in(f"X{i}") else 0
                       for i in range(1, G.n + 1))
        out.append(ShiftedForm(coeffs, form))
    return out


def coeff_matrix(G: KinGraph) -> FracMatrix:
    """M = [I_{n+1} | T_1 ... T_k] over the graph's kinematic table."""
    forms = shifted_forms(G)
    n = G.n
    table = G.table
    rows = []
    for i in range(n + 1):
        row = [1 if i == j else 0 for j in range(n + 1)]
        for sf in forms:
            col = sf.column()
            row.append(col[i])
        rows.append(row)
    return FracMatrix.from_rows(table, rows)


def _normalize_minor(p: MPoly) -> MPoly:
    """Integer-primitive, sign fixed so the earliest occurring variable's
    leading monomial has a positive coefficient."""
    p = p.int_primitive()
    first = min((i for e in p.terms for i, k in enumerate(e) if k), default=None)
    if first is not None:
        lead = max((e for e in p.terms if e[first]), key=lambda e: e)
        if p.terms[lead] < 0:
            p = -p
    return p


def _block_minors(columns: Sequence[tuple], table: VarTable) -> set:
    """All square minors, of every size, of the (n+1) x k block whose
    columns are the given coefficient columns; nonzero, nonconstant,
    normalized.  These are exactly the nonzero maximal minors of
    [I_{n+1} | block], up to sign."""
    if not columns:
        return set()
    nrows = len(columns[0])
    out = set()
    max_size = min(nrows, len(columns))
    for size in range(1, max_size + 1):
        for col_idx in itertools.combinations(range(len(columns)), size):
            for row_idx in itertools.combinations(range(nrows), size):
                entries = [[_as_ratfun(columns[j][i], table) for j in col_idx]
                           for i in row_idx]
                det = frac_det(FracMatrix(entries))
                p = det.num
                if p.is_zero() or p.is_const():
                    continue
                out.add(_normalize_minor(p))
    return out


def _as_ratfun(x, table: VarTable) -> RatFun:
    if isinstance(x, RatFun):
        return x
    if isinstance(x, MPoly):
        return RatFun.from_poly(x)
    return RatFun.const(table, x)


def euler_discriminant(G: KinGraph) -> set:
    """Normalized nonconstant maximal minors of the full coefficient
    matrix; their product cuts out the locus where the complement's Euler
    characteristic drops."""
    cols = [sf.column() for sf in shifted_forms(G)]
    return _block_minors(cols, G.table)


def physical_singularities(G: KinGraph) -> set:
    """Union over totally time-ordered decomposition terms of the
    normalized minors of [I_{n+1} | T's of that term's denominator]."""
    forms = {sf.constant: sf for sf in shifted_forms(G)}
    out = set()
    for term in pf_decomposition(G):
        if not term.tto:
            continue
        cols = [forms[f].column() for f in term.forms]
        out |= _block_minors(cols, G.table)
    return out


# -- real arrangement and chamber counting -------------------------------------


def _hyperplanes_at(G: KinGraph, point: Mapping[str, object]) -> list:
    """Affine hyperplanes (normal, offset) in alpha-space at a kinematic
    point: the shifted forms plus the coordinate hyperplanes."""
    planes = []
    for sf in shifted_forms(G):
        c = sf.constant.eval(point)
        planes.append((tuple(QQ(x) for x in sf.alpha_coeffs), QQ(c)))
    for j in range(G.n):
        planes.append((tuple(Q_ONE if i == j else Q_ZERO for i in range(G.n)),
                       Q_ZERO))
    return planes


def _check_generic(G: KinGraph, point: Mapping[str, object]):
    """Every symbolically nonzero minor of the extended coefficient block
    must stay nonzero at the point."""
    cols = [sf.column() for sf in shifted_forms(G)]
    for j in range(G.n):
        cols.append(tuple(1 if i == j else 0 for i in range(G.n)) + (MPoly.zero(G.table),))
    table = G.table
    nrows = G.n + 1
    for size in range(1, min(nrows, len(cols)) + 1):
        for col_idx in itertools.combinations(range(len(cols)), size):
            for row_idx in itertools.combinations(range(nrows), size):
                entries = [[_as_ratfun(cols[j][i], table) for j in col_idx]
                           for i in row_idx]
                det = frac_det(FracMatrix(entries)).num
                if det.is_zero():
                    continue
                if det.eval(point) == 0:
                    raise DegeneratePoint(
                        f"minor {[c + 1 for c in col_idx]} vanishes at the point")


def _rref(rows: list) -> tuple:
    """Reduced row echelon form over Q; returns a hashable signature."""
    rows = [list(r) for r in rows]
    ncols = len(rows[0])
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = Q_ONE / rows[r][c]
        rows[r] = [x * inv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    sig = tuple(tuple(x for x in rows[i]) for i in range(r))
    return sig, r


def _flat_of(planes: list, idx: tuple):
    """Affine flat from intersecting the chosen hyperplanes; None if empty."""
    rows = [list(planes[i][0]) + [planes[i][1]] for i in idx]
    n = len(planes[0][0])
    sig, rank = _rref(rows)
    # inconsistent iff a row reduces to (0,...,0 | 1)
    for row in sig:
        if all(x == 0 for x in row[:n]) and row[n] != 0:
            return None
    return sig, n - rank


def bounded_chambers(G: KinGraph, point: Mapping[str, object]) -> int:
    """Bounded regions of the real arrangement (shifted forms plus the
    coordinate hyperplanes) at a generic rational point, by Moebius
    inversion on the intersection poset and Zaslavsky's bounded-region
    count (-1)^n * chi(1)."""
    pt = {k: QQ(v) for k, v in point.items()}
    _check_generic(G, pt)
    planes = _hyperplanes_at(G, pt)
    n = G.n
    # intersection poset: closure of single-hyperplane intersections
    flats = {(): (n, frozenset())}       # signature -> (dim, hyperplane set)
    frontier = {(): frozenset()}
    while frontier:
        new_frontier = {}
        for sig, hset in frontier.items():
            for h in range(len(planes)):
                if h in hset:
                    continue
                flat = _flat_of(planes, tuple(sorted(hset | {h})))
                if flat is None:
                    continue
                fsig, dim = flat
                full = hset | {h}
                if fsig in flats:
                    old_dim, old_set = flats[fsig]
                    merged = old_set | full
                    if merged != old_set:
                        flats[fsig] = (old_dim, frozenset(merged))
                        new_frontier[fsig] = frozenset(merged)
                else:
                    flats[fsig] = (dim, frozenset(full))
                    new_frontier[fsig] = frozenset(full)
        frontier = new_frontier
    # maximal hyperplane sets per flat: recompute by membership test
    items = []
    for sig, (dim, hset) in flats.items():
        if sig == ():
            continue
        items.append((sig, dim, hset))
    # Moebius values top-down by decreasing dimension
    items.sort(key=lambda t: -t[1])
    mu = {(): 1}
    containment_cache = {}

    def contains(big_sig, small_sig) -> bool:
        # flat(small) subset of flat(big): big's equations hold on small
        key = (big_sig, small_sig)
        if key in containment_cache:
            return containment_cache[key]
        rows = [list(r) for r in small_sig] + [list(r) for r in big_sig]
        _, rank = _rref(rows)
        result = rank == len(small_sig)
        containment_cache[key] = result
        return result

    chi_at_one = 1           # ambient contributes mu=1, t^n -> 1
    for sig, dim, hset in items:
        total = 1            # ambient always contains the flat
        for sig2, dim2, _ in items:
            if dim2 > dim and contains(sig2, sig):
                total += mu[sig2]
        mu[sig] = -total
        chi_at_one += mu[sig]
    count = chi_at_one if n % 2 == 0 else -chi_at_one
    return count
