"""Cayley configurations and GKZ data for the hyperplane integrands.

Leaving the coefficients of every shifted linear form generic turns the
integral into a generalized Euler integral; the Cayley matrix stacks the
monomial supports over per-form indicator rows.  The toric relations come
from the integer kernel of that matrix and the Euler operators from its
rows.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from .errors import DimensionMismatch
from .graphkit import KinGraph, distinct_linear_forms
from .symcore import (IntMatrix, MPoly, VarTable, grlex_key, int_kernel_basis,
                      render_mpoly)


@dataclass(frozen=True)
class Support:
    """Monomial support of one Laurent polynomial in the alpha variables."""
    vectors: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        if not self.vectors:
            raise ValueError("empty support")
        if len(set(self.vectors)) != len(self.vectors):
            raise ValueError("support vectors must be distinct")


@dataclass(frozen=True)
class CayleyData:
    """Cayley matrix with alpha-rows first, the parameter vector, the
    kernel binomials (positive/negative exponent split), and the Euler
    generators as (theta coefficient row, shift polynomial in eps)."""
    A: IntMatrix
    kappa: tuple
    kernel_binomials: tuple
    euler_generators: tuple


EPS_TABLE = VarTable(("eps",))


def _support_of_form(form: MPoly, G: KinGraph) -> Support:
    """Support in alpha-space of the X-shifted version of a linear form:
    one unit vector per participating vertex plus the constant monomial."""
    vecs = []
    for i in range(1, G.n + 1):
        if form.degree_in(f"X{i}"):
            vecs.append(tuple(1 if j == i else 0 for j in range(1, G.n + 1)))
    vecs.append((0,) * G.n)
    vecs.sort(key=grlex_key, reverse=True)
    return Support(tuple(vecs))


def cayley_from_graph(G: KinGraph):
    """Supports of the shifted subgraph forms plus the substitution taking
    the generic constants back to kinematic expressions.

    Coefficients of the alpha monomials are 1; the constant of form i is
    the unshifted linear form itself.  Returns (supports, substitution)
    with substitution mapping c-names (c1, c2, ...) to MPoly values.
    """
    forms = distinct_linear_forms(G)
    supports = []
    subst = {}
    col = 0
    one = MPoly.const(G.table, 1)
    for form in forms:
        sup = _support_of_form(form, G)
        supports.append(sup)
        for vec in sup.vectors:
            col += 1
            subst[f"c{col}"] = form if not any(vec) else one
    return supports, subst


def default_kappa(n: int, k: int) -> tuple:
    """Cosmological parameter vector: -(eps+1) per alpha-row, -1 per
    indicator row."""
    eps = MPoly.var(EPS_TABLE, "eps")
    head = [-(eps + 1)] * n
    tail = [MPoly.const(EPS_TABLE, -1)] * k
    return tuple(head + tail)


def gkz_system(supports: Sequence[Support], kappa: Optional[Sequence] = None) -> CayleyData:
    """Assemble the Cayley matrix, kernel binomials, and Euler generators."""
    if not supports:
        raise DimensionMismatch("need at least one support")
    n = len(supports[0].vectors[0])
    k = len(supports)
    if kappa is None:
        kappa = default_kappa(n, k)
    kappa = tuple(v if isinstance(v, MPoly) else MPoly.const(EPS_TABLE, v)
                  for v in kappa)
    if len(kappa) != n + k:
        raise DimensionMismatch(f"kappa must have length {n + k}")
    cols = []
    for j, sup in enumerate(supports):
        for vec in sup.vectors:
            if len(vec) != n:
                raise DimensionMismatch("support dimension mismatch")
            indicator = tuple(1 if i == j else 0 for i in range(k))
            cols.append(tuple(vec) + indicator)
    A = IntMatrix(tuple(zip(*cols)))
    kernel = int_kernel_basis(A)
    binomials = []
    for v in kernel:
        pos = tuple(x if x > 0 else 0 for x in v)
        neg = tuple(-x if x < 0 else 0 for x in v)
        binomials.append((pos, neg))
    eulers = tuple((tuple(row), -kap) for row, kap in zip(A.entries, kappa))
    return CayleyData(A, kappa, tuple(binomials), eulers)


def render_binomial(pos: tuple, neg: tuple) -> str:
    def mono(vec):
        parts = []
        for i, k in enumerate(vec):
            if k == 1:
                parts.append(f"dc{i + 1}")
            elif k > 1:
                parts.append(f"dc{i + 1}^{k}")
        return "*".join(parts) if parts else "1"
    return f"{mono(pos)} - {mono(neg)}"


def render_euler(row: tuple, shift: MPoly) -> str:
    parts = []
    for i, k in enumerate(row):
        if k == 0:
            continue
        t = f"th{i + 1}"
        if k == 1:
            parts.append(t)
        else:
            parts.append(f"{k}*{t}")
    body = " + ".join(parts) if parts else "0"
    if shift.is_zero():
        return body
    return f"{body} + ({render_mpoly(shift)})"
