"""Packaged reference inputs: the two-site operator set in the expression
grammar, its gauge matrix, and the stock graphs."""

from __future__ import annotations

import json
from importlib import resources

from ..exprparse import parse_expression
from ..graphkit import KinGraph
from ..symcore import FracMatrix, VarTable
from ..weylshift import ShiftContext, WeylContext, WeylOp

TWOSITE_ALPHA_TABLE = VarTable(("a1", "a2", "X1", "X2", "Y"))
TWOSITE_ALPHA_CTX = WeylContext(TWOSITE_ALPHA_TABLE, ("a1", "a2"), laurent=True)

TWOSITE_KIN_TABLE = VarTable(("X1", "X2", "Y", "eps"))
TWOSITE_KIN_CTX = WeylContext(TWOSITE_KIN_TABLE, ("X1", "X2", "Y"))

TWOSITE_SHIFT_TABLE = VarTable(("X1", "X2", "Y", "e1", "e2"))
TWOSITE_SHIFT_CTX = ShiftContext(TWOSITE_SHIFT_TABLE, ("e1", "e2"))


def _read(name: str) -> str:
    return resources.files("cosmoalgebra.fixtures").joinpath(name).read_text()


def operator(name: str, ctx=None, mode: str = "weyl"):
    """Load a fixture operator by short name (p1..p4, delta1..delta3,
    homogeneity, mellin_p1, mellin_p2_plus_p3)."""
    text = _read(f"operators/twosite_{name}.txt")
    text = "\n".join(line for line in text.splitlines()
                     if line.strip() and not line.lstrip().startswith("#"))
    if ctx is None:
        if name.startswith("mellin"):
            ctx, mode = TWOSITE_SHIFT_CTX, "shift"
        elif name.startswith(("delta", "homogeneity")):
            ctx, mode = TWOSITE_KIN_CTX, "weyl"
        else:
            ctx, mode = TWOSITE_ALPHA_CTX, "weyl"
    return parse_expression(text, ctx, mode)


def twosite_ideal() -> list:
    """Generators of the two-site annihilating ideal in (X1, X2, Y)."""
    d1 = operator("delta1")
    d2 = operator("delta2")
    d3 = operator("delta3")
    h = operator("homogeneity")
    return [d1 + d3, d2 + d3, h]


def load_ideal_file(text: str, ctx: WeylContext) -> list:
    """Parse an ideal file: one operator per line, # comments allowed."""
    gens = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        gens.append(parse_expression(line, ctx, "weyl"))
    return gens


def twosite_gauge() -> FracMatrix:
    """The displayed (untransposed) gauge matrix, 1/(2*Y*eps^2) scale
    included; rows/columns as printed."""
    data = json.loads(_read("twosite_gauge.json"))
    table = VarTable(tuple(data["vars"]))
    rows = [[parse_expression(s, table, "ratfun") for s in row]
            for row in data["rows"]]
    return FracMatrix(rows)


def load_matrix_json(text: str, table: VarTable) -> FracMatrix:
    data = json.loads(text)
    rows = data["rows"] if isinstance(data, dict) else data
    return FracMatrix([[parse_expression(s, table, "ratfun") for s in row]
                       for row in rows])


def graph(name: str) -> KinGraph:
    """Load a packaged graph fixture (1site, 2site, 3site, 4site, bubble,
    star4)."""
    return KinGraph.from_json(_read(f"graphs/{name}.json"), label=name)
