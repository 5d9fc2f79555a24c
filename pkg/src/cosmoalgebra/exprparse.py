"""Expression parser for polynomials, rational functions, and operators.

One grammar, four modes.  Precedence from loosest to tightest: unary
minus, +/-, */÷, ^.  Multiplication is kept left-to-right so that weyl
and shift values multiply noncommutatively in source order.

    poly/ratfun atoms:  variables of the table, integers
    weyl atoms:         diff vars, d<var> / d<i> derivatives, parameters
    shift atoms:        s<i> shifts, e<i> exponents, parameters
"""

from __future__ import annotations

import re
from typing import Union

from .errors import ParseError, UnknownVariable
from .symcore import MPoly, QQ, RatFun, VarTable, ratfun_normalize
from .weylshift import ShiftContext, ShiftOp, WeylContext, WeylOp

_TOKEN = re.compile(r"(?P<int>\d+)|(?P<name>[A-Za-z][A-Za-z0-9_]*)"
                    r"|(?P<op>[-+*/^()])")


class _Tokens:
    def __init__(self, text: str):
        self.text = text
        self.items = []          # (kind, value, line, col)
        line, line_start, pos = 1, 0, 0
        while pos < len(text):
            ch = text[pos]
            if ch.isspace():
                if ch == "\n":
                    line += 1
                    line_start = pos + 1
                pos += 1
                continue
            m = _TOKEN.match(text, pos)
            if not m:
                raise ParseError(f"unexpected character {ch!r}", line, pos - line_start)
            kind = m.lastgroup
            self.items.append((kind, m.group(kind), line, pos - line_start))
            pos = m.end()
        self.pos = 0

    def peek(self):
        return self.items[self.pos] if self.pos < len(self.items) else (None, None, 0, 0)

    def next(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def expect_op(self, op):
        kind, val, line, col = self.next()
        if kind != "op" or val != op:
            raise ParseError(f"expected {op!r}, found {val!r}", line, col)

    def at_end(self):
        return self.pos >= len(self.items)


class _Builder:
    """Turns atoms into mode-specific values and combines them."""

    def number(self, n: int):
        raise NotImplementedError

    def name(self, s: str, line: int, col: int):
        raise NotImplementedError

    def power(self, v, n: int, line: int, col: int):
        raise NotImplementedError

    def divide(self, a, b, line, col):
        raise NotImplementedError


class _CommBuilder(_Builder):
    def __init__(self, table: VarTable):
        self.table = table

    def number(self, n):
        return RatFun.const(self.table, n)

    def name(self, s, line, col):
        if s not in self.table:
            raise UnknownVariable(f"unknown variable {s!r}", line, col)
        return RatFun.var(self.table, s)

    def power(self, v, n, line, col):
        return v ** n

    def divide(self, a, b, line, col):
        if b.is_zero():
            raise ParseError("division by zero", line, col)
        return a / b


class _WeylBuilder(_Builder):
    def __init__(self, ctx: WeylContext):
        self.ctx = ctx

    def number(self, n):
        return WeylOp.const(self.ctx, n)

    def name(self, s, line, col):
        ctx = self.ctx
        if s in ctx.diff:
            return WeylOp.variable(ctx, s)
        if s.startswith("d"):
            rest = s[1:]
            if rest in ctx.diff:
                return WeylOp.derivative(ctx, rest)
            if rest.isdigit() and f"a{rest}" in ctx.diff:
                return WeylOp.derivative(ctx, f"a{rest}")
        if s in ctx.table:
            return WeylOp.const(ctx, RatFun.var(ctx.table, s))
        raise UnknownVariable(f"unknown symbol {s!r}", line, col)

    def power(self, v, n, line, col):
        if n >= 0:
            return v ** n
        coeff = v.coefficient_only()
        if coeff is not None and not coeff.is_zero():
            one = WeylOp.const(self.ctx, 1)
            return WeylOp.const(self.ctx, RatFun.const(self.ctx.table, 1) / coeff) ** (-n)
        if self.ctx.laurent and len(v.terms) == 1:
            ((a, b), c), = v.terms.items()
            if not any(b) and c == 1:
                return WeylOp(self.ctx, {(tuple(x * n for x in a), b): c})
        raise ParseError("negative power of a non-invertible operator", line, col)

    def divide(self, a, b, line, col):
        coeff = b.coefficient_only()
        if coeff is None or coeff.is_zero():
            raise ParseError("division by a non-scalar operator", line, col)
        return a * WeylOp.const(self.ctx, RatFun.const(self.ctx.table, 1) / coeff)


class _ShiftBuilder(_Builder):
    def __init__(self, ctx: ShiftContext):
        self.ctx = ctx

    def number(self, n):
        return ShiftOp.const(self.ctx, n)

    def name(self, s, line, col):
        ctx = self.ctx
        if s.startswith("s") and s[1:].isdigit():
            i = int(s[1:]) - 1
            if 0 <= i < ctx.n:
                return ShiftOp.sigma(ctx, i)
        if s in ctx.table:
            return ShiftOp.coeff_var(ctx, s)
        raise UnknownVariable(f"unknown symbol {s!r}", line, col)

    def power(self, v, n, line, col):
        try:
            return v ** n
        except Exception:
            raise ParseError("negative power of a non-invertible operator", line, col)

    def divide(self, a, b, line, col):
        if len(b.terms) == 1:
            (sh, c), = b.terms.items()
            if not any(sh):
                return a * ShiftOp.const(self.ctx, RatFun.const(self.ctx.table, 1) / c)
        raise ParseError("division by a non-scalar operator", line, col)


def _parse_expr(tok: _Tokens, b: _Builder):
    kind, val, line, col = tok.peek()
    if kind == "op" and val == "-":
        tok.next()
        return -_parse_expr(tok, b)
    return _parse_sum(tok, b)


def _parse_sum(tok: _Tokens, b: _Builder):
    left = _parse_product(tok, b)
    while True:
        kind, val, _, _ = tok.peek()
        if kind == "op" and val in "+-":
            tok.next()
            right = _parse_product(tok, b)
            left = left + right if val == "+" else left - right
        else:
            return left


def _parse_product(tok: _Tokens, b: _Builder):
    left = _parse_power(tok, b)
    while True:
        kind, val, line, col = tok.peek()
        if kind == "op" and val in "*/":
            tok.next()
            right = _parse_power(tok, b)
            left = left * right if val == "*" else b.divide(left, right, line, col)
        else:
            return left


def _parse_power(tok: _Tokens, b: _Builder):
    base = _parse_atom(tok, b)
    kind, val, line, col = tok.peek()
    if kind == "op" and val == "^":
        tok.next()
        sign = 1
        kind, val, line, col = tok.peek()
        if kind == "op" and val == "-":
            tok.next()
            sign = -1
        kind, val, line, col = tok.next()
        if kind != "int":
            raise ParseError("integer exponent expected", line, col)
        return b.power(base, sign * int(val), line, col)
    return base


def _parse_atom(tok: _Tokens, b: _Builder):
    kind, val, line, col = tok.next()
    if kind == "int":
        return b.number(int(val))
    if kind == "name":
        return b.name(val, line, col)
    if kind == "op" and val == "(":
        inner = _parse_expr(tok, b)
        tok.expect_op(")")
        return inner
    raise ParseError(f"unexpected token {val!r}", line, col)


def parse_expression(text: str, context, mode: str):
    """Parse ``text`` in the given mode (poly, ratfun, weyl, shift).

    Context is a VarTable for poly/ratfun, a WeylContext for weyl, and a
    ShiftContext for shift.  Rendering then parsing is the identity.
    """
    if not text or not text.strip():
        raise ParseError("empty expression")
    if mode in ("poly", "ratfun"):
        builder = _CommBuilder(context)
    elif mode == "weyl":
        builder = _WeylBuilder(context)
    elif mode == "shift":
        builder = _ShiftBuilder(context)
    else:
        raise ValueError(f"unknown parse mode {mode!r}")
    tok = _Tokens(text)
    value = _parse_expr(tok, builder)
    if not tok.at_end():
        kind, val, line, col = tok.peek()
        raise ParseError(f"trailing input {val!r}", line, col)
    if mode == "poly":
        if not value.den.is_const():
            raise ParseError("expression is not polynomial")
        return value.num * (QQ(1) / value.den.const_value())
    return value
