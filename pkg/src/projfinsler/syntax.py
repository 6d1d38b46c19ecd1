"""Text grammar for expressions: a recursive-descent parser and a printer.

Grammar::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := ('-' | '+') unary | power
    power   := atom ('^' unary)?
    atom    := NUMBER ['i'] | 'i' | IDENT | FUNC '(' expr ')' | '(' expr ')'
    IDENT   := z<k> | zb<k> | e<k> | eb<k>
    FUNC    := exp | log | sqrt

The printer emits the same grammar, ordering children by handle id, so that
``parse(to_source(e), n) is e``.
"""

from __future__ import annotations

import re

from . import expr as ex
from .expr import Expr, Kind, Var

__all__ = ["ParseError", "parse", "to_source"]


class ParseError(ValueError):
    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} (at byte offset {offset})")


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?i?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)

_VARS = {"z": Var.Z, "zb": Var.ZBAR, "e": Var.ETA, "eb": Var.ETABAR}
_IDENT = re.compile(r"^(zb|eb|z|e)([1-9][0-9]*)$")
_FUNCS = {"exp": ex.exp, "log": ex.log, "sqrt": ex.sqrt}


def _tokenize(source: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    raw = source.encode("utf-8")
    # offsets are reported in bytes of the UTF-8 source
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", len(source[:pos].encode("utf-8")))
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), len(source[:pos].encode("utf-8"))))
        pos = m.end()
    tokens.append(("end", "", len(raw)))
    return tokens


class _Parser:
    def __init__(self, source: str, n: int | None):
        self.tokens = _tokenize(source)
        self.i = 0
        self.n = n

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text: str):
        tok = self.take()
        if tok[1] != text:
            raise ParseError(f"expected {text!r}, found {tok[1] or 'end of input'!r}", tok[2])
        return tok

    def parse(self) -> Expr:
        e = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ParseError(f"unexpected token {tok[1]!r}", tok[2])
        return e

    def _guard(self, fn, offset, *args):
        try:
            return fn(*args)
        except ex.ExprError as err:
            raise ParseError(str(err), offset) from None

    def expr(self) -> Expr:
        left = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()
            right = self.term()
            left = self._guard(ex.add if op[1] == "+" else ex.sub, op[2], left, right)
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()
            right = self.unary()
            left = self._guard(ex.mul if op[1] == "*" else ex.div, op[2], left, right)
        return left

    def unary(self) -> Expr:
        tok = self.peek()
        if tok[1] == "-":
            self.take()
            return ex.neg(self.unary())
        if tok[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[1] == "^":
            op = self.take()
            exponent = self.unary()
            if exponent.kind is not Kind.CONST or exponent.payload.imag != 0:
                raise ParseError("exponent must be a real constant", op[2])
            r = exponent.payload.real
            return self._guard(ex.power, op[2], base, int(r) if float(r).is_integer() else r)
        return base

    def atom(self) -> Expr:
        kind, text, offset = self.take()
        if kind == "num":
            if text.endswith("i"):
                return ex.const(complex(0, float(text[:-1])))
            return ex.const(float(text))
        if kind == "name":
            if text == "i":
                return ex.const(1j)
            if text in _FUNCS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return self._guard(_FUNCS[text], offset, arg)
            m = _IDENT.match(text)
            if m is None:
                raise ParseError(f"unknown identifier {text!r}", offset)
            index = int(m.group(2))
            if self.n is not None and index > self.n:
                raise ParseError(f"index {index} out of range for n={self.n}", offset)
            return ex.var(_VARS[m.group(1)], index)
        if text == "(":
            e = self.expr()
            self.expect(")")
            return e
        raise ParseError(f"unexpected {text or 'end of input'!r}", offset)


def parse(source: str, n: int | None = None) -> Expr:
    """Parse ``source`` into a simplified expression (indices checked against ``n``)."""
    return _Parser(source, n).parse()


# printing -----------------------------------------------------------------

_PREC_ADD, _PREC_MUL, _PREC_UNARY, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def _num(x: float) -> str:
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _const_text(c: complex) -> tuple[str, int]:
    re_, im = c.real, c.imag
    if im == 0:
        return (_num(re_), _PREC_ATOM if re_ >= 0 else _PREC_UNARY)
    if re_ == 0:
        if im >= 0:
            return (_num(im) + "i", _PREC_ATOM)
        return ("-" + _num(-im) + "i", _PREC_UNARY)
    sign = "+" if im >= 0 else "-"
    return (f"{_num(re_)} {sign} {_num(abs(im))}i", _PREC_ADD)


def _wrap(text: str, prec: int, need: int) -> str:
    return f"({text})" if prec < need else text


def _render(e: Expr) -> tuple[str, int]:
    k = e.kind
    if k is Kind.CONST:
        return _const_text(e.payload)
    if k is Kind.VAR:
        vk, idx = e.payload
        return (f"{vk.value}{idx}", _PREC_ATOM)
    if k is Kind.ADD:
        parts = []
        for i, t in enumerate(e.args):
            c, core = ex._split_coeff(t)
            negative = c.imag == 0 and c.real < 0
            if negative:
                text, prec = _render(ex.mul(ex.const(-c), core))
                text = _wrap(text, prec, _PREC_MUL)
                parts.append(("-" if i == 0 else " - ") + text)
            else:
                text, prec = _render(t)
                text = _wrap(text, prec, _PREC_ADD + 1 if i else _PREC_ADD)
                parts.append(text if i == 0 else " + " + text)
        return ("".join(parts), _PREC_ADD)
    if k is Kind.MUL:
        num, den = [], []
        for f in e.args:
            if f.kind is Kind.POW and f.payload < 0:
                den.append(ex.ipow(f.args[0], -f.payload))
            else:
                num.append(f)
        lead = ""
        if num and num[0].kind is Kind.CONST and num[0].payload == -1 and len(num) > 1:
            lead = "-"
            num = num[1:]
        texts = [_wrap(*_render(f), _PREC_MUL + 1) for f in num] or ["1"]
        text = lead + "*".join(texts)
        if den:
            dtexts = [_wrap(*_render(f), _PREC_MUL + 1) for f in den]
            dtext = dtexts[0] if len(dtexts) == 1 else "(" + "*".join(dtexts) + ")"
            text = f"{text}/{dtext}"
        return (text, _PREC_UNARY if lead else _PREC_MUL)
    if k is Kind.POW:
        p = e.payload
        base = _wrap(*_render(e.args[0]), _PREC_ATOM)
        if p < 0:
            inner = base if p == -1 else f"{base}^{-p}"
            return (f"1/{inner}", _PREC_MUL)
        return (f"{base}^{p}", _PREC_POW)
    if k is Kind.RPOW:
        base = _wrap(*_render(e.args[0]), _PREC_ATOM)
        r = e.payload
        rtext = repr(r) if r >= 0 else f"({r!r})"
        return (f"{base}^{rtext}", _PREC_POW)
    if k is Kind.EXP:
        return (f"exp({_render(e.args[0])[0]})", _PREC_ATOM)
    if k is Kind.LOG:
        return (f"log({_render(e.args[0])[0]})", _PREC_ATOM)
    if k is Kind.INV:
        n, a, b, _ = e.payload
        return (f"inv{n}[{a + 1},{b + 1}]#{e.id}", _PREC_ATOM)
    raise AssertionError(k)


def to_source(e: Expr) -> str:
    """Deterministic text for ``e`` in the parser's grammar (INV nodes excepted)."""
    return _render(e)[0]
