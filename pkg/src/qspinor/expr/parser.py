"""Text syntax for expressions.

Grammar (``^`` binds tighter than unary minus, binaries are left-associative)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' '-'? INT)?
    atom   := NUMBER | IDENT | IDENT '(' expr ')' | '(' expr ')'

Reserved identifiers: ``i`` (imaginary unit), ``q`` (deformation parameter),
``e1``..``e8`` (Clifford generators), ``g0``..``g3`` (Dirac gamma matrices).
``exp`` is the only built-in function symbol; others must be registered.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable

import numpy as np

from qspinor.clifford import DEFAULT_SIGNATURE, Multivector, Signature, blade_name, gamma_default
from qspinor.expr.nodes import (
    Add,
    Call,
    Const,
    Div,
    Expr,
    I_UNIT,
    Mul,
    Neg,
    Pow,
    Sub,
    Var,
    _Binary,
)

BUILTIN_FUNCTIONS = frozenset({"exp"})

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))"
)
_GEN = re.compile(r"^e([1-8])$")
_GAMMA = re.compile(r"^g([0-3])$")


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownFunctionError(ExprSyntaxError):
    pass


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            offset = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ExprSyntaxError(f"unexpected character {text[offset]!r}", len(text[:offset].encode()))
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), len(text[:start].encode())))
        pos = m.end()
    tokens.append(("end", "", len(text.encode())))
    return tokens


class _Parser:
    def __init__(self, text: str, sig: Signature, functions: frozenset[str]):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.sig = sig
        self.functions = functions

    def peek(self):
        return self.tokens[self.pos]

    def take(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, value: str):
        kind, text, offset = self.take()
        if text != value or kind != "op":
            raise ExprSyntaxError(f"expected {value!r}, found {text or 'end of input'!r}", offset)

    def parse(self) -> Expr:
        e = self.expr()
        kind, text, offset = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {text!r}", offset)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            e = (Add if op == "+" else Sub)(e, self.term())
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            offset = self.peek()[2]
            right = self.unary()
            if op == "/" and _literal_zero(right):
                raise ExprSyntaxError("division by a literal zero", offset)
            e = (Mul if op == "*" else Div)(e, right)
        return e

    def unary(self) -> Expr:
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            sign = 1
            if self.peek()[:2] == ("op", "-"):
                self.take()
                sign = -1
            kind, text, offset = self.take()
            if kind != "num" or not text.isdigit():
                raise ExprSyntaxError("exponent must be an integer literal", offset)
            return Pow(base, sign * int(text))
        return base

    def atom(self) -> Expr:
        kind, text, offset = self.take()
        if kind == "num":
            return Const(_number(text))
        if kind == "ident":
            if self.peek()[:2] == ("op", "("):
                if text not in self.functions:
                    raise UnknownFunctionError(f"unknown function symbol {text!r}", offset)
                self.take()
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            return self.identifier(text, offset)
        if (kind, text) == ("op", "("):
            e = self.expr()
            self.expect(")")
            return e
        raise ExprSyntaxError(f"unexpected {text or 'end of input'!r}", offset)

    def identifier(self, name: str, offset: int) -> Expr:
        if name == "i":
            return I_UNIT
        m = _GEN.match(name)
        if m:
            k = int(m.group(1))
            if k > self.sig.n:
                raise ExprSyntaxError(f"generator {name} outside signature {self.sig}", offset)
            return generator_const(self.sig, k)
        m = _GAMMA.match(name)
        if m:
            return gamma_const(int(m.group(1)))
        return Var(name)


def _literal_zero(e: Expr) -> bool:
    while isinstance(e, Neg):
        e = e.arg
    return isinstance(e, Const) and e.is_number and e.value == 0


def _number(text: str):
    return int(text) if text.isdigit() else Fraction(text)


def generator_const(sig: Signature, k: int) -> Const:
    return Const(Multivector.basis(sig, k), name=f"e{k}")


_GAMMAS = gamma_default()


def gamma_const(mu: int) -> Const:
    return Const(_GAMMAS[mu], name=f"g{mu}")


def parse(text: str, *, sig: Signature = DEFAULT_SIGNATURE, functions: Iterable[str] = ()) -> Expr:
    """Parse ``text`` into an expression tree.

    ``functions`` registers extra opaque function symbols on top of ``exp``.
    Raises :class:`ExprSyntaxError` (with a byte offset) or
    :class:`UnknownFunctionError`.
    """
    return _Parser(text, sig, BUILTIN_FUNCTIONS | frozenset(functions)).parse()


# -- printing -------------------------------------------------------------


def _fraction_text(value: Fraction) -> str:
    den = value.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"({value.numerator}/{value.denominator})"
    digits = max(twos, fives)
    scaled = value * 10**digits
    s = str(abs(scaled.numerator)).rjust(digits + 1, "0")
    return f"{s[:-digits]}.{s[-digits:]}" if digits else s


def _real_text(value) -> str:
    if isinstance(value, Fraction):
        return _fraction_text(value) if value.denominator != 1 else str(value.numerator)
    if isinstance(value, float):
        if value.is_integer() and abs(value) < 1e16:
            return str(int(value))
        return repr(value)
    return str(value)


def _number_text(value) -> tuple[str, bool]:
    """Text for a number and whether it is atomic (needs no parentheses)."""
    if isinstance(value, complex):
        re_, im = value.real, value.imag
        if im == 0:
            return _number_text(re_)
        if re_ == 0:
            if im == 1:
                return "i", True
            if im < 0:
                return f"(-{_real_text(-im)}*i)" if im != -1 else "(-i)", True
            return f"({_real_text(im)}*i)", True
        sign = "-" if im < 0 else "+"
        mag = abs(im)
        imag = "i" if mag == 1 else f"{_real_text(mag)}*i"
        real = _real_text(re_) if re_ >= 0 else f"-{_real_text(-re_)}"
        return f"({real}{sign}{imag})", True
    if value < 0:
        return f"(-{_real_text(-value)})", True
    return _real_text(value), True


def _const_text(c: Const) -> str:
    if c.name:
        return c.name
    value = c.value
    if isinstance(value, Multivector):
        mask = value.single_blade()
        if mask is not None and value[mask] == 1:
            if mask == 0:
                return "1"
            return blade_name(mask) if mask & (mask - 1) == 0 else f"({blade_name(mask)})"
        parts = []
        for m, coef in value.coeffs.items():
            num, _ = _number_text(coef)
            parts.append(num if m == 0 else f"{num}*{blade_name(m)}")
        return "(" + "+".join(parts) + ")" if parts else "0"
    if isinstance(value, np.ndarray):
        return f"<matrix {value.shape[0]}x{value.shape[1]}>"
    return _number_text(value)[0]


def to_text(e: Expr) -> str:
    """Print with the minimal parentheses needed for ``parse`` to rebuild ``e``."""
    if isinstance(e, Const):
        return _const_text(e)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({to_text(e.arg)})"
    if isinstance(e, Neg):
        inner = to_text(e.arg)
        return "-" + (f"({inner})" if e.arg.precedence < Neg.precedence else inner)
    if isinstance(e, Pow):
        base = to_text(e.base)
        if e.base.precedence < 5 or (isinstance(e.base, Const) and base.startswith("-")):
            base = f"({base})"
        return f"{base}^{e.exponent}"
    if isinstance(e, _Binary):
        left = to_text(e.left)
        if e.left.precedence < e.precedence:
            left = f"({left})"
        right = to_text(e.right)
        if e.right.precedence <= e.precedence:
            right = f"({right})"
        return f"{left}{e.symbol}{right}"
    raise TypeError(f"cannot print {e!r}")
