"""Canonical normal form behind :func:`simplify`.

An expression is normalized into a finite sum of terms

    coefficient * monomial * word

* ``coefficient`` is an exact Gaussian rational (``a + b i``, ``a, b`` in Q);
* ``monomial`` is a Laurent monomial in commuting atoms: variables
  (including ``q`` and the spinor indeterminates), ``exp(...)`` and opaque
  function applications, and ``inv(p)`` standing for ``1/p`` when a
  polynomial ``p`` does not divide exactly;
* ``word`` is the ordered product of non-commuting constants. Adjacent
  Clifford generators of one signature are reduced to a signed blade,
  adjacent Dirac gammas likewise (via Cl(1,3)), adjacent opaque matrices are
  multiplied out. Factors are never moved past each other.

Rewrites are the ring axioms plus exact polynomial division, so the result
evaluates to the same value as the input wherever both are defined.
"""

from __future__ import annotations

import functools
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np

from qspinor import kernels
from qspinor.clifford import Multivector, Signature, gamma_default
from qspinor.expr.nodes import (
    Add,
    Call,
    Const,
    Div,
    Expr,
    I_UNIT,
    Mul,
    Neg,
    ONE,
    Pow,
    Sub,
    Var,
    ZERO,
    as_expr,
)


class GaussRat:
    """Exact ``re + im*i`` with rational parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @classmethod
    def of(cls, value) -> "GaussRat":
        if isinstance(value, GaussRat):
            return value
        if isinstance(value, complex):
            return cls(_exact(value.real), _exact(value.imag))
        return cls(_exact(value))

    def __add__(self, other):
        return GaussRat(self.re + other.re, self.im + other.im)

    def __sub__(self, other):
        return GaussRat(self.re - other.re, self.im - other.im)

    def __mul__(self, other):
        return GaussRat(self.re * other.re - self.im * other.im, self.re * other.im + self.im * other.re)

    def __truediv__(self, other):
        den = other.re * other.re + other.im * other.im
        if den == 0:
            raise ZeroDivisionError("division by an exact zero coefficient")
        return GaussRat(
            (self.re * other.re + self.im * other.im) / den, (self.im * other.re - self.re * other.im) / den
        )

    def __neg__(self):
        return GaussRat(-self.re, -self.im)

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        return isinstance(other, GaussRat) and self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def is_negative(self) -> bool:
        """True for negative reals and negative pure imaginaries."""
        return (self.im == 0 and self.re < 0) or (self.re == 0 and self.im < 0)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"GaussRat({self.re}, {self.im})"


GONE = GaussRat(1)


def _exact(x) -> Fraction:
    if isinstance(x, float):
        if not np.isfinite(x):
            raise ValueError(f"non-finite constant {x}")
        # shortest round-tripping decimal: 0.1 -> 1/10 rather than its binary expansion
        return Fraction(repr(x))
    return Fraction(x)


# -- atoms, monomials, words ---------------------------------------------


@dataclass(frozen=True)
class Atom:
    """A commuting factor. Identity is (kind, name, text)."""

    kind: str  # "var" | "exp" | "call" | "inv"
    name: str
    text: str = ""
    arg: Expr | None = field(default=None, compare=False, hash=False)

    @property
    def sort_key(self):
        order = {"var": 1, "exp": 2, "call": 3, "inv": 4}[self.kind]
        if self.kind == "var" and self.name == "q":
            order = 0
        return (order, self.name, self.text)

    def to_expr(self) -> Expr:
        """The atom itself; for ``inv`` atoms this is the polynomial being inverted."""
        if self.kind == "var":
            return Var(self.name)
        if self.kind in ("exp", "call"):
            return Call(self.name, self.arg)
        return self.arg


Mono = tuple  # tuple[(Atom, int), ...] sorted by atom sort key


def mono_mul(a: Mono, b: Mono) -> Mono:
    if not a:
        return b
    if not b:
        return a
    exps = dict(a)
    for atom, k in b:
        exps[atom] = exps.get(atom, 0) + k
    return tuple(sorted(((at, k) for at, k in exps.items() if k), key=lambda p: p[0].sort_key))


def mono_pow(a: Mono, k: int) -> Mono:
    return tuple((atom, e * k) for atom, e in a) if k else ()


class _MatrixAtom:
    __slots__ = ("value", "_key")

    def __init__(self, value: np.ndarray):
        self.value = np.array(value, dtype=np.complex128)
        self.value.flags.writeable = False
        self._key = (self.value.shape, self.value.tobytes())

    def __eq__(self, other):
        return isinstance(other, _MatrixAtom) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __lt__(self, other):
        return self._key < other._key


GAMMA_SIG = Signature(1, 3)
_GAMMA_MATS = gamma_default().matrices

# Word segments: ("e", sig, mask) | ("g", mask) | ("m", _MatrixAtom)
Word = tuple


def _segment_key(seg):
    if seg[0] == "e":
        return (0, seg[1].p, seg[1].q_neg, seg[2], b"")
    if seg[0] == "g":
        return (1, 0, 0, seg[1], b"")
    return (2, 0, 0, 0, seg[1]._key[1])


def word_key(w: Word):
    return tuple(_segment_key(s) for s in w)


def word_mul(a: Word, b: Word) -> tuple[int, Word]:
    if not b:
        return 1, a
    if not a:
        return 1, b
    out = list(a)
    sign = 1
    for seg in b:
        last = out[-1] if out else None
        if last is not None and last[0] == seg[0] == "e":
            if last[1] != seg[1]:
                raise ValueError(f"signature mismatch: {last[1]} vs {seg[1]}")
            sign *= kernels.blade_sign(last[2], seg[2], last[1].neg_mask)
            mask = last[2] ^ seg[2]
            out[-1:] = [("e", last[1], mask)] if mask else []
        elif last is not None and last[0] == seg[0] == "g":
            sign *= kernels.blade_sign(last[1], seg[1], GAMMA_SIG.neg_mask)
            mask = last[1] ^ seg[1]
            out[-1:] = [("g", mask)] if mask else []
        elif last is not None and last[0] == seg[0] == "m":
            if last[1].value.shape != seg[1].value.shape:
                raise ValueError(f"matrix shape mismatch: {last[1].value.shape} vs {seg[1].value.shape}")
            prod = last[1].value @ seg[1].value
            if np.array_equal(prod, np.eye(prod.shape[0])):
                out.pop()
            else:
                out[-1] = ("m", _MatrixAtom(prod))
        else:
            out.append(seg)
    return sign, tuple(out)


# -- the normal form ------------------------------------------------------


class Normal:
    """Sum of ``coef * mono * word`` terms, stored as {(word, mono): GaussRat}."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms: dict[tuple[Word, Mono], GaussRat] = {}
        if terms:
            for key, c in terms.items():
                if c:
                    self.terms[key] = c

    @classmethod
    def const(cls, value) -> "Normal":
        c = GaussRat.of(value)
        return cls({((), ()): c}) if c else cls()

    @classmethod
    def atom(cls, atom: Atom, k: int = 1) -> "Normal":
        return cls({((), ((atom, k),)): GONE})

    @classmethod
    def word(cls, w: Word, c=GONE) -> "Normal":
        return cls({(w, ()): c})

    def is_zero(self) -> bool:
        return not self.terms

    def is_commutative(self) -> bool:
        return all(not w for w, _ in self.terms)

    def __eq__(self, other):
        return isinstance(other, Normal) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __add__(self, other: "Normal") -> "Normal":
        out = dict(self.terms)
        for key, c in other.terms.items():
            out[key] = out[key] + c if key in out else c
        return Normal(out)

    def __neg__(self) -> "Normal":
        return Normal({k: -c for k, c in self.terms.items()})

    def __sub__(self, other: "Normal") -> "Normal":
        return self + (-other)

    def __mul__(self, other: "Normal") -> "Normal":
        out: dict = {}
        for (wa, ma), ca in self.terms.items():
            for (wb, mb), cb in other.terms.items():
                sign, w = word_mul(wa, wb)
                key = (w, mono_mul(ma, mb))
                c = ca * cb
                if sign < 0:
                    c = -c
                out[key] = out[key] + c if key in out else c
        return Normal(out)

    def scale(self, c: GaussRat) -> "Normal":
        return Normal({k: v * c for k, v in self.terms.items()})

    def pow(self, n: int) -> "Normal":
        if n < 0:
            return divide(Normal.const(1), self.pow(-n))
        result = Normal.const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def to_expr(self) -> Expr:
        return _to_expr(self)

    def __repr__(self):
        from qspinor.expr.parser import to_text

        return f"Normal({to_text(self.to_expr())})"


# -- polynomial division --------------------------------------------------


def _lex_cmp(a: Mono, b: Mono) -> int:
    da, db = dict(a), dict(b)
    for atom in sorted(set(da) | set(db), key=lambda at: at.sort_key):
        ea, eb = da.get(atom, 0), db.get(atom, 0)
        if ea != eb:
            return 1 if ea > eb else -1
    return 0


_lex_key = functools.cmp_to_key(_lex_cmp)


def _leading(poly: dict[Mono, GaussRat]) -> tuple[Mono, GaussRat]:
    mono = max(poly, key=_lex_key)
    return mono, poly[mono]


def _divides(a: Mono, b: Mono) -> bool:
    db = dict(b)
    return all(db.get(atom, 0) >= k for atom, k in a)


def _poly_sub_scaled(r: dict, q_mono: Mono, q_coef: GaussRat, d: dict) -> None:
    for m, c in d.items():
        key = mono_mul(q_mono, m)
        val = r.get(key, GaussRat()) - q_coef * c
        if val:
            r[key] = val
        else:
            r.pop(key, None)


def _exact_poly_div(num: dict, den: dict) -> dict | None:
    """Quotient of ``num`` by ``den`` when it is exact, else None. Exponents must be >= 0."""
    lt_mono, lt_coef = _leading(den)
    r = dict(num)
    quot: dict = {}
    while r:
        m, c = _leading(r)
        if not _divides(lt_mono, m):
            return None
        qm = mono_mul(m, mono_pow(lt_mono, -1))
        qc = c / lt_coef
        quot[qm] = quot[qm] + qc if qm in quot else qc
        _poly_sub_scaled(r, qm, qc, den)
    return quot


def _min_exponents(monos: Iterable[Mono]) -> Mono:
    monos = list(monos)
    atoms = {atom for m in monos for atom, _ in m}
    out = []
    for atom in atoms:
        low = min(dict(m).get(atom, 0) for m in monos)
        if low:
            out.append((atom, low))
    return tuple(sorted(out, key=lambda p: p[0].sort_key))


def mono_inverse(m: Mono) -> Normal:
    """1/m. ``inv(p)^k`` atoms turn back into the polynomial ``p^k``."""
    plain = []
    result = Normal.const(1)
    for atom, k in m:
        if atom.kind == "inv":
            result = result * normalize(atom.arg).pow(k) if k > 0 else result * Normal.atom(atom, -k)
        else:
            plain.append((atom, -k))
    return result * Normal({((), tuple(plain)): GONE})


def divide(num: Normal, den: Normal) -> Normal:
    """Right division ``num / den``."""
    if den.is_zero():
        raise ZeroDivisionError("division by an expression that simplifies to zero")
    if len(den.terms) == 1:
        ((w, m), c), = den.terms.items()
        inv = mono_inverse(m).scale(GONE / c)
        if w:
            inv = inv * _word_inverse(w)
        return num * inv
    if not den.is_commutative():
        raise ValueError("cannot divide by a sum containing non-commuting factors")
    poly = {m: c for (_, m), c in den.terms.items()}
    content = _min_exponents(poly)
    if content:
        num = num * mono_inverse(content)
        neg = mono_pow(content, -1)
        poly = {mono_mul(m, neg): c for m, c in poly.items()}
    _, lc = _leading(poly)
    num = num.scale(GONE / lc)
    poly = {m: c / lc for m, c in poly.items()}
    if len(poly) == 1:
        return num
    by_word: dict[Word, dict] = defaultdict(dict)
    for (w, m), c in num.terms.items():
        by_word[w][m] = c
    out: dict = {}
    for w, p in by_word.items():
        shift = tuple((atom, k) for atom, k in _min_exponents(p) if k < 0)
        if shift:
            unshift = mono_pow(shift, -1)
            p = {mono_mul(m, unshift): c for m, c in p.items()}
        quot = _exact_poly_div(p, poly)
        if quot is None:
            return num * Normal.atom(_inv_atom(poly))
        for m, c in quot.items():
            out[(w, mono_mul(m, shift))] = c
    return Normal(out)


def _inv_atom(poly: dict) -> Atom:
    from qspinor.expr.parser import to_text

    arg = Normal({((), m): c for m, c in poly.items()}).to_expr()
    return Atom("inv", "", to_text(arg), arg)


def _word_inverse(w: Word) -> Normal:
    out = Normal.const(1)
    for seg in reversed(w):
        if seg[0] == "e":
            sig, mask = seg[1], seg[2]
            sq = kernels.blade_sign(mask, mask, sig.neg_mask)
            out = out * Normal.word((seg,), GaussRat(sq))
        elif seg[0] == "g":
            sq = kernels.blade_sign(seg[1], seg[1], GAMMA_SIG.neg_mask)
            out = out * Normal.word((seg,), GaussRat(sq))
        else:
            try:
                inv = np.linalg.inv(seg[1].value)
            except np.linalg.LinAlgError as exc:
                raise ZeroDivisionError("division by a singular matrix constant") from exc
            out = out * Normal.word((("m", _MatrixAtom(inv)),))
    return out


# -- Expr -> Normal -------------------------------------------------------


def _const_normal(c: Const) -> Normal:
    value = c.value
    if isinstance(value, Multivector):
        out = Normal()
        for mask, coef in value.coeffs.items():
            w = (("e", value.sig, mask),) if mask else ()
            out = out + Normal.word(w, GaussRat.of(coef))
        return out
    if isinstance(value, np.ndarray):
        if c.name and c.name[0] == "g" and c.name[1:].isdigit():
            mu = int(c.name[1:])
            if mu < len(_GAMMA_MATS) and np.array_equal(value, _GAMMA_MATS[mu]):
                return Normal.word((("g", 1 << mu),))
        return Normal.word((("m", _MatrixAtom(value)),))
    return Normal.const(value)


def normalize(e: Expr) -> Normal:
    e = as_expr(e)
    if isinstance(e, Const):
        return _const_normal(e)
    if isinstance(e, Var):
        return Normal.atom(Atom("var", e.name))
    if isinstance(e, Neg):
        return -normalize(e.arg)
    if isinstance(e, Add):
        return normalize(e.left) + normalize(e.right)
    if isinstance(e, Sub):
        return normalize(e.left) - normalize(e.right)
    if isinstance(e, Mul):
        return normalize(e.left) * normalize(e.right)
    if isinstance(e, Div):
        return divide(normalize(e.left), normalize(e.right))
    if isinstance(e, Pow):
        return normalize(e.base).pow(e.exponent)
    if isinstance(e, Call):
        from qspinor.expr.parser import to_text

        arg = normalize(e.arg)
        if not arg.is_commutative():
            raise ValueError(f"argument of {e.func} must be scalar-valued")
        if e.func == "exp" and arg.is_zero():
            return Normal.const(1)
        arg_expr = arg.to_expr()
        kind = "exp" if e.func == "exp" else "call"
        return Normal.atom(Atom(kind, e.func, to_text(arg_expr), arg_expr))
    raise TypeError(f"cannot normalize {e!r}")


def simplify(e) -> Expr:
    """Canonical, value-preserving rewrite of ``e``.

    Collects like terms (coefficients exact), folds constants, reduces
    products of generators, cancels exact polynomial factors in quotients.
    Non-commuting factors keep their left-to-right order.
    """
    return normalize(as_expr(e)).to_expr()


def equivalent(a, b) -> bool:
    """Exact symbolic equality of the normal forms."""
    return normalize(as_expr(a)) == normalize(as_expr(b))


# -- Normal -> Expr -------------------------------------------------------


def _product(factors: list[Expr]) -> Expr:
    if not factors:
        return ONE
    out = factors[0]
    for f in factors[1:]:
        out = Mul(out, f)
    return out


def _rational_expr(x: Fraction) -> Expr:
    return Const(int(x) if x.denominator == 1 else x)


def _coef_expr(c: GaussRat) -> Expr:
    """Expression for a non-negative-looking coefficient (sign handled by caller)."""
    if c.im == 0:
        return _rational_expr(c.re)
    imag = I_UNIT if c.im == 1 else Mul(_rational_expr(abs(c.im)), I_UNIT)
    if c.re == 0:
        return imag if c.im > 0 else Neg(imag)
    return (Add if c.im > 0 else Sub)(_rational_expr(c.re) if c.re > 0 else Neg(_rational_expr(-c.re)), imag)


def _q_power(k: int) -> Expr | None:
    if k == 0:
        return None
    return Var("q") if k == 1 else Pow(Var("q"), k)


def _qpoly_expr(poly: dict[int, GaussRat]) -> tuple[bool, Expr | None]:
    """(negated, expr) for sum c_k q^k; None expr means exactly 1."""
    items = sorted(poly.items(), key=lambda kv: -kv[0])
    negated = items[0][1].is_negative()
    if negated:
        items = [(k, -c) for k, c in items]
    if len(items) == 1:
        k, c = items[0]
        qp = _q_power(k)
        if c == GONE:
            return negated, qp
        ce = _coef_expr(c)
        return negated, ce if qp is None else Mul(ce, qp)
    out: Expr | None = None
    for k, c in items:
        neg = c.is_negative()
        mag = -c if neg else c
        qp = _q_power(k)
        if mag == GONE:
            term = qp if qp is not None else ONE
        else:
            term = _coef_expr(mag) if qp is None else Mul(_coef_expr(mag), qp)
        if out is None:
            out = Neg(term) if neg else term
        else:
            out = (Sub if neg else Add)(out, term)
    return negated, out


def _word_factors(w: Word) -> list[Expr]:
    from qspinor.expr.parser import gamma_const, generator_const

    out: list[Expr] = []
    for seg in w:
        if seg[0] == "e":
            out += [generator_const(seg[1], k + 1) for k in range(seg[1].n) if seg[2] >> k & 1]
        elif seg[0] == "g":
            out += [gamma_const(k) for k in range(4) if seg[1] >> k & 1]
        else:
            out.append(Const(seg[1].value))
    return out


def _atom_power(atom: Atom, k: int) -> Expr:
    base = atom.to_expr()
    return base if k == 1 else Pow(base, k)


def _negate_leading(e: Expr) -> Expr:
    """-e, with the sign pushed onto the leftmost factor so it prints as ``-2*x``."""
    if isinstance(e, (Mul, Div)):
        return type(e)(_negate_leading(e.left), e.right)
    return Neg(e)


def _to_expr(nf: Normal) -> Expr:
    if nf.is_zero():
        return ZERO
    groups: dict[tuple[Word, Mono], dict[int, GaussRat]] = defaultdict(dict)
    for (w, m), c in nf.terms.items():
        qexp = 0
        rest = []
        for atom, k in m:
            if atom.kind == "var" and atom.name == "q":
                qexp = k
            else:
                rest.append((atom, k))
        groups[(w, tuple(rest))][qexp] = c

    def group_order(item):
        (w, rest), _ = item
        degree = sum(k for _, k in rest)
        return (-degree, [(a.sort_key, -k) for a, k in rest], word_key(w))

    out: Expr | None = None
    for (w, rest), poly in sorted(groups.items(), key=group_order):
        # q^-k never joins the coefficient polynomial; move it to the denominator
        low = min(poly)
        if low < 0:
            poly = {k - low: c for k, c in poly.items()}
            rest = tuple(rest) + ((Atom("var", "q"), low),)
        negated, coef = _qpoly_expr(poly)
        numer = [coef] if coef is not None else []
        numer += _word_factors(w)
        denom = []
        for atom, k in sorted(rest, key=lambda p: p[0].sort_key):
            if atom.kind == "inv":
                k = -k  # inv(p)^k is p^-k
            if k > 0:
                numer.append(_atom_power(atom, k))
            else:
                denom.append(_atom_power(atom, -k))
        term = _product(numer)
        if denom:
            term = Div(term, _product(denom))
        if out is None:
            out = _negate_leading(term) if negated else term
        else:
            out = (Sub if negated else Add)(out, term)
    return out
