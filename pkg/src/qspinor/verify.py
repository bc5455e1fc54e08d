"""Self-check suites behind ``qspinor verify``.

Each suite returns ``{"passed": int, "failed": int, "details": [...]}``.
Audit suites only report; they always count as passed.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from qspinor.clifford import (
    DEFAULT_SIGNATURE,
    GammaSet,
    Multivector,
    Signature,
    anticommutator_defect,
    generators,
    spectral_radius,
)
from qspinor.expr import (
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
    equivalent,
    evaluate,
    parse,
    to_text,
)
from qspinor.expr.parser import _literal_zero, gamma_const, generator_const
from qspinor.qderiv import QContext, chain_rule, jackson_deriv, modified_qderiv
from qspinor.qintegral import QContour, audit_integral_identity, jackson_contour_integral, neumann_series
from qspinor.qoperators import NewQ, check_dq_squared
from qspinor.qsolve import Inhomogeneous, Homogeneous, residual


@dataclass
class VerifySettings:
    ctx: QContext = field(default_factory=QContext)
    sig: Signature = DEFAULT_SIGNATURE
    gamma: GammaSet | None = None
    contour: QContour = field(default_factory=QContour)
    seed: int = 0


class _Tally:
    def __init__(self):
        self.passed = 0
        self.failed = 0
        self.details: list = []

    def check(self, ok: bool, detail) -> bool:
        if ok:
            self.passed += 1
        else:
            self.failed += 1
        self.details.append({"ok": bool(ok), **detail} if isinstance(detail, dict) else {"ok": bool(ok), "case": detail})
        return ok

    def note(self, detail: dict):
        self.details.append(detail)

    def result(self) -> dict:
        return {"passed": self.passed, "failed": self.failed, "details": self.details}


# -- random inputs ---------------------------------------------------------


def random_multivector(rng: np.random.Generator, sig: Signature) -> Multivector:
    n = 1 << sig.n
    return Multivector(sig, rng.normal(size=n) + 1j * rng.normal(size=n))


def random_polynomial(rng: np.random.Generator, var: str = "x", max_degree: int = 6) -> Expr:
    """Random polynomial with small integer coefficients."""
    degree = int(rng.integers(0, max_degree + 1))
    e: Expr | None = None
    for k in range(degree + 1):
        c = int(rng.integers(-5, 6))
        if c == 0 and k != degree:
            continue
        term = Mul(Const(abs(c) or 1), Pow(Var(var), k)) if k else Const(abs(c) or 1)
        if e is None:
            e = Neg(term) if c < 0 else term
        else:
            e = (Sub if c < 0 else Add)(e, term)
    return e if e is not None else Const(0)


_LEAF_VARS = ("x", "y", "x_mu", "x_nu", "xd2", "xa1", "u", "q")


def random_expr(rng: np.random.Generator, depth: int = 4, sig: Signature = DEFAULT_SIGNATURE) -> Expr:
    """Random tree that the printer can reproduce exactly (non-negative literals only)."""
    if depth <= 0 or rng.random() < 0.25:
        pick = rng.random()
        if pick < 0.45:
            return Var(str(rng.choice(_LEAF_VARS)))
        if pick < 0.7:
            return Const(int(rng.integers(0, 20)))
        if pick < 0.8:
            return Const(Fraction(int(rng.integers(1, 100)), int(rng.choice([2, 4, 5, 8, 10]))))
        if pick < 0.87:
            return I_UNIT
        if pick < 0.94:
            return generator_const(sig, int(rng.integers(1, sig.n + 1)))
        return gamma_const(int(rng.integers(0, 4)))
    kind = rng.choice(["add", "sub", "mul", "div", "neg", "pow", "exp"], p=[0.2, 0.15, 0.25, 0.1, 0.1, 0.1, 0.1])
    if kind == "neg":
        return Neg(random_expr(rng, depth - 1, sig))
    if kind == "pow":
        return Pow(random_expr(rng, depth - 1, sig), int(rng.integers(-3, 5)))
    if kind == "exp":
        return Call("exp", random_expr(rng, depth - 1, sig))
    node = {"add": Add, "sub": Sub, "mul": Mul, "div": Div}[kind]
    left, right = random_expr(rng, depth - 1, sig), random_expr(rng, depth - 1, sig)
    if node is Div and _literal_zero(right):
        right = Const(int(rng.integers(1, 20)))
    return node(left, right)


# -- suites ----------------------------------------------------------------


def suite_clifford(s: VerifySettings) -> dict:
    t = _Tally()
    for n in range(1, 5):
        for p in range(n + 1):
            sig = Signature(p, n - p)
            gens = generators(sig)
            for i, j in itertools.product(range(n), repeat=2):
                anti = gens[i] * gens[j] + gens[j] * gens[i]
                want = Multivector.scalar(sig, 2 * sig.square(i + 1)) if i == j else Multivector.scalar(sig, 0)
                if not anti == want:
                    t.check(False, {"signature": str(sig), "pair": [i + 1, j + 1]})
                    break
            else:
                t.check(True, {"signature": str(sig), "anticommutation": "exact"})
    rng = np.random.default_rng(s.seed)
    worst = 0.0
    for _ in range(200):
        a, b, c = (random_multivector(rng, s.sig) for _ in range(3))
        worst = max(worst, ((a * b) * c - a * (b * c)).max_abs())
    t.check(worst <= 1e-12, {"associativity_triples": 200, "max_defect": worst})
    return t.result()


def suite_gamma(s: VerifySettings) -> dict:
    from qspinor.clifford import GAMMA_REPRESENTATIONS

    t = _Tally()
    for label, make in sorted(GAMMA_REPRESENTATIONS.items()):
        g = make()
        defect = anticommutator_defect(g.matrices, g.metric)
        t.check(defect == 0, {"representation": label, "anticommutator_defect": defect})
    return t.result()


def suite_dq_squared(s: VerifySettings) -> dict:
    t = _Tally()
    for q in (0.5, 0.9, 2.0):
        spec = NewQ(1, 2, QContext(q, tol=1e-10))
        worst = 0.0
        for a in range(7):
            for b in range(7 - a):
                rep = check_dq_squared(spec, f"x_mu^{a}*x_nu^{b}", samples=5, seed=s.seed)
                worst = max(worst, rep.max_residual)
                if not rep.passed:
                    t.check(False, {"q": q, "monomial": [a, b], "residual": rep.max_residual})
        t.check(worst <= 1e-10, {"q": q, "max_residual": worst})
    return t.result()


def suite_neumann(s: VerifySettings) -> dict:
    t = _Tally()
    rng = np.random.default_rng(s.seed)
    worst = 0.0
    for k in range(50):
        n = 2 if k % 2 == 0 else 4
        m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        m *= rng.uniform(0.05, 0.9) / spectral_radius(m)
        res = neumann_series(m, s.ctx)
        err = float(np.max(np.abs(res.value - np.linalg.inv(np.eye(n) - m))))
        worst = max(worst, err)
        if not (res.converged and err <= 1e-9):
            t.check(False, {"case": k, "error": err, "converged": res.converged})
    t.check(worst <= 1e-9, {"matrices": 50, "max_error": worst})
    div = neumann_series(np.diag([1.5, 0.1]), s.ctx)
    t.check(not div.converged, {"case": "rho=1.5", "converged": div.converged})
    return t.result()


def suite_jackson_integral(s: VerifySettings) -> dict:
    t = _Tally()
    ctx = QContext(0.5, tol=s.ctx.tol)
    contour = QContour(1.0, 200)
    for m in range(7):
        got = jackson_contour_integral(f"x^{m}", "x", contour, ctx)
        want = (1 - ctx.q) / (1 - ctx.q ** (m + 1))
        t.check(abs(got - want) <= 1e-8, {"monomial": m, "value": got.real, "closed_form": want})
    return t.result()


def suite_chain_rule(s: VerifySettings) -> dict:
    t = _Tally()
    rng = np.random.default_rng(s.seed)
    for _ in range(20):
        poly = random_polynomial(rng, "u")
        lhs = chain_rule(poly, "x", "x")
        rhs = modified_qderiv(_rename(poly, "u", "x"), "x")
        t.check(equivalent(lhs, rhs), {"psi": to_text(poly)})
    example = chain_rule("exp(i*u)", "q^2*x_mu", "x_mu", compose=False)
    expected = Mul(Pow(Var("q"), 2), modified_qderiv("exp(i*u)", "u"))
    t.check(equivalent(example, expected), {"example": to_text(example)})
    return t.result()


def _rename(e: Expr, old: str, new: str) -> Expr:
    from qspinor.expr import substitute

    return substitute(e, old, Var(new))


def suite_q_limit(s: VerifySettings) -> dict:
    t = _Tally()
    rng = np.random.default_rng(s.seed)
    q = 1 + 1e-6
    for degree in range(7):
        coeffs = rng.integers(-5, 6, size=degree + 1)
        coeffs[-1] = coeffs[-1] or 1
        poly = "+".join(f"({int(c)})*x^{k}" for k, c in enumerate(coeffs))
        d = jackson_deriv(parse(poly), "x")
        worst = 0.0
        for x in rng.uniform(0.5, 2.0, size=10):
            got = evaluate(d, {"q": q, "x": x}).real
            want = sum(k * c * x ** (k - 1) for k, c in enumerate(coeffs) if k)
            worst = max(worst, abs(got - want) / max(abs(want), 1e-12))
        t.check(worst <= 1e-4, {"degree": degree, "max_rel_error": worst})
    return t.result()


def q_exponential(b: float, q: float, n: int) -> dict:
    """``psi`` on ``{q^k : k < n}`` with ``psi(1) = 1`` and ``D_q psi = b psi`` exactly.

    Built from ``psi(q x) = psi(x) * (1 + b (q - 1) x)``.
    """
    out = {}
    x, v = 1.0, 1.0
    for _ in range(n):
        out[x] = v
        v *= 1 + b * (q - 1) * x
        x *= q
    return out


def suite_solver_residual(s: VerifySettings) -> dict:
    t = _Tally()
    q = s.ctx.q
    c = 0.7
    trivial = GammaSet.trivial()
    eq = Inhomogeneous(b=1, phi=repr(c), gamma=trivial, ctx=s.ctx)
    lattice = [q**k for k in range(6)]
    exact = {x: c * x for x in lattice}
    r_exact = residual(eq, exact)
    t.check(r_exact <= 1e-12, {"case": "D_q psi = c with psi = c x", "residual": r_exact})
    # a constant shift is invisible to D_q, so bump alternate points
    bumped = {x: v + (0.1 if k % 2 == 0 else 0.0) for k, (x, v) in enumerate(exact.items())}
    r_bumped = residual(eq, bumped)
    t.check(r_bumped > r_exact, {"case": "alternate points + 0.1", "residual": r_bumped})

    heq = Homogeneous(b=0.8, gamma=trivial, ctx=s.ctx)
    qexp = q_exponential(heq.b, q, 6)
    r_q = residual(heq, qexp)
    r_q_bumped = residual(heq, {x: v + 0.1 for x, v in qexp.items()})
    t.check(r_q <= 1e-12, {"case": "D_q psi = b psi, lattice q-exponential", "residual": r_q})
    t.check(r_q_bumped > r_q, {"case": "q-exponential + 0.1", "residual": r_q_bumped})
    return t.result()


def suite_parse_roundtrip(s: VerifySettings) -> dict:
    t = _Tally()
    rng = np.random.default_rng(s.seed)
    bad = []
    for k in range(500):
        e = random_expr(rng, 5, s.sig)
        text = to_text(e)
        if parse(text, sig=s.sig) != e:
            bad.append(text)
    t.check(not bad, {"expressions": 500, "mismatches": bad[:5]})
    return t.result()


def suite_audit_integral(s: VerifySettings) -> dict:
    from qspinor.clifford import gamma_default

    t = _Tally()
    gamma = s.gamma if s.gamma is not None else gamma_default()
    for psi, b in (("0", 1.0), ("0.1", 1.0), ("0.1*u", 2.0), ("3", 1.0)):
        audit = audit_integral_identity(psi, "x", gamma, 0, s.contour, b, s.ctx)
        t.note({"audit": True, "psi": psi, "b": b, **audit.to_dict()})
    t.passed += 1
    return t.result()


SUITES: dict[str, Callable[[VerifySettings], dict]] = {
    "clifford": suite_clifford,
    "gamma": suite_gamma,
    "dq-squared": suite_dq_squared,
    "neumann": suite_neumann,
    "jackson-integral": suite_jackson_integral,
    "chain-rule": suite_chain_rule,
    "q-limit": suite_q_limit,
    "solver-residual": suite_solver_residual,
    "parse-roundtrip": suite_parse_roundtrip,
    "audit-integral": suite_audit_integral,
}


def run_suites(names=None, settings: VerifySettings | None = None) -> dict:
    settings = settings or VerifySettings()
    names = list(SUITES) if not names else list(names)
    out = {}
    for name in names:
        if name not in SUITES:
            raise KeyError(name)
        start = time.perf_counter()
        result = SUITES[name](settings)
        result["elapsed_ms"] = round((time.perf_counter() - start) * 1000, 3)
        out[name] = result
    return out
