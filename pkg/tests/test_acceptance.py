"""Acceptance criteria, each with an independent oracle and a time budget.

Each test prints nothing itself; tests/conftest.py writes one PASS/FAIL line
per criterion in the terminal summary.
"""

import io
import json
import math
import time
from contextlib import contextmanager
from importlib.resources import files

import jsonschema
import numpy as np

from qspinor.cli import main
from qspinor.clifford import (
    GammaSet,
    Multivector,
    Signature,
    gamma_default,
    gamma_weyl,
    generator_matrices,
    generators,
)
from qspinor.expr import Mul, Pow, Q, equivalent, evaluate, parse, simplify, substitute, to_text
from qspinor.qderiv import QContext, chain_rule, jackson_deriv, modified_qderiv
from qspinor.qintegral import QContour, jackson_contour_integral, neumann_series
from qspinor.qoperators import NewQ, apply_new_q, check_dq_squared
from qspinor.qsolve import (
    DiracEM,
    Electromagnetic,
    Homogeneous,
    Inhomogeneous,
    NewOpInhomogeneous,
    PotentialB,
    residual,
    solve_dirac_em,
    solve_electromagnetic,
    solve_homogeneous,
    solve_inhomogeneous,
    solve_new_op_inhomogeneous,
    solve_potential_b,
)
from qspinor.verify import random_expr, random_polynomial


@contextmanager
def budget(seconds):
    start = time.perf_counter()
    yield
    elapsed = time.perf_counter() - start
    assert elapsed < seconds, f"took {elapsed:.2f} s, budget {seconds} s"


def test_criterion_01_new_operator_example():
    """criterion 1: D_q(q*x_nu*xd2) = q^2*xd2*e_mu*e_nu exactly, < 1 s"""
    with budget(1.0):
        result = apply_new_q(NewQ(1, 2), parse("q*x_nu*xd2"))
        assert to_text(result) == "q^2*e1*e2*xd2"
        assert equivalent(result, parse("q^2*xd2*e1*e2"))
        # numeric route: multivector product by hand
        e1, e2 = generators(Signature(0, 4))[:2]
        q, s = 0.5, 0.7
        want = (e1 * e2) * (q**2 * s)
        assert evaluate(result, {"q": q, "xd2": s}).allclose(want, atol=0)


def test_criterion_02_dq_squared_identity():
    """criterion 2: D_q^2 f + partials^2 f <= 1e-10 for a+b <= 6, q in {0.5, 0.9, 2}, < 10 s"""
    with budget(10.0):
        worst = 0.0
        for q in (0.5, 0.9, 2.0):
            spec = NewQ(1, 2, QContext(q=q))
            for a in range(7):
                for b in range(7 - a):
                    report = check_dq_squared(spec, parse(f"x_mu^{a}*x_nu^{b}"), samples=10, seed=a * 7 + b)
                    assert report.applicable
                    worst = max(worst, report.max_residual)
        assert worst <= 1e-10, worst


def test_criterion_03_clifford_and_gamma_algebra():
    """criterion 3: gamma and generator anticommutators exact, 200 associativity triples, < 5 s"""
    with budget(5.0):
        eye = np.eye(4)
        for gamma in (gamma_default(), gamma_weyl()):
            for mu in range(4):
                for nu in range(4):
                    anti = gamma[mu] @ gamma[nu] + gamma[nu] @ gamma[mu]
                    eta = gamma.metric[mu] if mu == nu else 0
                    assert np.array_equal(anti, 2 * eta * eye)
        for n in range(1, 5):
            sig = Signature(0, n)
            gens = generators(sig)
            mats = generator_matrices(sig)
            dim = mats[0].shape[0]
            for j in range(n):
                for k in range(n):
                    target = -2 if j == k else 0
                    assert gens[j] * gens[k] + gens[k] * gens[j] == Multivector.scalar(sig, target)
                    assert np.array_equal(mats[j] @ mats[k] + mats[k] @ mats[j], target * np.eye(dim))
        rng = np.random.default_rng(3)
        sig = Signature(0, 4)
        worst = 0.0
        for _ in range(200):
            a, b, c = (Multivector(sig, rng.uniform(-1, 1, 16) + 1j * rng.uniform(-1, 1, 16)) for _ in range(3))
            worst = max(worst, ((a * b) * c - a * (b * c)).max_abs())
        assert worst <= 1e-12, worst


def test_criterion_04_neumann_against_inverse():
    """criterion 4: Neumann sum vs (I - M)^-1 <= 1e-9 on 50 matrices with rho <= 0.9, < 10 s"""
    with budget(10.0):
        rng = np.random.default_rng(4)
        ctx = QContext()
        worst = 0.0
        for k in range(50):
            n = 2 if k % 2 == 0 else 4
            m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            rho = np.max(np.abs(np.linalg.eigvals(m)))
            m *= rng.uniform(0.0, 0.9) / rho
            result = neumann_series(m, ctx)
            assert result.converged
            oracle = np.linalg.solve(np.eye(n) - m, np.eye(n))
            worst = max(worst, float(np.max(np.abs(result.value - oracle))))
        assert worst <= 1e-9, worst


def test_criterion_05_scalar_reduction():
    """criterion 5: 1x1 gamma, psi = (1/q)/(1 - phi) for 20 random phi, < 1 s"""
    with budget(1.0):
        rng = np.random.default_rng(5)
        ctx = QContext(q=0.5)
        trivial = GammaSet.trivial()
        for phi in rng.uniform(-0.9, 0.9, size=20):
            eq = Inhomogeneous(b=1.0, phi=repr(float(phi)), gamma=trivial, ctx=ctx)
            report = solve_inhomogeneous(eq, [1.0])
            got = report.solutions[0][0, 0]
            assert abs(got - (1 / ctx.q) / (1 - phi)) <= 1e-10


def test_criterion_06_chain_rule():
    """criterion 6: chain rule with u = x equals the modified derivative; u = q^2*x_mu gives q^2, < 5 s"""
    with budget(5.0):
        rng = np.random.default_rng(6)
        for _ in range(50):
            psi = random_polynomial(rng, "u", 6)
            via_chain = chain_rule(psi, parse("x"), "x")
            direct = modified_qderiv(substitute(psi, "u", parse("x")), "x")
            assert via_chain == direct
        psi = parse("exp(i*u)")
        structured = chain_rule(psi, parse("q^2*x_mu"), "x_mu", compose=False)
        assert equivalent(structured, simplify(Mul(Pow(Q, 2), modified_qderiv(psi, "u"))))
        assert jackson_deriv(parse("q^2*x_mu"), "x_mu") == parse("q^2")


def test_criterion_07_jackson_contour_integral():
    """criterion 7: lattice integral of x^n matches the geometric sum within 1e-8, K = 200, < 1 s"""
    with budget(1.0):
        q, K, x0 = 0.5, 200, 1.0
        ctx = QContext(q=q)
        for n in range(7):
            got = jackson_contour_integral(parse(f"x^{n}"), "x", QContour(x0, K), ctx)
            r = q ** (n + 1)
            want = (1 - q) * x0 ** (n + 1) * (1 - r ** (K + 1)) / (1 - r)
            assert abs(got - want) <= 1e-8
            assert abs(got - (1 - q) / (1 - r)) <= 1e-8


def test_criterion_08_solver_residual_audit():
    """criterion 8: exact D_q psi = c has residual <= 1e-12, +0.1 raises it, every solver reports one, < 5 s"""
    with budget(5.0):
        ctx = QContext(q=0.5)
        c = 0.7
        eq = Inhomogeneous(b=1.0, phi=repr(c), gamma=GammaSet.trivial(), ctx=ctx)
        lattice = [ctx.q**k for k in range(6)]
        exact = {x: c * x for x in lattice}
        r_exact = residual(eq, exact)
        assert r_exact <= 1e-12
        bumped = {x: v + (0.1 if k % 2 == 0 else 0.0) for k, (x, v) in enumerate(exact.items())}
        assert residual(eq, bumped) > r_exact

        runs = [
            solve_homogeneous(Homogeneous(b=1.0, ctx=QContext(q=2.0), gamma=GammaSet.trivial()), [1.0],
                              seed=0.3 + 0.2j),
            solve_inhomogeneous(Inhomogeneous(b=1.0, phi="0.1*x", ctx=ctx), [1.0, 2.0]),
            solve_new_op_inhomogeneous(NewOpInhomogeneous(a=1.0, phi="0.2", ctx=ctx), [1.0]),
            solve_electromagnetic(Electromagnetic(e=0.1, m=1.0, A="0.2", g="0.3", ctx=ctx), [1.0]),
            solve_dirac_em(DiracEM(e=0.0, m=1.0, A="0", ctx=QContext(q=2.0), gamma=GammaSet.trivial()), [1.0],
                           seed=0.3 + 0.2j),
            solve_potential_b(PotentialB(a=1.0, b=0.5, B="0.2", phi="0.3", ctx=ctx), [1.0]),
        ]
        for report in runs:
            assert isinstance(report.residual, float) and math.isfinite(report.residual)
            assert "residual" in report.to_dict()


def test_criterion_09_classical_limit():
    """criterion 9: Jackson derivative at q = 1 + 1e-6 within 1e-4 relative of d/dx, < 1 s"""
    with budget(1.0):
        rng = np.random.default_rng(9)
        q = 1 + 1e-6
        for degree in range(7):
            coeffs = rng.integers(-5, 6, size=degree + 1)
            coeffs[-1] = coeffs[-1] or 1
            poly = np.polynomial.Polynomial(coeffs.astype(float))
            text = "+".join(f"({int(c)})*x^{k}" for k, c in enumerate(coeffs))
            d = jackson_deriv(parse(text), "x")
            for x in rng.uniform(0.5, 2.0, size=10):
                got = evaluate(d, {"q": q, "x": x}).real
                want = poly.deriv()(x)
                assert abs(got - want) <= 1e-4 * max(abs(want), 1.0)


def _run(argv):
    out = io.StringIO()
    code = main(argv, stream=out)
    return code, json.loads(out.getvalue())


def test_criterion_10_cli_contract():
    """criterion 10: CLI examples give the stated output and exit codes; 500 parse round-trips, < 10 s"""
    with budget(10.0):
        schema = json.loads(files("qspinor").joinpath("schema/output.schema.json").read_text())

        code, doc = _run(["qderiv", "--kind", "directional", "--expr", "q*x_nu*xd2", "--var", "x_nu",
                          "--dir", "e2", "--step", "xd2", "--q", "0.5"])
        assert code == 0 and doc["result"]["result_printed"] == "q^2*e2*xd2"
        jsonschema.validate(doc, schema)

        code, doc = _run(["solve", "--eq", "inhomogeneous", "--phi", "0", "--b", "1", "--q", "0.5", "--points", "1"])
        assert code == 0
        jsonschema.validate(doc, schema)
        value = np.array([[complex(*z) for z in row] for row in doc["result"]["solutions"][0]])
        assert np.array_equal(value, 2 * np.eye(4))

        code, doc = _run(["solve", "--eq", "inhomogeneous", "--b", "0", "--phi", "0", "--points", "1"])
        assert code == 2
        jsonschema.validate(doc, schema)

        rng = np.random.default_rng(10)
        for _ in range(500):
            e = random_expr(rng, 5)
            assert parse(to_text(e)) == e
