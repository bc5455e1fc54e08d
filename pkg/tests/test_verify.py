import numpy as np
import pytest

from qspinor.clifford import GammaSet
from qspinor.expr import Var, evaluate, free_vars, parse, to_text
from qspinor.qderiv import QContext
from qspinor.qsolve import Homogeneous, residual
from qspinor.verify import SUITES, VerifySettings, q_exponential, random_expr, random_polynomial, run_suites


@pytest.mark.parametrize("name", sorted(SUITES))
def test_every_suite_passes_with_defaults(name):
    result = run_suites([name])[name]
    assert result["failed"] == 0 and result["passed"] >= 1
    assert result["elapsed_ms"] >= 0


def test_suites_pass_at_another_q():
    results = run_suites(["chain-rule", "solver-residual", "neumann"], VerifySettings(ctx=QContext(q=0.8), seed=4))
    assert all(r["failed"] == 0 for r in results.values())


def test_unknown_suite():
    with pytest.raises(KeyError):
        run_suites(["nope"])


@pytest.mark.parametrize("q", [0.5, 2.0])
def test_lattice_q_exponential_solves_the_homogeneous_scalar_equation(q):
    b = 0.8
    values = q_exponential(b, q, 8)
    for x, v in values.items():
        if q * x in values:
            assert (values[q * x] - v) / ((q - 1) * x) == pytest.approx(b * v, rel=1e-12)
    eq = Homogeneous(b=b, gamma=GammaSet.trivial(), ctx=QContext(q=q))
    assert residual(eq, values) <= 1e-14 * max(abs(v) for v in values.values())


def test_random_polynomial_uses_only_its_variable():
    rng = np.random.default_rng(0)
    for _ in range(50):
        assert free_vars(random_polynomial(rng, "u", 4)) <= {"u"}


def test_random_expressions_are_reproducible():
    a = [to_text(random_expr(np.random.default_rng(9), 4)) for _ in range(2)]
    assert a[0] == a[1]
    assert isinstance(random_expr(np.random.default_rng(1), 0), (Var, type(parse("1"))))


def test_random_polynomial_evaluates():
    p = random_polynomial(np.random.default_rng(3), "x", 3)
    assert np.isfinite(evaluate(p, {"x": 1.0}))
