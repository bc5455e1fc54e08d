import numpy as np
import pytest

from qspinor.clifford import GammaSet, Signature, gamma_default, gamma_weyl
from qspinor.expr import Const, Var, equivalent, evaluate, parse, simplify, to_text
from qspinor.qderiv import QContext
from qspinor.qoperators import (
    CovariantQ,
    DiracQ,
    NewQ,
    QDifferential,
    apply_covariant_q,
    apply_dirac_q,
    apply_new_q,
    check_dq_squared,
    commutes_with_scalars,
    dirac_q_spinor_form,
    gamma_factor,
    new_q_differential,
)


def test_new_operator_example():
    assert to_text(apply_new_q(NewQ(1, 2), parse("q*x_nu*xd2"))) == "q^2*e1*e2*xd2"


def test_new_operator_acts_on_both_coordinates():
    # f = x_mu: only the x_mu partial survives, giving e_nu * q*e_mu*xa1 / xa1
    got = apply_new_q(NewQ(1, 2), parse("x_mu"))
    assert equivalent(got, parse("q*e2*e1"))
    assert to_text(got) == "-q*e1*e2"


def test_new_operator_with_inner_function():
    got = apply_new_q(NewQ(1, 2), parse("u^2"), parse("x_mu+x_nu"))
    # modified derivative of u^2 is q*u and both inner partials are 1
    want = parse("(e1+e2)*q*(x_mu+x_nu)")
    assert equivalent(got, want)


def test_new_operator_validates_indices():
    with pytest.raises(ValueError):
        NewQ(1, 1)
    with pytest.raises(ValueError):
        NewQ(1, 5)


@pytest.mark.parametrize("q", [0.5, 0.9, 2.0])
@pytest.mark.parametrize("a, b", [(0, 0), (2, 1), (3, 3), (0, 6), (1, 4)])
def test_dq_squared_identity(q, a, b):
    report = check_dq_squared(NewQ(1, 2, QContext(q=q)), parse(f"x_mu^{a}*x_nu^{b}"))
    assert report.applicable and report.passed
    assert report.symbolic_residual == "0"
    assert report.to_dict()["passed"]


def test_dq_squared_is_not_expected_for_positive_squares():
    spec = NewQ(1, 2, QContext(), sig=Signature(3, 0))
    report = check_dq_squared(spec, parse("x_mu^2+x_nu^2"))
    assert not report.applicable
    assert report.max_residual > 1


def test_gamma_factor_names_default_gammas():
    assert gamma_factor(gamma_default(), 2).name == "g2"
    assert gamma_factor(gamma_weyl(), 2).name is None
    with pytest.raises(ValueError):
        gamma_factor(gamma_default(), 4)


def test_dirac_operator():
    spec = DiracQ(1)
    assert to_text(apply_dirac_q(spec, parse("x_mu^2"))) == "(q+1)*g1*x_mu"
    assert spec.differential == Var("dq_x_mu")
    with pytest.raises(ValueError):
        DiracQ(4)


def test_dirac_operator_with_another_representation():
    spec = DiracQ(0, gamma=gamma_weyl())
    got = evaluate(apply_dirac_q(spec, parse("x_mu^3")), {"q": 0.5, "x_mu": 2.0})
    assert np.allclose(got, gamma_weyl()[0] * (1 + 0.5 + 0.25) * 4)


def test_spinor_form_of_identity_is_the_bare_differential():
    assert to_text(dirac_q_spinor_form(parse("u"), parse("x_mu"), DiracQ(0))) == "g0*dq_x_mu"


def test_spinor_form_with_modified_outer_derivative():
    got = dirac_q_spinor_form(parse("u^2"), parse("x_mu"), DiracQ(0), outer="modified")
    # modified derivative of u^2 is q*u; the inner derivative of x_mu is 1
    assert equivalent(got, parse("q*x_mu*g0*dq_x_mu"))
    with pytest.raises(ValueError):
        dirac_q_spinor_form(parse("u"), parse("x_mu"), DiracQ(0), outer="central")


def test_covariant_operator():
    spec = CovariantQ(0, charge=2.0, potential=parse("1"))
    assert to_text(apply_covariant_q(spec, parse("x_mu"))) == "-2*x_mu+1"


def test_covariant_operator_keeps_potential_on_the_left():
    spec = CovariantQ(0, charge=1.0, potential=parse("g1"))
    got = apply_covariant_q(spec, parse("g2"))
    assert equivalent(got, parse("-g1*g2"))


def test_differentials():
    d = new_q_differential(NewQ(1, 2))
    assert to_text(d.to_expr()) == "e1*dq_x_nu"
    assert to_text(new_q_differential(NewQ(1, 2), which=1).to_expr()) == "e2*dq_x_mu"
    assert equivalent(d.of(parse("x_nu^2"), "x_nu"), parse("(q+1)*e1*x_nu*dq_x_nu"))
    with pytest.raises(ValueError):
        QDifferential(Var("dq_x"), parse("e1*e2"))
    with pytest.raises(ValueError):
        QDifferential(Var("dq_x"), Const(2))


def test_scalars_commute_with_constants():
    assert commutes_with_scalars([parse("x^2+1"), parse("q*xd2")], [parse("e1"), parse("g2")])
    assert not commutes_with_scalars([parse("e1")], [parse("e2")])


def test_trivial_gamma_set_reduces_to_scalars():
    spec = DiracQ(0, gamma=GammaSet.trivial())
    got = evaluate(simplify(apply_dirac_q(spec, parse("x_mu^2"))), {"q": 0.5, "x_mu": 3.0})
    assert np.allclose(got, [[4.5]])
