import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qspinor.clifford import (
    DEFAULT_SIGNATURE,
    GammaSet,
    Multivector,
    Signature,
    anticommutator_defect,
    blade_name,
    gamma_default,
    gamma_set,
    gamma_weyl,
    generator_matrices,
    generator_matrix,
    generators,
    geometric_product,
    spectral_radius,
)

signatures = st.tuples(st.integers(0, 3), st.integers(0, 3)).filter(lambda t: 1 <= sum(t) <= 5).map(lambda t: Signature(*t))
coeff = st.floats(-3, 3, allow_nan=False)


@st.composite
def multivector_triples(draw):
    sig = draw(signatures)
    size = 1 << sig.n
    vecs = [np.array(draw(st.lists(coeff, min_size=size, max_size=size))) for _ in range(3)]
    return [Multivector(sig, v) for v in vecs]


def test_default_signature_is_four_negative_generators():
    assert DEFAULT_SIGNATURE == Signature(0, 4)
    assert all(DEFAULT_SIGNATURE.square(k) == -1 for k in range(1, 5))


def test_signature_puts_positive_generators_first():
    sig = Signature(1, 3)
    assert [sig.square(k) for k in range(1, 5)] == [1, -1, -1, -1]
    assert sig.neg_mask == 0b1110


@pytest.mark.parametrize("p, q", [(-1, 2), (0, 0), (5, 5)])
def test_signature_rejects_bad_counts(p, q):
    with pytest.raises(ValueError):
        Signature(p, q)


def test_generator_index_is_one_based():
    with pytest.raises(IndexError):
        DEFAULT_SIGNATURE.square(0)
    with pytest.raises(IndexError):
        Multivector.basis(DEFAULT_SIGNATURE, 5)


def test_blade_names():
    assert blade_name(0) == "1"
    assert blade_name(0b101) == "e1*e3"


def test_generators_square_and_anticommute_exactly():
    for sig in (Signature(0, 4), Signature(1, 3), Signature(3, 0), Signature(2, 2)):
        gens = generators(sig)
        for j, a in enumerate(gens):
            assert a * a == Multivector.scalar(sig, sig.square(j + 1))
            for b in gens[j + 1:]:
                assert a * b + b * a == Multivector.scalar(sig, 0)


def test_product_of_blades_orders_and_signs():
    sig = Signature(0, 3)
    e1, e2, e3 = generators(sig)
    assert e2 * e1 == -(e1 * e2)
    assert (e1 * e2) * (e1 * e2) == Multivector.scalar(sig, -1)
    assert (e1 * e2 * e3).single_blade() == 0b111
    assert e3 * e1 * e2 == e1 * e2 * e3


@settings(max_examples=60, deadline=None)
@given(multivector_triples())
def test_product_is_associative(triple):
    a, b, c = triple
    assert ((a * b) * c).allclose(a * (b * c), atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(multivector_triples())
def test_product_distributes(triple):
    a, b, c = triple
    assert (a * (b + c)).allclose(a * b + a * c, atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(multivector_triples())
def test_matrix_representation_is_a_homomorphism(triple):
    # independent route: product of matrices vs matrix of product
    a, b, _ = triple
    assert np.allclose((a * b).to_matrix(), a.to_matrix() @ b.to_matrix(), atol=1e-9)


def test_generator_matrices_match_the_algebra():
    for sig in (Signature(0, 4), Signature(1, 3), Signature(2, 1), Signature(0, 5)):
        mats = generator_matrices(sig)
        dim = 2 ** ((sig.n + 1) // 2)
        assert all(m.shape == (dim, dim) for m in mats)
        for j in range(sig.n):
            for k in range(sig.n):
                target = 2 * sig.square(j + 1) if j == k else 0
                assert np.array_equal(mats[j] @ mats[k] + mats[k] @ mats[j], target * np.eye(dim))


def test_first_generator_matrix_in_negative_signature():
    assert np.array_equal(generator_matrix(Signature(0, 1), 1), np.array([[0, -1], [1, 0]]))


def test_inverse_and_reverse():
    sig = Signature(0, 3)
    e1, e2, _ = generators(sig)
    b = e1 * e2
    assert (b * b.inverse()).allclose(Multivector.scalar(sig, 1))
    assert b.reverse() == e2 * e1
    v = 2 * e1 + 3 * e2
    assert (v / v).allclose(Multivector.scalar(sig, 1))


def test_grade_projection():
    sig = Signature(0, 3)
    e1, e2, e3 = generators(sig)
    m = 1 + e1 + e1 * e2 + e1 * e2 * e3
    assert m.grade(0) == Multivector.scalar(sig, 1)
    assert m.grade(2) == e1 * e2


def test_mixed_signatures_refuse_to_multiply():
    with pytest.raises(ValueError):
        geometric_product(Multivector.basis(Signature(0, 2), 1), Multivector.basis(Signature(2, 0), 1))


@pytest.mark.parametrize("label", ["dirac", "weyl"])
def test_gamma_sets_satisfy_the_anticommutator_exactly(label):
    g = gamma_set(label)
    assert g.metric == (1, -1, -1, -1)
    assert anticommutator_defect(g.matrices, g.metric) == 0.0


def test_weyl_and_dirac_are_different_representations():
    assert not np.array_equal(gamma_default()[0], gamma_weyl()[0])


def test_gamma_upper_flips_spatial_indices():
    g = gamma_default()
    assert np.array_equal(g.upper(0), g[0])
    assert np.array_equal(g.upper(2), -g[2])


def test_gamma_set_rejects_non_clifford_matrices():
    with pytest.raises(ValueError):
        GammaSet((np.eye(2), np.eye(2)), (1, 1))


def test_gamma_matrices_are_read_only():
    with pytest.raises(ValueError):
        gamma_default()[0][0, 0] = 5


def test_unknown_gamma_label():
    with pytest.raises(ValueError):
        gamma_set("majorana")


def test_trivial_gamma_is_one_by_one():
    g = GammaSet.trivial()
    assert g.dim == 1 and g[0][0, 0] == 1


def test_spectral_radius():
    assert spectral_radius(np.diag([0.5, -0.9j])) == pytest.approx(0.9)
    with pytest.raises(ValueError):
        spectral_radius(np.ones((2, 3)))
