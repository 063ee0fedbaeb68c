import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from gctypical.information import (JointPMF, binary_entropy, conditional_entropy,
                                   conditional_mutual_information, divergence, entropy,
                                   information_density, joint_from_kernel, mutual_information,
                                   product_pmf)

mass = st.one_of(st.just(0.0), st.floats(1e-6, 1.0))
tables = st.lists(mass, min_size=8, max_size=8).filter(lambda v: sum(v) > 1e-3)


def as_cube(v):
    t = np.asarray(v, float).reshape(2, 2, 2)
    return t / t.sum()


def test_product_has_zero_information():
    assert mutual_information(product_pmf([0.3, 0.7], [0.2, 0.5, 0.3])) == 0.0


def test_identity_coupling_is_one_bit():
    assert mutual_information(np.eye(2) / 2) == pytest.approx(1.0, abs=1e-15)


def test_doubly_symmetric_closed_form():
    Q = joint_from_kernel([0.5, 0.5], [[0.89, 0.11], [0.11, 0.89]])
    assert mutual_information(Q) == pytest.approx(1 - oracles.h2(0.11), abs=1e-12)


@given(tables)
def test_mutual_information_matches_direct_sum(v):
    Q = np.asarray(v, float).reshape(2, 4)
    Q /= Q.sum()
    assert mutual_information(Q) == pytest.approx(oracles.mi_direct(Q), abs=1e-10)
    assert mutual_information(Q) >= 0


@given(tables)
def test_conditional_information_matches_direct_sum(v):
    Q = as_cube(v)
    assert conditional_mutual_information(Q, (0,), (1,), (2,)) == pytest.approx(oracles.cmi_direct(Q), abs=1e-10)


@given(tables)
def test_chain_rule(v):
    Q = as_cube(v)
    lhs = conditional_mutual_information(Q, (0,), (1, 2))
    rhs = mutual_information(Q, (0,), (2,)) + conditional_mutual_information(Q, (0,), (1,), (2,))
    assert lhs == pytest.approx(rhs, abs=1e-10)


def test_independent_component_and_markov_chain():
    Q = np.multiply.outer(np.array([0.4, 0.6]), np.array([[0.1, 0.2], [0.3, 0.4]]))
    assert conditional_mutual_information(Q, (0,), (1,), (2,)) == pytest.approx(0.0, abs=1e-15)
    # A -> B -> C
    pa = np.array([0.3, 0.7])
    kab = np.array([[0.9, 0.1], [0.2, 0.8]])
    kbc = np.array([[0.6, 0.4], [0.25, 0.75]])
    M = np.einsum("a,ab,bc->abc", pa, kab, kbc)
    assert conditional_mutual_information(M, (0,), (2,), (1,)) == pytest.approx(0.0, abs=1e-12)
    assert mutual_information(M, (0,), (2,)) > 0


def test_entropies():
    assert entropy([0.5, 0.5, 0.0]) == 1.0
    assert binary_entropy(0.11) == pytest.approx(oracles.h2(0.11))
    Q = np.array([[0.15, 0.3], [0.35, 0.2]])
    assert conditional_entropy(Q, 0, 1) == pytest.approx(entropy(Q) - entropy(Q.sum(axis=0)))
    assert divergence([1.0, 0.0], [0.0, 1.0]) == math.inf


def test_joint_pmf_validation_and_marginals():
    with pytest.raises(ValueError):
        JointPMF(np.array([0.5, 0.6]))
    with pytest.raises(ValueError):
        JointPMF(np.array([1.5, -0.5]))
    J = JointPMF(np.arange(8.0).reshape(2, 2, 2) / 28)
    np.testing.assert_allclose(J.marginal((2, 0)), J.table.sum(axis=1).T)
    with pytest.raises(ValueError):
        joint_from_kernel([0.5, 0.5], [[0.5, 0.6], [1.0, 0.0]])


# ---------------------------------------------------------------------------
# information density


def test_density_of_product_is_zero():
    Q = product_pmf([0.3, 0.7], [0.6, 0.4]).table
    assert information_density(Q, [0, 1, 1], [1, 0, 1]) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("n", [1, 5, 40])
def test_identity_coupling_gives_n_bits(n):
    v = np.arange(n) % 2
    assert information_density(np.eye(2) / 2, v, v) == pytest.approx(n)


def test_zero_probability_pair_is_negative_infinity():
    assert information_density(np.eye(2) / 2, [0, 1], [0, 0]) == -math.inf


def test_density_argument_checks():
    with pytest.raises(ValueError):
        information_density(np.eye(2) / 2, [0, 1], [0])
    with pytest.raises(ValueError):
        information_density(np.eye(2) / 2, [2], [0])


def test_density_mean_approaches_mutual_information():
    Q = np.array([[0.15, 0.3], [0.35, 0.2]])
    rng = np.random.default_rng(30)
    n = 200_000
    cells = rng.choice(4, size=n, p=Q.ravel())
    v, w = np.divmod(cells, 2)
    assert information_density(Q, v, w) / n == pytest.approx(mutual_information(Q), abs=5e-3)
