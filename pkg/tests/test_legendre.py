import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import legendre as npleg

from h4precond.errors import ConvergenceError
from h4precond.legendre import (
    diff_matrix,
    gauss_legendre,
    legendre_eval,
    legendre_values,
    shape_functions,
)


def test_values_small_cases():
    np.testing.assert_array_equal(legendre_values(0.7, 0), [1.0])
    np.testing.assert_allclose(legendre_values(1.0, 5), np.ones(6), rtol=0, atol=1e-15)
    np.testing.assert_allclose(legendre_values(0.5, 2), [1.0, 0.5, -0.125], rtol=0, atol=1e-15)


def test_values_vectorized_shape():
    x = np.linspace(-1, 1, 7)
    assert legendre_values(x, 4).shape == (5, 7)


@pytest.mark.parametrize("x", [1.0 + 1e-9, -1.1, 3.0])
def test_values_domain_error(x):
    with pytest.raises(ValueError):
        legendre_values(x, 3)


def test_values_bounded_and_recurrence():
    rng = np.random.default_rng(0)
    x = rng.uniform(-1, 1, 100)
    W = 40
    L = legendre_values(x, W)
    assert np.all(np.abs(L) <= 1.0 + 1e-14)
    n = np.arange(1, W)[:, None]
    resid = (n + 1) * L[2:] - (2 * n + 1) * x * L[1:-1] + n * L[:-2]
    assert np.max(np.abs(resid)) <= 1e-13


def test_values_match_numpy():
    x = np.linspace(-1, 1, 33)
    ref = np.array([npleg.legval(x, np.eye(13)[k]) for k in range(13)])
    np.testing.assert_allclose(legendre_values(x, 12), ref, atol=1e-14)


def test_diff_matrix_examples():
    D = diff_matrix(5)
    e = np.eye(6)
    np.testing.assert_array_equal(D @ e[1], e[0])
    np.testing.assert_array_equal(D @ e[2], 3 * e[1])
    np.testing.assert_array_equal(D @ e[3], e[0] + 5 * e[2])


def test_diff_matrix_structure():
    D = diff_matrix(9)
    assert np.all(np.tril(D) == 0)


@pytest.mark.parametrize("W", [0, 1, 4, 10, 17])
def test_diff_matrix_matches_numpy_legder(W):
    D = diff_matrix(W)
    for k in range(W + 1):
        e = np.eye(W + 1)[k]
        d = np.zeros(W + 1)
        ref = npleg.legder(e)
        d[: ref.shape[0]] = ref
        np.testing.assert_allclose(D @ e, d, atol=1e-12)


@pytest.mark.parametrize("W", [0, 3, 8, 16])
def test_diff_matrix_nilpotent(W):
    D = diff_matrix(W)
    np.testing.assert_allclose(np.linalg.matrix_power(D, W + 1), 0.0, atol=1e-12)


def test_gauss_small_rules():
    r1 = gauss_legendre(1)
    np.testing.assert_allclose(r1.nodes, [0.0], atol=1e-16)
    np.testing.assert_allclose(r1.weights, [2.0])
    r2 = gauss_legendre(2)
    s = 1 / math.sqrt(3)
    np.testing.assert_allclose(r2.nodes, [-s, s], atol=1e-15)
    np.testing.assert_allclose(r2.weights, [1.0, 1.0], atol=1e-15)


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8, 16, 33, 64])
def test_gauss_rule_invariants(n):
    rule = gauss_legendre(n)
    assert abs(rule.weights.sum() - 2.0) <= 1e-13
    assert np.all(np.diff(rule.nodes) > 0)
    assert np.all(rule.weights > 0)
    assert np.max(np.abs(legendre_values(rule.nodes, n)[n])) <= 1e-13
    for k in range(2 * n):
        exact = 0.0 if k % 2 else 2.0 / (k + 1)
        assert abs(rule.integrate(rule.nodes**k) - exact) <= 1e-13


def test_gauss_matches_numpy():
    x, w = npleg.leggauss(20)
    rule = gauss_legendre(20)
    np.testing.assert_allclose(rule.nodes, x, atol=1e-15)
    np.testing.assert_allclose(rule.weights, w, atol=1e-15)


def test_gauss_non_convergence():
    with pytest.raises(ConvergenceError):
        gauss_legendre(10, max_iter=1)


def test_gauss_bad_count():
    with pytest.raises(ValueError):
        gauss_legendre(0)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=20), st.integers(min_value=0, max_value=2**32 - 1))
def test_quadrature_of_square_matches_coefficients(W, seed):
    beta = np.random.default_rng(seed).standard_normal(W + 1)
    rule = gauss_legendre(W + 3)
    quad = rule.integrate(legendre_eval(beta, rule.nodes) ** 2)
    coeff = np.sum(beta**2 * 2.0 / (2 * np.arange(W + 1) + 1))
    assert abs(quad - coeff) <= 1e-12 * coeff


def test_shape_functions_examples():
    sf = shape_functions(5)
    np.testing.assert_allclose(sf[1], [0.5, -0.5, 0, 0, 0, 0])
    np.testing.assert_allclose(sf[2], [0.5, 0.5, 0, 0, 0, 0])
    a = 1 / (2 * math.sqrt(3))
    np.testing.assert_allclose(sf[3], [-a, 0, a, 0, 0, 0], atol=1e-16)


@pytest.mark.parametrize("W", [2, 3, 7, 20])
def test_shape_functions_vanish_at_ends(W):
    sf = shape_functions(W)
    assert len(sf.functions) == W + 1
    assert abs(legendre_eval(sf[1], 1.0)) <= 1e-13
    assert abs(legendre_eval(sf[2], -1.0)) <= 1e-13
    for i in range(3, W + 2):
        assert abs(legendre_eval(sf[i], 1.0)) <= 1e-13
        assert abs(legendre_eval(sf[i], -1.0)) <= 1e-13


def test_bubbles_are_scaled_integrals():
    # V_i = sqrt(2i-3)/2 * int_{-1}^x L_{i-2}; the common sqrt((2i-3)/2)
    # normalization is larger by sqrt(2) and gives the same h_i downstream
    W = 9
    sf = shape_functions(W)
    for i in range(3, W + 2):
        e = np.zeros(W + 1)
        e[i - 2] = 1.0
        integ = npleg.legint(e, lbnd=-1)[: W + 1] * math.sqrt(2 * i - 3) / 2
        np.testing.assert_allclose(sf[i], integ, atol=1e-14)


def test_shape_functions_reject_small_degree():
    with pytest.raises(ValueError):
        shape_functions(1)
    with pytest.raises(IndexError):
        shape_functions(3)[5]
