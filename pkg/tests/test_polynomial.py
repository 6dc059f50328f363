import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial import polynomial as P

from prequantum.polynomial import (Polynomial, characteristic_polynomial,
                                   matrix_characteristic_polynomial)
from conftest import random_hermitian


def test_char_poly_of_one_two():
    f = characteristic_polynomial([1.0, 2.0])
    assert f.coefficients.tolist() == [2.0, -3.0, 1.0]
    assert f(1.5) == -0.25
    assert f.deriv().coefficients.tolist() == [-3.0, 2.0]


def test_char_poly_single_root():
    f = characteristic_polynomial([3.0])
    assert f.coefficients.tolist() == [3.0, -1.0]
    assert f.deriv().coefficients.tolist() == [-1.0]


def test_trailing_zeros_trimmed():
    assert Polynomial([1.0, 2.0, 0.0, 0.0]).degree == 1
    assert Polynomial([0.0, 0.0]).coefficients.tolist() == [0.0]
    assert Polynomial([5.0]).deriv().coefficients.tolist() == [0.0]


def test_horner_vectorised():
    f = Polynomial([1.0, -2.0, 3.0])
    x = np.linspace(-2, 2, 9)
    np.testing.assert_allclose(f(x), 1 - 2 * x + 3 * x**2, rtol=1e-15)


def test_product_matches_numpy():
    a, b = Polynomial([1.0, 2.0]), Polynomial([-1.0, 0.0, 4.0])
    np.testing.assert_array_equal((a * b).coefficients, P.polymul([1, 2], [-1, 0, 4]))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-3, 3, allow_nan=False), min_size=1, max_size=6))
def test_char_poly_matches_numpy_fromroots(roots):
    # prod(E_i - x) = (-1)^d prod(x - E_i)
    expected = (-1) ** len(roots) * P.polyfromroots(roots)
    got = characteristic_polynomial(roots).coefficients
    np.testing.assert_allclose(got, expected[: len(got)], atol=1e-12 * max(1, np.abs(expected).max()))
    for e in roots:
        assert abs(characteristic_polynomial(roots)(e)) <= 1e-10


@pytest.mark.parametrize("d", [1, 2, 3, 5])
def test_matrix_char_poly_agrees_with_eigenvalues(rng, d):
    H = random_hermitian(rng, d)
    from_matrix = matrix_characteristic_polynomial(H).coefficients
    from_eigs = characteristic_polynomial(np.linalg.eigvalsh(H)).coefficients
    np.testing.assert_allclose(from_matrix, from_eigs, atol=1e-11)


def test_matrix_char_poly_of_diagonal():
    f = matrix_characteristic_polynomial(np.diag([1.0, 2.0]))
    assert f.coefficients.tolist() == [2.0, -3.0, 1.0]
