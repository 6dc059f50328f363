"""Dense real polynomials in ascending-coefficient form."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Polynomial", "characteristic_polynomial", "matrix_characteristic_polynomial"]


@dataclass(frozen=True, eq=False)
class Polynomial:
    """``p(x) = sum_k coefficients[k] * x**k``.

    Trailing zero coefficients are trimmed, so the leading coefficient is
    nonzero unless the polynomial is identically zero (``coefficients == [0]``).
    """

    coefficients: np.ndarray

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float, ndmin=1)
        nz = np.flatnonzero(c)
        c = c[: nz[-1] + 1] if nz.size else np.zeros(1)
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @property
    def degree(self):
        return len(self.coefficients) - 1

    def __call__(self, x):
        # Horner, highest degree first
        x = np.asarray(x, dtype=float)
        acc = np.zeros_like(x) + self.coefficients[-1]
        for c in self.coefficients[-2::-1]:
            acc = acc * x + c
        return acc if acc.ndim else float(acc)

    def deriv(self):
        c = self.coefficients
        if len(c) == 1:
            return Polynomial([0.0])
        return Polynomial(c[1:] * np.arange(1, len(c)))

    def __mul__(self, other):
        return Polynomial(np.convolve(self.coefficients, other.coefficients))

    def scale(self):
        """Largest absolute coefficient; used for relative tolerances."""
        return float(np.max(np.abs(self.coefficients)))

    def __repr__(self):
        return f"Polynomial({self.coefficients.tolist()!r})"


def characteristic_polynomial(eigs):
    """Expand ``prod_i (E_i - x)`` by repeated convolution.

    >>> characteristic_polynomial([1.0, 2.0]).coefficients.tolist()
    [2.0, -3.0, 1.0]
    """
    c = np.ones(1)
    for e in np.asarray(eigs, dtype=float).ravel():
        c = np.convolve(c, [e, -1.0])
    return Polynomial(c)


def matrix_characteristic_polynomial(H):
    """Coefficients of ``det(H - x)`` from the matrix entries, without eigenvalues.

    Uses the Faddeev-LeVerrier recursion, which is adequate for the small
    Hermitian matrices handled here (d <= 8 or so).
    """
    H = np.asarray(H, dtype=complex)
    d = H.shape[0]
    # det(x - H) = x^d + c_{d-1} x^{d-1} + ... + c_0
    c = np.zeros(d + 1, dtype=complex)
    c[d] = 1.0
    M = np.zeros_like(H)
    eye = np.eye(d)
    for k in range(1, d + 1):
        M = H @ M + c[d - k + 1] * eye
        c[d - k] = -np.trace(H @ M) / k
    # det(H - x) = (-1)^d det(x - H)
    return Polynomial(((-1) ** d) * c.real)
