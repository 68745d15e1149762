"""Gaussian-rational matrices and matrix polynomials for exact computations.

Entries are sympy ``QQ_I`` elements held in numpy object arrays so that
``@``, ``+`` and scalar division work unchanged.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np
from sympy import QQ, QQ_I


def gauss(value) -> object:
    """Exact Gaussian rational equal to a Python/numpy number (floats convert exactly)."""
    if isinstance(value, type(QQ_I.zero)):
        return value
    c = complex(value)
    re, im = Fraction(c.real), Fraction(c.imag)
    return QQ_I(QQ(re.numerator, re.denominator), QQ(im.numerator, im.denominator))


def to_exact(a) -> np.ndarray:
    a = np.asarray(a)
    out = np.empty(a.shape, dtype=object)
    for idx in np.ndindex(a.shape):
        out[idx] = gauss(a[idx])
    return out


def to_complex(a: np.ndarray) -> np.ndarray:
    out = np.empty(a.shape, dtype=complex)
    for idx in np.ndindex(a.shape):
        v = a[idx]
        out[idx] = complex(float(v.x), float(v.y)) if hasattr(v, "x") else complex(v)
    return out


def exact_zeros(shape) -> np.ndarray:
    out = np.empty(shape, dtype=object)
    out.fill(QQ_I.zero)
    return out


def exact_eye(n: int) -> np.ndarray:
    out = exact_zeros((n, n))
    for i in range(n):
        out[i, i] = QQ_I.one
    return out


def is_zero(a: np.ndarray) -> bool:
    return not any(bool(v) for v in np.asarray(a).ravel())


def poly_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Product of matrix polynomials stored as (deg+1, N, N) arrays (any dtype)."""
    n = a.shape[1]
    exact = a.dtype == object or b.dtype == object
    out = exact_zeros((a.shape[0] + b.shape[0] - 1, n, n)) if exact else \
        np.zeros((a.shape[0] + b.shape[0] - 1, n, n), complex)
    for i in range(a.shape[0]):
        for j in range(b.shape[0]):
            out[i + j] = out[i + j] + a[i] @ b[j]
    return out


def poly_trim(a: np.ndarray) -> np.ndarray:
    """Drop trailing zero coefficient matrices (keeps at least one)."""
    k = a.shape[0]
    while k > 1 and (is_zero(a[k - 1]) if a.dtype == object else not np.any(a[k - 1])):
        k -= 1
    return a[:k]


def poly_integrate(a: np.ndarray, z0) -> np.ndarray:
    """Antiderivative vanishing at ``z0`` (exact when ``a`` is exact)."""
    exact = a.dtype == object
    d, n = a.shape[0], a.shape[1]
    out = exact_zeros((d + 1, n, n)) if exact else np.zeros((d + 1, n, n), complex)
    for k in range(d):
        out[k + 1] = a[k] / (k + 1)
    out[0] = -poly_eval(out, z0)
    return out


def poly_derivative(a: np.ndarray) -> np.ndarray:
    if a.shape[0] == 1:
        return a * 0
    return np.array([a[k] * k for k in range(1, a.shape[0])])


def poly_eval(a: np.ndarray, z):
    """Horner evaluation of a matrix polynomial."""
    if a.dtype == object:
        z = gauss(z)
    acc = a[-1] * 1
    for k in range(a.shape[0] - 2, -1, -1):
        acc = acc * z + a[k]
    return acc
