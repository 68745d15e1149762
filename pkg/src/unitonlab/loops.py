"""Matrix-valued Laurent polynomials in the loop parameter lambda.

A loop is stored as a finite map ``exponent -> complex (N, N) array``.
Arithmetic is exact convolution of the coefficient series followed by
pruning of coefficients whose max-abs entry falls below a threshold.
"""

from __future__ import annotations

import json
from typing import Iterable, Mapping

import numpy as np

from .config import TOLERANCES


class Loop:
    """Finite Fourier series ``lam -> sum_j X_j lam**j``.

    Parameters
    ----------
    coeffs : mapping of int to array_like
        Coefficient matrices keyed by exponent.
    dim : int, optional
        Matrix size; required when ``coeffs`` is empty.
    prune : float, optional
        Coefficients with max-abs entry below this are dropped.
    """

    __slots__ = ("dim", "coeffs")

    def __init__(self, coeffs: Mapping[int, np.ndarray], dim: int | None = None,
                 prune: float = TOLERANCES.prune):
        kept = {}
        for j, c in coeffs.items():
            c = np.array(c, dtype=complex)
            if c.ndim != 2 or c.shape[0] != c.shape[1]:
                raise ValueError("coefficients must be square matrices")
            if dim is None:
                dim = c.shape[0]
            elif c.shape[0] != dim:
                raise ValueError("coefficient size does not match dim")
            if c.size and np.abs(c).max() > prune:
                c.setflags(write=False)
                kept[int(j)] = c
        if dim is None:
            raise ValueError("dim is required for an empty loop")
        self.dim = int(dim)
        self.coeffs = dict(sorted(kept.items()))

    # construction helpers
    @classmethod
    def identity(cls, dim: int) -> "Loop":
        return cls({0: np.eye(dim)})

    @classmethod
    def constant(cls, x: np.ndarray) -> "Loop":
        x = np.asarray(x)
        return cls({0: x}, dim=x.shape[0])

    @classmethod
    def zero(cls, dim: int) -> "Loop":
        return cls({}, dim=dim)

    # structure
    @property
    def lo(self) -> int | None:
        return min(self.coeffs) if self.coeffs else None

    @property
    def hi(self) -> int | None:
        return max(self.coeffs) if self.coeffs else None

    @property
    def support(self) -> list[int]:
        return list(self.coeffs)

    def coefficient(self, j: int) -> np.ndarray:
        c = self.coeffs.get(j)
        return np.zeros((self.dim, self.dim), complex) if c is None else c

    def norm(self) -> float:
        """Max-abs entry over all coefficients."""
        return max((float(np.abs(c).max()) for c in self.coeffs.values()), default=0.0)

    def __repr__(self) -> str:
        return f"Loop(dim={self.dim}, support={self.support})"

    # evaluation and arithmetic
    def __call__(self, lam: complex) -> np.ndarray:
        return evaluate(self, lam)

    def __matmul__(self, other: "Loop") -> "Loop":
        return multiply(self, other)

    def __add__(self, other: "Loop") -> "Loop":
        _check_dims(self, other)
        out = dict(self.coeffs)
        for j, c in other.coeffs.items():
            out[j] = out[j] + c if j in out else c
        return Loop(out, dim=self.dim)

    def __neg__(self) -> "Loop":
        return Loop({j: -c for j, c in self.coeffs.items()}, dim=self.dim)

    def __sub__(self, other: "Loop") -> "Loop":
        return self + (-other)

    def scale(self, s: complex) -> "Loop":
        return Loop({j: s * c for j, c in self.coeffs.items()}, dim=self.dim)

    def left(self, a: np.ndarray) -> "Loop":
        """Constant matrix times the loop."""
        return Loop({j: a @ c for j, c in self.coeffs.items()}, dim=self.dim)

    def right(self, a: np.ndarray) -> "Loop":
        """The loop times a constant matrix."""
        return Loop({j: c @ a for j, c in self.coeffs.items()}, dim=self.dim)

    def conjugate_by(self, a: np.ndarray, a_inv: np.ndarray | None = None) -> "Loop":
        """Coefficientwise ``a X_j a^{-1}``."""
        a_inv = np.linalg.inv(a) if a_inv is None else a_inv
        return Loop({j: a @ c @ a_inv for j, c in self.coeffs.items()}, dim=self.dim)

    def transpose(self) -> "Loop":
        return Loop({j: c.T for j, c in self.coeffs.items()}, dim=self.dim)

    def tau(self) -> "Loop":
        """Reflected conjugate ``lam -> conj(x(1/conj(lam)))``.

        On the unit circle this is the entrywise complex conjugate.
        """
        return Loop({-j: c.conj() for j, c in self.coeffs.items()}, dim=self.dim)

    def star(self) -> "Loop":
        """Pointwise conjugate transpose on the unit circle."""
        return Loop({-j: c.conj().T for j, c in self.coeffs.items()}, dim=self.dim)

    def substitute_sign(self) -> "Loop":
        """The loop ``lam -> x(-lam)``."""
        return Loop({j: (-1) ** (j % 2) * c for j, c in self.coeffs.items()}, dim=self.dim)

    def truncate(self, lo: int, hi: int) -> "Loop":
        return Loop({j: c for j, c in self.coeffs.items() if lo <= j <= hi}, dim=self.dim)

    def pruned(self, tol: float) -> "Loop":
        return Loop(self.coeffs, dim=self.dim, prune=tol)

    # serialization
    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "coeffs": [
                {"exp": j, "re": c.real.tolist(), "im": c.imag.tolist()}
                for j, c in self.coeffs.items()
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Loop":
        coeffs = {}
        for term in data["coeffs"]:
            c = np.asarray(term["re"], float) + 1j * np.asarray(term["im"], float)
            j = int(term["exp"])
            coeffs[j] = coeffs[j] + c if j in coeffs else c
        return cls(coeffs, dim=int(data["dim"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Loop":
        return cls.from_dict(json.loads(text))


def _check_dims(a: Loop, b: Loop) -> None:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")


def multiply(a: Loop, b: Loop) -> Loop:
    """Convolution product, ``(a b)(lam) = a(lam) b(lam)``."""
    _check_dims(a, b)
    out: dict[int, np.ndarray] = {}
    for i, x in a.coeffs.items():
        for j, y in b.coeffs.items():
            p = x @ y
            k = i + j
            out[k] = out[k] + p if k in out else p
    return Loop(out, dim=a.dim)


def product(loops: Iterable[Loop]) -> Loop:
    loops = list(loops)
    out = loops[0]
    for x in loops[1:]:
        out = multiply(out, x)
    return out


def evaluate(x: Loop, lam: complex) -> np.ndarray:
    """Evaluate ``sum_j X_j lam**j`` by Horner's scheme.

    Raises
    ------
    ValueError
        If ``lam == 0`` and the loop has negative powers.
    """
    if not x.coeffs:
        return np.zeros((x.dim, x.dim), complex)
    lo, hi = x.lo, x.hi
    if lam == 0:
        if lo < 0:
            raise ValueError("cannot evaluate a loop with negative powers at lam = 0")
        return np.array(x.coefficient(0))
    acc = np.zeros((x.dim, x.dim), complex)
    for j in range(hi, lo - 1, -1):
        acc = acc * lam + x.coefficient(j)
    return acc * complex(lam) ** lo


def unit_circle(n: int = 32) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(n) / n)


def is_twisted(x: Loop, sigma: np.ndarray, tol: float = TOLERANCES.twist) -> tuple[bool, float]:
    """Check ``D X_j D^{-1} = (-1)^j X_j`` for every coefficient."""
    d_inv = np.linalg.inv(sigma)
    res = 0.0
    for j, c in x.coeffs.items():
        r = sigma @ c @ d_inv - (-1) ** (j % 2) * c
        res = max(res, float(np.abs(r).max()))
    return res <= tol, res


def is_real_form(x: Loop, form: str = "noncompact", samples: int = 32,
                 tol: float = TOLERANCES.reality) -> tuple[bool, float]:
    """Check the real-form condition at ``samples`` points of the unit circle.

    ``"noncompact"`` asks for real entries and ``X^T J X = J`` with
    ``J = diag(-1, 1, ..., 1)``. ``"compact"`` asks that the dual-coordinate
    matrix ``T X T^{-1}`` is real orthogonal.
    """
    from .liealg import dual_conjugator, indefinite_metric

    n = x.dim
    eye = np.eye(n)
    J = indefinite_metric(n)
    T = dual_conjugator(n)
    T_inv = np.linalg.inv(T)
    res = 0.0
    for lam in unit_circle(samples):
        X = evaluate(x, lam)
        if form == "noncompact":
            r = max(np.abs(X.imag).max(), np.abs(X.T @ J @ X - J).max())
        elif form == "compact":
            Y = T @ X @ T_inv
            r = max(np.abs(Y.imag).max(), np.abs(Y.T @ Y - eye).max())
        else:
            raise ValueError(f"unknown real form {form!r}")
        res = max(res, float(r))
    return res <= tol, res


def inverse_orthogonal(x: Loop, metric: np.ndarray) -> Loop:
    """Inverse of a metric-orthogonal loop, ``x^{-1} = M^{-1} x^T M``."""
    m_inv = np.linalg.inv(metric)
    return Loop({j: m_inv @ c.T @ metric for j, c in x.coeffs.items()}, dim=x.dim)


def inverse_unipotent(x: Loop, max_terms: int = 64) -> Loop:
    """Inverse of ``I + (strictly negative powers)`` by a terminating Neumann series.

    Raises
    ------
    ValueError
        If ``x`` is not of that form or the series does not terminate.
    """
    if x.hi is not None and x.hi > 0:
        raise ValueError("loop has positive powers")
    eye = np.eye(x.dim)
    if np.abs(x.coefficient(0) - eye).max() > 1e-12:
        raise ValueError("constant term is not the identity")
    n = x - Loop.identity(x.dim)
    out = Loop.identity(x.dim)
    term = Loop.identity(x.dim)
    for k in range(1, max_terms + 1):
        term = -multiply(term, n)
        if not term.coeffs:
            return out
        out = out + term
    raise ValueError("Neumann series did not terminate; algebra is not nilpotent")


def inverse_pointwise(x: Loop, lam: complex) -> np.ndarray:
    """Numerical inverse of ``x(lam)`` (diagnostics only)."""
    return np.linalg.inv(evaluate(x, lam))


def _loop_inverse(x: Loop, metric: np.ndarray | None) -> Loop:
    if metric is not None:
        inv = inverse_orthogonal(x, metric)
        check = multiply(x, inv) - Loop.identity(x.dim)
        if check.norm() < 1e-6 * max(1.0, x.norm() ** 2):
            return inv
    try:
        return inverse_unipotent(x)
    except ValueError:
        pass
    raise ValueError("loop inverse is not available by an algebraic route")


def lie_basis(metric: np.ndarray) -> np.ndarray:
    """Basis ``E_ab - M^{-1} E_ba M`` (a < b) of the Lie algebra preserving ``metric``."""
    n = metric.shape[0]
    m_inv = np.linalg.inv(metric)
    out = []
    for a in range(n):
        for b in range(a + 1, n):
            e = np.zeros((n, n))
            e[a, b] = 1.0
            out.append(e - m_inv @ e.T @ metric)
    return np.array(out)


def adjoint_action(x: Loop, x_inv: Loop, basis: np.ndarray) -> dict[int, np.ndarray]:
    """Fourier coefficients of ``Y -> x Y x^{-1}`` applied to each basis element."""
    out: dict[int, np.ndarray] = {}
    for i, a in x.coeffs.items():
        for j, b in x_inv.coeffs.items():
            term = np.einsum("ab,nbc,cd->nad", a, basis, b)
            k = i + j
            out[k] = out[k] + term if k in out else term
    return out


def adjoint_degree(x: Loop, metric: np.ndarray | None = None, x_inv: Loop | None = None,
                   tol: float = TOLERANCES.adjoint_support) -> int:
    """Smallest ``k`` with ``Ad(x)`` supported in ``[-k, k]``.

    Parameters
    ----------
    x : Loop
        An invertible loop.
    metric : ndarray, optional
        Invariant bilinear form of the group; defaults to
        ``diag(-1, 1, ..., 1)``. Used both for the Lie basis and for the
        transpose inverse of orthogonal loops.
    x_inv : Loop, optional
        Inverse loop when it is known.
    tol : float
        Relative threshold for calling a coefficient nonzero.

    Raises
    ------
    ValueError
        If no algebraic inverse is available.
    """
    from .liealg import indefinite_metric

    if metric is None:
        metric = indefinite_metric(x.dim)
    if x_inv is None:
        x_inv = _loop_inverse(x, metric)
    coeffs = adjoint_action(x, x_inv, lie_basis(metric))
    scale = max((np.abs(c).max() for c in coeffs.values()), default=0.0)
    deg = 0
    for k, c in coeffs.items():
        if np.abs(c).max() > tol * max(scale, 1.0):
            deg = max(deg, abs(k))
    return deg
