"""The Lie-theoretic setting G = SO+(1, n+3) with the involution A -> D A D^{-1}.

Matrices are (n+4) x (n+4). The compact dual is realised by conjugation
with ``T = diag(i, 1, ..., 1)``, which turns ``X^T J X = J`` into
``Y^T Y = I``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .loops import Loop, lie_basis


def indefinite_metric(size: int) -> np.ndarray:
    """``J = diag(-1, 1, ..., 1)``."""
    J = np.eye(size)
    J[0, 0] = -1.0
    return J


def dual_conjugator(size: int) -> np.ndarray:
    """``T = diag(i, 1, ..., 1)``."""
    T = np.eye(size, dtype=complex)
    T[0, 0] = 1j
    return T


def sigma_conjugator(n: int) -> np.ndarray:
    """``D = diag(-I_4, I_n)``."""
    return np.diag([-1.0] * 4 + [1.0] * n)


def parse_signature(text: str) -> int:
    """Parse ``"1,n+3"`` (e.g. ``"1,7"``) and return ``n``."""
    p, q = (int(s) for s in text.split(","))
    if p != 1 or q < 4:
        raise ValueError("signature must be 1,q with q >= 4")
    return q - 3


@dataclass(frozen=True)
class LieSetting:
    """Context object for SO+(1, n+3) / SO+(1,3) x SO(n).

    Parameters
    ----------
    n : int
        Codimension parameter; matrices have size ``n + 4``.
    """

    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")

    @property
    def size(self) -> int:
        return self.n + 4

    @cached_property
    def metric(self) -> np.ndarray:
        return indefinite_metric(self.size)

    @cached_property
    def D(self) -> np.ndarray:
        return sigma_conjugator(self.n)

    @cached_property
    def T(self) -> np.ndarray:
        return dual_conjugator(self.size)

    @cached_property
    def T_inv(self) -> np.ndarray:
        return np.linalg.inv(self.T)

    @cached_property
    def basis(self) -> np.ndarray:
        """Basis of so(J) ordered lexicographically by (a, b), a < b."""
        return lie_basis(self.metric)

    @cached_property
    def k_basis(self) -> np.ndarray:
        return np.array([b for b in self.basis if np.abs(self.D @ b @ self.D - b).max() == 0])

    @cached_property
    def p_basis(self) -> np.ndarray:
        return np.array([b for b in self.basis if np.abs(self.D @ b @ self.D + b).max() == 0])

    # involutions
    def sigma(self, x: np.ndarray) -> np.ndarray:
        return self.D @ x @ self.D

    def tau(self, x: np.ndarray) -> np.ndarray:
        """Conjugation fixing the real form so(1, n+3)."""
        return np.conj(x)

    def theta(self, x: np.ndarray) -> np.ndarray:
        """Conjugation fixing the compact dual ``T^{-1} so(n+4) T``."""
        return self.T_inv @ np.conj(self.T @ x @ self.T_inv) @ self.T

    # coordinates
    def to_compact_dual(self, x: np.ndarray) -> np.ndarray:
        return self.T @ x @ self.T_inv

    def from_compact_dual(self, y: np.ndarray) -> np.ndarray:
        return self.T_inv @ y @ self.T

    def loop_to_dual(self, x: Loop) -> Loop:
        return x.conjugate_by(self.T, self.T_inv)

    def loop_from_dual(self, y: Loop) -> Loop:
        return y.conjugate_by(self.T_inv, self.T)

    # membership
    def gC_residual(self, x: np.ndarray) -> float:
        """Residual of ``X^T J + J X = 0``."""
        J = self.metric
        return float(np.abs(x.T @ J + J @ x).max())

    def g_residual(self, x: np.ndarray) -> float:
        return max(self.gC_residual(x), float(np.abs(np.imag(x)).max()))

    def group_residual(self, x: np.ndarray) -> float:
        """Residual of ``X^T J X = J`` (complex group)."""
        J = self.metric
        return float(np.abs(x.T @ J @ x - J).max())

    def project_k_p(self, x: np.ndarray, tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
        """Split ``x = k + p`` into the +1 and -1 eigenparts of the involution.

        Raises
        ------
        ValueError
            If ``x`` is not in the complexified Lie algebra.
        """
        x = np.asarray(x, complex)
        if self.gC_residual(x) > tol * max(1.0, np.abs(x).max()):
            raise ValueError("element is not in the complexified Lie algebra")
        s = self.sigma(x)
        return 0.5 * (x + s), 0.5 * (x - s)

    def in_k_residual(self, x: np.ndarray) -> float:
        return float(np.abs(x - self.sigma(x)).max()) / 2

    def in_p_residual(self, x: np.ndarray) -> float:
        return float(np.abs(x + self.sigma(x)).max()) / 2

    def alpha_lambda(self, alpha_k: np.ndarray, alpha_p10: np.ndarray,
                     alpha_p01: np.ndarray, tol: float = 1e-10) -> Loop:
        """Loop ``lam^{-1} a_p' + a_k + lam a_p''`` of a single form component.

        Raises
        ------
        ValueError
            If an argument lies in the wrong eigenspace.
        """
        scale = max(1.0, *(float(np.abs(a).max()) for a in (alpha_k, alpha_p10, alpha_p01)))
        if self.in_k_residual(alpha_k) > tol * scale:
            raise ValueError("alpha_k is not in k")
        if max(self.in_p_residual(alpha_p10), self.in_p_residual(alpha_p01)) > tol * scale:
            raise ValueError("p-components are not in p")
        return Loop({-1: alpha_p10, 0: alpha_k, 1: alpha_p01}, dim=self.size)


def setting_for_size(size: int) -> LieSetting:
    return LieSetting(size - 4)
