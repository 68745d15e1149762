"""Exact Picard integration of nilpotent normalized potentials.

For ``eta = lam^{-1} A(z) dz`` the normalized frame is
``F_-(z, lam) = sum_k lam^{-k} P_k(z)`` with ``P_0 = I`` and
``P_k(z) = int_{z0}^z P_{k-1} A``. Nilpotency makes ``P_k`` vanish
identically after finitely many steps.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import exact as ex
from .loops import Loop, unit_circle
from .potentials import NormalizedPotential


class PicardError(RuntimeError):
    pass


@dataclass
class MeromorphicFrame:
    """``F_-(z, lam) = sum_k lam^{-k} P_k(z)`` with matrix polynomials ``P_k``.

    ``terms[k]`` has shape ``(deg + 1, N, N)``; entries are exact objects
    or complex floats.
    """

    terms: list
    base_point: complex = 0.0
    steps_used: int = 0
    residual: float = 0.0
    _numeric: list | None = field(default=None, init=False, repr=False, compare=False)

    @property
    def size(self) -> int:
        return self.terms[0].shape[1]

    @property
    def lam_degree(self) -> int:
        return len(self.terms) - 1

    @property
    def z_degree(self) -> int:
        return max(t.shape[0] for t in self.terms) - 1

    def numeric_terms(self) -> list:
        if self._numeric is None:
            self._numeric = [ex.to_complex(t) if t.dtype == object else t for t in self.terms]
        return self._numeric

    def loop_at(self, z) -> Loop:
        return Loop({-k: ex.poly_eval(t, z) for k, t in enumerate(self.numeric_terms())},
                    dim=self.size)

    def dz_loop_at(self, z) -> Loop:
        """``dF_-/dz`` at ``z`` from exact polynomial derivatives."""
        return Loop({-k: ex.poly_eval(ex.poly_derivative(t), z)
                     for k, t in enumerate(self.numeric_terms())}, dim=self.size)

    def z_series(self) -> dict[int, Loop]:
        """``{z_exp: loop coefficient}``."""
        terms = self.numeric_terms()
        out = {}
        for d in range(self.z_degree + 1):
            coeffs = {-k: t[d] for k, t in enumerate(terms) if d < t.shape[0]}
            out[d] = Loop(coeffs, dim=self.size)
        return out

    def to_dict(self) -> dict:
        return {
            "z_degree": self.z_degree,
            "base_point": [complex(self.base_point).real, complex(self.base_point).imag],
            "steps_used": self.steps_used,
            "terms": [{"z_exp": d, "loop": loop.to_dict()} for d, loop in self.z_series().items()],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MeromorphicFrame":
        series = {int(t["z_exp"]): Loop.from_dict(t["loop"]) for t in data["terms"]}
        size = next(iter(series.values())).dim
        depth = max((-min(l.coeffs, default=0) for l in series.values()), default=0)
        zdeg = max(series)
        terms = [np.zeros((zdeg + 1, size, size), complex) for _ in range(depth + 1)]
        for d, loop in series.items():
            for j, c in loop.coeffs.items():
                terms[-j][d] = c
        bp = data.get("base_point", [0.0, 0.0])
        return cls([ex.poly_trim(t) for t in terms], complex(bp[0], bp[1]),
                   int(data.get("steps_used", depth)))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def picard_integrate(eta: NormalizedPotential, z0=0, max_steps: int = 64,
                     exact: bool = True) -> MeromorphicFrame:
    """Integrate ``dF_- = F_- eta`` with ``F_-(z0) = I`` by iterated antiderivatives.

    Raises
    ------
    PicardError
        If the iteration has not terminated after ``max_steps`` steps.
    """
    A = eta.exact() if exact else eta.numeric()
    n = eta.size
    eye = ex.exact_eye(n)[None] if exact else np.eye(n, dtype=complex)[None]
    terms = [eye]
    P = eye
    for k in range(1, max_steps + 2):
        P = ex.poly_trim(ex.poly_integrate(ex.poly_mul(P, A), z0))
        if _vanishes(P, exact):
            frame = MeromorphicFrame(terms, z0, k - 1)
            frame.residual = maurer_cartan_residual(frame, eta)
            return frame
        if k > max_steps:
            break
        terms.append(P)
    raise PicardError(f"Picard iteration did not terminate within {max_steps} steps")


def _vanishes(P: np.ndarray, exact: bool) -> bool:
    if exact:
        return ex.is_zero(P)
    return not np.any(np.abs(P) > 1e-13)


def maurer_cartan_residual(frame: MeromorphicFrame, eta: NormalizedPotential,
                           samples=None) -> float:
    """Defect of ``dF_- = F_- eta``.

    With exact data this is the max coefficient of ``P_k' - P_{k-1} A``
    over all ``k`` (including the term beyond the last one) and is exactly
    zero for a correct frame. Otherwise ``|dF - F A / lam|`` is maximised
    over sample points ``z`` and ``lam`` on the unit circle.
    """
    exact = all(t.dtype == object for t in frame.terms) and samples is None
    if exact:
        A = eta.exact()
        worst = 0.0
        terms = list(frame.terms) + [ex.exact_zeros(frame.terms[0].shape)]
        for k in range(1, len(terms)):
            lhs = ex.poly_derivative(terms[k])
            rhs = ex.poly_mul(terms[k - 1], A)
            diff = _poly_sub(rhs, lhs)
            if not ex.is_zero(diff):
                worst = max(worst, float(np.abs(ex.to_complex(diff)).max()))
        d0 = ex.poly_derivative(terms[0])
        if not ex.is_zero(d0):
            worst = max(worst, float(np.abs(ex.to_complex(d0)).max()))
        return worst
    zs = samples if samples is not None else [0.0, 0.3 + 0.1j, -0.5 + 0.7j, 0.9 - 0.4j]
    worst = 0.0
    for z in zs:
        F = frame.loop_at(z)
        dF = frame.dz_loop_at(z)
        Az = eta.A(z)
        for lam in unit_circle(8):
            r = dF(lam) - F(lam) @ Az / lam
            worst = max(worst, float(np.abs(r).max()))
    return worst


def _poly_sub(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = max(a.shape[0], b.shape[0])
    out = ex.exact_zeros((n,) + a.shape[1:])
    out[: a.shape[0]] = out[: a.shape[0]] + a
    out[: b.shape[0]] = out[: b.shape[0]] - b
    return out


def frame_block_parity_residual(frame: MeromorphicFrame) -> float:
    """Odd powers of ``lam`` block off-diagonal, even powers block diagonal (4 + n split)."""
    worst = 0.0
    for k, t in enumerate(frame.numeric_terms()):
        if k % 2:
            worst = max(worst, float(np.abs(t[:, :4, :4]).max()), float(np.abs(t[:, 4:, 4:]).max()))
        else:
            worst = max(worst, float(np.abs(t[:, :4, 4:]).max()), float(np.abs(t[:, 4:, :4]).max()))
    return worst
