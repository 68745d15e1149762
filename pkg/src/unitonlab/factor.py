"""Birkhoff and Iwasawa factorization of algebraic twisted loops.

Birkhoff: ``x = F_- F_+`` with ``F_- = I + O(lam^{-1})`` from a linear system
on the negative Fourier modes of ``x^{-1} F_-``.

Iwasawa (compact real form): in dual coordinates ``Y = T x T^{-1}`` is complex
orthogonal. A block-Toeplitz Cholesky (Bauer) iteration produces the
spectral factor ``Y^* Y = W^* W`` with ``W`` holomorphic in the disc. Then
``Q = Y W^{-1} = conj(Y) W^*`` is unitary and a constant symmetric
correction makes it real orthogonal.

Iwasawa (noncompact real form): ``x = F V_+`` with ``F`` real implies
``tau(x)^{-1} x = tau(V_+)^{-1} V_+``, whose Birkhoff factorization
recovers ``V_+`` up to a constant ``v0`` with ``conj(v0) v0 = I``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .config import TOLERANCES
from .liealg import dual_conjugator, indefinite_metric
from .loops import (Loop, _loop_inverse, evaluate, inverse_orthogonal, is_real_form,
                    is_twisted, multiply, unit_circle)


class FactorizationError(RuntimeError):
    pass


class CellViolation(FactorizationError):
    """The loop is outside the open cell where the requested factorization exists."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass
class BirkhoffResult:
    F_minus: Loop
    F_plus: Loop
    residual: float
    in_big_cell: bool
    consistency: float = 0.0
    depth: int = 0


@dataclass
class IwasawaResult:
    F_real: Loop
    F_plus: Loop
    residual: float
    reality_residual: float
    twist_residual: float
    gauge_note: str = ""
    iterations: int = 0
    extra: dict = field(default_factory=dict)


@dataclass
class SpectralFactor:
    W: Loop
    iterations: int
    converged: bool
    extrapolated: bool
    residual: float


def max_abs(a: np.ndarray) -> float:
    return float(np.abs(a).max()) if a.size else 0.0


def reconstruction_residual(x: Loop, a: Loop, b: Loop, samples: int = 32) -> float:
    """``max |a(lam) b(lam) - x(lam)|`` over unit-circle samples."""
    return max(max_abs(evaluate(a, lam) @ evaluate(b, lam) - evaluate(x, lam))
               for lam in unit_circle(samples))


# Birkhoff

def birkhoff(x: Loop, ansatz_depth: int | None = None, x_inv: Loop | None = None,
             metric: np.ndarray | None = None,
             tol: float = TOLERANCES.birkhoff_consistency) -> BirkhoffResult:
    """Birkhoff factorization ``x = F_- F_+`` with ``F_-(inf) = I``.

    Parameters
    ----------
    x : Loop
    ansatz_depth : int, optional
        Number ``K`` of unknown coefficients of ``F_-``; defaults to the
        lambda-span ``hi - lo`` of ``x`` (at least 1).
    x_inv : Loop, optional
        Inverse of ``x``; otherwise the metric transpose or a terminating
        Neumann series is used.
    metric : ndarray, optional
        Invariant form for the transpose inverse (default ``diag(-1, 1, ...)``).
    tol : float
        Relative consistency threshold of the linear system.

    Returns
    -------
    BirkhoffResult
        ``in_big_cell`` is false when the system is inconsistent or
        ``F_+(0)`` is singular; the factors are then least-squares output.
    """
    n = x.dim
    if not x.coeffs:
        raise FactorizationError("zero loop")
    if metric is None:
        metric = indefinite_metric(n)
    if x_inv is None:
        x_inv = _loop_inverse(x, metric)
    K = max(1, x.hi - x.lo) if ansatz_depth is None else int(ansatz_depth)
    if K < 1:
        raise ValueError("ansatz_depth must be positive")
    G = x_inv.coeffs
    g_lo = x_inv.lo
    # rows: exponents l = g_lo - K, ..., -1 of x^{-1} F_-
    ls = list(range(g_lo - K, 0))
    if not ls:
        F_minus = Loop.identity(n)
        return BirkhoffResult(F_minus, x, 0.0, True, 0.0, K)
    M = np.zeros((len(ls) * n, K * n), complex)
    rhs = np.zeros((len(ls) * n, n), complex)
    for r, l in enumerate(ls):
        if l in G:
            rhs[r * n:(r + 1) * n] = -G[l]
        for k in range(1, K + 1):
            blk = G.get(l + k)
            if blk is not None:
                M[r * n:(r + 1) * n, (k - 1) * n:k * n] = blk
    sol, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    scale = max(1.0, max_abs(rhs), max_abs(M))
    consistency = max_abs(M @ sol - rhs) / scale
    coeffs = {0: np.eye(n)}
    for k in range(1, K + 1):
        coeffs[-k] = sol[(k - 1) * n:k * n]
    F_minus = Loop(coeffs, dim=n)
    F_plus = _plus_factor(x, F_minus)
    ok = consistency <= tol
    if ok:
        c0 = F_plus.coefficient(0)
        ok = bool(np.linalg.cond(c0) < 1e12)
    res = reconstruction_residual(x, F_minus, F_plus)
    return BirkhoffResult(F_minus, F_plus, res, ok, consistency, K)


def _plus_factor(x: Loop, F_minus: Loop) -> Loop:
    """Solve ``x = F_- F_+`` for ``F_+`` with nonnegative powers by back substitution."""
    hi = x.hi
    if hi < 0:
        return Loop.zero(x.dim)
    fm = {-j: c for j, c in F_minus.coeffs.items() if j < 0}
    C: dict[int, np.ndarray] = {}
    for j in range(hi, -1, -1):
        acc = np.array(x.coefficient(j))
        for k, f in fm.items():
            if j + k in C:
                acc = acc - f @ C[j + k]
        C[j] = acc
    return Loop(C, dim=x.dim)


# spectral factorization

def _neville(xs, ys, x0: float = 0.0):
    p = [np.array(y) for y in ys]
    n = len(xs)
    for j in range(1, n):
        for i in range(n - j):
            p[i] = ((x0 - xs[i + j]) * p[i] + (xs[i] - x0) * p[i + 1]) / (xs[i] - xs[i + j])
    return p[0]


def spectral_factor(P: Loop, tol: float = TOLERANCES.bauer_delta,
                    max_iter: int = TOLERANCES.bauer_max_iter,
                    fixed_iterations: int | None = None,
                    extrapolation_points: int = 7) -> SpectralFactor:
    """Factor a positive loop ``P = W^* W`` with ``W`` in the plus class.

    Bauer's method: the growing block-Toeplitz sections ``T[i, j] = P_{j-i}``
    are Cholesky-factored row by row (banded, so each row costs
    ``O(d)`` block solves); the last block row converges to the
    coefficients of ``W^*``. When successive rows do not settle below
    ``tol`` within ``max_iter`` rows, Neville extrapolation in ``1/r``
    (``r`` the section size) over ``r = max_iter, max_iter/2, ...`` is
    applied.

    ``W(0)`` is upper triangular with positive diagonal.
    """
    n = P.dim
    d = max(P.hi, -P.lo) if P.coeffs else 0
    zero = np.zeros((n, n), complex)

    def block(s):
        return P.coeffs.get(s, zero)

    rows: list = []
    hist: dict[int, list] = {}
    converged = False
    k_end = max_iter if fixed_iterations is None else fixed_iterations
    last = None
    k = -1
    for k in range(k_end):
        row = {}
        lo = max(0, k - d)
        for j in range(lo, k):
            s = block(j - k).astype(complex)
            for i in range(max(0, j - d, lo), j):
                s = s - row[i] @ rows[j][i].conj().T
            Ljj = rows[j][j]
            row[j] = sla.solve_triangular(Ljj.conj(), s.T, lower=True, check_finite=False).T
        s = block(0).astype(complex)
        for j in range(lo, k):
            s = s - row[j] @ row[j].conj().T
        s = 0.5 * (s + s.conj().T)
        try:
            row[k] = np.linalg.cholesky(s)
        except np.linalg.LinAlgError as err:
            raise FactorizationError("loop is not positive definite on the circle") from err
        rows.append(row)
        if k >= d:
            A = [row[k - t] for t in range(d + 1)]
            hist[k] = A
            if fixed_iterations is None and last is not None:
                delta = max(max_abs(a - b) for a, b in zip(A, last))
                if delta < tol:
                    converged = True
                    break
            last = A
        if k - d - 1 >= 0:
            rows[k - d - 1] = None
    if not hist:
        raise FactorizationError("too few iterations for the loop degree")
    iterations = k + 1
    extrapolated = False
    A = hist[max(hist)]
    if not converged and fixed_iterations is None:
        ks = []
        kk = max(hist)
        while kk >= max(d, 3) and len(ks) < extrapolation_points:
            ks.append(kk)
            kk //= 2
        if len(ks) >= 3:
            A = [_neville([1.0 / (k_ + 1) for k_ in ks], [hist[k_][t] for k_ in ks]) for t in range(d + 1)]
            extrapolated = True
    W = Loop({t: A[t].conj().T for t in range(d + 1)}, dim=n)
    recon = multiply(W.star(), W) - P
    res = recon.norm() / max(1.0, P.norm())
    return SpectralFactor(W, iterations, converged, extrapolated, res)


# Iwasawa

def iwasawa(x: Loop, form: str = "compact", tol: float = TOLERANCES.iwasawa_reconstruction,
            sigma: np.ndarray | None = None, fixed_iterations: int | None = None,
            prune_rel: float = 1e-12) -> IwasawaResult:
    """Iwasawa factorization ``x = F_real F_+``.

    Parameters
    ----------
    x : Loop
        Loop in the complexified group ``X^T J X = J``.
    form : {"compact", "noncompact"}
        Real form of ``F_real``: the compact dual (``T F T^{-1}`` real
        orthogonal) or SO+(1, n+3) itself.
    sigma : ndarray, optional
        Twisting conjugator; defaults to ``diag(-I_4, I_n)`` when the size
        allows it. Only used for the reported twist residual.
    fixed_iterations : int, optional
        Run the spectral factorization for exactly this many rows.

    Raises
    ------
    FactorizationError
        If the spectral factorization fails or the reconstruction residual
        exceeds ``tol``.
    CellViolation
        If ``x`` is outside the noncompact Iwasawa cell.
    """
    n = x.dim
    if sigma is None and n > 4:
        sigma = np.diag([-1.0] * 4 + [1.0] * (n - 4))
    if form == "compact":
        out = _iwasawa_compact(x, fixed_iterations, prune_rel)
    elif form == "noncompact":
        out = _iwasawa_noncompact(x, prune_rel)
    else:
        raise ValueError(f"unknown form {form!r}")
    out.residual = reconstruction_residual(x, out.F_real, out.F_plus)
    _, out.reality_residual = is_real_form(out.F_real, form, tol=np.inf)
    if sigma is not None:
        _, t1 = is_twisted(out.F_real, sigma, tol=np.inf)
        _, t2 = is_twisted(out.F_plus, sigma, tol=np.inf)
        out.twist_residual = max(t1, t2) / max(1.0, out.F_plus.norm())
    scale = max(1.0, x.norm())
    if out.residual > tol * scale:
        raise FactorizationError(f"Iwasawa reconstruction residual {out.residual:.3e} exceeds tolerance")
    return out


def _iwasawa_compact(x: Loop, fixed_iterations, prune_rel) -> IwasawaResult:
    n = x.dim
    T = dual_conjugator(n)
    Ti = np.linalg.inv(T)
    Y = x.conjugate_by(T, Ti)
    P = multiply(Y.star(), Y)
    P = P.pruned(1e-15 * max(1.0, P.norm()))
    sf = spectral_factor(P, fixed_iterations=fixed_iterations)
    W = sf.W
    Q = multiply(Y.tau(), W.star())
    Q = Q.pruned(prune_rel * max(1.0, Q.norm()))
    W0 = W.coefficient(0)
    M = np.linalg.inv(W0 @ W0.T)
    root = sla.sqrtm(M)
    root_inv = np.linalg.inv(root)
    Qp = Q.right(root_inv)
    F_real = Qp.conjugate_by(Ti, T)
    F_plus = W.left(root).conjugate_by(Ti, T)
    note = ("dual-coordinate spectral factor W(0) upper triangular with positive diagonal; "
            "F_+(0) = T^{-1} M^{1/2} W(0) T with M = (W(0) W(0)^T)^{-1}")
    return IwasawaResult(F_real, F_plus, 0.0, 0.0, 0.0, note, sf.iterations,
                         {"converged": sf.converged, "extrapolated": sf.extrapolated,
                          "spectral_residual": sf.residual})


def _iwasawa_noncompact(x: Loop, prune_rel) -> IwasawaResult:
    n = x.dim
    J = indefinite_metric(n)
    tx_inv = inverse_orthogonal(x.tau(), J)
    y = multiply(tx_inv, x)
    y = y.pruned(prune_rel * max(1.0, y.norm()))
    b = birkhoff(y, metric=J)
    if not b.in_big_cell:
        if b.consistency <= TOLERANCES.birkhoff_consistency:
            # solvable system, only F_+(0) is badly conditioned
            raise FactorizationError("tau(x)^{-1} x is too ill-conditioned to classify")
        raise CellViolation("tau(x)^{-1} x is off the big Birkhoff cell", b.consistency)
    c = b.F_plus.coefficient(0)
    try:
        v0 = sla.expm(0.5 * sla.logm(c))
    except (ValueError, np.linalg.LinAlgError) as err:
        raise CellViolation("no square root for the constant term", np.inf) from err
    v_res = max_abs(v0.conj() @ v0 - np.eye(n))
    # rounding in logm grows with cond(c); a wrong class gives an O(1) defect
    if not np.isfinite(v_res) or v_res > max(1e-6, 1e-12 * np.linalg.cond(c)):
        raise CellViolation("constant term has no admissible real splitting", v_res)
    V_plus = b.F_plus.left(v0.conj())
    F_real = multiply(x, inverse_orthogonal(V_plus, J))
    F_real = F_real.pruned(prune_rel * max(1.0, F_real.norm()))
    _, real_res = is_real_form(F_real, "noncompact", tol=np.inf)
    if real_res > 1e-6 * max(1.0, F_real.norm() ** 2):
        raise CellViolation("noncompact real factor is not real", real_res)
    # the other real solutions live in the non-orthochronous components
    f00 = float(evaluate(F_real, 1.0)[0, 0].real)
    if f00 < 1.0 - 1e-8:
        raise CellViolation("noncompact real factor leaves the identity component", f00)
    note = "F_+(0) = conj(v0) c with v0 = exp(log(c) / 2), c = F_+(0) of tau(x)^{-1} x"
    return IwasawaResult(F_real, V_plus, 0.0, 0.0, 0.0, note, 0, {"cell_residual": v_res})


# duality

def duality_check(x: Loop, tol: float = 1e-8) -> dict:
    """Compare the Birkhoff minus factor of ``x`` with those of its Iwasawa real factors.

    Returns a report with the three factors' pairwise distances (relative
    to ``max(1, |F_-|)``); the noncompact entry is ``None`` with a reason when ``x`` is outside the
    noncompact cell.
    """
    metric = indefinite_metric(x.dim)
    direct = birkhoff(x)
    scale = max(1.0, direct.F_minus.norm())
    report = {"in_big_cell": direct.in_big_cell}

    def minus_of(real_factor):
        inv = inverse_orthogonal(real_factor, metric)
        return birkhoff(real_factor, ansatz_depth=direct.depth, x_inv=inv).F_minus

    comp = iwasawa(x, "compact")
    Fc = minus_of(comp.F_real)
    report["compact_vs_direct"] = (Fc - direct.F_minus).norm() / scale
    try:
        nc = iwasawa(x, "noncompact")
        Fn = minus_of(nc.F_real)
        report["noncompact_vs_direct"] = (Fn - direct.F_minus).norm() / scale
        report["noncompact_vs_compact"] = (Fn - Fc).norm() / scale
        report["noncompact"] = "ok"
    except FactorizationError as err:
        report["noncompact_vs_direct"] = None
        report["noncompact_vs_compact"] = None
        label = "cell violation" if isinstance(err, CellViolation) else "numerical failure"
        report["noncompact"] = f"{label}: {err}"
    vals = [v for k, v in report.items() if "_vs_" in k and v is not None]
    report["agree"] = bool(max(vals, default=0.0) <= tol)
    return report
