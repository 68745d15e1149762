"""Extended frames on z-grids, extended solutions, flatness and dressing.

A frame grid stores, for every grid point ``z``, the real factor
``F(z, lam)`` of the Iwasawa splitting of the meromorphic frame
``F_-(z, lam)``, re-gauged so that ``F(z0, lam) = I``. It also keeps an
evaluator for off-grid points, which the local flatness stencil uses.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .config import TOLERANCES, thread_count
from .dpw import MeromorphicFrame, picard_integrate
from .factor import FactorizationError, iwasawa
from .liealg import dual_conjugator, indefinite_metric, sigma_conjugator
from .loops import (Loop, adjoint_action, inverse_orthogonal, is_twisted, lie_basis,
                    multiply, unit_circle)
from .potentials import NormalizedPotential
from .roots import grading_element_for

DEFAULT_LAMBDAS = (1.0, np.exp(0.25j * np.pi), 1j, -1.0)


class GridError(ValueError):
    pass


def parse_axis(spec: str) -> np.ndarray:
    """``"lo:hi:count"`` to an evenly spaced axis."""
    try:
        lo, hi, count = spec.split(":")
        axis = np.linspace(float(lo), float(hi), int(count))
    except ValueError as err:
        raise GridError(f"bad axis spec {spec!r}, expected lo:hi:count") from err
    if axis.size < 1:
        raise GridError("empty axis")
    return axis


def parse_grid(spec: str) -> tuple[np.ndarray, np.ndarray]:
    """``"-1:1:21,-1:1:21"`` to ``(xs, ys)`` for real and imaginary parts."""
    parts = spec.split(",")
    if len(parts) != 2:
        raise GridError(f"bad grid spec {spec!r}, expected two axes")
    return parse_axis(parts[0]), parse_axis(parts[1])


def parse_lambdas(spec: str) -> list[complex]:
    """Comma separated complex literals (``1,i,-1,e^{i pi/4}`` style is not parsed)."""
    out = []
    for tok in spec.split(","):
        tok = tok.strip().replace("i", "j")
        if tok in ("j", "+j", "-j"):
            tok = tok.replace("j", "1j")
        out.append(complex(tok))
    return out


@dataclass(frozen=True)
class FrameOptions:
    """How frames are computed at each point.

    Parameters
    ----------
    form : {"compact", "noncompact"}
        Real form used for the per-point Iwasawa splitting.
    fixed_iterations : int or None
        Rows of the spectral factorization in the compact route. A fixed
        count makes the frame a smooth function of ``z``, which finite
        differences need.
    threads : int or None
        Worker cap; defaults to ``UNITONLAB_THREADS``.
    """

    form: str = "compact"
    fixed_iterations: int | None = 24
    threads: int | None = None


@dataclass(frozen=True)
class ExtendedFrameGrid:
    """Real frames ``F(z, lam)`` on a rectangular grid.

    ``frames[iy][ix]`` is ``None`` at singular points, where the Iwasawa
    splitting failed or the factor failed its reality/twist checks.
    """

    xs: np.ndarray
    ys: np.ndarray
    frames: tuple
    base_index: tuple
    evaluator: Callable[[complex], Loop] | None = None
    xi: np.ndarray | None = None
    form: str = "compact"
    reasons: dict = field(default_factory=dict)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.ys), len(self.xs)

    @property
    def grid(self) -> np.ndarray:
        return self.xs[None, :] + 1j * self.ys[:, None]

    @property
    def base_point(self) -> complex:
        iy, ix = self.base_index
        return complex(self.xs[ix], self.ys[iy])

    @property
    def spacing(self) -> tuple[float, float]:
        hx = float(self.xs[1] - self.xs[0]) if len(self.xs) > 1 else 0.0
        hy = float(self.ys[1] - self.ys[0]) if len(self.ys) > 1 else 0.0
        return hx, hy

    @property
    def singular(self) -> np.ndarray:
        return np.array([[f is None for f in row] for row in self.frames])

    @property
    def size(self) -> int:
        for row in self.frames:
            for f in row:
                if f is not None:
                    return f.dim
        raise GridError("no regular points")

    def frame(self, iy: int, ix: int) -> Loop | None:
        return self.frames[iy][ix]

    def points(self):
        for iy in range(len(self.ys)):
            for ix in range(len(self.xs)):
                yield iy, ix, complex(self.xs[ix], self.ys[iy])

    def with_frame(self, iy: int, ix: int, frame: Loop | None) -> "ExtendedFrameGrid":
        """Copy with one frame replaced (used for fault injection)."""
        rows = [list(r) for r in self.frames]
        rows[iy][ix] = frame
        return replace(self, frames=tuple(tuple(r) for r in rows), evaluator=None)


def _map(fn, items, threads: int | None):
    workers = thread_count() if threads is None else max(1, threads)
    if workers == 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def potential_grading_element(eta: NormalizedPotential) -> np.ndarray | None:
    """Grading element in group coordinates making ``eta`` homogeneous of degree one.

    Uses the potential's certificate when it is single-degree; otherwise it
    solves for the least-norm real element commuting with ``D``. Returns
    ``None`` when no such element exists or when ``ad xi`` has non-integral
    eigenvalues (no loop ``gamma_xi`` then exists).
    """
    n = eta.size
    vs = eta.value_space
    if vs is not None and tuple(vs.degrees) == (1,):
        return np.asarray(vs.xi)
    if eta.is_zero():
        return None
    T = dual_conjugator(n)
    T_inv = np.linalg.inv(T)
    mats = [T @ a @ T_inv for a in eta.numeric() if np.abs(a).max() > 0]
    D = sigma_conjugator(n - 4) if n > 4 else None
    try:
        xi_dual = grading_element_for(mats, involution=D)
    except ValueError:
        return None
    xi = T_inv @ xi_dual @ T
    w = np.linalg.eigvals(xi) / 1j
    diff = (w[:, None] - w[None, :]).real
    if np.abs(diff - np.rint(diff)).max() > 1e-6:
        return None
    return xi


def _real_frame(x: Loop, opts: FrameOptions, metric: np.ndarray, sigma) -> tuple[Loop | None, str]:
    try:
        res = iwasawa(x, opts.form, fixed_iterations=opts.fixed_iterations, prune_rel=0.0)
    except FactorizationError as err:
        return None, str(err)
    scale = max(1.0, res.F_real.norm() ** 2)
    if res.reality_residual > TOLERANCES.reality * scale:
        return None, f"reality residual {res.reality_residual:.3e}"
    if sigma is not None:
        _, tw = is_twisted(res.F_real, sigma, tol=np.inf)
        if tw > TOLERANCES.twist * scale:
            return None, f"twist residual {tw:.3e}"
    return res.F_real, ""


def _assemble(xs, ys, base_index, raw_eval, opts: FrameOptions, xi=None) -> ExtendedFrameGrid:
    xs = np.asarray(xs, float)
    ys = np.asarray(ys, float)
    iy0, ix0 = base_index
    z0 = complex(xs[ix0], ys[iy0])
    base, why = raw_eval(z0)
    if base is None:
        raise GridError(f"base point {z0} is singular: {why}")
    n = base.dim
    metric = indefinite_metric(n)
    base_inv = inverse_orthogonal(base, metric)

    def gauged(z: complex) -> tuple[Loop | None, str]:
        f, reason = raw_eval(z)
        if f is None:
            return None, reason
        return multiply(base_inv, f), ""

    pts = [(iy, ix, complex(xs[ix], ys[iy])) for iy in range(len(ys)) for ix in range(len(xs))]
    results = _map(lambda p: gauged(p[2]), pts, opts.threads)
    rows = [[None] * len(xs) for _ in ys]
    reasons = {}
    for (iy, ix, _), (f, reason) in zip(pts, results):
        rows[iy][ix] = f
        if f is None:
            reasons[(iy, ix)] = reason

    def evaluator(z: complex) -> Loop:
        f, reason = gauged(z)
        if f is None:
            raise FactorizationError(f"frame unavailable at {z}: {reason}")
        return f

    return ExtendedFrameGrid(xs, ys, tuple(tuple(r) for r in rows), (iy0, ix0), evaluator,
                             xi, opts.form, reasons)


def nearest_index(xs, ys, z: complex) -> tuple[int, int]:
    return int(np.argmin(np.abs(np.asarray(ys) - z.imag))), int(np.argmin(np.abs(np.asarray(xs) - z.real)))


def frame_grid(eta: NormalizedPotential, xs, ys, z0: complex | None = None,
               options: FrameOptions = FrameOptions(),
               frame: MeromorphicFrame | None = None) -> ExtendedFrameGrid:
    """Extended frames of the harmonic map generated by ``eta`` on the grid ``xs + i ys``.

    ``z0`` is snapped to the nearest grid point (default: the point nearest
    the origin). The meromorphic frame is integrated from ``z0`` so that
    ``F_-(z0) = I``; the real frames are re-gauged to ``F(z0) = I``.

    Raises
    ------
    GridError
        If the base point is singular.
    """
    xs = np.asarray(xs, float)
    ys = np.asarray(ys, float)
    base_index = nearest_index(xs, ys, 0j if z0 is None else complex(z0))
    z_base = complex(xs[base_index[1]], ys[base_index[0]])
    if frame is None:
        frame = picard_integrate(eta, z0=z_base)
    n = eta.size
    metric = indefinite_metric(n)
    sigma = sigma_conjugator(n - 4) if n > 4 else None

    def raw(z):
        return _real_frame(frame.loop_at(z), options, metric, sigma)

    return _assemble(xs, ys, base_index, raw, options, potential_grading_element(eta))


# flatness

def _curvature(F, hx: float, hy: float, metric: np.ndarray) -> np.ndarray:
    """Maurer-Cartan defect at the centre of a 3x3 stencil of matrices ``F[a][b]``.

    ``F[a][b]`` sits at ``(x + (b-1) hx, y + (a-1) hy)``.
    """
    def inv(m):
        return metric @ m.T @ metric

    def ax(a):
        return inv(F[a][1]) @ (F[a][2] - F[a][0]) / (2 * hx)

    def ay(b):
        return inv(F[1][b]) @ (F[2][b] - F[0][b]) / (2 * hy)

    a_x, a_y = ax(1), ay(1)
    dy_ax = (ax(2) - ax(0)) / (2 * hy)
    dx_ay = (ay(2) - ay(0)) / (2 * hx)
    return dx_ay - dy_ax + a_x @ a_y - a_y @ a_x


def _stencil_loops(fr: ExtendedFrameGrid, z: complex, hx: float, hy: float):
    return [[fr.evaluator(z + (b - 1) * hx + 1j * (a - 1) * hy) for b in range(3)] for a in range(3)]


def _defect(loops, hx, hy, lams, metric) -> np.ndarray:
    return np.array([np.abs(_curvature([[f(lam) for f in row] for row in loops], hx, hy, metric)).max()
                     for lam in lams])


@dataclass
class FlatnessReport:
    """Maximal flatness defect per ``lam`` sample and per grid point."""

    lambdas: list
    per_lambda: np.ndarray
    per_point: np.ndarray
    stencil: str
    step: float

    @property
    def max(self) -> float:
        return float(np.nanmax(self.per_lambda)) if self.per_lambda.size else 0.0


def flatness_residual(fr: ExtendedFrameGrid, lambda_samples=DEFAULT_LAMBDAS,
                      stencil: str = "grid", delta: float = 2e-3,
                      richardson: bool = True) -> FlatnessReport:
    """Maximum of ``d alpha + alpha ^ alpha`` with ``alpha = F^{-1} dF`` by central differences.

    ``stencil="grid"`` uses neighbouring grid frames at interior points
    (error ``O(h^2)``). ``stencil="local"`` re-evaluates frames on a
    ``3 x 3`` stencil of step ``delta`` around every regular grid point and,
    with ``richardson``, combines steps ``delta`` and ``delta/2`` to cancel
    the ``delta^2`` term.

    Raises
    ------
    GridError
        If the grid has fewer than three points per axis, or the local
        stencil is requested without an evaluator.
    """
    ny, nx = fr.shape
    lams = [complex(v) for v in lambda_samples]
    metric = indefinite_metric(fr.size)
    per_point = np.full((ny, nx, len(lams)), np.nan)
    if stencil == "grid":
        if nx < 3 or ny < 3:
            raise GridError("grid too coarse: need at least 3 points per axis")
        hx, hy = fr.spacing
        for iy in range(1, ny - 1):
            for ix in range(1, nx - 1):
                loops = [[fr.frames[iy + a - 1][ix + b - 1] for b in range(3)] for a in range(3)]
                if any(f is None for row in loops for f in row):
                    continue
                per_point[iy, ix] = _defect(loops, hx, hy, lams, metric)
        step = max(hx, hy)
    elif stencil == "local":
        if fr.evaluator is None:
            raise GridError("local stencil needs a frame evaluator")
        pts = [(iy, ix, z) for iy, ix, z in fr.points() if fr.frames[iy][ix] is not None]

        def one(p):
            z = p[2]
            d1 = _curvature_samples(fr, z, delta, lams, metric)
            if not richardson:
                return np.abs(d1).max(axis=(1, 2))
            d2 = _curvature_samples(fr, z, delta / 2, lams, metric)
            return np.abs((4 * d2 - d1) / 3).max(axis=(1, 2))

        for (iy, ix, _), vals in zip(pts, _map(one, pts, None)):
            per_point[iy, ix] = vals
        step = delta
    else:
        raise ValueError(f"unknown stencil {stencil!r}")
    per_lambda = np.array([np.nanmax(per_point[..., k]) if np.any(~np.isnan(per_point[..., k])) else 0.0
                           for k in range(len(lams))])
    return FlatnessReport(lams, per_lambda, np.nanmax(per_point, axis=2, initial=0.0,
                                                      where=~np.isnan(per_point)),
                          stencil, step)


def _curvature_samples(fr, z, h, lams, metric) -> np.ndarray:
    loops = _stencil_loops(fr, z, h, h)
    return np.array([_curvature([[f(lam) for f in row] for row in loops], h, h, metric) for lam in lams])


def alpha_loops(fr: ExtendedFrameGrid, z: complex, delta: float = 2e-3) -> tuple[Loop, Loop]:
    """``alpha = F^{-1} dF`` at ``z`` as Laurent loops ``(alpha_x, alpha_y)``.

    Central differences at steps ``delta`` and ``delta/2`` are combined by
    Richardson extrapolation.
    """
    if fr.evaluator is None:
        raise GridError("alpha_loops needs a frame evaluator")
    F = fr.evaluator(z)
    F_inv = inverse_orthogonal(F, indefinite_metric(F.dim))

    def diff(direction: complex, h: float) -> Loop:
        return (fr.evaluator(z + h * direction) - fr.evaluator(z - h * direction)).scale(1 / (2 * h))

    out = []
    for direction in (1.0, 1j):
        d = diff(direction, delta / 2).scale(4 / 3) - diff(direction, delta).scale(1 / 3)
        out.append(multiply(F_inv, d))
    return out[0], out[1]


def alpha_support_residual(fr: ExtendedFrameGrid, points=None, delta: float = 2e-3) -> float:
    """Relative size of the ``lam^k`` (``|k| >= 2``) coefficients of ``F^{-1} dF``.

    ``alpha_lam = lam^{-1} alpha' + alpha_0 + lam alpha''`` has Fourier
    support in ``{-1, 0, 1}``; the returned value is the largest
    off-support coefficient relative to ``max(1, |alpha|)``.
    """
    if points is None:
        points = [z for iy, ix, z in fr.points() if fr.frames[iy][ix] is not None][::7]
    worst = 0.0
    for z in points:
        for a in alpha_loops(fr, z, delta):
            scale = max(1.0, a.norm())
            off = max((np.abs(c).max() for k, c in a.coeffs.items() if abs(k) >= 2), default=0.0)
            worst = max(worst, off / scale)
    return worst


# extended solutions

@dataclass
class ExtendedSolutionGrid:
    """``Phi(z, lam) = F(z, lam) F(z, 1)^{-1}`` on the frame grid."""

    frames: ExtendedFrameGrid
    solutions: tuple
    one_residual: float
    idempotence_residual: float
    twist_residual: float
    uniton: "UnitonReport | None" = None


def extended_solution(fr: ExtendedFrameGrid, samples: int = 8) -> ExtendedSolutionGrid:
    """Extended solutions with their structural checks.

    Reports the maxima over the grid of ``|Phi(1) - I|``,
    ``|(Phi(-1) D)^2 - I|`` and ``|Phi(-lam) Phi(-1)^{-1} - D Phi(lam) D^{-1}|``
    on ``samples`` points of the unit circle.
    """
    n = fr.size
    D = sigma_conjugator(n - 4) if n > 4 else np.eye(n)
    lams = unit_circle(samples)
    rows = []
    one = idem = twist = 0.0
    for row in fr.frames:
        out = []
        for f in row:
            if f is None:
                out.append(None)
                continue
            phi = f.right(np.linalg.inv(f(1.0)))
            out.append(phi)
            one = max(one, float(np.abs(phi(1.0) - np.eye(n)).max()))
            pm = phi(-1.0)
            idem = max(idem, float(np.abs((pm @ D) @ (pm @ D) - np.eye(n)).max()))
            pm_inv = np.linalg.inv(pm)
            for lam in lams:
                lhs = phi(-lam) @ pm_inv
                rhs = D @ phi(lam) @ D
                twist = max(twist, float(np.abs(lhs - rhs).max()))
        rows.append(tuple(out))
    return ExtendedSolutionGrid(fr, tuple(rows), one, idem, twist)


@dataclass
class UnitonReport:
    degree: int
    raw_degree: int
    per_point: np.ndarray
    normalized: bool


def gamma_adjoint_degree(x: Loop, xi: np.ndarray | None, metric: np.ndarray | None = None,
                         tol: float = TOLERANCES.adjoint_support) -> tuple[int, int]:
    """``(degree of Ad(gamma_xi x), degree of Ad(x))`` as ``[-k, k]`` support bounds.

    ``gamma_xi(lam)`` acts on ``ad xi``-eigenvectors of eigenvalue
    ``sqrt(-1) k`` by ``lam^k``; the lattice condition makes these integral
    even when ``xi`` itself has half-integral eigenvalues.
    """
    if metric is None:
        metric = indefinite_metric(x.dim)
    coeffs = adjoint_action(x, inverse_orthogonal(x, metric), lie_basis(metric))

    def degree(cs: dict) -> int:
        scale = max((np.abs(c).max() for c in cs.values()), default=0.0)
        ks = [abs(k) for k, c in cs.items() if np.abs(c).max() > tol * max(scale, 1.0)]
        return max(ks, default=0)

    raw = degree(coeffs)
    if xi is None:
        return raw, raw
    w, V = np.linalg.eig(xi)
    V_inv = np.linalg.inv(V)
    shift_f = ((w[:, None] - w[None, :]) / 1j).real
    shifts = np.rint(shift_f).astype(int)
    if np.abs(shift_f - shifts).max() > 1e-6:
        raise ValueError("ad(xi) has non-integral eigenvalues")
    out: dict[int, np.ndarray] = {}
    for k, c in coeffs.items():
        cp = np.einsum("ab,nbc,cd->nad", V_inv, c, V)
        for s in np.unique(shifts):
            part = np.where(shifts == s, cp, 0.0)
            if np.abs(part).max() == 0:
                continue
            out[k + s] = out[k + s] + part if (k + s) in out else part
    return degree(out), raw


def uniton_degree(sol: ExtendedSolutionGrid, xi: np.ndarray | None = "auto") -> UnitonReport:
    """Uniton degree of the extended solutions over the grid.

    With a grading element ``xi`` (taken from the frame grid by default)
    the degree is measured on ``gamma_xi Phi``, the normalization that puts
    the solution into its algebraic cell; the unnormalized adjoint degree
    of ``Phi`` is reported as ``raw_degree``.
    """
    if isinstance(xi, str):
        xi = sol.frames.xi
    ny, nx = sol.frames.shape
    per_point = np.full((ny, nx), -1, dtype=int)
    deg = raw = 0
    for iy, row in enumerate(sol.solutions):
        for ix, phi in enumerate(row):
            if phi is None:
                continue
            d, r = gamma_adjoint_degree(phi, xi)
            per_point[iy, ix] = d
            deg, raw = max(deg, d), max(raw, r)
    report = UnitonReport(deg, raw, per_point, xi is not None)
    sol.uniton = report
    return report


# dressing

def random_dressing_loop(n: int, rng: np.random.Generator, scale: float = 0.5) -> Loop:
    """``h_+ = exp(lam X) = I + lam X + lam^2 X^2 / 2`` with ``X`` in ``p^C`` and ``X^3 = 0``.

    ``X = [[0, b c^T], [-c b^T I13, 0]]`` with ``b`` isotropic for ``I13``.
    """
    v = rng.normal(size=3) + 1j * rng.normal(size=3)
    b = np.concatenate([[np.sqrt(v @ v)], v])
    c = rng.normal(size=n) + 1j * rng.normal(size=n)
    b = scale * b / np.abs(b).max()
    c = c / np.abs(c).max()
    I13 = np.diag([-1.0, 1.0, 1.0, 1.0])
    X = np.zeros((n + 4, n + 4), complex)
    X[:4, 4:] = np.outer(b, c)
    X[4:, :4] = -np.outer(c, b) @ I13
    return Loop({0: np.eye(n + 4), 1: X, 2: X @ X / 2})


def dress(h_plus: Loop, fr: ExtendedFrameGrid, options: FrameOptions | None = None) -> ExtendedFrameGrid:
    """Dressed frames: the real factor of ``h_+ F(z)`` at each point, re-gauged at the base point.

    Raises
    ------
    ValueError
        If ``h_plus`` has negative powers of ``lam``.
    GridError
        If the original grid has no evaluator or the dressed base point is
        singular.
    """
    if h_plus.lo is not None and h_plus.lo < 0:
        raise ValueError("h_plus must lie in the plus loop group")
    if fr.evaluator is None:
        raise GridError("dressing needs a frame evaluator")
    opts = options or FrameOptions(form=fr.form)
    n = h_plus.dim
    metric = indefinite_metric(n)
    sigma = sigma_conjugator(n - 4) if n > 4 else None

    def raw(z):
        try:
            f = fr.evaluator(z)
        except FactorizationError as err:
            return None, str(err)
        return _real_frame(multiply(h_plus, f), opts, metric, sigma)

    return _assemble(fr.xs, fr.ys, fr.base_index, raw, opts, fr.xi)


def laurent_degree(fr: ExtendedFrameGrid) -> int:
    """Largest ``|k|`` among Laurent exponents of the frames."""
    deg = 0
    for row in fr.frames:
        for f in row:
            if f is not None and f.coeffs:
                deg = max(deg, -f.lo, f.hi)
    return deg
