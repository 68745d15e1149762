"""Closed-form Willmore spheres, geometric checks and comparisons with the frame pipeline."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly

from .config import TOLERANCES
from .harmonic import (FrameOptions, extended_solution, flatness_residual, frame_grid,
                       uniton_degree)
from .potentials import PotentialError, example_s6_potential


def rotation_block(lam: complex) -> np.ndarray:
    """``[[c, (lam - 1/lam)/(-2i)], [(lam - 1/lam)/(2i), c]]`` with ``c = (lam + 1/lam)/2``."""
    lam = complex(lam)
    c = (lam + 1 / lam) / 2
    s = (lam - 1 / lam) / 2j
    return np.array([[c, -s], [s, c]])


def s6_rotation(lam: complex) -> np.ndarray:
    """``D_lam`` in SO(7): rotation of the coordinate pairs (4, 5) and (6, 7)."""
    D = np.eye(7, dtype=complex)
    D[3:5, 3:5] = rotation_block(lam)
    D[5:7, 5:7] = rotation_block(lam)
    return D


def s4_rotation(lam: complex) -> np.ndarray:
    """6x6 rotation of the last coordinate pair."""
    D = np.eye(6, dtype=complex)
    D[4:6, 4:6] = rotation_block(lam)
    return D


def _realify(v: np.ndarray, tol: float = 1e-13) -> np.ndarray:
    scale = max(1.0, float(np.abs(v).max()))
    if np.abs(v.imag).max() > tol * scale:
        raise ValueError(f"closed form is not real: imaginary part {np.abs(v.imag).max():.3e}")
    return v.real


def s6_denominator(r):
    return 1 + r**2 + 5 * r**4 / 4 + 4 * r**6 / 9 + r**8 / 36


def eval_s6_example(z: complex, lam: complex = 1.0) -> np.ndarray:
    """Associated family ``x_lam(z)`` of the totally isotropic Willmore sphere in S^6.

    The imaginary residue of the complex evaluation is checked (below
    ``1e-13`` relative) and dropped.
    """
    z = complex(z)
    lam = complex(lam)
    zb = z.conjugate()
    r2 = abs(z) ** 2
    r4, r6, r8 = r2**2, r2**3, r2**4
    a = 1 + r6 / 9
    b = 1 - r4 / 12
    c = (r2 / 2) * (1 + 4 * r2 / 3)
    v = np.array([
        1 - r2 - 3 * r4 / 4 + 4 * r6 / 9 - r8 / 36,
        -1j * (z - zb) * a,
        (z + zb) * a,
        -1j * (z**2 / lam - lam * zb**2) * b,
        (z**2 / lam + lam * zb**2) * b,
        -1j * c * (z / lam - lam * zb),
        c * (z / lam + lam * zb),
    ])
    return _realify(v / s6_denominator(np.sqrt(r2)))


# S^4 family

def _poly(c) -> np.ndarray:
    return np.atleast_1d(np.asarray(c, dtype=complex))


def _is_zero_poly(p: np.ndarray, tol: float) -> bool:
    return bool(np.abs(p).max() <= tol) if p.size else True


def check_s4_data(fs, tol: float = 1e-12) -> list[np.ndarray]:
    """Validate ``f1..f4`` (coefficient arrays, low degree first) and return their derivatives.

    Raises
    ------
    PotentialError
        If ``f1' f4' + f2' f3'`` is not identically zero, or ``f1' f2'`` is.
    """
    fs = [_poly(f) for f in fs]
    if len(fs) != 4:
        raise PotentialError("expected four polynomials f1..f4", "s4 data")
    d = [npoly.polyder(f) if f.size > 1 else np.zeros(1, complex) for f in fs]
    constraint = npoly.polyadd(npoly.polymul(d[0], d[3]), npoly.polymul(d[1], d[2]))
    scale = max(1.0, max(float(np.abs(x).max()) for x in d))
    if not _is_zero_poly(constraint, tol * scale**2):
        raise PotentialError("constraint f1'f4' + f2'f3' = 0 violated",
                             "s4 constraint f1'f4' + f2'f3' = 0",
                             [complex(v) for v in constraint])
    if _is_zero_poly(npoly.polymul(d[0], d[1]), tol * scale**2):
        raise PotentialError("genericity f1'f2' != 0 violated (f1'f2' vanishes identically)",
                             "s4 genericity f1'f2' != 0")
    return d


def _s4_blocks(f1, f2, f3, f4):
    c = np.conj
    A = np.array([1 + abs(f2) ** 2 + abs(f4) ** 2, 1 - abs(f2) ** 2 + abs(f4) ** 2,
                  -1j * (-c(f2) * f4 + f2 * c(f4)), -(c(f2) * f4 + f2 * c(f4)),
                  1j * (c(f2) - f2), c(f2) + f2])
    B = np.array([1 + abs(f1) ** 2 + abs(f3) ** 2, -(1 + abs(f1) ** 2 - abs(f3) ** 2),
                  1j * (-c(f1) * f3 + f1 * c(f3)), c(f1) * f3 + f1 * c(f3),
                  1j * (f3 - c(f3)), -(f3 + c(f3))])
    C = np.array([-c(f1) * f2 + c(f3) * f4, c(f1) * f2 + c(f3) * f4,
                  -1j * (1 + c(f1) * f4 + f2 * c(f3)), -(1 - c(f1) * f4 + f2 * c(f3)),
                  1j * (-c(f1) + f4), -(c(f1) + f4)])
    return A, B, C


def minkowski(u: np.ndarray, v: np.ndarray) -> complex:
    """``<u, v> = -u_0 v_0 + sum u_i v_i`` (bilinear)."""
    return -u[0] * v[0] + np.dot(u[1:], v[1:])


@dataclass
class LightConeSample:
    """``Y`` in R^{1,5} with its pairing defect ``<Y, Y>``."""

    Y: np.ndarray
    pairing: float

    @property
    def relative_defect(self) -> float:
        return abs(self.pairing) / max(float(np.dot(self.Y, self.Y)), np.finfo(float).tiny)

    def sphere_point(self) -> np.ndarray:
        """Projection ``Y[1:] / Y[0]`` to the unit sphere S^4."""
        return self.Y[1:] / self.Y[0]


def eval_s4_surface(fs, z: complex, lam: complex = 1.0, derivatives=None) -> LightConeSample:
    """Light-cone lift ``Y_lam = R_lam Y_1`` of the isotropic Willmore surface in S^4.

    ``fs`` are the coefficient arrays of ``f1..f4``; ``Y_1`` combines the
    ``|f1'|^2``, ``|f2'|^2``, ``f1' conj(f2')`` and ``conj(f1') f2'`` blocks.
    """
    d = check_s4_data(fs) if derivatives is None else derivatives
    f = [complex(npoly.polyval(z, _poly(c))) for c in fs]
    dv = [complex(npoly.polyval(z, c)) for c in d]
    A, B, C = _s4_blocks(*f)
    Y1 = (abs(dv[0]) ** 2 * A + abs(dv[1]) ** 2 * B
          + dv[0] * np.conj(dv[1]) * C + np.conj(dv[0]) * dv[1] * np.conj(C))
    Y = _realify(s4_rotation(lam) @ Y1, tol=1e-12)
    return LightConeSample(Y, float(minkowski(Y, Y)))


def s4_from_derivatives(p, q, r, s, constants=(0, 0, 0, 0)):
    """``f1..f4`` with ``f1' = pq``, ``f2' = pr``, ``f3' = -qs``, ``f4' = rs``.

    Every quadruple of this form satisfies the constraint.
    """
    ders = [npoly.polymul(p, q), npoly.polymul(p, r), -npoly.polymul(q, s), npoly.polymul(r, s)]
    return [np.concatenate([[c], npoly.polyint(dv)[1:]]) for dv, c in zip(ders, constants)]


# surface grids

@dataclass
class SurfaceGrid:
    """Samples ``x(z)`` of a surface in a unit sphere over the grid ``xs + i ys``."""

    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray
    lam: complex = 1.0
    diagnostics: dict = field(default_factory=dict)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.ys), len(self.xs)


def sample_s6(xs, ys, lam: complex = 1.0) -> SurfaceGrid:
    xs = np.asarray(xs, float)
    ys = np.asarray(ys, float)
    vals = np.array([[eval_s6_example(complex(x, y), lam) for x in xs] for y in ys])
    return SurfaceGrid(xs, ys, vals, lam)


def sample_s4(fs, xs, ys, lam: complex = 1.0) -> SurfaceGrid:
    """S^4 surface ``Y[1:] / Y[0]`` on a grid, with the relative light-cone defect."""
    d = check_s4_data(fs)
    xs = np.asarray(xs, float)
    ys = np.asarray(ys, float)
    vals = np.zeros((len(ys), len(xs), 5))
    worst = 0.0
    for iy, y in enumerate(ys):
        for ix, x in enumerate(xs):
            s = eval_s4_surface(fs, complex(x, y), lam, derivatives=d)
            vals[iy, ix] = s.sphere_point()
            worst = max(worst, s.relative_defect)
    return SurfaceGrid(xs, ys, vals, lam, {"light_cone_relative": worst})


def _bilinear(u, v):
    return np.einsum("...i,...i->...", u, v)


_FIRST = {2: {1: 0.5, -1: -0.5}, 4: {2: -1 / 12, 1: 8 / 12, -1: -8 / 12, -2: 1 / 12}}
_SECOND = {2: {1: 1.0, 0: -2.0, -1: 1.0},
           4: {2: -1 / 12, 1: 16 / 12, 0: -30 / 12, -1: 16 / 12, -2: -1 / 12}}


def _derivatives(X: np.ndarray, hx: float, hy: float, order: int):
    """``x_z`` and ``x_zz`` by central differences on the interior two steps from the edge."""
    ny, nx = X.shape[:2]

    def sh(dy, dx):
        return X[2 + dy:ny - 2 + dy, 2 + dx:nx - 2 + dx]

    fx = sum(w * sh(0, k) for k, w in _FIRST[order].items()) / hx
    fy = sum(w * sh(k, 0) for k, w in _FIRST[order].items()) / hy
    fxx = sum(w * sh(0, k) for k, w in _SECOND[order].items()) / hx**2
    fyy = sum(w * sh(k, 0) for k, w in _SECOND[order].items()) / hy**2
    fxy = sum(wy * wx * sh(ky, kx) for ky, wy in _FIRST[order].items()
              for kx, wx in _FIRST[order].items()) / (hx * hy)
    xz = 0.5 * (fx - 1j * fy)
    xzz = 0.25 * (fxx - fyy - 2j * fxy)
    return xz, xzz


def verify_surface(s: SurfaceGrid, rank_tol: float = 1e-8, order: int = 2) -> dict:
    """Max defects of sphere membership, conformality and second-order isotropy, plus span rank.

    ``<x_z, x_z>``, ``<x_z, x_zz>`` and ``<x_zz, x_zz>`` (complex bilinear)
    use central differences of the given ``order`` (2 or 4) at points two
    steps away from the boundary; their exact values vanish for a
    conformal totally isotropic surface. The span rank of the samples
    (singular values above ``rank_tol`` times the largest) is a fullness
    proxy.

    Raises
    ------
    ValueError
        If the grid has fewer than five points per axis.
    """
    if order not in _FIRST:
        raise ValueError("order must be 2 or 4")
    ny, nx = s.shape
    if nx < 5 or ny < 5:
        raise ValueError("grid too coarse: need at least 5 points per axis")
    hx = float(s.xs[1] - s.xs[0])
    hy = float(s.ys[1] - s.ys[0])
    X = s.values
    norm = float(np.abs(np.linalg.norm(X, axis=-1) - 1).max())
    xz, xzz = _derivatives(X, hx, hy, order)
    sv = np.linalg.svd(X.reshape(-1, X.shape[-1]), compute_uv=False)
    rank = int(np.sum(sv > rank_tol * sv[0])) if sv.size and sv[0] > 0 else 0
    report = {
        "norm_defect": norm,
        "conformality_defect": float(np.abs(_bilinear(xz, xz)).max()),
        "isotropy_defect_z_zz": float(np.abs(_bilinear(xz, xzz)).max()),
        "isotropy_defect_zz_zz": float(np.abs(_bilinear(xzz, xzz)).max()),
        "span_rank": rank,
        "step": max(hx, hy),
        "order": order,
    }
    s.diagnostics.update(report)
    return report


def rotation_identity_residual(xs, ys, lams) -> float:
    """``max |x_lam - D_lam x_1|`` over the grid and the ``lam`` samples."""
    worst = 0.0
    for y in ys:
        for x in xs:
            z = complex(x, y)
            x1 = eval_s6_example(z, 1.0)
            for lam in lams:
                d = eval_s6_example(z, lam) - (s6_rotation(lam) @ x1).real
                worst = max(worst, float(np.abs(d).max()))
    return worst


# comparison with the frame pipeline

def crosscheck_pipeline_vs_closed_form(xs, ys, options: FrameOptions = FrameOptions(),
                                       fit_isometry_check: bool = False) -> dict:
    """Gauge-invariant comparison of the pipeline frames with the closed-form sphere.

    Sub-checks: (a) idempotence ``(Phi(-1) D)^2 = I`` of the extended
    solutions; (b) uniton degree 2 together with the closed form's
    rotation identity ``x_lam = D_lam x_1``; (c) flatness below the
    configured tolerance. With ``fit_isometry_check`` the comparison of
    :func:`fit_isometry` is added (a substitute for a light-cone
    reconstruction, labelled as such).
    """
    eta = example_s6_potential()
    fr = frame_grid(eta, xs, ys, options=options)
    sol = extended_solution(fr)
    uni = uniton_degree(sol)
    flat = flatness_residual(fr, stencil="local")
    lams = np.exp(2j * np.pi * np.arange(8) / 8)
    rot = rotation_identity_residual(xs[::4], ys[::4], lams)
    report = {
        "singular_points": int(fr.singular.sum()),
        "a_idempotence_defect": sol.idempotence_residual,
        "a_ok": sol.idempotence_residual < 1e-8,
        "b_uniton_degree": uni.degree,
        "b_rotation_identity": rot,
        "b_ok": uni.degree == 2 and rot < 1e-12,
        "c_flatness": flat.max,
        "c_ok": flat.max < TOLERANCES.flatness,
    }
    if fit_isometry_check:
        fit = fit_isometry(xs, ys)
        report["fitted_isometry"] = fit
        report["fit_ok"] = fit["residual"] < 1e-5 and fit["scale"] > 0
    report["ok"] = bool(report["a_ok"] and report["b_ok"] and report["c_ok"])
    return report


def fit_isometry(xs, ys, seed: int = 0, starts: int = 20) -> dict:
    """Fitted comparison of the closed form with the frame pipeline (a substitute check).

    The noncompact frame ``F(z, 1)`` spans a Lorentzian 4-plane
    ``V(z) = F(z) R^{1,3}``, which should contain the light-cone lift
    ``Y(z) = (1, x_1(z))`` after one fixed conformal isometry ``g``. The
    containment ``P_perp(z) g Y(z) = 0`` is linear in ``g``; inside its
    solution space ``g^T J g = s J`` is solved by least squares.

    Returns the containment residual, the isometry defect
    ``|g^T J g / s - J|``, the scale ``s`` and the solution-space dimension.
    """
    from scipy.optimize import least_squares

    eta = example_s6_potential()
    fr = frame_grid(eta, xs, ys, options=FrameOptions(form="noncompact"))
    J = np.diag([-1.0] + [1.0] * 7)
    rows = []
    for iy, ix, z in fr.points():
        F = fr.frames[iy][ix]
        if F is None:
            continue
        V = F(1.0).real[:, :4]
        P = np.eye(8) - V @ np.linalg.solve(V.T @ J @ V, V.T @ J)
        Y = np.concatenate([[1.0], eval_s6_example(z, 1.0)])
        rows.append(np.kron(P, Y[None, :]))
    M = np.vstack(rows)
    _, sv, vt = np.linalg.svd(M)
    dim = max(1, int(np.sum(sv < 1e-10 * sv[0])))
    N = vt[-dim:].reshape(dim, 8, 8)

    def residual(c):
        g = np.einsum("k,kab->ab", c, N)
        G = g.T @ J @ g
        return np.concatenate([(G - np.trace(J @ G) / 8 * J).ravel(), [np.linalg.norm(c) - 1]])

    rng = np.random.default_rng(seed)
    best = min((least_squares(residual, rng.normal(size=dim)) for _ in range(starts)),
               key=lambda r: r.cost)
    g = np.einsum("k,kab->ab", best.x, N)
    G = g.T @ J @ g
    scale = float(np.trace(J @ G) / 8)
    contain = float(np.linalg.norm(M @ g.ravel()) / (sv[0] * np.linalg.norm(g)))
    defect = float(np.abs(G / scale - J).max()) if scale != 0 else np.inf
    return {
        "containment_residual": contain,
        "isometry_defect": defect,
        "scale": scale,
        "solution_dim": dim,
        "residual": max(contain, defect),
        "label": "fitted isometry (substitute for a light-cone reconstruction)",
    }


# export

def _projected(values: np.ndarray, projection) -> np.ndarray:
    if projection is None or projection == "stereographic":
        denom = 1.0 + values[..., 0]
        denom = np.where(np.abs(denom) < 1e-12, 1e-12, denom)
        return values[..., 1:4] / denom[..., None]
    idx = [int(i) - 1 for i in projection]
    if len(idx) != 3:
        raise ValueError("projection needs three 1-based coordinate indices")
    return values[..., idx]


def export_mesh(samples: SurfaceGrid, path: str, projection=None) -> tuple[int, int]:
    """Write an OBJ mesh of the grid image and return ``(vertices, triangles)``.

    Each grid quad becomes two triangles. The default projection is
    stereographic from ``-e_1`` onto coordinates 2..4; ``projection`` may
    instead be a triple of 1-based coordinate indices.
    """
    ny, nx = samples.shape
    if ny * nx == 0:
        raise ValueError("no samples")
    pts = _projected(samples.values, projection).reshape(-1, 3)
    if np.ptp(pts, axis=0).max() == 0.0:
        warnings.warn("degenerate mesh: all samples coincide", RuntimeWarning, stacklevel=2)
    tris = []
    for iy in range(ny - 1):
        for ix in range(nx - 1):
            a = iy * nx + ix + 1
            b, c, d = a + 1, a + nx, a + nx + 1
            tris += [(a, b, d), (a, d, c)]
    with open(path, "w") as fh:
        for p in pts:
            fh.write("v {:.17g} {:.17g} {:.17g}\n".format(*p))
        for t in tris:
            fh.write("f {} {} {}\n".format(*t))
    return len(pts), len(tris)


def export_csv(samples: SurfaceGrid, path: str) -> None:
    dim = samples.values.shape[-1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["z_re", "z_im"] + [f"x{k + 1}" for k in range(dim)])
        for iy, y in enumerate(samples.ys):
            for ix, x in enumerate(samples.xs):
                w.writerow([repr(float(x)), repr(float(y))] + [repr(float(v)) for v in samples.values[iy, ix]])
