"""Root data, canonical elements and ad-gradings for so(2m, C) (type D_m).

Everything here works in the compact coordinates where the group is the
standard ``SO(2m)`` and the Lie algebra consists of skew-symmetric
matrices. The maximal torus is spanned by the plane rotations ``H_i`` of
coordinates ``(2i, 2i+1)`` (0-based), so a torus element is
``xi = sum_i c_i H_i`` and the root ``+-e_j +- e_k`` takes the value
``sqrt(-1) (+-c_j +- c_k)`` on it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations

import numpy as np
import scipy.linalg as sla

from .config import TOLERANCES
from .loops import Loop


def so_basis(size: int) -> np.ndarray:
    """Skew basis ``E_ab - E_ba`` for a < b."""
    out = []
    for a, b in combinations(range(size), 2):
        e = np.zeros((size, size))
        e[a, b], e[b, a] = 1.0, -1.0
        out.append(e)
    return np.array(out)


def skew_coordinates(x: np.ndarray) -> np.ndarray:
    """Coordinates of matrices in :func:`so_basis` (upper-triangle entries)."""
    x = np.asarray(x)
    iu = np.triu_indices(x.shape[-1], 1)
    return x[..., iu[0], iu[1]]


def from_skew_coordinates(v: np.ndarray, size: int) -> np.ndarray:
    iu = np.triu_indices(size, 1)
    out = np.zeros(v.shape[:-1] + (size, size), dtype=np.result_type(v, float))
    out[..., iu[0], iu[1]] = v
    out[..., iu[1], iu[0]] = -v
    return out


def torus_generator(m: int, i: int) -> np.ndarray:
    """Rotation generator ``H_i`` of the plane ``(2i, 2i+1)``; eigenvalue i on ``e_2i - i e_2i+1``."""
    h = np.zeros((2 * m, 2 * m))
    h[2 * i + 1, 2 * i] = 1.0
    h[2 * i, 2 * i + 1] = -1.0
    return h


def torus_element(coords, m: int | None = None) -> np.ndarray:
    coords = [float(c) for c in coords]
    m = len(coords) if m is None else m
    return sum(c * torus_generator(m, i) for i, c in enumerate(coords))


def weight_vector(m: int, i: int, sign: int) -> np.ndarray:
    """Eigenvector of ``H_i`` with eigenvalue ``sign * sqrt(-1)``."""
    v = np.zeros(2 * m, complex)
    v[2 * i] = 1.0
    v[2 * i + 1] = -1j * sign
    return v / np.sqrt(2)


@dataclass(frozen=True)
class RootSystem:
    """Torus, roots, simple roots and the dual basis for D_m.

    Roots are integer vectors ``r`` in Z^m with ``root(xi) = i * (r . c)``.
    """

    m: int
    roots: tuple
    simple_roots: tuple
    coweights: tuple

    @property
    def size(self) -> int:
        return 2 * self.m

    def torus(self) -> np.ndarray:
        return np.array([torus_generator(self.m, i) for i in range(self.m)])

    def root_vector(self, root) -> np.ndarray:
        """Matrix spanning the root space of ``root`` (two nonzero entries of +-1)."""
        idx = [i for i, r in enumerate(root) if r != 0]
        j, k = idx
        u = weight_vector(self.m, j, int(root[j]))
        w = weight_vector(self.m, k, int(root[k]))
        return np.outer(u, w) - np.outer(w, u)

    def coweight_matrix(self, k: int) -> np.ndarray:
        """Dual basis element ``xi_k`` (1-based) with ``theta_j(xi_k) = i delta_jk``."""
        return torus_element(self.coweights[k - 1], self.m)


def build_torus_and_roots(m: int) -> RootSystem:
    """Root data of type D_m.

    Simple roots are ``e_j - e_{j+1}`` (j < m) and ``e_{m-1} + e_m``.
    """
    if m < 2:
        raise ValueError("type D_m needs m >= 2")
    roots = []
    for j, k in combinations(range(m), 2):
        for sj in (1, -1):
            for sk in (1, -1):
                r = [0] * m
                r[j], r[k] = sj, sk
                roots.append(tuple(r))
    simple = []
    for j in range(m - 1):
        r = [0] * m
        r[j], r[j + 1] = 1, -1
        simple.append(tuple(r))
    r = [0] * m
    r[m - 2], r[m - 1] = 1, 1
    simple.append(tuple(r))
    # dual basis: solve S c_k = e_k exactly over the rationals
    S = [[Fraction(x) for x in s] for s in simple]
    cows = []
    for k in range(m):
        cows.append(tuple(_solve_rational(S, [Fraction(int(i == k)) for i in range(m)])))
    return RootSystem(m, tuple(roots), tuple(simple), tuple(cows))


def _solve_rational(A, b):
    """Gauss-Jordan elimination over Fractions for a square nonsingular system."""
    n = len(A)
    M = [list(row) + [bi] for row, bi in zip(A, b)]
    for col in range(n):
        piv = next(r for r in range(col, n) if M[r][col] != 0)
        M[col], M[piv] = M[piv], M[col]
        p = M[col][col]
        M[col] = [v / p for v in M[col]]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [a - f * c for a, c in zip(M[r], M[col])]
    return [M[r][n] for r in range(n)]


def root_value(root, coords) -> Fraction:
    """``root(xi) / sqrt(-1)`` computed exactly from torus coordinates."""
    return sum((Fraction(r) * Fraction(c) for r, c in zip(root, coords)), Fraction(0))


class Grading:
    """Eigenspace decomposition of ``ad xi`` on so(N, C) with integer eigenvalues.

    Parameters
    ----------
    xi : ndarray
        Real skew matrix (or any skew matrix with ``-i ad xi`` diagonalisable
        with integral spectrum).
    tol : float
        Rounding tolerance for eigenvalues.
    """

    def __init__(self, xi: np.ndarray, tol: float = TOLERANCES.grading_round):
        xi = np.asarray(xi)
        self.xi = xi
        self.size = xi.shape[0]
        basis = so_basis(self.size)
        ad = skew_coordinates(np.einsum("ab,nbc->nac", xi, basis)
                              - np.einsum("nab,bc->nac", basis, xi)).T
        H = -1j * ad
        if np.allclose(H, H.conj().T, atol=1e-12):
            w, V = np.linalg.eigh(H)
        else:
            w, V = np.linalg.eig(H)
        wr = np.round(w.real).astype(int)
        if np.abs(w - wr).max() > tol:
            raise ValueError("ad xi does not have integral spectrum")
        self.components: dict[int, np.ndarray] = {}
        for j in sorted(set(wr.tolist())):
            cols = V[:, wr == j]
            q, _ = np.linalg.qr(cols)
            self.components[j] = q
        self.max_rounding = float(np.abs(w - wr).max())

    @property
    def degrees(self) -> list[int]:
        return sorted(self.components)

    @property
    def height(self) -> int:
        return max(self.components)

    def dims(self) -> dict[int, int]:
        return {j: q.shape[1] for j, q in self.components.items()}

    def basis(self, j: int) -> np.ndarray:
        """Basis matrices of ``g_j`` (empty array when trivial)."""
        q = self.components.get(j)
        if q is None:
            return np.zeros((0, self.size, self.size), complex)
        return from_skew_coordinates(q.T, self.size)

    def coords(self, j: int) -> np.ndarray:
        q = self.components.get(j)
        return np.zeros((len(skew_coordinates(np.eye(self.size))), 0)) if q is None else q

    def sum_coords(self, degrees) -> np.ndarray:
        cols = [self.components[j] for j in degrees if j in self.components]
        if not cols:
            return np.zeros((self.size * (self.size - 1) // 2, 0), complex)
        return np.hstack(cols)

    def component_residual(self, x: np.ndarray, j: int) -> float:
        """Distance of ``x`` from ``g_j`` in skew coordinates."""
        v = skew_coordinates(x)
        q = self.coords(j)
        return float(np.abs(v - q @ (q.conj().T @ v)).max())

    def degree_of(self, x: np.ndarray, tol: float = 1e-10) -> int:
        """Grade of a homogeneous element.

        Raises
        ------
        ValueError
            If ``x`` does not lie in a single component.
        """
        scale = max(1.0, float(np.abs(x).max()))
        for j in self.components:
            if self.component_residual(x, j) <= tol * scale:
                return j
        raise ValueError("element is not homogeneous for this grading")

    def project(self, x: np.ndarray, j: int) -> np.ndarray:
        v = skew_coordinates(x)
        q = self.coords(j)
        return from_skew_coordinates(q @ (q.conj().T @ v), self.size)

    def closure_residual(self) -> float:
        """Max over basis pairs of the part of ``[g_j, g_k]`` outside ``g_{j+k}``."""
        res = 0.0
        mats = {j: self.basis(j) for j in self.components}
        for j, A in mats.items():
            for k, B in mats.items():
                C = np.einsum("iab,kbc->ikac", A, B) - np.einsum("kab,ibc->ikac", B, A)
                v = skew_coordinates(C).reshape(-1, self.size * (self.size - 1) // 2).T
                q = self.coords(j + k) if (j + k) in self.components else None
                r = v if q is None else v - q @ (q.conj().T @ v)
                if r.size:
                    res = max(res, float(np.abs(r).max()))
        return res


@dataclass
class CanonicalElement:
    """Element ``xi = sum_{j in selector} xi_j`` (or a general coweight combination).

    ``coords`` are exact torus coordinates; ``multiplicities`` are the
    coefficients on the dual basis.
    """

    m: int
    multiplicities: tuple
    coords: tuple
    roots: RootSystem = field(repr=False)

    @property
    def selector(self) -> tuple:
        return tuple(j + 1 for j, n in enumerate(self.multiplicities) if n)

    @cached_property
    def xi(self) -> np.ndarray:
        return torus_element(self.coords, self.m)

    @cached_property
    def grading(self) -> Grading:
        return Grading(self.xi)

    @property
    def height(self) -> int:
        return self.grading.height

    def simple_root_values(self) -> list[Fraction]:
        return [root_value(r, self.coords) for r in self.roots.simple_roots]

    def is_canonical(self) -> bool:
        return all(v in (0, 1) for v in self.simple_root_values()) and any(self.multiplicities)

    def lattice_residual(self) -> float:
        """Defect of ``exp(2 pi ad xi) = id`` (lattice of the adjoint group)."""
        w = np.concatenate([[0.0], [float(root_value(r, self.coords)) for r in self.roots.roots]])
        return float(np.abs(np.exp(2j * np.pi * w) - 1).max())

    def center_value(self) -> int:
        """``exp(2 pi xi)`` as +1 or -1 times the identity."""
        g = sla.expm(2 * np.pi * self.xi)
        for s in (1, -1):
            if np.abs(g - s * np.eye(2 * self.m)).max() < 1e-9:
                return s
        raise ValueError("exp(2 pi xi) is not central")

    def involution(self) -> np.ndarray:
        """``exp(pi xi)``, the element defining the inner symmetric space."""
        return np.real_if_close(sla.expm(np.pi * self.xi))

    def gamma(self, lam: complex) -> np.ndarray:
        """``exp(t xi)`` at ``lam = exp(i t)`` (principal angle)."""
        return sla.expm(np.angle(lam) * self.xi)

    def gamma_loop(self) -> Loop:
        """``gamma_xi`` as a Laurent polynomial; needs integral torus coordinates."""
        if any(Fraction(c).denominator != 1 for c in self.coords):
            raise ValueError("gamma_xi is a loop only for integral torus coordinates")
        return torus_loop([int(c) for c in self.coords])


def torus_loop(weights) -> Loop:
    """``lam -> exp(t sum_i w_i H_i)`` for integer weights, as a loop."""
    m = len(weights)
    out: dict[int, np.ndarray] = {}
    for i, w in enumerate(weights):
        for s in (1, -1):
            v = weight_vector(m, i, s)
            p = np.outer(v, v.conj())
            k = s * int(w)
            out[k] = out[k] + p if k in out else p
    return Loop(out, dim=2 * m)


def element_from_multiplicities(m: int, mult) -> CanonicalElement:
    """``xi = sum_j n_j xi_j`` with ``n_j`` nonnegative integers."""
    rs = build_torus_and_roots(m)
    mult = tuple(int(n) for n in mult)
    if len(mult) != m or any(n < 0 for n in mult):
        raise ValueError("need m nonnegative multiplicities")
    coords = tuple(sum((n * c[i] for n, c in zip(mult, rs.coweights)), Fraction(0))
                   for i in range(m))
    return CanonicalElement(m, mult, coords, rs)


def canonical_element(m: int, selector) -> CanonicalElement:
    """``xi = sum_{j in selector} xi_j`` (indices 1..m, pairwise different).

    Raises
    ------
    ValueError
        For an empty selector or indices out of range.
    """
    sel = sorted(set(int(s) for s in selector))
    if not sel:
        raise ValueError("selector must be nonempty")
    if sel[0] < 1 or sel[-1] > m:
        raise ValueError("selector indices must lie in 1..m")
    return element_from_multiplicities(m, [int(j + 1 in sel) for j in range(m)])


def all_selectors(m: int):
    for k in range(1, m + 1):
        yield from combinations(range(1, m + 1), k)


def gamma_conjugate(ce: CanonicalElement, x: np.ndarray, check: bool = True) -> Loop:
    """``gamma_xi^{-1} x gamma_xi`` for ``x`` in a single grade ``g_k``: the loop ``lam^{-k} x``.

    The result is compared with ``exp(-t xi) x exp(t xi)`` at a sample angle.
    """
    k = ce.grading.degree_of(x)
    out = Loop({-k: x}, dim=x.shape[0])
    if check:
        t = np.pi / 5
        direct = sla.expm(-t * ce.xi) @ x @ sla.expm(t * ce.xi)
        if np.abs(direct - out(np.exp(1j * t))).max() > 1e-9 * max(1.0, np.abs(x).max()):
            raise ArithmeticError("gamma conjugation check failed")
    return out


@dataclass
class GradedSubspace:
    """Subspace of so(N, C) with optional lambda-weights per basis element."""

    kind: str
    basis: np.ndarray
    weights: tuple = ()

    @property
    def dim(self) -> int:
        return len(self.basis)


def _subspace(kind, grading: Grading, degrees, weight=None) -> GradedSubspace:
    mats = [grading.basis(j) for j in degrees if j in grading.components]
    b = np.concatenate(mats) if mats else np.zeros((0, grading.size, grading.size), complex)
    return GradedSubspace(kind, b, tuple([weight] * len(b)) if weight is not None else ())


def graded_subspace(ce: CanonicalElement, kind: str, j: int = 0) -> GradedSubspace:
    """Subspaces ``f_j``, ``f_j_perp``, ``u0``, ``u0_T``, ``pr`` and ``q``."""
    g = ce.grading
    r = g.height
    if kind == "f_j":
        return _subspace(kind, g, [k for k in g.degrees if k <= j])
    if kind == "f_j_perp":
        return _subspace(kind, g, range(j + 1, r + 1))
    if kind in ("u0", "u0_T"):
        step = 2 if kind == "u0_T" else 1
        mats, weights = [], []
        for w in range(0, r, step):
            s = _subspace("f_j_perp", g, range(w + 1, r + 1))
            mats.append(s.basis)
            weights += [w] * s.dim
        b = np.concatenate(mats) if mats else np.zeros((0, g.size, g.size), complex)
        return GradedSubspace(kind, b, tuple(weights))
    if kind == "pr":
        return _subspace(kind, g, [k for k in g.degrees if k >= 0])
    if kind == "q":
        return _subspace(kind, g, [k for k in g.degrees if k < 0])
    raise ValueError(f"unknown subspace kind {kind!r}")


def pr_q_split(ce: CanonicalElement) -> tuple[GradedSubspace, GradedSubspace]:
    return graded_subspace(ce, "pr"), graded_subspace(ce, "q")


def span_rank(mats: np.ndarray, tol: float = 1e-9) -> int:
    if len(mats) == 0:
        return 0
    return int(np.linalg.matrix_rank(skew_coordinates(mats), tol=tol))


def subspace_equal(a: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> bool:
    """Equality of spans, tested by ranks of the stacked coordinate matrices."""
    ra, rb = span_rank(a, tol), span_rank(b, tol)
    both = np.concatenate([a, b]) if len(a) and len(b) else (a if len(a) else b)
    return ra == rb == span_rank(both, tol)


def intersect(a: np.ndarray, b: np.ndarray, size: int, tol: float = 1e-9) -> np.ndarray:
    """Basis of the intersection of two spans of skew matrices."""
    if len(a) == 0 or len(b) == 0:
        return np.zeros((0, size, size), complex)
    A = skew_coordinates(a).T
    B = skew_coordinates(b).T
    ns = sla.null_space(np.hstack([A, -B]), rcond=tol)
    if ns.size == 0:
        return np.zeros((0, size, size), complex)
    vecs = A @ ns[: A.shape[1]]
    q, _ = np.linalg.qr(vecs)
    return from_skew_coordinates(q.T, size)


def minus_one_eigenspace(involution: np.ndarray) -> np.ndarray:
    """Basis of ``{X : g X g^{-1} = -X}`` inside so(N, C)."""
    size = involution.shape[0]
    basis = so_basis(size)
    g_inv = np.linalg.inv(involution)
    img = skew_coordinates(np.einsum("ab,nbc,cd->nad", involution, basis, g_inv)).T
    ns = sla.null_space(img + np.eye(len(basis)), rcond=1e-9)
    return from_skew_coordinates(ns.T, size)


def reduction_identity_check(ce: CanonicalElement) -> tuple[bool, bool]:
    """Compare ``xi`` with its canonical reduction ``sum_{n_j > 0} xi_j``.

    Returns the two subspace equalities: ``g_0`` and the positive parts
    ``sum_{j>0} g_j``.
    """
    can = element_from_multiplicities(ce.m, [int(n > 0) for n in ce.multiplicities])
    g, h = ce.grading, can.grading
    zero = subspace_equal(g.basis(0), h.basis(0))
    pos = subspace_equal(_subspace("", g, range(1, g.height + 1)).basis,
                         _subspace("", h, range(1, h.height + 1)).basis)
    return zero, pos


def parabolic_odd_identity_check(ce: CanonicalElement) -> bool:
    """``pr`` meets the -1 eigenspace of ``exp(pi xi)`` exactly in the odd positive grades."""
    size = 2 * ce.m
    p = minus_one_eigenspace(ce.involution())
    pr = graded_subspace(ce, "pr").basis
    lhs = intersect(pr, p, size)
    g = ce.grading
    rhs = _subspace("", g, [k for k in g.degrees if k >= 0 and k % 2 == 1]).basis
    return subspace_equal(lhs, rhs)


def grading_element_for(mats, involution: np.ndarray | None = None, grade: int = 1,
                        tol: float = 1e-9) -> np.ndarray:
    """Real skew ``xi`` with ``[xi, A] = sqrt(-1) * grade * A`` for every given ``A``.

    When ``involution`` is given, ``xi`` is also required to commute with it.
    Among all solutions the least-norm one is returned.

    Raises
    ------
    ValueError
        If the linear conditions are inconsistent.
    """
    mats = [np.asarray(a, complex) for a in mats]
    size = mats[0].shape[0]
    basis = so_basis(size)
    rows, rhs = [], []
    for a in mats:
        M = np.stack([(b @ a - a @ b).ravel() for b in basis], 1)
        r = (1j * grade * a).ravel()
        rows += [M.real, M.imag]
        rhs += [r.real, r.imag]
    if involution is not None:
        M = np.stack([(b @ involution - involution @ b).ravel() for b in basis], 1)
        rows.append(M.real)
        rhs.append(np.zeros(size * size))
    Mall = np.vstack(rows)
    rall = np.concatenate(rhs)
    c, *_ = np.linalg.lstsq(Mall, rall, rcond=None)
    scale = max(1.0, float(np.abs(rall).max()))
    if np.abs(Mall @ c - rall).max() > tol * scale:
        raise ValueError("no grading element makes these matrices homogeneous")
    return np.einsum("n,nab->ab", c, basis)


def grade_report(m: int, selector) -> dict:
    """Summary used by the ``roots grade`` command."""
    ce = canonical_element(m, selector)
    g = ce.grading
    return {
        "m": m,
        "selector": list(ce.selector),
        "coords": [str(c) for c in ce.coords],
        "simple_root_values": [str(v) for v in ce.simple_root_values()],
        "height": g.height,
        "dims": {str(j): d for j, d in g.dims().items()},
        "total_dim": sum(g.dims().values()),
        "center": ce.center_value(),
    }
