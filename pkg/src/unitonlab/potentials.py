"""Normalized potentials ``eta = lam^{-1} A(z) dz`` with polynomial ``A``.

``A`` is stored as a matrix polynomial in ``z``: an array of shape
``(deg + 1, N, N)`` with ascending powers. Matrices are in the
coordinates of SO+(1, n+3), i.e. ``A^T J + J A = 0``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import exact as ex
from .liealg import LieSetting, indefinite_metric
from .roots import CanonicalElement, Grading

I13 = np.diag([-1.0, 1.0, 1.0, 1.0])


class PotentialError(ValueError):
    """Invalid potential data; ``invariant`` names the violated condition."""

    def __init__(self, message: str, invariant: str, residual=None):
        super().__init__(message)
        self.invariant = invariant
        self.residual = residual


@dataclass
class ValueSpace:
    """Certificate: the values of ``A`` lie in ``sum_{j in degrees} g_j`` for ``xi``.

    ``xi`` is given in group coordinates.
    """

    xi: np.ndarray
    degrees: tuple

    def grading(self, setting: LieSetting) -> Grading:
        return Grading(np.real_if_close(setting.to_compact_dual(self.xi), tol=1e6))


@dataclass
class NormalizedPotential:
    """``eta = lam^{-1} A(z) dz``.

    Parameters
    ----------
    coeffs : ndarray, shape (d+1, N, N)
        ``A(z) = sum_k coeffs[k] z**k``; complex floats or exact objects.
    kind : str
        Provenance tag (``"graded"``, ``"willmore"``, ``"s4"``, ``"zero"``).
    value_space : ValueSpace, optional
        Grading certificate.
    """

    coeffs: np.ndarray
    kind: str = "graded"
    value_space: ValueSpace | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        c = np.asarray(self.coeffs)
        if c.ndim == 2:
            c = c[None]
        if c.dtype != object:
            c = c.astype(complex)
        self.coeffs = ex.poly_trim(c)

    @property
    def size(self) -> int:
        return self.coeffs.shape[1]

    @property
    def z_degree(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def poles(self) -> list:
        return []

    @property
    def setting(self) -> LieSetting:
        return LieSetting(self.size - 4)

    def numeric(self) -> np.ndarray:
        c = self.coeffs
        return ex.to_complex(c) if c.dtype == object else c

    def exact(self) -> np.ndarray:
        c = self.coeffs
        return c if c.dtype == object else ex.to_exact(c)

    def A(self, z) -> np.ndarray:
        return ex.poly_eval(self.numeric(), z)

    def is_zero(self) -> bool:
        return not np.any(self.numeric())

    def p_residual(self) -> float:
        """Max defect of the values being in the complexified -1 eigenspace."""
        s = self.setting
        return max(max(s.gC_residual(a), s.in_p_residual(a)) for a in self.numeric())

    def certificate_residual(self, samples=(0.3 + 0.1j, -0.7 + 0.4j, 1.1 - 0.9j)) -> float:
        if self.value_space is None:
            return 0.0
        s = self.setting
        g = self.value_space.grading(s)
        res = 0.0
        for z in samples:
            a = s.to_compact_dual(self.A(z))
            proj = sum((g.project(a, j) for j in self.value_space.degrees), np.zeros_like(a))
            res = max(res, float(np.abs(a - proj).max()) / max(1.0, float(np.abs(a).max())))
        return res

    def nilpotency_index(self, max_power: int = 64) -> int:
        """Smallest ``k`` such that all products of ``k`` coefficient matrices vanish.

        Works with spans of products, so the count stays bounded by ``N**2``.
        """
        mats = [a for a in self.numeric() if np.any(a)]
        if not mats:
            return 1
        n = self.size
        span = np.eye(n)[None]
        for k in range(1, max_power + 1):
            prods = np.einsum("pab,qbc->pqac", span, np.array(mats)).reshape(-1, n * n)
            u, s, vt = np.linalg.svd(prods, full_matrices=False)
            keep = s > 1e-10 * max(1.0, s[0] if s.size else 0.0)
            if not keep.any():
                return k
            span = vt[keep].reshape(-1, n, n)
        raise ValueError("values do not generate a nilpotent algebra")

    def to_dict(self) -> dict:
        c = self.numeric()
        d = {
            "kind": self.kind,
            "dim": self.size,
            "A": [[[[v.real, v.imag] for v in row] for row in mat] for mat in c],
        }
        d.update({k: v for k, v in self.meta.items() if k != "B1"})
        return d


# polynomial helpers (scalar polynomials are ascending coefficient lists)

def _poly(c) -> list:
    """Parse a polynomial given as numbers or ``[re, im]`` pairs."""
    out = []
    for v in c:
        if isinstance(v, (list, tuple)):
            out.append(complex(v[0], v[1]))
        else:
            out.append(v)
    return out if out else [0]


def _exact_poly(c) -> list:
    return [ex.gauss(v) for v in _poly(c)]


def _pad(polys) -> int:
    return max(len(p) for p in polys)


def _poly_matrix(entries, rows: int, cols: int) -> np.ndarray:
    """Assemble an exact (d+1, rows, cols) array from nested scalar polynomials."""
    d = max(len(p) for row in entries for p in row)
    out = ex.exact_zeros((d, rows, cols))
    for i, row in enumerate(entries):
        for j, p in enumerate(row):
            for k, v in enumerate(p):
                out[k, i, j] = v
    return out


def _scale(p, s):
    return [s * v for v in p]


def _add(p, q):
    n = max(len(p), len(q))
    p = list(p) + [0] * (n - len(p))
    q = list(q) + [0] * (n - len(q))
    return [a + b for a, b in zip(p, q)]


def assemble_from_B(B: np.ndarray) -> np.ndarray:
    """``A = [[0, B], [-B^T I13, 0]]`` for a (d+1, 4, n) matrix polynomial ``B``."""
    d, _, n = B.shape
    exact = B.dtype == object
    A = ex.exact_zeros((d, n + 4, n + 4)) if exact else np.zeros((d, n + 4, n + 4), complex)
    for k in range(d):
        A[k, :4, 4:] = B[k]
        A[k, 4:, :4] = -(B[k].T @ (ex.to_exact(I13) if exact else I13))
    return A


def isotropy_polynomial(B: np.ndarray) -> np.ndarray:
    """Coefficients of ``B^T I13 B`` as a matrix polynomial."""
    exact = B.dtype == object
    I = ex.to_exact(I13) if exact else I13
    BT = np.array([b.T for b in B])
    n = B.shape[2]
    IB = np.array([I @ b for b in B])
    out = ex.exact_zeros((2 * B.shape[0] - 1, n, n)) if exact else \
        np.zeros((2 * B.shape[0] - 1, n, n), complex)
    for i in range(B.shape[0]):
        for j in range(B.shape[0]):
            out[i + j] = out[i + j] + BT[i] @ IB[j]
    return out


def check_isotropy(B: np.ndarray) -> None:
    """Raise :class:`PotentialError` naming the first column pair with ``v_j^T I13 v_l != 0``."""
    Q = isotropy_polynomial(B)
    n = B.shape[2]
    for j in range(n):
        for l in range(j, n):
            coeffs = Q[:, j, l]
            bad = [c for c in coeffs if (bool(c) if B.dtype == object else abs(c) > 1e-12)]
            if bad:
                raise PotentialError(
                    f"isotropy violated for columns ({j + 1}, {l + 1})",
                    invariant="isotropy B1^T I13 B1 = 0",
                    residual=(j + 1, l + 1),
                )


# builders

def make_nilpotent_potential(ce: CanonicalElement, components: dict, symmetric_space: bool = True,
                             tol: float = 1e-10) -> NormalizedPotential:
    """Assemble ``A(z) = sum_j A_j(z)`` with ``A_j`` valued in the grade ``j`` of ``xi``.

    Parameters
    ----------
    ce : CanonicalElement
        Grading element (compact coordinates; the result is mapped to group
        coordinates through the dual conjugator).
    components : dict
        ``grade -> (d+1, N, N)`` matrix polynomial in compact coordinates.
    symmetric_space : bool
        Only odd grades are allowed when true.

    Raises
    ------
    PotentialError
        For a coefficient outside its declared grade or an even grade in
        symmetric-space mode.
    """
    g = ce.grading
    size = 2 * ce.m
    degs = sorted(components)
    for j in degs:
        if j < 1 or j > g.height:
            raise PotentialError(f"grade {j} outside 1..{g.height}", "grade range")
        if symmetric_space and j % 2 == 0:
            raise PotentialError(f"even grade {j} in symmetric-space mode", "odd grades only")
    d = max((np.asarray(components[j]).shape[0] for j in degs), default=1)
    total = np.zeros((d, size, size), complex)
    for j in degs:
        c = np.asarray(components[j], complex)
        for k, mat in enumerate(c):
            scale = max(1.0, float(np.abs(mat).max()))
            if g.component_residual(mat, j) > tol * scale:
                raise PotentialError(f"coefficient of z^{k} is not in grade {j}", "grade membership")
            total[k] += mat
    T = np.eye(size, dtype=complex)
    T[0, 0] = 1j
    Ti = np.linalg.inv(T)
    coeffs = np.array([Ti @ c @ T for c in total])
    xi_g = Ti @ ce.xi @ T
    pot = NormalizedPotential(coeffs, kind="graded",
                              value_space=ValueSpace(xi_g, tuple(degs)),
                              meta={"m": ce.m, "multiplicities": list(ce.multiplicities)})
    return pot


@dataclass
class ColumnPair:
    """One pair of columns of ``B1``.

    ``type "i"``: ``h = [h1, h3, h1_hat, h3_hat]``; columns are
    ``(h1, h1, h3, i h3)`` and the hatted analogue.
    ``type "ii"``: ``h = [h1, h2, h3, h4]``; columns ``v`` and ``i v``.
    """

    type: str
    h: list


@dataclass
class WillmorePotentialSpec:
    m: int
    family: int
    columns: list


def _pair_columns(pair: ColumnPair):
    h = [_exact_poly(p) for p in pair.h]
    if len(h) != 4:
        raise PotentialError("each column pair needs four polynomials", "column data")
    i = ex.gauss(1j)
    if pair.type == "i":
        h1, h3, g1, g3 = h
        return [h1, h1, h3, _scale(h3, i)], [g1, g1, g3, _scale(g3, i)]
    if pair.type == "ii":
        return list(h), [_scale(p, i) for p in h]
    raise PotentialError(f"unknown column type {pair.type!r}", "column data")


def make_willmore_potential(spec: WillmorePotentialSpec) -> NormalizedPotential:
    """Potential of the given family: the first ``family - 1`` pairs are of type (ii).

    Raises
    ------
    PotentialError
        For a bad family index, a column pattern that does not match the
        family, or a failed isotropy identity.
    """
    m, fam = spec.m, spec.family
    if m < 3:
        raise PotentialError("need m >= 3", "dimension")
    if not 1 <= fam <= m - 1:
        raise PotentialError(f"family must lie in 1..{m - 1}", "family index")
    if len(spec.columns) != m - 2:
        raise PotentialError(f"need {m - 2} column pairs", "column data")
    for j, pair in enumerate(spec.columns):
        want = "ii" if j < fam - 1 else "i"
        if pair.type != want:
            raise PotentialError(f"pair {j + 1} must be of type ({want}) in family {fam}",
                                 "family pattern")
    cols = []
    for pair in spec.columns:
        v, w = _pair_columns(pair)
        cols += [v, w]
    entries = [[cols[c][r] for c in range(len(cols))] for r in range(4)]
    B = _poly_matrix(entries, 4, len(cols))
    check_isotropy(B)
    return NormalizedPotential(assemble_from_B(B), kind="willmore",
                               meta={"m": m, "family": fam, "B1": B})


def example_s6_B1() -> np.ndarray:
    """``B1`` of the S^6 example as an exact (2, 4, 4) matrix polynomial."""
    half = ex.gauss(0.5)
    i = ex.gauss(1j)
    one = ex.gauss(1)
    z0 = [[0, 0, -i, one], [0, 0, -i, one], [-2 * one, -2 * i, 0, 0], [2 * i, -2 * one, 0, 0]]
    z1 = [[2 * i, -2 * one, 0, 0], [-2 * i, 2 * one, 0, 0], [0, 0, -one, -i], [0, 0, -i, one]]
    B = ex.exact_zeros((2, 4, 4))
    for r in range(4):
        for c in range(4):
            B[0, r, c] = ex.gauss(z0[r][c]) * half
            B[1, r, c] = ex.gauss(z1[r][c]) * half
    return B


def example_s6_spec() -> WillmorePotentialSpec:
    """The S^6 example written as a family-2 specification for m = 4."""
    h = 0.5
    return WillmorePotentialSpec(4, 2, [
        ColumnPair("ii", [[0, 1j], [0, -1j], [-1], [1j]]),
        ColumnPair("i", [[-0.5j], [0, -0.5], [h], [0, -0.5j]]),
    ])


def example_s6_potential() -> NormalizedPotential:
    B = example_s6_B1()
    check_isotropy(B)
    return NormalizedPotential(assemble_from_B(B), kind="willmore",
                               meta={"m": 4, "family": 2, "B1": B, "name": "s6-example"})


def make_s4_potential(f1p, f2p, f3p, f4p) -> NormalizedPotential:
    """Potential built from the derivatives ``f_k'`` (ascending coefficient lists).

    Raises
    ------
    PotentialError
        If ``f1' f4' + f2' f3'`` is not identically zero.
    """
    f1, f2, f3, f4 = (_exact_poly(p) for p in (f1p, f2p, f3p, f4p))
    res = _add(_pmul(f1, f4), _pmul(f2, f3))
    if any(bool(c) for c in res):
        raise PotentialError(
            "constraint f1' f4' + f2' f3' = 0 violated",
            invariant="s4 constraint f1'f4' + f2'f3' = 0",
            residual=[complex(float(c.x), float(c.y)) for c in res],
        )
    i = ex.gauss(1j)
    half = ex.gauss(0.5)
    a = _add(f3, _scale(f2, -1))
    b = _add(f3, f2)
    c = _add(f4, _scale(f1, -1))
    d = _add(f4, f1)
    entries = [
        [_scale(a, i * half), _scale(a, -half)],
        [_scale(b, i * half), _scale(b, -half)],
        [_scale(c, half), _scale(c, i * half)],
        [_scale(d, i * half), _scale(d, -half)],
    ]
    B = _poly_matrix(entries, 4, 2)
    check_isotropy(B)
    return NormalizedPotential(assemble_from_B(B), kind="s4",
                               meta={"m": 3, "B1": B, "f_prime": [f1p, f2p, f3p, f4p]})


def _pmul(p, q):
    out = [ex.gauss(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] = out[i + j] + a * b
    return out


def zero_potential(n: int = 4) -> NormalizedPotential:
    return NormalizedPotential(np.zeros((1, n + 4, n + 4), complex), kind="zero")


def timelike_probe_potential(n: int = 4) -> NormalizedPotential:
    """Constant potential ``A = X`` with ``X^3 = 0`` built from a timelike direction.

    ``X = [[0, b c^T], [-c b^T I13, 0]]`` with ``b = e_0`` and
    ``c = e_1 + i e_2`` isotropic in ``C^n``. Unlike the isotropic column
    families, the hermitian form ``B^* I13 B`` is negative here, so the
    noncompact frame degenerates on ``|z| = 1`` and for ``|z| > 1`` the real
    factor leaves the identity component.
    """
    if n < 2:
        raise PotentialError("probe potential needs n >= 2", "size")
    b = np.zeros(4, complex)
    b[0] = 1.0
    c = np.zeros(n, complex)
    c[0], c[1] = 1.0, 1j
    A = assemble_from_B(np.outer(b, c)[None])
    return NormalizedPotential(ex.to_exact(A), kind="probe")


# random generators used by tests and experiments

def _gauss_int(rng, low=-2, high=3):
    return complex(int(rng.integers(low, high)), int(rng.integers(low, high)))


def random_willmore_spec(m: int, family: int, rng, degree: int = 2) -> WillmorePotentialSpec:
    """Random family member with polynomial entries of degree <= ``degree``.

    All columns lie in the constant isotropic plane ``{psi (x) chi}`` for a
    fixed spinor ``psi``, which makes the isotropy identity hold exactly.
    """
    a, b = _gauss_int(rng), _gauss_int(rng)
    while a == 0 and b == 0:
        a = _gauss_int(rng)

    def rpoly():
        return [_gauss_int(rng) for _ in range(degree + 1)]

    def null_vector(c, d):
        # (ac+bd, ac-bd, ad+bc, -i(ad-bc)) is isotropic for I13
        ac, bd = [a * x for x in c], [b * x for x in d]
        ad, bc = [a * x for x in d], [b * x for x in c]
        return [_add(ac, bd), _add(ac, _scale(bd, -1)), _add(ad, bc),
                _scale(_add(ad, _scale(bc, -1)), -1j)]

    cols = []
    for j in range(m - 2):
        if j < family - 1:
            cols.append(ColumnPair("ii", null_vector(rpoly(), rpoly())))
        else:
            c1, c2 = rpoly(), rpoly()
            # chi = (c, 0) gives (ac, ac, bc, i bc); vectors sharing psi are orthogonal
            cols.append(ColumnPair("i", [_scale(c1, a), _scale(c1, b), _scale(c2, a), _scale(c2, b)]))
    return WillmorePotentialSpec(m, family, cols)


def random_s4_derivatives(rng, degree: int = 2):
    """Random ``(f1', f2', f3', f4')`` with ``f1' f4' + f2' f3' = 0``.

    Uses ``f1' = p q, f4' = r s, f2' = p r, f3' = -q s`` with factors of
    degree ``degree // 2`` and ``degree - degree // 2``.
    """
    d1, d2 = degree // 2, degree - degree // 2
    p = [_gauss_int(rng) for _ in range(d1 + 1)]
    q = [_gauss_int(rng) for _ in range(d2 + 1)]
    r = [_gauss_int(rng) for _ in range(d2 + 1)]
    s = [_gauss_int(rng) for _ in range(d1 + 1)]
    while not any(p) or not any(q) or not any(r):
        p = [_gauss_int(rng) for _ in range(d1 + 1)]
        q = [_gauss_int(rng) for _ in range(d2 + 1)]
        r = [_gauss_int(rng) for _ in range(d2 + 1)]
    mul = np.polynomial.polynomial.polymul
    return [list(mul(p, q)), list(mul(p, r)), list(-mul(q, s)), list(mul(r, s))]


def random_graded_potential(m: int, rng, max_weight: int = 3, z_degree: int = 1,
                            density: float = 0.5) -> NormalizedPotential:
    """Random exact potential valued in the odd grades of a torus element with ``exp(pi xi) = D``.

    The torus coordinates are ``(a1, a2, a3, ...)`` with ``a1, a2`` odd and the
    rest even, all in ``[0, max_weight]``; the involution ``exp(pi xi)`` is
    then ``diag(-I_4, I_{2m-4})``. Values are Gaussian-integer combinations of
    root vectors ``u w^T - w u^T`` with ``u = e_2j -+ i e_2j+1``, so every
    coefficient is an exact Gaussian integer.
    """
    from .roots import build_torus_and_roots, root_value, torus_element

    odd = [w for w in range(1, max_weight + 1) if w % 2]
    even = [w for w in range(0, max_weight + 1) if w % 2 == 0]
    coords = [int(rng.choice(odd)), int(rng.choice(odd))] + [int(rng.choice(even)) for _ in range(m - 2)]
    rs = build_torus_and_roots(m)
    size = 2 * m
    chosen = [r for r in rs.roots if root_value(r, coords) > 0 and root_value(r, coords) % 2 == 1]
    total = np.zeros((z_degree + 1, size, size), complex)
    degrees = set()
    for r in chosen:
        if rng.random() > density:
            continue
        X = _integral_root_vector(r, m)
        for k in range(z_degree + 1):
            total[k] += _gauss_int(rng, -1, 2) * X
        degrees.add(int(root_value(r, coords)))
    T = np.diag([1j] + [1.0] * (size - 1))
    Ti = np.diag([-1j] + [1.0] * (size - 1))
    coeffs = ex.to_exact(np.array([Ti @ c @ T for c in total]))
    xi = torus_element(coords, m)
    height = max(abs(int(root_value(r, coords))) for r in rs.roots)
    return NormalizedPotential(coeffs, kind="graded",
                               value_space=ValueSpace(Ti @ xi @ T, tuple(sorted(degrees))),
                               meta={"m": m, "coords": coords, "height": height})


def _integral_root_vector(root, m: int) -> np.ndarray:
    j, k = [i for i, r in enumerate(root) if r != 0]
    u = np.zeros(2 * m, complex)
    w = np.zeros(2 * m, complex)
    u[2 * j], u[2 * j + 1] = 1, -1j * root[j]
    w[2 * k], w[2 * k + 1] = 1, -1j * root[k]
    return np.outer(u, w) - np.outer(w, u)


# JSON

def potential_from_dict(data: dict) -> NormalizedPotential:
    """Build a potential from the JSON schema described in the README."""
    kind = data.get("kind")
    if "A" in data:
        A = np.array([[[complex(v[0], v[1]) for v in row] for row in mat] for mat in data["A"]])
        return NormalizedPotential(A, kind=kind or "graded")
    if kind == "willmore":
        cols = [ColumnPair(c["type"], c["h"]) for c in data["columns"]]
        return make_willmore_potential(WillmorePotentialSpec(int(data["m"]), int(data["family"]), cols))
    if kind == "s4":
        if "f_prime" in data:
            fp = data["f_prime"]
        else:
            fp = data["columns"][0]["h"]
        return make_s4_potential(*fp)
    if kind == "s6-example":
        return example_s6_potential()
    if kind == "probe":
        return timelike_probe_potential(int(data.get("n", 4)))
    if kind == "zero":
        return zero_potential(int(data.get("n", 4)))
    raise PotentialError(f"unknown potential kind {kind!r}", "schema")


def load_potential(path: str) -> NormalizedPotential:
    with open(path) as fh:
        return potential_from_dict(json.load(fh))
