import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from conftest import rand_c
from unitonlab.liealg import LieSetting, parse_signature
from unitonlab.loops import is_twisted

S = LieSetting(4)


def random_gC(rng, s=S):
    return np.einsum("n,nab->ab", rand_c(rng, len(s.basis)), s.basis)


def test_dimensions():
    for n in (1, 2, 4, 6):
        s = LieSetting(n)
        assert len(s.k_basis) == 6 + n * (n - 1) // 2
        assert len(s.p_basis) == 4 * n
        assert len(s.basis) == (n + 4) * (n + 3) // 2


def test_involution_squares_to_identity():
    assert np.array_equal(S.D @ S.D, np.eye(8))


def test_cartan_relations_on_basis():
    def br(a, b):
        return a @ b - b @ a

    for a in S.k_basis:
        for b in S.k_basis:
            assert S.in_k_residual(br(a, b)) == 0
        for b in S.p_basis:
            assert S.in_p_residual(br(a, b)) == 0
    for a in S.p_basis:
        for b in S.p_basis:
            assert S.in_k_residual(br(a, b)) == 0


def test_sigma_commutes_with_tau_on_basis():
    for b in S.basis:
        x = (1 + 2j) * b
        assert np.array_equal(S.sigma(S.tau(x)), S.tau(S.sigma(x)))


def test_project_examples():
    rng = np.random.default_rng(0)
    k = S.k_basis[3] * (1 + 1j)
    p = S.p_basis[5] * 2.0
    assert np.array_equal(S.project_k_p(k)[1], np.zeros((8, 8)))
    assert np.array_equal(S.project_k_p(p)[0], np.zeros((8, 8)))
    x = random_gC(rng)
    kp, pp = S.project_k_p(x)
    assert np.abs(kp + pp - x).max() < 1e-15
    assert np.abs(kp[:4, 4:]).max() == 0 and np.abs(pp[:4, :4]).max() == 0
    with pytest.raises(ValueError):
        S.project_k_p(np.eye(8))


def test_alpha_lambda():
    z = np.zeros((8, 8))
    assert S.alpha_lambda(z, z, z).norm() == 0
    rng = np.random.default_rng(1)
    ak = np.einsum("n,nab->ab", rng.normal(size=len(S.k_basis)), S.k_basis)
    ap = np.einsum("n,nab->ab", rand_c(rng, len(S.p_basis)), S.p_basis)
    a = S.alpha_lambda(ak, ap, ap.conj())
    assert a.support == [-1, 0, 1]
    for lam in np.exp(2j * np.pi * np.arange(8) / 8):
        v = a(lam)
        assert np.abs(v.imag).max() < 1e-14 and S.gC_residual(v) < 1e-14
    assert is_twisted(a, S.D)[1] == 0
    with pytest.raises(ValueError):
        S.alpha_lambda(ap, ap, ap)


def test_alpha_of_s6_frame_is_twisted(s6_small_grid):
    from unitonlab.harmonic import alpha_loops
    ax, ay = alpha_loops(s6_small_grid, 0.1 + 0.2j)
    assert max(is_twisted(ax, S.D, tol=np.inf)[1], is_twisted(ay, S.D, tol=np.inf)[1]) < 1e-12


def test_compact_dual_examples():
    assert np.allclose(S.to_compact_dual(np.eye(8)), np.eye(8))
    rng = np.random.default_rng(2)
    X = np.einsum("n,nab->ab", rng.normal(size=len(S.basis)), S.basis)
    g = expm(0.4 * X)
    y = S.to_compact_dual(g)
    assert np.abs(y.T @ y - np.eye(8)).max() < 1e-12
    K = np.einsum("n,nab->ab", rng.normal(size=21), S.basis[7:])  # stabilizer of e_0: so(7)
    h = expm(K)
    yh = S.to_compact_dual(h)
    assert np.abs(yh.imag).max() < 1e-14 and np.abs(yh.T @ yh - np.eye(8)).max() < 1e-12


def test_parse_signature():
    assert parse_signature("1,7") == 4
    with pytest.raises(ValueError):
        parse_signature("2,6")
    with pytest.raises(ValueError):
        LieSetting(0)


@given(st.integers(0, 2**32 - 1))
def test_theta_and_tau_fix_their_real_forms(seed):
    rng = np.random.default_rng(seed)
    X = np.einsum("n,nab->ab", rng.normal(size=len(S.basis)), S.basis)
    assert np.abs(S.tau(X) - X).max() == 0
    Y = S.from_compact_dual(np.einsum("n,nab->ab", rng.normal(size=28), _so8()))
    assert np.abs(S.theta(Y) - Y).max() < 1e-14


def _so8():
    out = []
    for a in range(8):
        for b in range(a + 1, 8):
            e = np.zeros((8, 8))
            e[a, b], e[b, a] = 1, -1
            out.append(e)
    return np.array(out)


@given(st.integers(0, 2**32 - 1))
def test_projection_recombines(seed):
    x = random_gC(np.random.default_rng(seed))
    k, p = S.project_k_p(x)
    assert np.abs(k + p - x).max() < 1e-13
    assert S.in_k_residual(k) < 1e-14 and S.in_p_residual(p) < 1e-14
