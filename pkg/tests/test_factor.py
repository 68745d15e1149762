import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from unitonlab.dpw import picard_integrate
from unitonlab.factor import (CellViolation, birkhoff, duality_check, iwasawa,
                              reconstruction_residual, spectral_factor)
from unitonlab.liealg import LieSetting, indefinite_metric, sigma_conjugator
from unitonlab.loops import Loop, evaluate, is_real_form, is_twisted, multiply, unit_circle
from unitonlab.potentials import random_graded_potential, timelike_probe_potential

seeds = st.integers(0, 2**32 - 1)
S = LieSetting(4)
J = indefinite_metric(8)


def certified_loop(seed, m=4):
    rng = np.random.default_rng(seed)
    eta = random_graded_potential(m, rng)
    z = complex(*rng.uniform(-0.6, 0.6, 2))
    return picard_integrate(eta).loop_at(z)


def null_rotation():
    """Nilpotent element of so(1,3) (block k^C): B^3 = 0."""
    u = np.zeros(8)
    u[0] = u[1] = 1.0
    w = np.zeros(8)
    w[2] = 1.0
    return (np.outer(u, w) - np.outer(w, u)) @ J


def test_plus_loop_is_its_own_plus_factor():
    B = null_rotation()
    x = Loop({0: np.eye(8), 1: B, 2: B @ B / 2})
    r = birkhoff(x)
    assert (r.F_minus - Loop.identity(8)).norm() < 1e-12
    assert (r.F_plus - x).norm() < 1e-12


def test_normalized_minus_loop():
    x = certified_loop(5)
    r = birkhoff(x)
    assert (r.F_minus - x).norm() < 1e-10 and (r.F_plus - Loop.identity(8)).norm() < 1e-10


def test_birkhoff_round_trip():
    Fm = certified_loop(11)
    B = null_rotation()
    plus = Loop({0: np.eye(8), 1: 0.7 * B, 2: 0.49 * B @ B / 2})
    r = birkhoff(multiply(Fm, plus))
    assert r.in_big_cell
    assert (r.F_minus - Fm).norm() < 1e-9


def test_scalar_spectral_factor():
    P = Loop({-1: [[1.0]], 0: [[2.0]], 1: [[1.0]]})
    sf = spectral_factor(P)
    assert abs(sf.W.coefficient(0)[0, 0] - 1) < 1e-12
    assert abs(sf.W.coefficient(1)[0, 0] - 1) < 1e-12
    for lam in unit_circle(16):
        w = evaluate(sf.W, lam)[0, 0]
        assert abs(abs(w) ** 2 - (2 + 2 * lam.real)) < 1e-11


def test_real_loop_is_fixed_up_to_gauge():
    rng = np.random.default_rng(3)
    Kc = np.einsum("n,nab->ab", rng.normal(size=len(S.k_basis)), S.k_basis)
    g = Loop.constant(expm(0.3 * Kc))
    r = iwasawa(g, "noncompact")
    assert r.residual < 1e-10
    assert r.F_plus.support == [0]
    # F_real differs from x by a constant K-element
    k = np.linalg.solve(evaluate(g, 1.0), evaluate(r.F_real, 1.0))
    assert np.abs(S.sigma(k) - k).max() < 1e-10


def test_s6_round_trip(s6_frame):
    x = s6_frame.loop_at(0.3 + 0.1j)
    for form in ("compact", "noncompact"):
        r = iwasawa(x, form)
        assert r.residual < 1e-8 and r.reality_residual < 1e-8
        assert is_real_form(r.F_real, form)[0]
        assert r.gauge_note


def test_duality_identity():
    rep = duality_check(Loop.identity(8))
    assert rep["agree"] and rep["noncompact"] == "ok"


def test_duality_off_cell_probe():
    f = picard_integrate(timelike_probe_potential())
    rep = duality_check(f.loop_at(1.5))
    assert rep["compact_vs_direct"] < 1e-8
    assert rep["noncompact"].startswith("cell violation")
    with pytest.raises(CellViolation):
        iwasawa(f.loop_at(1.5), "noncompact")
    assert duality_check(f.loop_at(0.5))["noncompact"] == "ok"


@given(seeds)
def test_birkhoff_uniqueness_across_depth(seed):
    x = certified_loop(seed)
    base = birkhoff(x)
    deeper = birkhoff(x, ansatz_depth=base.depth + 2)
    assert base.residual < 1e-9
    assert (base.F_minus - deeper.F_minus).norm() < 1e-10


@given(seeds)
def test_iwasawa_properties(seed):
    x = certified_loop(seed)
    D = sigma_conjugator(4)
    r = iwasawa(x, "compact")
    assert r.residual < 1e-8 and r.reality_residual < 1e-8 and r.twist_residual < 1e-8
    assert reconstruction_residual(x, r.F_real, r.F_plus) < 1e-8
    assert is_twisted(x, D)[0]
    assert r.F_plus.lo == 0


@given(seeds)
def test_spectral_factor_positive_diagonal(seed):
    rng = np.random.default_rng(seed)
    W = Loop({0: np.triu(rng.normal(size=(3, 3))) + 3 * np.eye(3), 1: rng.normal(size=(3, 3))})
    P = multiply(W.star(), W)
    sf = spectral_factor(P)
    d = np.diag(sf.W.coefficient(0))
    assert np.all(d.real > 0) and np.abs(d.imag).max() < 1e-12
    assert np.abs(np.tril(sf.W.coefficient(0), -1)).max() < 1e-12
    for lam in unit_circle(8):
        w = evaluate(sf.W, lam)
        assert np.abs(w.conj().T @ w - evaluate(P, lam)).max() < 1e-8


@given(seeds)
def test_factor_stability(seed):
    x = certified_loop(seed, m=3)
    base = birkhoff(x)
    j = x.lo if x.lo is not None else 0
    E = np.random.default_rng(seed).normal(size=(x.dim, x.dim))
    # the F_minus shift is linear in eps on the big cell
    d1 = _perturbed_distance(x, E, j, 1e-6, base)
    d2 = _perturbed_distance(x, E, j, 1e-7, base)
    assert d1 < 1e-3 and d2 <= 0.2 * d1 + 1e-12


def _perturbed_distance(x, E, j, eps, base):
    """``|F_-(x + eps E lam^j) - F_-(x)|`` with the inverse taken by discrete Fourier transform."""
    y = x + Loop({j: eps * E}, dim=x.dim)
    lams = unit_circle(64)
    y_inv = Loop({k: np.mean([np.linalg.inv(evaluate(y, l)) * l ** (-k) for l in lams], 0)
                  for k in range(-8, 9)}, dim=x.dim, prune=1e-13)
    r = birkhoff(y, x_inv=y_inv, ansatz_depth=base.depth)
    return (r.F_minus - base.F_minus).norm()
