"""End-to-end acceptance criteria; each test records one PASS/FAIL line in the terminal summary."""
import time
from fractions import Fraction

import numpy as np
import pytest
from numpy.polynomial import polynomial as npoly
from scipy.linalg import expm

from conftest import ACCEPTANCE_LINES, square_zero_potential
from unitonlab import exact as ex
from unitonlab.dpw import picard_integrate
from unitonlab.factor import birkhoff, duality_check, iwasawa, spectral_factor
from unitonlab.harmonic import (dress, extended_solution, flatness_residual, frame_grid,
                                random_dressing_loop, uniton_degree)
from unitonlab.liealg import sigma_conjugator
from unitonlab.loops import Loop, is_twisted, multiply
from unitonlab.potentials import (PotentialError, example_s6_potential, isotropy_polynomial,
                                  make_s4_potential, make_willmore_potential,
                                  random_graded_potential, random_s4_derivatives,
                                  random_willmore_spec, timelike_probe_potential)
from unitonlab.roots import (all_selectors, canonical_element, element_from_multiplicities,
                             gamma_conjugate, parabolic_odd_identity_check,
                             reduction_identity_check)
from unitonlab.willmore import (check_s4_data, eval_s4_surface, rotation_identity_residual,
                                sample_s6, verify_surface)

LAMS4 = [1.0, np.exp(1j * np.pi / 4), 1j, -1.0]


def record(label: str, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")


def expect(label: str, checks: dict) -> None:
    """Record one line for ``checks = {name: (value, passed)}`` and assert all passed."""
    ok = all(p for _, p in checks.values())
    record(label, ok, "; ".join(f"{k}={v}" for k, (v, _) in checks.items()))
    failed = [k for k, (_, p) in checks.items() if not p]
    assert ok, f"{label}: failed {failed}"


def _g(x) -> str:
    return f"{x:.3g}"


# 1. S^6 example end to end


def test_criterion_1_s6_end_to_end():
    t0 = time.perf_counter()
    eta = example_s6_potential()
    frame = picard_integrate(eta)
    xs = np.linspace(-1, 1, 21)
    fr = frame_grid(eta, xs, xs, frame=frame)
    flat = flatness_residual(fr, LAMS4, stencil="local")
    uni = uniton_degree(extended_solution(fr))
    elapsed = time.perf_counter() - t0
    expect("1 S^6 end-to-end (21x21)", {
        "maurer_cartan": (frame.residual, frame.residual == 0),
        "singular_points": (int(fr.singular.sum()), not fr.singular.any()),
        "flatness_max": (_g(flat.max), flat.max < 1e-7),
        "uniton_degree": (uni.degree, uni.degree == 2),
        "runtime_s": (f"{elapsed:.1f}", elapsed < 120),
    })


# 2. closed-form checks


def test_criterion_2_closed_form():
    xs = np.linspace(-1.5, 1.5, 41)
    lams = np.exp(2j * np.pi * np.arange(8) / 8)
    norm = max(verify_surface(sample_s6(xs, xs, lam))["norm_defect"] for lam in lams)
    rot = rotation_identity_residual(xs, xs, lams)
    span = verify_surface(sample_s6(xs, xs))["span_rank"]
    coarse = verify_surface(sample_s6(*[np.linspace(-1, 1, 41)] * 2))["conformality_defect"]
    fine = verify_surface(sample_s6(*[np.linspace(-1, 1, 81)] * 2))["conformality_defect"]
    expect("2 closed form (41x41 x 8 lambda)", {
        "norm": (_g(norm), norm < 1e-12),
        "rotation": (_g(rot), rot < 1e-12),
        "span_rank": (span, span == 7),
        "conformality_h2_ratio": (f"{coarse / fine:.2f}", 3.0 < coarse / fine < 5.0),
    })


@pytest.mark.xfail(strict=True, reason="second-order conformality defect at h = 0.05 is "
                   "about 2.9e-3 for this surface; 1e-4 needs h near 0.01")
def test_criterion_2_conformality_threshold():
    xs = np.linspace(-1, 1, 41)
    d2 = verify_surface(sample_s6(xs, xs))["conformality_defect"]
    d4 = verify_surface(sample_s6(xs, xs), order=4)["conformality_defect"]
    record("2 conformality < 1e-4 at h=0.05 (xfail)", d2 < 1e-4,
           f"second-order={_g(d2)}; fourth-order={_g(d4)}")
    assert d2 < 1e-4


# 3. factorization suite


def _certified(seed: int):
    rng = np.random.default_rng(seed)
    m = (3, 4)[seed % 2]
    eta = random_graded_potential(m, rng)
    Fm = picard_integrate(eta).loop_at(complex(*rng.uniform(-0.6, 0.6, 2)))
    return Fm, random_dressing_loop(2 * m - 4, rng), m


def test_criterion_3_factorization_suite():
    worst = dict(deg=0, birk=0.0, match=0.0, uniq=0.0, iw=0.0, real=0.0)
    for seed in range(50):
        Fm, hp, m = _certified(seed)
        worst["deg"] = max(worst["deg"], -(Fm.lo or 0))
        r = birkhoff(multiply(Fm, hp))
        deeper = birkhoff(multiply(Fm, hp), ansatz_depth=r.depth + 2)
        worst["birk"] = max(worst["birk"], r.residual)
        worst["match"] = max(worst["match"], (r.F_minus - Fm).norm())
        worst["uniq"] = max(worst["uniq"], (r.F_minus - deeper.F_minus).norm())
        iw = iwasawa(Fm, "compact")
        worst["iw"] = max(worst["iw"], iw.residual)
        worst["real"] = max(worst["real"], iw.reality_residual, iw.twist_residual,
                            is_twisted(iw.F_real, sigma_conjugator(2 * m - 4))[1])
    sf = spectral_factor(Loop({-1: [[1.0]], 0: [[2.0]], 1: [[1.0]]}))
    oracle = max(abs(sf.W.coefficient(0)[0, 0] - 1), abs(sf.W.coefficient(1)[0, 0] - 1),
                 float(np.abs(sf.W.coefficient(2)).max()) if 2 in sf.W.support else 0.0)
    expect("3 factorization suite (50 loops)", {
        "max_lambda_degree": (worst["deg"], worst["deg"] <= 6),
        "birkhoff": (_g(max(worst["birk"], worst["match"])), max(worst["birk"], worst["match"]) < 1e-9),
        "uniqueness": (_g(worst["uniq"]), worst["uniq"] < 1e-10),
        "iwasawa": (_g(worst["iw"]), worst["iw"] < 1e-8),
        "reality_twist": (_g(worst["real"]), worst["real"] < 1e-8),
        "scalar_oracle": (_g(oracle), oracle < 1e-12),
    })


# 4. duality


def test_criterion_4_duality():
    worst, noncompact_ok = 0.0, 0
    for seed in range(20):
        rng = np.random.default_rng(1000 + seed)
        eta = random_graded_potential((3, 4)[seed % 2], rng)
        x = picard_integrate(eta).loop_at(complex(*rng.uniform(-0.6, 0.6, 2)))
        rep = duality_check(x)
        vals = [v for k, v in rep.items() if "_vs_" in k and v is not None]
        worst = max(worst, *vals)
        noncompact_ok += rep["noncompact"] == "ok"
    probe = duality_check(picard_integrate(timelike_probe_potential()).loop_at(1.5))
    expect("4 duality (20 potentials + off-cell probe)", {
        "three_way_max": (_g(worst), worst < 1e-8),
        "noncompact_in_cell": (f"{noncompact_ok}/20", noncompact_ok > 0),
        "probe_z=1.5": (probe["noncompact"].split(":")[0],
                        probe["noncompact"].startswith("cell violation")),
    })


# 5. roots


def test_criterion_5_roots():
    theta_ok = dims_ok = parabolic_ok = True
    closure = gamma = 0.0
    lam = np.exp(0.7j)
    for m in (2, 3, 4, 5):
        sels = list(all_selectors(m))
        assert len(sels) == 2**m - 1
        for sel in sels:
            ce = canonical_element(m, sel)
            g = ce.grading
            theta_ok &= all(v in (Fraction(0), Fraction(1)) for v in ce.simple_root_values())
            dims_ok &= sum(g.dims().values()) == m * (2 * m - 1)
            closure = max(closure, g.closure_residual())
            parabolic_ok &= parabolic_odd_identity_check(ce)
            for j in g.degrees:
                X = g.basis(j)[0]
                loop = gamma_conjugate(ce, X)
                # gamma^{-1} (lam^{-1} X) gamma = lam^{-j-1} X
                direct = expm(-0.7 * ce.xi) @ X @ expm(0.7 * ce.xi) / lam
                gamma = max(gamma, float(np.abs(loop(lam) / lam - direct).max()),
                            float(np.abs(lam ** (-j - 1) * X - direct).max()))
    rng = np.random.default_rng(5)
    red_ok, count = True, 0
    while count < 10:
        m = int(rng.integers(3, 6))
        mult = rng.integers(0, 4, size=m)
        ce = element_from_multiplicities(m, mult)
        if not mult.any() or ce.is_canonical():
            continue
        red_ok &= reduction_identity_check(ce)[0]
        count += 1
    expect("5 roots (m=2..5, all selectors)", {
        "theta_in_{0,i}": (theta_ok, theta_ok),
        "closure": (_g(closure), closure < 1e-10),
        "dimension_sum": (dims_ok, dims_ok),
        "gamma_conjugation": (_g(gamma), gamma < 1e-10),
        "reduction_g0_10_random": (red_ok, red_ok),
        "pr_cap_p_equals_odd": (parabolic_ok, parabolic_ok),
    })


# 6. Picard termination


def test_criterion_6_picard_termination():
    ok, worst_gap = True, -10
    for seed in range(30):
        rng = np.random.default_rng(seed)
        eta = random_graded_potential((3, 4)[seed % 2], rng)
        f = picard_integrate(eta)
        r = eta.meta["height"]
        worst_gap = max(worst_gap, f.steps_used - (r + 1))
        ok &= f.steps_used <= r + 1 and f.residual == 0
    eta, N = square_zero_potential()
    f = picard_integrate(eta)
    # the single correction term is the exact polynomial N z^2 / 2
    P1 = ex.to_complex(f.terms[1])
    exact = (f.steps_used == 1 and f.residual == 0 and len(P1) == 3
             and np.array_equal(P1[2], N / 2) and not np.any(P1[:2]))
    expect("6 Picard termination", {
        "steps_minus_(r+1)_max": (worst_gap, ok),
        "N^2=0_case_exact": (exact, exact),
    })


# 7. Willmore constraints


def test_criterion_7_willmore_constraints():
    rng = np.random.default_rng(7)
    iso_ok = True
    for fam in (1, 2, 3):
        for _ in range(5):
            eta = make_willmore_potential(random_willmore_spec(4, fam, rng, degree=2))
            iso_ok &= not any(bool(c) for c in isotropy_polynomial(eta.meta["B1"]).ravel())
    worst = 0.0
    for k in range(20):
        d = random_s4_derivatives(rng, 1 + k % 3)
        fs = [npoly.polyint(np.asarray(c, complex)) for c in d]
        dd = check_s4_data(fs)
        for z in rng.normal(size=5) + 1j * rng.normal(size=5):
            worst = max(worst, eval_s4_surface(fs, z, np.exp(1j * rng.uniform(0, 6.3)),
                                               derivatives=dd).relative_defect)
    rejected = 0
    for bad in ([[1], [1], [1], [1]], [[1], [0, 1], [1], [0, 1]], [[1], [0], [0], [1]]):
        try:
            make_s4_potential(*bad)
        except PotentialError:
            rejected += 1
    expect("7 Willmore constraints", {
        "m=4_families_exact_isotropy": (iso_ok, iso_ok),
        "s4_light_cone_20_random": (_g(worst), worst < 1e-9),
        "violations_rejected": (f"{rejected}/3", rejected == 3),
    })


# 8. dressing


def test_criterion_8_dressing():
    xs = np.linspace(-0.5, 0.5, 5)
    fr = frame_grid(example_s6_potential(), xs, xs)
    rng = np.random.default_rng(8)
    worst, bound_ok, singular = 0.0, True, 0
    for _ in range(10):
        h = random_dressing_loop(4, rng)
        dr = dress(h, fr)
        singular += int(dr.singular.sum())
        worst = max(worst, flatness_residual(dr, LAMS4, stencil="local").max)
        bound_ok &= uniton_degree(extended_solution(dr)).degree <= 2 + 2 * h.hi
    expect("8 dressing (10 h_+)", {
        "flatness_max": (_g(worst), worst < 1e-6),
        "uniton_bound": (bound_ok, bound_ok),
        "singular_points": (singular, singular == 0),
    })
