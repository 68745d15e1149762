import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.polynomial import polynomial as npoly

from unitonlab.potentials import PotentialError, random_s4_derivatives
from unitonlab.willmore import (
    SurfaceGrid, check_s4_data, crosscheck_pipeline_vs_closed_form, eval_s4_surface,
    eval_s6_example, export_csv, export_mesh, fit_isometry, minkowski,
    rotation_identity_residual, s4_from_derivatives, s6_denominator, sample_s4, sample_s6,
    verify_surface,
)


def test_s6_base_point_and_unit_norm():
    np.testing.assert_allclose(eval_s6_example(0j), np.eye(7)[0], atol=1e-15)
    assert abs(np.linalg.norm(eval_s6_example(1.0)) - 1) < 1e-14


def test_s6_rotation_identity_at_a_point():
    lam = np.exp(1j * np.pi / 3)
    assert rotation_identity_residual([0.7], [0.2], [lam]) < 1e-12


@given(st.floats(0, 50, allow_nan=False))
def test_s6_denominator_positive(r):
    assert s6_denominator(r) >= 1.0


def _independent_light_cone(fs, z):
    """Direct substitution into <Y, Y> using an ad hoc complex-coordinate form."""
    s = eval_s4_surface(fs, z)
    return abs(-s.Y[0] ** 2 + np.sum(s.Y[1:] ** 2)) / np.dot(s.Y, s.Y)


def test_s4_linear_example_on_light_cone():
    fs = [[0, 1], [0, 1], [0, -1], [0, 1]]
    for z in (0j, 0.3 + 0.4j, -1.2 + 0.5j):
        s = eval_s4_surface(fs, z)
        assert s.relative_defect < 1e-14
        assert _independent_light_cone(fs, z) < 1e-14
        assert abs(np.linalg.norm(s.sphere_point()) - 1) < 1e-14


def test_s4_constraint_and_genericity_rejected():
    with pytest.raises(PotentialError) as err:
        check_s4_data([[0, 1], [0, 1], [0, 1], [0, 1]])
    assert "f1'f4' + f2'f3'" in err.value.invariant
    with pytest.raises(PotentialError) as err:
        check_s4_data([[0, 1], [3], [0, 1], [0]])
    assert "genericity" in err.value.invariant


@given(st.integers(0, 10**6), st.integers(1, 3))
def test_s4_random_families_on_light_cone(seed, degree):
    rng = np.random.default_rng(seed)
    fs = [npoly.polyint(np.asarray(d, complex)) for d in random_s4_derivatives(rng, degree)]
    d = check_s4_data(fs)
    rel = max(eval_s4_surface(fs, z, lam, derivatives=d).relative_defect
              for z in rng.normal(size=4) + 1j * rng.normal(size=4)
              for lam in np.exp(1j * rng.uniform(0, 2 * np.pi, 2)))
    assert rel < 1e-9


def test_s4_from_derivatives_satisfies_constraint():
    p, q, r, s = [1, 2], [0, 1], [3], [1, 0, 1]
    d = [npoly.polyder(f) for f in s4_from_derivatives(p, q, r, s)]
    c = npoly.polyadd(npoly.polymul(d[0], d[3]), npoly.polymul(d[1], d[2]))
    assert np.abs(c).max() < 1e-12


def test_minkowski_signature():
    e = np.eye(6)
    assert minkowski(e[0], e[0]) == -1 and minkowski(e[3], e[3]) == 1


def test_verify_s6_surface():
    xs = np.linspace(-1.5, 1.5, 41)
    rep = verify_surface(sample_s6(xs, xs, np.exp(0.3j)))
    assert rep["norm_defect"] < 1e-12
    assert rep["span_rank"] == 7
    # second-order differences: the defects are O(h^2), not at round-off
    assert rep["conformality_defect"] < 1e-2
    fine = verify_surface(sample_s6(xs, xs), order=4)
    assert fine["conformality_defect"] < rep["conformality_defect"]


def test_verify_constant_map():
    xs = np.linspace(0, 1, 6)
    vals = np.tile(np.eye(7)[0], (6, 6, 1))
    rep = verify_surface(SurfaceGrid(xs, xs, vals))
    assert rep["conformality_defect"] == 0.0 and rep["span_rank"] == 1


def test_verify_rejects_coarse_grid():
    xs = np.linspace(0, 1, 4)
    with pytest.raises(ValueError):
        verify_surface(sample_s6(xs, xs))


def test_s4_surface_grid():
    xs = np.linspace(-1, 1, 21)
    s = sample_s4([[0, 1], [0, 0, 0.5], [0, 0, 0.5], [0, 0, 0, -1 / 3]], xs, xs, np.exp(0.4j))
    rep = verify_surface(s)
    assert s.diagnostics["light_cone_relative"] < 1e-12
    assert rep["norm_defect"] < 1e-12
    assert rep["span_rank"] == 5 and rep["conformality_defect"] < 1e-2


def test_s4_constant_derivatives_degenerate():
    # constant f' makes Y_1 constant: the map is a point
    xs = np.linspace(-1, 1, 5)
    rep = verify_surface(sample_s4([[0, 1], [0, 1], [0, -1], [0, 1]], xs, xs))
    assert rep["span_rank"] == 1


@pytest.mark.slow
def test_crosscheck_with_pipeline():
    xs = np.linspace(-0.5, 0.5, 7)
    rep = crosscheck_pipeline_vs_closed_form(xs, xs)
    assert rep["ok"] and rep["singular_points"] == 0
    assert rep["b_uniton_degree"] == 2


def test_fit_isometry_substitute():
    xs = np.linspace(-1, 1, 11)
    fit = fit_isometry(xs, xs)
    assert fit["residual"] < 1e-5 and fit["scale"] > 0
    assert "substitute" in fit["label"]


def test_export_mesh_counts(tmp_path):
    xs = np.linspace(0, 1, 2)
    assert export_mesh(sample_s6(xs, xs), str(tmp_path / "a.obj")) == (4, 2)
    xs = np.linspace(-1, 1, 21)
    path = tmp_path / "b.obj"
    assert export_mesh(sample_s6(xs, xs), str(path)) == (441, 800)
    lines = path.read_text().splitlines()
    assert sum(ln.startswith("v ") for ln in lines) == 441
    assert sum(ln.startswith("f ") for ln in lines) == 800


def test_export_mesh_degenerate_warns(tmp_path):
    xs = np.linspace(0, 1, 3)
    vals = np.tile(np.eye(7)[0], (3, 3, 1))
    with pytest.warns(RuntimeWarning):
        export_mesh(SurfaceGrid(xs, xs, vals), str(tmp_path / "c.obj"))


def test_export_csv(tmp_path):
    xs = np.linspace(0, 1, 3)
    path = tmp_path / "s.csv"
    export_csv(sample_s6(xs, xs), str(path))
    rows = path.read_text().splitlines()
    assert rows[0].startswith("z_re,z_im,x1") and len(rows) == 10
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        np.loadtxt(path, delimiter=",", skiprows=1)
