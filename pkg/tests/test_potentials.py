import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from unitonlab import exact as ex
from unitonlab.liealg import sigma_conjugator
from unitonlab.loops import Loop, is_twisted
from unitonlab.potentials import (ColumnPair, PotentialError, WillmorePotentialSpec,
                                  example_s6_B1, example_s6_potential, isotropy_polynomial,
                                  make_nilpotent_potential, make_s4_potential,
                                  make_willmore_potential, potential_from_dict,
                                  random_graded_potential, random_s4_derivatives,
                                  random_willmore_spec, timelike_probe_potential, zero_potential)
from unitonlab.roots import canonical_element

seeds = st.integers(0, 2**32 - 1)


def assert_polynomial_isotropy(B):
    Q = isotropy_polynomial(B)
    assert not any(bool(c) for c in Q.ravel())


def test_zero_nilpotent_potential():
    ce = canonical_element(4, [1, 2])
    eta = make_nilpotent_potential(ce, {})
    assert eta.is_zero()


def test_single_component_certificate():
    ce = canonical_element(4, [1, 2])
    X = ce.grading.basis(1)[0]
    eta = make_nilpotent_potential(ce, {1: np.array([np.zeros_like(X), X])})
    assert eta.z_degree == 1
    assert eta.certificate_residual() < 1e-10


def test_even_component_rejected_in_symmetric_mode():
    ce = canonical_element(4, [1, 2, 3, 4])
    X = ce.grading.basis(2)[0]
    with pytest.raises(PotentialError):
        make_nilpotent_potential(ce, {2: X[None]})
    with pytest.raises(PotentialError):
        make_nilpotent_potential(ce, {1: ce.grading.basis(2)[:1]})


def test_s6_example_matrix():
    B = example_s6_B1()
    expected = 0.5 * np.array([[[0, 0, -1j, 1], [0, 0, -1j, 1], [-2, -2j, 0, 0], [2j, -2, 0, 0]],
                               [[2j, -2, 0, 0], [-2j, 2, 0, 0], [0, 0, -1, -1j], [0, 0, -1j, 1]]])
    assert np.array_equal(ex.to_complex(B), expected)
    assert_polynomial_isotropy(B)
    eta = example_s6_potential()
    assert eta.p_residual() == 0


def test_type_i_self_pair():
    spec = WillmorePotentialSpec(3, 1, [ColumnPair("i", [[1], [0], [1], [0]])])
    eta = make_willmore_potential(spec)
    assert_polynomial_isotropy(eta.meta["B1"])


def test_type_ii_cross_column_enforced():
    # same-column pairs (v, i v) are isotropic only if v is; a non-null v is rejected
    bad = WillmorePotentialSpec(4, 3, [ColumnPair("ii", [[1], [0], [0], [0]]),
                                       ColumnPair("ii", [[1], [1], [0], [0]])])
    with pytest.raises(PotentialError) as err:
        make_willmore_potential(bad)
    assert err.value.invariant.startswith("isotropy")
    # null but mutually non-orthogonal columns: the cross-column condition is enforced
    cross = WillmorePotentialSpec(4, 3, [ColumnPair("ii", [[1], [1], [0], [0]]),
                                         ColumnPair("ii", [[1], [-1], [0], [0]])])
    with pytest.raises(PotentialError) as err:
        make_willmore_potential(cross)
    assert err.value.residual == (1, 3)


def test_family_pattern_checked():
    spec = WillmorePotentialSpec(4, 1, [ColumnPair("ii", [[1], [1], [0], [0]]),
                                        ColumnPair("i", [[1], [0], [1], [0]])])
    with pytest.raises(PotentialError):
        make_willmore_potential(spec)


def test_s4_examples():
    make_s4_potential([1], [1], [1], [-1])
    # degenerate branch f2' = 0: the constraint reduces to f1' f4' = 0
    make_s4_potential([1], [0], [0, 3, 1j], [0])
    with pytest.raises(PotentialError):
        make_s4_potential([1], [0], [0], [0, 3, 1j])
    with pytest.raises(PotentialError) as err:
        make_s4_potential([1], [1], [1], [1])
    assert err.value.residual == [2]
    assert "f1'f4' + f2'f3'" in err.value.invariant


def test_json_round_trips(tmp_path):
    for eta in (example_s6_potential(), zero_potential(), timelike_probe_potential(),
                make_s4_potential([1], [1], [0, 1], [0, -1])):
        d = json.loads(json.dumps(eta.to_dict()))
        back = potential_from_dict(d)
        assert np.array_equal(back.numeric(), eta.numeric())
    spec = {"kind": "willmore", "m": 3, "family": 1,
            "columns": [{"type": "i", "h": [[1], [0], [1], [0]]}]}
    assert potential_from_dict(spec).size == 6
    assert potential_from_dict({"kind": "s4", "f_prime": [[1], [1], [1], [-1]]}).size == 6
    with pytest.raises(PotentialError):
        potential_from_dict({"kind": "nonsense"})


def _loop_of(eta, z):
    return Loop({-1: eta.A(z)}, dim=eta.size)


@given(seeds, st.sampled_from([3, 4]))
def test_willmore_families_isotropic_and_twisted(seed, m):
    rng = np.random.default_rng(seed)
    fam = int(rng.integers(1, m))
    eta = make_willmore_potential(random_willmore_spec(m, fam, rng))
    assert_polynomial_isotropy(eta.meta["B1"])
    assert eta.p_residual() == 0
    assert is_twisted(_loop_of(eta, 0.3 - 0.7j), sigma_conjugator(eta.size - 4))[1] == 0


@given(seeds, st.integers(1, 3))
def test_s4_random_data_accepted(seed, degree):
    fp = random_s4_derivatives(np.random.default_rng(seed), degree)
    eta = make_s4_potential(*fp)
    assert_polynomial_isotropy(eta.meta["B1"])


@given(seeds, st.sampled_from([3, 4]))
def test_graded_potentials_certified(seed, m):
    rng = np.random.default_rng(seed)
    eta = random_graded_potential(m, rng)
    assert eta.certificate_residual() < 1e-10
    assert eta.p_residual() < 1e-14
    assert eta.nilpotency_index() <= 2 * m
    assert is_twisted(_loop_of(eta, 1.1 + 0.2j), sigma_conjugator(eta.size - 4))[1] == 0
