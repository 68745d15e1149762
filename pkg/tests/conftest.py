import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def rand_c(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def square_zero_potential():
    """``lam^{-1} N z dz`` with ``N^2 = 0``: B = b c^T with b I13-null and c Euclidean-null."""
    from unitonlab import exact as ex
    from unitonlab.potentials import NormalizedPotential, assemble_from_B
    b = np.array([1, 1, 0, 0], complex)
    c = np.array([1, 1j, 0, 0], complex)
    B = np.zeros((2, 4, 4), complex)
    B[1] = np.outer(b, c)
    A = assemble_from_B(B)
    return NormalizedPotential(ex.to_exact(A)), A[1]


@pytest.fixture(scope="session")
def s6_potential():
    from unitonlab.potentials import example_s6_potential
    return example_s6_potential()


@pytest.fixture(scope="session")
def s6_frame(s6_potential):
    from unitonlab.dpw import picard_integrate
    return picard_integrate(s6_potential)


@pytest.fixture(scope="session")
def s6_small_grid(s6_potential):
    from unitonlab.harmonic import frame_grid
    xs = np.linspace(-0.5, 0.5, 7)
    return frame_grid(s6_potential, xs, xs)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
