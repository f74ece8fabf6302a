import numpy as np
import pytest
from hypothesis import settings

from polysemi.poly import ComplexPoly

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


def P(*coeffs):
    """Polynomial from ascending coefficients."""
    return ComplexPoly(coeffs)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_poly(rng, degree, scale=1.0):
    c = scale * (rng.normal(size=degree + 1) + 1j * rng.normal(size=degree + 1))
    c[-1] = c[-1] if abs(c[-1]) > 0.1 else 1.0
    return ComplexPoly(c)
