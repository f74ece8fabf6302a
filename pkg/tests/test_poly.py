import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import P, random_poly
from polysemi.exceptions import DegreeCapError, IndeterminateOrderError, SolverError
from polysemi.poly import (
    ComplexPoly,
    compose,
    critical_points,
    derivative,
    eval as peval,
    local_order,
    roots,
    solve_batch,
)


def naive(p, z):
    return sum(c * z**k for k, c in enumerate(p.coeffs))


# -- construction and evaluation ---------------------------------------------

def test_trailing_zeros_stripped():
    p = P(1, 2, 0, 0)
    assert p.degree == 1 and p.leading == 2


def test_zero_polynomial():
    z = P(0, 0)
    assert z.is_zero() and z.degree == 0


def test_coeffs_are_read_only():
    with pytest.raises(ValueError):
        P(1, 2).coeffs[0] = 5


@pytest.mark.parametrize("z, expected", [(2, 3), (1j, -2)])
def test_eval_examples(z, expected):
    assert peval(P(-1, 0, 1), z) == pytest.approx(expected)


def test_eval_matches_power_sum(rng):
    p = random_poly(rng, 8)
    z = 2 * (rng.uniform(-1, 1, 100) + 1j * rng.uniform(-1, 1, 100))
    np.testing.assert_allclose(peval(p, z), naive(p, z), rtol=1e-10)


@given(st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False), min_size=2, max_size=9),
       st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False))
def test_horner_vs_canonical_sum(coeffs, z):
    p = ComplexPoly(coeffs)
    scale = sum(abs(c) * abs(z) ** k for k, c in enumerate(p.coeffs))
    assert abs(p(z) - naive(p, z)) <= 1e-12 * max(scale, 1e-300) * len(coeffs)


# -- derivative ---------------------------------------------------------------

def test_derivative_examples():
    assert derivative(P(0, 0, 0, 1)) == P(0, 0, 3)
    assert derivative(P(0, 1, 2)) == P(1, 4)


def test_derivative_of_constant_is_zero():
    assert derivative(P(5)).is_zero()


def test_derivative_finite_difference(rng):
    p = random_poly(rng, 6)
    dp = derivative(p)
    h = 1e-5
    for z in 2 * (rng.uniform(-0.7, 0.7, 20) + 1j * rng.uniform(-0.7, 0.7, 20)):
        fd = (p(z + h) - p(z - h)) / (2 * h)
        assert abs(dp(z) - fd) <= 1e-6 * max(1.0, abs(dp(z)))


# -- composition --------------------------------------------------------------

def test_compose_monomials():
    h = compose(P(0, 0, 2), P(0, 0, 0, 3))
    assert h == ComplexPoly.monomial(6, 18)
    assert h.leading == 2 * 3**2


def test_compose_identity(rng):
    p = random_poly(rng, 5)
    assert compose(P(0, 1), p).allclose(p)
    assert compose(p, P(0, 1)).allclose(p)


def test_compose_matches_pointwise(rng):
    f, g = random_poly(rng, 3), random_poly(rng, 4)
    h = compose(f, g)
    z = rng.normal(size=10) + 1j * rng.normal(size=10)
    np.testing.assert_allclose(h(z), f(g(z)), rtol=1e-9)


@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_compose_degree_and_leading_laws(d1, d2, seed):
    r = np.random.default_rng(seed)
    f, g = random_poly(r, d1), random_poly(r, d2)
    h = compose(f, g)
    assert h.degree == d1 * d2
    expected = f.leading * g.leading**d1
    assert abs(h.leading - expected) <= 1e-10 * abs(expected)


def test_compose_degree_cap():
    with pytest.raises(DegreeCapError):
        compose(ComplexPoly.monomial(100), ComplexPoly.monomial(100), degree_cap=4096)


# -- roots ----------------------------------------------------------------------

def test_roots_simple():
    r = roots(P(0, 0, 1), 1)
    assert list(r) == [(-1, 1), (1, 1)]


def test_roots_double_at_zero():
    r = roots(P(0, 0, 1), 0)
    assert [(abs(x) < 1e-12, m) for x, m in r] == [(True, 2)]


def test_roots_of_expanded_product():
    r = roots(ComplexPoly.from_roots([1, 2, 3]), 0)
    np.testing.assert_allclose(r.locations, [1, 2, 3], atol=1e-9)
    assert r.multiplicities.tolist() == [1, 1, 1]


def test_roots_high_multiplicity():
    r = roots(ComplexPoly.from_roots([0.5] * 3 + [-1j]), 0)
    assert sorted(r.multiplicities.tolist()) == [1, 3]


def test_roots_linear():
    assert list(roots(P(1, 3), 7)) == [(2, 1)]


@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_roots_reconstruct(d, seed):
    r = np.random.default_rng(seed)
    p = random_poly(r, d)
    a = complex(r.normal(), r.normal())
    rs = roots(p, a)
    assert rs.total == d
    rebuilt = ComplexPoly.from_roots(rs.expanded(), p.leading)
    target = p - a
    err = np.abs(rebuilt.coeffs - target.coeffs).max()
    assert err <= 1e-8 * np.abs(p.coeffs).max()


def test_solver_failure_carries_residual():
    with pytest.raises(SolverError) as info:
        solve_batch(P(0, 0, 1), [4.0], max_iter=0)
    assert info.value.residual is not None and info.value.residual > 1e-12


def test_solve_batch_rejects_nonfinite():
    with pytest.raises(SolverError):
        solve_batch(P(0, 0, 1), [np.inf])


# -- critical points and local order ---------------------------------------------

def test_critical_points_examples():
    assert list(critical_points(P(0, -3, 0, 1))) == [(-1, 1), (1, 1)]
    assert list(critical_points(P(0, 0, 1))) == [(0, 1)]
    assert list(critical_points(ComplexPoly.monomial(5))) == [(0, 4)]


def test_critical_points_of_linear_empty():
    assert len(critical_points(P(1, 2))) == 0


def test_local_order_examples():
    assert local_order(P(0, 0, 1), 0) == 2
    p = compose(P(5, 0, 0, 1), P(-1, 1))  # (z-1)^3 + 5
    assert local_order(p, 1) == 3
    assert local_order(p, 0) == 1


def test_riemann_hurwitz_cubic():
    p = P(0, -3, 0, 1)
    assert sum(local_order(p, c) - 1 for c, _ in critical_points(p)) == 2


def test_local_order_indeterminate():
    with pytest.raises(IndeterminateOrderError):
        local_order(P(1e-300, 1e-320), 0, rtol=1.0)


@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_riemann_hurwitz_random(d, seed):
    p = random_poly(np.random.default_rng(seed), d)
    total = sum(local_order(p, c) - 1 for c, _ in critical_points(p))
    assert total == d - 1


@given(st.integers(2, 8), st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
       st.complex_numbers(min_magnitude=0.5, max_magnitude=3, allow_nan=False, allow_infinity=False))
def test_riemann_hurwitz_centred_power(m, a, B):
    # B (z - a)^m + a has a single critical point of order m
    p = compose(P(a, B), compose(ComplexPoly.monomial(m), P(-a, 1)))
    crit = critical_points(p)
    assert crit.total == m - 1
    assert sum(local_order(p, c) - 1 for c, _ in crit) == m - 1
