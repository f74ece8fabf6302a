import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import chisquare

from conftest import P
from polysemi.backward import (
    EmpiricalMeasure,
    SampleConfig,
    _run_walks,
    calibrate_card_bound,
    card_bound_rhs,
    default_base_point,
    disc_count,
    escapes,
    exhaustive_leaves,
    iterate_pullback,
    julia_sample,
    nu_for_radius,
    pullback_dirac,
)
from polysemi.exceptions import EnumerationCapError
from polysemi.semigroup import escape_radius, validate

Z2 = P(0, 0, 1)
ZM1 = P(1, -2, 1)
BASIL = P(-1, 0, 1)
Z3 = P(0, 0, 0, 1)


def atoms(mu):
    return sorted(zip(np.round(mu.locations, 9).tolist(), mu.weights.tolist()), key=lambda t: (t[0].real, t[0].imag))


# -- EmpiricalMeasure --------------------------------------------------------------

def test_measure_rejects_negative_weight():
    with pytest.raises(ValueError):
        EmpiricalMeasure([0, 1], [0.5, -0.5])


def test_measure_mass_and_merge():
    mu = EmpiricalMeasure([1, 2, 1], [0.25, 0.5, 0.25])
    assert mu.total_mass == 1
    m = mu.merged()
    assert m.locations.tolist() == [1, 2] and m.weights.tolist() == [0.5, 0.5]


def test_mass_in_open_disc():
    mu = EmpiricalMeasure.uniform([0, 1, 2])
    assert mu.mass_in_disc(0, 1) == pytest.approx(1 / 3)


def test_sample_config_checks():
    with pytest.raises(ValueError):
        SampleConfig(0, 2, mode="bogus")
    with pytest.raises(ValueError):
        SampleConfig(complex(np.inf, 0), 2)
    with pytest.raises(ValueError):
        SampleConfig(0, 2, sample_count=0)


# -- pullbacks ---------------------------------------------------------------------

def test_pullback_dirac_simple():
    assert atoms(pullback_dirac(validate([Z2]), 1)) == [(-1, 1), (1, 1)]


def test_pullback_dirac_multiplicity():
    assert atoms(pullback_dirac(validate([Z2]), 0)) == [(0, 2)]


def test_pullback_dirac_two_generators():
    mu = pullback_dirac(validate([BASIL, Z3]), 0)
    assert atoms(mu) == [(-1, 1), (0, 3), (1, 1)]
    assert mu.total_mass == 5


def test_iterate_depth_zero():
    mu = iterate_pullback(validate([Z2]), SampleConfig(0.3 + 1j, 0))
    assert atoms(mu) == [(0.3 + 1j, 1)]


def test_iterate_exhaustive_fourth_roots():
    mu = iterate_pullback(validate([Z2]), SampleConfig(1, 2, "exhaustive"))
    assert atoms(mu) == [(-1, 0.25), (-1j, 0.25), (1j, 0.25), (1, 0.25)]


@pytest.mark.parametrize("n", range(1, 6))
def test_mass_conservation(n):
    G = validate([BASIL, Z3])
    raw = exhaustive_leaves(G, 0.37 + 0.2j, n)
    assert math.fsum(raw.weights) == G.D**n
    mu = iterate_pullback(G, SampleConfig(0.37 + 0.2j, n, "exhaustive"))
    assert abs(mu.total_mass - 1) <= 1e-12


def test_exhaustive_cap():
    with pytest.raises(EnumerationCapError):
        exhaustive_leaves(validate([BASIL, Z3]), 0.5, 12)


def _leaf_bins(G, a, n, m, seed):
    exact = exhaustive_leaves(G, a, n)
    sample = iterate_pullback(G, SampleConfig(a, n, "stochastic", m, seed))
    # assign every stochastic leaf to its nearest exhaustive atom
    d = np.abs(sample.locations[:, None] - exact.locations[None, :])
    idx = d.argmin(axis=1)
    assert d.min(axis=1).max() < 1e-9
    counts = np.bincount(idx, minlength=len(exact))
    expected = m * exact.weights / exact.total_mass
    return counts, expected


def test_stochastic_leaf_law_chi_square():
    counts, expected = _leaf_bins(validate([BASIL, Z3]), 0.37 + 0.2j, 3, 100_000, seed=0)
    assert chisquare(counts, expected).pvalue > 0.001


@pytest.mark.parametrize("n", [1, 2, 4])
def test_leaf_law_other_depths(n):
    counts, expected = _leaf_bins(validate([Z2, ZM1]), 2.5 - 1j, n, 40_000, seed=n)
    assert chisquare(counts, expected).pvalue > 0.001


def test_stochastic_deterministic_and_thread_independent():
    G = validate([Z2, ZM1])
    cfg = SampleConfig(3 + 1j, 9, "stochastic", 9000, seed=5)
    a = iterate_pullback(G, cfg).locations
    b = iterate_pullback(G, SampleConfig(3 + 1j, 9, "stochastic", 9000, seed=5, threads=4)).locations
    assert np.array_equal(a, b)
    c = iterate_pullback(G, SampleConfig(3 + 1j, 9, "stochastic", 9000, seed=6)).locations
    assert not np.array_equal(a, c)


def test_walk_prefix_stable():
    # walk k is the same whether 100 or 5000 walks are requested
    G = validate([Z2, ZM1])
    short = _run_walks(G, 3 + 0j, 7, 100, 1, 1, 1)[0][0]
    long = _run_walks(G, 3 + 0j, 7, 5000, 1, 1, 1)[0][0]
    assert np.array_equal(short, long[:100])


def test_exact_tail_matches_exhaustive_when_full():
    G = validate([Z2, ZM1])
    ex = iterate_pullback(G, SampleConfig(2 + 1j, 4, "exhaustive"))
    tail = iterate_pullback(G, SampleConfig(2 + 1j, 4, "stochastic", 1, exact_tail=4))
    assert atoms(ex.merged()) == atoms(tail.merged())


def test_exact_tail_is_normalized_and_on_leaves():
    G = validate([BASIL, Z3])
    mu = iterate_pullback(G, SampleConfig(0.4, 5, "stochastic", 2000, seed=3, exact_tail=2))
    assert abs(mu.total_mass - 1) <= 1e-12
    exact = exhaustive_leaves(G, 0.4, 5).locations
    assert np.abs(mu.locations[:, None] - exact[None, :]).min(axis=1).max() < 1e-9


def test_default_base_point_on_circle():
    G = validate([Z2, ZM1])
    a = default_base_point(G, 11)
    assert abs(abs(a) - 2 * escape_radius(G).R_esc) < 1e-12
    assert a == default_base_point(G, 11) != default_base_point(G, 12)


# -- Julia samples -----------------------------------------------------------------------

def test_julia_sample_circle():
    pts = julia_sample(validate([Z2]), SampleConfig(2, 20, "stochastic", 2000), burn_in=10)
    assert pts.size == 2000 * 10
    assert np.abs(np.abs(pts) - 1).max() < 1e-3


def test_julia_sample_segment():
    G = validate([P(-2, 0, 1)])
    pts = julia_sample(G, SampleConfig(5 + 1j, 20, "stochastic", 1000), burn_in=10)
    assert np.abs(pts.imag).max() < 1e-2 and np.abs(pts.real).max() <= 2 + 1e-2


def test_julia_sample_annulus():
    G = validate([Z2, P(0, 0, 0.25)])
    pts = julia_sample(G, SampleConfig(9, 20, "stochastic", 1000), burn_in=10)
    r = np.abs(pts)
    assert r.min() >= 0.99 and r.max() <= 4.01


def test_julia_sample_requires_stochastic():
    with pytest.raises(ValueError):
        julia_sample(validate([Z2]), SampleConfig(2, 4, "exhaustive"), burn_in=1)


# -- disc counts and the cardinality bound -------------------------------------------------

def test_disc_count_examples():
    G = validate([Z2])
    assert disc_count(G, 1, 2, 0, 1.5) == 4
    assert disc_count(G, 1, 2, 1j, 1e-9) == 1
    assert disc_count(G, 1, 2, 5, 1.0) == 0


def test_disc_count_is_open():
    assert disc_count(validate([Z2]), 1, 1, 0, 1.0) == 0


def test_card_bound_examples():
    assert card_bound_rhs(4, 2, 2, 3, 2) == 64
    assert card_bound_rhs(5, 2, 3, 4, 3) == 5**4
    assert card_bound_rhs(4, 2, 2, 3, 20) == 3.5**3


@given(st.integers(2, 8), st.integers(1, 6), st.integers(0, 8))
def test_card_bound_large_nu(D, kappa, n):
    N = 1 if D == 2 else 2
    nu = kappa * (n + 1)
    assert card_bound_rhs(D, N, kappa, n, nu) == (D - 0.5) ** n


def test_nu_intervals():
    r0, M = 1.0, 2.0
    assert nu_for_radius(1.0, r0, M) == 1
    assert nu_for_radius(0.26, r0, M) == 1
    assert nu_for_radius(0.25, r0, M) == 2  # I(1) is open at its lower end
    with pytest.raises(ValueError):
        nu_for_radius(2.0, r0, M)


@given(st.floats(1e-6, 1.0), st.floats(1.1, 10))
def test_nu_interval_membership(r, M):
    nu = nu_for_radius(r, 1.0, M)
    assert M ** (-2 * nu) < r <= M ** (-2 * (nu - 1)) * (1 + 1e-12)


def test_calibration_reports_largest_r0():
    G = validate([Z2, ZM1])
    c = np.linspace(-1.5, 2.5, 5)
    centers = (c[:, None] + 1j * c[None, :]).ravel()
    rep = calibrate_card_bound(G, 1 + 0j, 3, centers, 2.0 ** -np.arange(0, 6), 2, 3.0)
    assert rep.passed and rep.violations == 0
    assert rep.r0 == max(r for r, _, v in rep.per_r0 if v == 0)


# -- escape -------------------------------------------------------------------------------

def test_escapes_examples():
    assert escapes(validate([Z2]), 3)
    assert not escapes(validate([Z2]), 0.5)
    assert not escapes(validate([Z2, P(0, 0, 0.25)]), 4)


def test_escape_consistent_with_forward_orbit():
    G = validate([Z2, ZM1])
    assert escapes(G, 6.0) and not escapes(G, 0.0)
    # 2.5 -> 2.25 -> 1.5625 -> ... under (z-1)^2 settles into a bounded cycle
    assert not escapes(G, 2.5)
