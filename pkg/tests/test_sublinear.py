import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as sp
from scipy.stats import norm

from sublinlaw.acceptance import brute_force_nested, random_bounded_lipschitz, random_family
from sublinlaw.ambiguity import AmbiguitySet, Atoms, Gaussian, Uniform, point_mass
from sublinlaw.functions import TestFunction, abs_value, constant, identity, polynomial, projection, ramp
from sublinlaw.sublinear import (Event, GridResolutionError, choquet_lower, choquet_upper, lower_capacity,
                                 lower_expectation, nested_expectation, nested_expectation_detail, tail_bound,
                                 truncate, truncated_mean_limit, upper_capacity, upper_expectation)

SQUARE = polynomial([(1.0, (2,))], 1)


# ---------------------------------------------------------------- expectations


def test_upper_expectation_examples(two_points, two_gaussians, two_uniforms):
    assert upper_expectation(two_points, identity()) == 1.0
    assert upper_expectation(two_gaussians, SQUARE) == pytest.approx(2.0, abs=1e-9)
    assert upper_expectation(two_uniforms, identity().negate()) == pytest.approx(-0.5, abs=1e-12)


def test_lower_expectation_examples(two_points, two_uniforms, two_gaussians):
    assert lower_expectation(two_points, identity()) == 0.0
    assert lower_expectation(two_uniforms, identity()) == pytest.approx(0.5, abs=1e-12)
    assert lower_expectation(two_gaussians, constant(-0.3)) == pytest.approx(-0.3, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.0, 5.0), st.floats(-3, 3))
def test_axioms(seed, lam, c):
    rng = np.random.default_rng(seed)
    a = random_family(rng)
    f, g = random_bounded_lipschitz(rng), random_bounded_lipschitz(rng)
    tol = 1e-11
    ef, eg = upper_expectation(a, f, tol), upper_expectation(a, g, tol)
    lower = TestFunction(1, lambda x: f.fn(x) - np.abs(g.fn(x)))
    both = TestFunction(1, lambda x: f.fn(x) + g.fn(x))
    assert upper_expectation(a, lower, tol) <= ef + 1e-9
    assert upper_expectation(a, constant(c), tol) == pytest.approx(c, abs=1e-9)
    assert upper_expectation(a, both, tol) <= ef + eg + 1e-9
    assert upper_expectation(a, f.scale(lam), tol) == pytest.approx(lam * ef, abs=1e-9)
    low = lower_expectation(a, f, tol)
    assert low == -upper_expectation(a, f.negate(), tol)
    assert low <= ef


# ---------------------------------------------------------------- capacities


def test_capacity_examples(two_points, two_uniforms, two_gaussians):
    half_up = Event.interval(0.5)
    assert (upper_capacity(two_points, half_up), lower_capacity(two_points, half_up)) == (1.0, 0.0)
    a = Event.interval(0.0, 0.5)
    assert upper_capacity(two_uniforms, a) == pytest.approx(0.5, abs=1e-15)
    assert lower_capacity(two_uniforms, a) == pytest.approx(0.25, abs=1e-15)
    line = Event.real_line()
    assert upper_capacity(two_gaussians, line) == lower_capacity(two_gaussians, line) == 1.0


def test_event_algebra():
    e = Event(((3.0, 4.0), (0.0, 1.0), (0.5, 2.0)))
    assert e.intervals == ((0.0, 2.0), (3.0, 4.0))
    assert e.complement().intervals == ((-math.inf, 0.0), (2.0, 3.0), (4.0, math.inf))
    assert e.complement().complement() == e
    assert e.contains(0.0) and not e.contains(2.0)
    assert Event.empty().complement() == Event.real_line()


events = st.lists(st.tuples(st.floats(-4, 4), st.floats(0.01, 3)), min_size=1, max_size=3).map(
    lambda ivs: Event(tuple((lo, lo + w) for lo, w in ivs)))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), events, events)
def test_capacity_properties(seed, e1, e2):
    a = random_family(np.random.default_rng(seed))
    up, low = upper_capacity(a, e1), lower_capacity(a, e1)
    assert low == 1.0 - upper_capacity(a, e1.complement())
    assert 0.0 <= low <= up + 1e-15 <= 1.0 + 1e-15
    assert upper_capacity(a, e1.union(e2)) <= up + upper_capacity(a, e2) + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(-2, 1), st.floats(0.2, 3), st.floats(0.01, 0.5))
def test_capacity_sandwich(seed, lo, width, eps):
    """Lipschitz minorant and majorant of the indicator of [lo, hi) bracket its capacity."""
    a = random_family(np.random.default_rng(seed))
    hi = lo + width
    e = Event.interval(lo, hi)
    below = TestFunction(1, lambda x: np.minimum(ramp(lo, lo + eps).fn(x), 1.0 - ramp(hi - eps, hi).fn(x)))
    above = TestFunction(1, lambda x: np.minimum(ramp(lo - eps, lo).fn(x), 1.0 - ramp(hi, hi + eps).fn(x)))
    pts = [lo - eps, lo, lo + eps, hi - eps, hi, hi + eps]
    if 2 * eps <= width:
        assert upper_expectation(a, below, 1e-11, pts) <= upper_capacity(a, e) + 1e-9
    assert upper_capacity(a, e) <= upper_expectation(a, above, 1e-11, pts) + 1e-9


# ---------------------------------------------------------------- Choquet


def test_choquet_examples(two_uniforms, two_gaussians):
    assert choquet_upper(two_uniforms, identity()) == pytest.approx(1.0, abs=1e-6)
    assert choquet_upper(AmbiguitySet((point_mass(2.5),)), identity()) == pytest.approx(2.5, abs=1e-12)

    def cap(t):
        return max(norm.sf(t, m.mu, 1) + norm.cdf(-t, m.mu, 1) for m in two_gaussians.members)
    oracle, _ = sp.quad(cap, 0, 14, epsabs=1e-13, epsrel=1e-13, limit=200)
    assert choquet_upper(two_gaussians, abs_value()) == pytest.approx(oracle, abs=1e-6)


def test_choquet_lower_uses_lower_capacity(two_uniforms):
    # v(X >= t) = 1 - t on [0, 1], so the lower Choquet integral of x is 1/2
    assert choquet_lower(two_uniforms, identity()) == pytest.approx(0.5, abs=1e-6)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_choquet_dominates_expectation(seed):
    rng = np.random.default_rng(seed)
    a = random_family(rng)
    f = random_bounded_lipschitz(rng)
    g = TestFunction(1, lambda x: np.abs(f.fn(x)))
    up = upper_expectation(a, g)
    assert up <= choquet_upper(a, g) + 1e-6
    assert choquet_lower(a, g) <= lower_expectation(a, g) + 1e-6


# ---------------------------------------------------------------- truncation and means


def test_truncate_examples():
    assert truncate(5, 3) == 3
    assert truncate(-5, 3) == -3
    assert truncate(0.2, 3) == 0.2
    with pytest.raises(ValueError):
        truncate(1.0, -1.0)


def test_truncated_mean_limit_examples(two_points, two_gaussians, two_uniforms):
    tm = truncated_mean_limit(two_points)
    assert (tm.means.mu_lower, tm.means.mu_upper, tm.level) == (0.0, 1.0, 1.0)
    tm = truncated_mean_limit(two_gaussians)
    assert tm.means.mu_lower == pytest.approx(-1.0, abs=1e-8)
    assert tm.means.mu_upper == pytest.approx(1.0, abs=1e-8)
    tm = truncated_mean_limit(two_uniforms)
    assert (tm.means.mu_lower, tm.means.mu_upper) == pytest.approx((0.5, 1.0), abs=1e-12)


def test_tail_bound_gaussian_oracle():
    a = AmbiguitySet((Gaussian(0, 1),))
    # int_c^inf 2 * Phi(-x) dx = 2 * (phi(c) - c * Phi(-c))
    c = 1.5
    assert tail_bound(a, c) == pytest.approx(2 * (norm.pdf(c) - c * norm.sf(c)), abs=1e-11)


# ---------------------------------------------------------------- nested


def test_nested_examples(two_points, two_gaussians):
    f = polynomial([(1.0, (1, 0)), (-1.0, (1, 1))], 2)  # x1 * (1 - x2)
    assert nested_expectation(two_points, f) == 1.0
    assert nested_expectation(two_points, polynomial([(1.0, (1, 0)), (1.0, (0, 1))], 2)) == 2.0
    assert nested_expectation(two_gaussians, constant(0.7, 2)) == pytest.approx(0.7, abs=1e-12)
    assert nested_expectation(two_gaussians, polynomial([(1.0, (1, 0)), (1.0, (0, 1))], 2)) == \
        pytest.approx(2.0, abs=1e-6)


def test_nested_product_on_gaussians_is_abs_mean(two_gaussians):
    # inner stage gives |x1|, outer stage gives max E|X|
    r = nested_expectation_detail(two_gaussians, polynomial([(1.0, (1, 1))], 2))
    oracle = 2 * norm.pdf(1) + 1 - 2 * norm.cdf(-1)
    assert r.value == pytest.approx(oracle, abs=1e-5)
    assert r.error_estimate < 1e-4


def test_nested_arity_one_is_upper_expectation(two_gaussians):
    f = abs_value()
    assert nested_expectation(two_gaussians, f) == upper_expectation(two_gaussians, f)


def test_nested_coarse_grid_reports_resolution(two_gaussians):
    with pytest.raises(GridResolutionError):
        nested_expectation(two_gaussians, polynomial([(1.0, (1, 1))], 2), nodes=8, tol=1e-6)


def test_nested_mixed_family():
    a = AmbiguitySet((Atoms((0.0, 3.0), (0.5, 0.5)), Uniform(0, 3)))
    # every member has mean 1.5 and x1 * x2 is linear in each coordinate
    r = nested_expectation(a, polynomial([(1.0, (1, 1))], 2), tol=1e-3)
    assert r == pytest.approx(2.25, abs=1e-3)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_nested_atoms_match_enumeration(seed):
    rng = np.random.default_rng(seed)
    members = []
    for _ in range(int(rng.integers(1, 5))):
        k = int(rng.integers(1, 4))
        pts = np.sort(rng.choice(np.arange(-8, 9), size=k, replace=False) / 4.0)
        w = rng.integers(1, 6, size=k).astype(float)
        members.append(Atoms(tuple(pts), tuple(w / w.sum())))
    a = AmbiguitySet(tuple(members))
    d = int(rng.integers(1, 5))
    terms = [(float(rng.uniform(-1, 1)), tuple(int(p) for p in rng.integers(0, 3, size=d))) for _ in range(3)]
    f = polynomial(terms, d)
    assert nested_expectation(a, f) == pytest.approx(brute_force_nested(a, f, d), abs=1e-12)


def test_brute_force_oracle_on_known_case(two_points):
    f = projection(0, 2)
    assert brute_force_nested(two_points, f, 2) == 1.0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(-1, 1), st.floats(0.3, 2))
def test_choquet_of_single_law_is_its_expectation(seed, mu, sd):
    f = random_bounded_lipschitz(np.random.default_rng(seed))
    g = TestFunction(1, f.fn)  # no monotonicity declared: exercises the level-set path
    a = AmbiguitySet((Gaussian(mu, sd),))
    assert choquet_upper(a, g) == pytest.approx(upper_expectation(a, g, 1e-11), abs=1e-8)
