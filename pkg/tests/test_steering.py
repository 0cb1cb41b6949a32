import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sublinlaw.ambiguity import AmbiguitySet, Gaussian, point_mass
from sublinlaw.functions import constant, identity, polynomial, projection
from sublinlaw.rng import path_generator
from sublinlaw.steering import (MixtureKernel, ScheduleOverflowError, SteeringContractError, clamp_to_interval,
                                kernel_sample, make_constant_targets, make_finite_dim_targets,
                                make_oscillating_targets, mixture_weight, oscillation_schedule)
from sublinlaw.sublinear import MeanFunctional

UNIT = MeanFunctional(0.0, 1.0)
SYM = MeanFunctional(-1.0, 1.0)


def test_clamp_examples():
    assert clamp_to_interval(2, UNIT) == 1
    assert clamp_to_interval(-3, UNIT) == 0
    assert clamp_to_interval(0.4, UNIT) == 0.4


def test_mixture_weight_examples():
    assert mixture_weight(0.5, UNIT) == 0.5
    assert mixture_weight(1.0, UNIT) == 1.0
    assert mixture_weight(0.0, UNIT) == 0.0
    assert mixture_weight(2.0, MeanFunctional(2.0, 2.0)) == 1.0
    with pytest.raises(SteeringContractError):
        mixture_weight(1.5, UNIT)


@given(st.floats(-10, 10), st.floats(0.001, 10), st.floats(0, 1))
def test_mixture_reproduces_target_mean(lo, width, frac):
    m = MeanFunctional(lo, lo + width)
    phi = lo + frac * width
    phi = min(max(phi, m.mu_lower), m.mu_upper)
    alpha = mixture_weight(phi, m)
    assert 0.0 <= alpha <= 1.0
    assert alpha * m.mu_upper + (1 - alpha) * m.mu_lower == pytest.approx(phi, abs=1e-12 * max(1.0, abs(phi)))


def test_kernel_sample_examples(two_points):
    k = MixtureKernel.of(two_points)
    rng = path_generator(11)
    assert all(kernel_sample(k, 1.0, rng) == 1.0 for _ in range(50))
    assert all(kernel_sample(k, 0.0, rng) == 0.0 for _ in range(50))
    u = rng.random((100_000, 2)) + 2.0 ** -54
    draws = k.draw(np.full(100_000, 0.5), u[:, 0], u[:, 1])
    assert abs(draws.mean() - 0.5) <= 0.01


# ---------------------------------------------------------------- schedule


def test_schedule_examples():
    s = oscillation_schedule(3)
    assert s.ends == (1, 2, 6)
    assert s.eps_range(1, 7).tolist() == [1, 0, 1, 1, 1, 1]
    assert oscillation_schedule(1).eps_range(1, 2).tolist() == [1]
    s4 = oscillation_schedule(4)
    assert s4.length == 24
    assert s4.block_end_means()[-1] == Fraction(5, 24) <= Fraction(1, 4)


@pytest.mark.parametrize("k", range(1, 11))
def test_schedule_block_end_bounds(k):
    s = oscillation_schedule(k)
    assert s.ends[-1] == math.factorial(k)
    m = s.block_end_means()[-1]
    assert m >= Fraction(k - 1, k) if k % 2 else m <= Fraction(1, k)
    assert s.check_invariants()


def test_schedule_pointwise_and_range_agree():
    s = oscillation_schedule(6)
    assert [s.eps(i) for i in range(1, s.length + 1)] == s.eps_range(1, s.length + 1).tolist()
    with pytest.raises(IndexError):
        s.eps(0)


def test_schedule_overflow_reports_feasible_blocks():
    with pytest.raises(ScheduleOverflowError) as err:
        oscillation_schedule(13)
    assert err.value.max_feasible == 12


# ---------------------------------------------------------------- targets


def test_finite_dim_examples():
    t = make_finite_dim_targets(identity(), UNIT)
    assert t.eval(3, (0.7, 0.1, 0.2)) == 0.7
    t2 = make_finite_dim_targets(polynomial([(1.0, (1, 1))], 2), SYM)
    assert t2.eval(5, (2.0, 3.0, 0.0, 0.0, 0.0)) == 1.0
    t3 = make_finite_dim_targets(polynomial([(1.0, (1, 1))], 2), UNIT)
    assert t3.eval(1, (0.4,)) == 0.0


def test_prefix_is_clamped():
    t = make_finite_dim_targets(identity(), MeanFunctional(0.5, 2.0), prefix=0.0)
    assert t.eval(0, ()) == 0.5


def test_oscillating_examples():
    s = oscillation_schedule(4)
    t = make_oscillating_targets(constant(0.0), constant(1.0), s, UNIT)
    assert [t.eval(i, (0.3,)) for i in range(1, 7)] == [1, 0, 1, 1, 1, 1]
    t = make_oscillating_targets(constant(-1.0), constant(1.0), s, SYM)
    assert sum(t.eval(i, (0.3,)) for i in range(1, 7)) / 6 == pytest.approx(2 / 3, abs=1e-15)
    flat = make_oscillating_targets(constant(0.2), constant(0.2), s, UNIT)
    assert {flat.eval(i, (0.0,)) for i in range(1, 25)} == {0.2}
    assert flat.limit((0.0,)) == 0.2


def test_oscillating_rejects_misordered_bounds():
    s = oscillation_schedule(3)
    with pytest.raises(SteeringContractError):
        make_oscillating_targets(projection(0, 1), constant(0.0), s, SYM)


def test_settled_values_match_eval():
    s = oscillation_schedule(5)
    t = make_oscillating_targets(identity(), constant(1.0), s, SYM)
    head = (0.8,)
    assert t.settled_values(head, 1, 121).tolist() == [t.eval(i, head) for i in range(1, 121)]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 4))
def test_targets_stay_in_mean_interval(seed, d):
    rng = np.random.default_rng(seed)
    terms = [(float(rng.normal(0, 3)), tuple(int(p) for p in rng.integers(0, 3, d))) for _ in range(3)]
    m = MeanFunctional(-0.7, 1.3)
    t = make_finite_dim_targets(polynomial(terms, d), m, prefix=float(rng.normal(0, 5)))
    pts = rng.normal(0, 4, size=(10_000, d))
    vals = [t.eval(d, p) for p in pts[:200]] + [t.eval(0, ())]
    vec = clamp_to_interval(polynomial(terms, d)(*pts.T), m)
    assert all(m.mu_lower <= v <= m.mu_upper for v in vals)
    assert np.all((vec >= m.mu_lower) & (vec <= m.mu_upper))


def test_constant_target_is_clamped():
    a = AmbiguitySet((Gaussian(-1, 1), Gaussian(1, 1)))
    t = make_constant_targets(3.0, MeanFunctional.of(a))
    assert t.eval(0, ()) == 1.0 and t.limit(()) == 1.0
    assert make_constant_targets(0.3, MeanFunctional.of(AmbiguitySet((point_mass(0.0), point_mass(1.0))))).depth == 0
