import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sublinlaw import functions as fx


def test_scalar_and_array_calls():
    f = fx.polynomial([(2.0, (1,)), (1.0, (0,))], 1)
    assert f(3.0) == 7.0
    assert isinstance(f(3.0), float)
    assert np.array_equal(f(np.array([0.0, 1.0])), [1.0, 3.0])


def test_constant_broadcasts_over_arrays():
    c = fx.constant(0.7, arity=2)
    out = c(np.zeros((3, 1)), np.zeros((1, 4)))
    assert out.shape == (3, 4) and np.all(out == 0.7)


def test_arity_is_enforced():
    with pytest.raises(TypeError):
        fx.projection(0, 2)(1.0)
    with pytest.raises(ValueError):
        fx.projection(2, 2)


def test_from_spec_registry_round_trip():
    f = fx.from_spec({"name": "tanh_polynomial", "arity": 3,
                      "terms": [{"coef": 1, "powers": [1, 1, 0]}, {"coef": 1, "powers": [0, 0, 1]}]})
    assert f.arity == 3
    assert f(0.5, 2.0, -0.25) == pytest.approx(np.tanh(0.75), abs=1e-15)
    assert "ramp" in fx.registered_names()
    with pytest.raises(ValueError):
        fx.from_spec({"name": "no-such-form"})


def test_negate_and_scale_flip_monotonicity():
    f = fx.identity()
    assert f.negate().monotone == "decreasing"
    assert f.scale(-2.0).monotone == "decreasing"
    assert f.scale(3.0)(2.0) == 6.0


@pytest.mark.parametrize("f", [fx.identity(), fx.abs_value(), fx.positive_part(), fx.ramp(-1, 2),
                               fx.tanh_polynomial([(1.0, (1, 1))], 2), fx.polynomial([(0.5, (2,))], 1)])
def test_declared_growth_holds(f):
    assert f.check_growth(np.random.default_rng(3))


def test_growth_check_catches_false_declaration():
    liar = fx.TestFunction(1, lambda x: x ** 3, 1.0, 0)
    assert not liar.check_growth(np.random.default_rng(0))


@given(st.floats(-50, 50), st.floats(-50, 50))
def test_ramp_bounded_and_monotone(x, y):
    r = fx.ramp(-1.0, 1.0)
    assert 0.0 <= r(x) <= 1.0
    if x <= y:
        assert r(x) <= r(y)
