"""PI regulator: clamping and conditional integration."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gridloop.config import PIGains
from gridloop.control.pi import pi_step

DT = 1.0e-3


def gains(**overrides):
    base = dict(kp=0.1, ki=1.0, bias=0.5, out_min=0.0, out_max=1.0)
    base.update(overrides)
    return PIGains(**base)


def test_zero_error_holds_bias():
    out, integ = pi_step(gains(), 0.0, 0.0, DT)
    assert out == 0.5
    assert integ == 0.0


def test_proportional_plus_integral_path():
    g = gains()
    out, integ = pi_step(g, 1.0, 0.2, DT)
    assert integ == pytest.approx(0.2 + g.ki * 1.0 * DT)
    assert out == pytest.approx(g.bias + g.kp * 1.0 + integ)


def test_output_clamped_to_range():
    out, _ = pi_step(gains(), 100.0, 0.0, DT)
    assert out == 1.0
    out, _ = pi_step(gains(), -100.0, 0.0, DT)
    assert out == 0.0


def test_integrator_freezes_while_saturated():
    g = gains()
    integ = 0.0
    for _ in range(50):
        out, integ = pi_step(g, 100.0, integ, DT)
    assert out == 1.0
    # a wound-up integrator would be 50 * ki * 100 * dt = 5.0
    assert integ == 0.0


def test_frozen_integrator_recovers_fast_after_reversal():
    g = gains()
    integ = 0.0
    for _ in range(50):
        _, integ = pi_step(g, 100.0, integ, DT)
    out, integ = pi_step(g, -2.0, integ, DT)
    # one period after the sign flip the output is already off the rail
    assert out < 1.0
    assert out == pytest.approx(g.bias + g.kp * -2.0 + integ)


def test_integration_resumes_inside_range():
    g = gains()
    _, integ = pi_step(g, 0.1, 0.0, DT)
    assert integ == pytest.approx(g.ki * 0.1 * DT)
    _, integ2 = pi_step(g, 0.1, integ, DT)
    assert integ2 == pytest.approx(2.0 * g.ki * 0.1 * DT)


def test_integrator_magnitude_limited():
    g = gains(ki=1.0e6, out_min=-1.0e9, out_max=1.0e9)
    _, integ = pi_step(g, 50.0, 0.0, DT)
    assert integ == 1.0
    _, integ = pi_step(g, -50.0, 0.0, DT)
    assert integ == -1.0


def test_asymmetric_output_range():
    g = gains(out_min=0.2, out_max=0.8)
    out, _ = pi_step(g, 100.0, 0.0, DT)
    assert out == 0.8
    out, _ = pi_step(g, -100.0, 0.0, DT)
    assert out == 0.2


@given(st.floats(-1.0e4, 1.0e4), st.floats(-1.0, 1.0))
def test_output_always_inside_range(error, integ):
    g = gains()
    out, _ = pi_step(g, error, integ, DT)
    assert g.out_min <= out <= g.out_max


@given(st.lists(st.floats(-100.0, 100.0), min_size=1, max_size=200))
def test_integrator_bounded_over_any_error_history(errors):
    g = gains(ki=10.0)
    integ = 0.0
    for err in errors:
        out, integ = pi_step(g, err, integ, DT)
        assert -1.0 <= integ <= 1.0
        assert g.out_min <= out <= g.out_max
