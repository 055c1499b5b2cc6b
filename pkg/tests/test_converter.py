import pytest
from hypothesis import given
from hypothesis import strategies as st

from gridloop.errors import DutyRangeError
from gridloop.plant.converter import BuckConverter, buck_output


def test_output_is_duty_times_input():
    assert buck_output(BuckConverter(0.45, 220.0)) == pytest.approx(99.0)


def test_endpoints():
    assert buck_output(BuckConverter(0.0, 230.0)) == 0.0
    assert buck_output(BuckConverter(1.0, 230.0)) == 230.0


@pytest.mark.parametrize("duty", [-0.01, 1.01, 2.0])
def test_duty_outside_unit_interval_rejected(duty):
    with pytest.raises(DutyRangeError):
        BuckConverter(duty, 220.0)


def test_negative_input_rejected():
    with pytest.raises(DutyRangeError):
        BuckConverter(0.5, -1.0)


@given(duty=st.floats(0.0, 1.0), rail=st.floats(0.0, 400.0))
def test_output_bounded_by_rail(duty, rail):
    out = buck_output(BuckConverter(duty, rail))
    assert 0.0 <= out <= rail
