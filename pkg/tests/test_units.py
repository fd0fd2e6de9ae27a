import pytest
from hypothesis import given
from hypothesis import strategies as st

from complementarity.units import (
    LENGTH_UNITS,
    UnitError,
    format_quantity,
    parse_angle,
    parse_frequency,
    parse_length,
    parse_quantity,
    parse_time,
)


def test_equivalent_spellings_are_identical():
    assert parse_length("670nm") == parse_length("0.67um") == parse_length("6.7e-7m") == 6.7e-7
    assert parse_length("80 µm") == parse_length("80μm") == parse_length("0.08mm") == 8e-5


def test_other_dimensions():
    assert parse_time("3s") == 3.0
    assert parse_time("250ms") == 0.25
    assert parse_frequency("4MHz") == 4e6
    assert parse_frequency("180Hz") == 180.0
    assert parse_angle("7.5mrad") == 7.5e-3
    assert parse_angle("7.5e-3") == 7.5e-3


@pytest.mark.parametrize("text", ["670", "670 furlongs", "nm", "", "1.2.3um", "3Hz"])
def test_bad_lengths(text):
    with pytest.raises(UnitError):
        parse_length(text)


def test_bare_float_needs_default():
    with pytest.raises(UnitError):
        parse_quantity(1.0, LENGTH_UNITS)
    assert parse_quantity(2.5, LENGTH_UNITS, default_unit="um") == 2.5e-6


@given(st.floats(min_value=1e-12, max_value=1e3, allow_nan=False))
def test_format_round_trip(value):
    assert parse_length(format_quantity(value, "m")) == value
