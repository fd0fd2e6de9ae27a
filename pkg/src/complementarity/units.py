"""Parsing of physical quantities written with explicit unit suffixes.

Values are converted through :class:`decimal.Decimal` so that equivalent
spellings ("670nm", "0.67um", "6.7e-7m") land on the same float.
"""

import re
from decimal import Decimal, InvalidOperation

LENGTH_UNITS = {
    "m": Decimal(1),
    "mm": Decimal("1e-3"),
    "um": Decimal("1e-6"),
    "µm": Decimal("1e-6"),
    "μm": Decimal("1e-6"),
    "nm": Decimal("1e-9"),
}
TIME_UNITS = {"s": Decimal(1), "ms": Decimal("1e-3"), "us": Decimal("1e-6")}
FREQUENCY_UNITS = {"Hz": Decimal(1), "kHz": Decimal("1e3"), "MHz": Decimal("1e6")}
ANGLE_UNITS = {"rad": Decimal(1), "mrad": Decimal("1e-3")}

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([^\d\s].*?)?\s*$")


class UnitError(ValueError):
    """Raised when a quantity string cannot be parsed."""


def parse_quantity(text, units, default_unit=None):
    """Parse ``text`` such as ``"4um"`` into SI using the ``units`` table.

    A bare number is accepted only when ``default_unit`` is given.
    """
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        if default_unit is None:
            raise UnitError(f"missing unit for {text!r}")
        return float(Decimal(repr(text)) * units[default_unit])
    match = _QUANTITY.match(str(text))
    if match is None:
        raise UnitError(f"cannot parse quantity {text!r}")
    number, suffix = match.groups()
    if suffix is None:
        if default_unit is None:
            raise UnitError(f"missing unit for {text!r}; expected one of {sorted(units)}")
        suffix = default_unit
    if suffix not in units:
        raise UnitError(f"unknown unit {suffix!r} in {text!r}; expected one of {sorted(units)}")
    try:
        return float(Decimal(number) * units[suffix])
    except InvalidOperation as exc:  # pragma: no cover - regex already filters
        raise UnitError(f"cannot parse quantity {text!r}") from exc


def parse_length(text):
    return parse_quantity(text, LENGTH_UNITS)


def parse_time(text):
    return parse_quantity(text, TIME_UNITS)


def parse_frequency(text):
    return parse_quantity(text, FREQUENCY_UNITS)


def parse_angle(text):
    """Angles default to radians when no suffix is given."""
    return parse_quantity(text, ANGLE_UNITS, default_unit="rad")


def format_quantity(value, unit):
    """Exact SI spelling; ``parse_quantity(format_quantity(v, u)) == v``."""
    return f"{float(value)!r}{unit}"
