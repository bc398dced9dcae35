"""Unit-aware quantity parsing.

Everything downstream works in SI base units: seconds, watts, joules,
bits, bytes, bits/second, joules/bit.  Input files may carry values with
unit suffixes ("64MiB", "120ms", "15Mbit/s", "0.70uJ/bit"); this module
converts them exactly, as rationals, so no precision is lost before the
optimization model is built.

Conventions: 1 Wh = 3600 J, binary prefixes for byte sizes (GiB = 2^30),
decimal prefixes for bit rates (Mbit = 10^6, the networking convention).
"""

from __future__ import annotations

import re
from decimal import Decimal, InvalidOperation
from fractions import Fraction


class UnitError(ValueError):
    """Raised when a quantity string cannot be parsed or has a wrong unit."""


_KIB = 1024
_BYTE_UNITS = {
    "B": 1,
    "kB": 10**3,
    "KB": 10**3,
    "MB": 10**6,
    "GB": 10**9,
    "TB": 10**12,
    "KiB": _KIB,
    "MiB": _KIB**2,
    "GiB": _KIB**3,
    "TiB": _KIB**4,
}
_BIT_UNITS = {
    "bit": 1,
    "bits": 1,
    "kbit": 10**3,
    "Mbit": 10**6,
    "Gbit": 10**9,
}
_TIME_UNITS = {
    "s": 1,
    "ms": Fraction(1, 10**3),
    "us": Fraction(1, 10**6),
    "µs": Fraction(1, 10**6),
    "min": 60,
    "h": 3600,
}
_POWER_UNITS = {
    "W": 1,
    "mW": Fraction(1, 10**3),
    "kW": 10**3,
}
_ENERGY_UNITS = {
    "J": 1,
    "mJ": Fraction(1, 10**3),
    "uJ": Fraction(1, 10**6),
    "µJ": Fraction(1, 10**6),
    "nJ": Fraction(1, 10**9),
    "kJ": 10**3,
    "Wh": 3600,
    "mWh": Fraction(3600, 10**3),
    "kWh": 3600 * 10**3,
}

# data quantities are measured in bits; byte-suffixed values convert at 8 bits/byte
_DATA_UNITS = dict(_BIT_UNITS)
_DATA_UNITS.update({name: 8 * factor for name, factor in _BYTE_UNITS.items()})

_BANDWIDTH_UNITS = {f"{name}/s": factor for name, factor in _DATA_UNITS.items()}
_PER_BIT_UNITS = {f"{name}/bit": factor for name, factor in _ENERGY_UNITS.items()}

_DIMENSIONS: dict[str, dict[str, int | Fraction]] = {
    "time": _TIME_UNITS,
    "power": _POWER_UNITS,
    "energy": _ENERGY_UNITS,
    "data": _DATA_UNITS,
    "memory": dict(_BYTE_UNITS),
    "bandwidth": _BANDWIDTH_UNITS,
    "energy_per_bit": _PER_BIT_UNITS,
}

_BASE_UNIT = {
    "time": "s",
    "power": "W",
    "energy": "J",
    "data": "bit",
    "memory": "B",
    "bandwidth": "bit/s",
    "energy_per_bit": "J/bit",
}

_QUANTITY_RE = re.compile(
    r"^\s*([+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)\s*([A-Za-zµ/]*)\s*$"
)


def parse_quantity(value, dimension: str) -> Fraction:
    """Convert ``value`` to an exact SI rational for the given dimension.

    Bare numbers are taken as already being in base units.  Strings may
    carry any suffix registered for the dimension.
    """
    try:
        units = _DIMENSIONS[dimension]
    except KeyError:
        raise UnitError(f"unknown dimension {dimension!r}") from None

    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise UnitError(f"expected a quantity, got {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(Decimal(repr(value)))
    if not isinstance(value, str):
        raise UnitError(f"expected a number or string, got {type(value).__name__}")

    match = _QUANTITY_RE.match(value)
    if match is None:
        raise UnitError(f"cannot parse quantity {value!r}")
    number, suffix = match.groups()
    try:
        magnitude = Fraction(Decimal(number))
    except InvalidOperation:
        raise UnitError(f"bad number in quantity {value!r}") from None

    if not suffix:
        return magnitude
    if suffix in units:
        return magnitude * units[suffix]
    if suffix == _BASE_UNIT[dimension]:
        return magnitude
    raise UnitError(f"unit {suffix!r} not valid for {dimension} in {value!r}")


def parse_optional(value, dimension: str) -> Fraction | None:
    """Like :func:`parse_quantity` but maps null/"inf"/"unbounded" to None."""
    if value is None:
        return None
    if isinstance(value, str) and value.strip().lower() in {"inf", "unbounded", "-"}:
        return None
    if isinstance(value, float) and value == float("inf"):
        return None
    return parse_quantity(value, dimension)


def si_number(value: Fraction) -> int | float:
    """Render an exact rational as a JSON-friendly number.

    Integers stay integers; other rationals become the nearest float
    (re-parsing that float recovers the value to within 1 ulp).
    """
    if value.denominator == 1:
        return int(value)
    return float(value)


def fmt12(value) -> str:
    """Format a number with 12 significant digits (for MPS/LP emission)."""
    return format(float(value), ".12g")
