"""
Unit-suffixed quantity parsing.

Config values are either plain numbers (already SI) or strings such as
``"15 nm"``, ``"110 mV"`` or ``"0.3e6 A/m"``. Each schema field declares a
dimension; the suffix must match it.
"""

from __future__ import annotations

import re
from typing import Any

from comet_dse.errors import UnitMismatchError

# suffix -> (dimension, factor to SI)
UNITS: dict[str, tuple[str, float]] = {
    "m": ("length", 1.0),
    "mm": ("length", 1e-3),
    "um": ("length", 1e-6),
    "nm": ("length", 1e-9),
    "m2": ("area", 1.0),
    "nm2": ("area", 1e-18),
    "V": ("voltage", 1.0),
    "mV": ("voltage", 1e-3),
    "J": ("energy", 1.0),
    "fJ": ("energy", 1e-15),
    "aJ": ("energy", 1e-18),
    "s": ("time", 1.0),
    "ns": ("time", 1e-9),
    "ps": ("time", 1e-12),
    "fs": ("time", 1e-15),
    "A/m": ("field", 1.0),
    "A/m2": ("current_density", 1.0),
    "J/m3": ("energy_density", 1.0),
    "MJ/m3": ("energy_density", 1e6),
    "J/m": ("exchange", 1.0),
    "pJ/m": ("exchange", 1e-12),
    "J/m2": ("surface_energy", 1.0),
    "mJ/m2": ("surface_energy", 1e-3),
    "F": ("capacitance", 1.0),
    "fF": ("capacitance", 1e-15),
    "Ohm": ("resistance", 1.0),
    "kOhm": ("resistance", 1e3),
    "Ohm*m": ("resistivity", 1.0),
    "V/m": ("electric_field", 1.0),
    "C/m2": ("polarization", 1.0),
    "T": ("flux_density", 1.0),
    "s/m": ("me_coefficient", 1.0),
    "deg": ("angle", 3.141592653589793 / 180.0),
    "rad": ("angle", 1.0),
}

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z/*0-9]*)\s*$")


def parse_quantity(value: Any, dimension: str | None, path: str = "") -> Any:
    """Convert ``value`` to SI for a field of the given ``dimension``.

    Non-string values are returned unchanged. Strings without a suffix are
    parsed as plain floats.

    :param value: raw config value
    :param dimension: expected dimension name from :data:`UNITS`, or None for dimensionless
    :param path: dotted config path, used in error messages
    :return: SI float, or ``value`` untouched when it is not a string
    """
    if isinstance(value, list):
        return [parse_quantity(item, dimension, f"{path}[{i}]") for i, item in enumerate(value)]
    if not isinstance(value, str):
        return value
    match = _QUANTITY.match(value)
    if match is None:
        # leave non-numeric strings (enums, labels) to the model validators
        return value
    number, suffix = match.groups()
    if not suffix:
        return float(number)
    if dimension is None:
        # labels such as "15nm" on enum fields; the model validator decides
        return value
    if suffix not in UNITS:
        raise UnitMismatchError(f"Unknown unit '{suffix}' for '{path}'")
    unit_dimension, factor = UNITS[suffix]
    if unit_dimension != dimension:
        raise UnitMismatchError(
            f"Unit '{suffix}' ({unit_dimension}) does not match '{path}' ({dimension})"
        )
    return float(number) * factor


def unit_dimension(field_info: Any) -> str | None:
    """Dimension declared on a pydantic field through ``json_schema_extra``."""
    extra = getattr(field_info, "json_schema_extra", None) or {}
    return extra.get("dimension")
