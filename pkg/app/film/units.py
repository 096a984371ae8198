"""
Unit-suffix table for run configuration values.

Internal units are SI. Config files may quote lab units (ions/(cm^2 s),
cm^2/ion, nm, GPa); every value is converted on ingestion. Conversion is done
in decimal arithmetic so "5e-17 cm2" and "5e-21" give the same double.
"""
import math
import re
from decimal import Decimal, InvalidOperation
from typing import Final

from core.errors import ConfigError

CM2_IN_M2: Final[Decimal] = Decimal("1e-4")
GPA: Final[Decimal] = Decimal("1e9")

_PER_CM2_S = 1 / CM2_IN_M2

QUANTITY_UNITS: Final[dict[str, dict[str, Decimal]]] = {
    "viscosity": {"": Decimal(1), "Pas": Decimal(1), "GPas": GPA, "MPas": Decimal("1e6"), "P": Decimal("0.1")},
    "pressure": {"": Decimal(1), "Pa": Decimal(1), "kPa": Decimal("1e3"), "MPa": Decimal("1e6"), "GPa": GPA},
    "surface_energy": {
        "": Decimal(1),
        "N/m": Decimal(1),
        "J/m2": Decimal(1),
        "mJ/m2": Decimal("1e-3"),
        "mN/m": Decimal("1e-3"),
    },
    "flux": {
        "": Decimal(1),
        "/m2/s": Decimal(1),
        "1/m2/s": Decimal(1),
        "/m2s": Decimal(1),
        "m-2s-1": Decimal(1),
        "/cm2/s": _PER_CM2_S,
        "1/cm2/s": _PER_CM2_S,
        "/cm2s": _PER_CM2_S,
        "cm-2s-1": _PER_CM2_S,
    },
    "area": {"": Decimal(1), "m2": Decimal(1), "cm2": CM2_IN_M2, "nm2": Decimal("1e-18"), "A2": Decimal("1e-20")},
    "length": {
        "": Decimal(1),
        "m": Decimal(1),
        "cm": Decimal("1e-2"),
        "mm": Decimal("1e-3"),
        "um": Decimal("1e-6"),
        "nm": Decimal("1e-9"),
        "A": Decimal("1e-10"),
    },
    "wavenumber": {
        "": Decimal(1),
        "1/m": Decimal(1),
        "/m": Decimal(1),
        "1/cm": Decimal("1e2"),
        "/cm": Decimal("1e2"),
        "1/um": Decimal("1e6"),
        "/um": Decimal("1e6"),
        "1/nm": Decimal("1e9"),
        "/nm": Decimal("1e9"),
    },
    "dimensionless": {"": Decimal(1)},
}

# config key -> quantity kind; anything else is dimensionless
FIELD_KINDS: Final[dict[str, str]] = {
    "eta": "viscosity",
    "shear_modulus": "pressure",
    "bulk_modulus": "pressure",
    "surface_energy": "surface_energy",
    "flux": "flux",
    "strain_per_dose": "area",
    "thickness": "length",
    "measured_stress": "pressure",
    "k_min": "wavenumber",
    "k_max": "wavenumber",
}

INFINITE_ALLOWED: Final[frozenset[str]] = frozenset({"shear_modulus", "bulk_modulus", "gamma_ratio"})

_NUMBER = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?|[-+]?inf(?:inity)?)\s*(.*?)\s*$", re.IGNORECASE)


def normalize_suffix(suffix: str) -> str:
    """Canonical spelling of a unit suffix: no spaces, no 'ions', ASCII exponents"""
    s = suffix.replace("²", "2").replace("·", "").replace("*", "").replace(".", "")
    s = re.sub(r"\s+|[()]", "", s)
    s = re.sub(r"ions?", "", s)
    return s.rstrip("/")


def parse_quantity(key: str, raw: str | float | int, default_unit: str = "") -> float:
    """
    Convert a config value with an optional unit suffix to SI.

    Args:
        key: Config key, used to pick the unit table
        raw: Text such as "3.5e15 /cm2/s", or a bare number
        default_unit: Suffix assumed when the value carries none

    Returns:
        Value in SI units

    Raises:
        ConfigError: Unparseable number or unknown suffix
    """
    kind = FIELD_KINDS.get(key, "dimensionless")
    if isinstance(raw, bool):
        raise ConfigError(f"'{key}' must be a number, got {raw}")
    if isinstance(raw, (int, float)):
        text, suffix = repr(raw), ""
    else:
        match = _NUMBER.match(str(raw))
        if not match:
            raise ConfigError(f"Cannot parse a number from '{key} = {raw}'")
        text, suffix = match.group(1), normalize_suffix(match.group(2))
    suffix = suffix or default_unit

    table = QUANTITY_UNITS[kind]
    if suffix not in table:
        known = ", ".join(sorted(u for u in table if u)) or "none"
        raise ConfigError(f"Unknown unit '{suffix}' for '{key}' ({kind}); known units: {known}")

    try:
        value = Decimal(text)
    except InvalidOperation:
        raise ConfigError(f"Cannot parse a number from '{key} = {raw}'")
    if value.is_infinite():
        if key not in INFINITE_ALLOWED:
            raise ConfigError(f"'{key}' may not be infinite")
        return float(value)
    result = float(value * table[suffix])
    if not math.isfinite(result):
        raise ConfigError(f"'{key} = {raw}' is out of range")
    return result
