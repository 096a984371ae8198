"""
Run configuration: the RunConfig model and its loader.

Config files are flat `key = value [unit]` text, or YAML when the name ends in
.yml/.yaml. Values with units go through film.units; everything lands in SI.
"""
import logging
import math
from pathlib import Path
from typing import Literal, Optional

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from core.errors import ConfigError
from film.models import MaterialParams
from film.units import parse_quantity

logger = logging.getLogger(__name__)

MODES = ("steady", "dispersion", "neutral", "viscous", "verify", "stability")

MATERIAL_KEYS = (
    "eta",
    "shear_modulus",
    "bulk_modulus",
    "surface_energy",
    "flux",
    "strain_per_dose",
    "thickness",
)
SWEEP_KEYS = ("sweep", "k_min", "k_max", "Q_min", "Q_max", "count", "spacing")
VERIFY_KEYS = ("verify_Q", "verify_D", "verify_C", "verify_Gamma")
OTHER_KEYS = ("C", "gamma_ratio", "tol", "n_steps", "measured_stress", "samples", "seed")
KNOWN_KEYS = frozenset(MATERIAL_KEYS + SWEEP_KEYS + VERIFY_KEYS + OTHER_KEYS)

DEFAULT_VERIFY_GRID = {
    "Q": [0.2, 0.5, 2.0],
    "D": [0.01, 0.2, 1.0],
    "C": [0.01, 0.1, 1.0],
    "Gamma": [1.0, 10.0, 1e4],
}


class Sweep(BaseModel):
    """Wavenumber (k, 1/m) or dimensionless (Q) range"""

    model_config = ConfigDict(frozen=True)

    quantity: Literal["k", "Q"] = "k"
    min: float
    max: float
    count: int = Field(ge=2)
    spacing: Literal["linear", "log"] = "linear"

    @model_validator(mode="after")
    def validator(self) -> "Sweep":
        if not (math.isfinite(self.min) and math.isfinite(self.max)):
            raise ValueError("sweep bounds must be finite")
        if not self.min < self.max:
            raise ValueError(f"sweep min must be below max, got {self.min} >= {self.max}")
        if self.spacing == "log" and self.min <= 0:
            raise ValueError(f"log spacing needs min > 0, got {self.min}")
        if self.min < 0:
            raise ValueError(f"sweep values must be non-negative, got min={self.min}")
        return self

    def values(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.min, self.max, self.count)
        return np.linspace(self.min, self.max, self.count)


class OutputSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    path: Optional[Path] = None
    format: Literal["csv", "json"] = "csv"


class Overrides(BaseModel):
    model_config = ConfigDict(frozen=True)

    gamma_ratio: Optional[float] = Field(default=None, gt=0)
    tol: Optional[float] = Field(default=None, gt=0)
    n_steps: Optional[int] = None


class VerifyGrid(BaseModel):
    model_config = ConfigDict(frozen=True)

    Q: list[float] = Field(default_factory=lambda: list(DEFAULT_VERIFY_GRID["Q"]))
    D: list[float] = Field(default_factory=lambda: list(DEFAULT_VERIFY_GRID["D"]))
    C: list[float] = Field(default_factory=lambda: list(DEFAULT_VERIFY_GRID["C"]))
    Gamma: list[float] = Field(default_factory=lambda: list(DEFAULT_VERIFY_GRID["Gamma"]))

    def points(self) -> list[tuple[float, float, float, float]]:
        return [(Q, D, C, G) for Q in self.Q for D in self.D for C in self.C for G in self.Gamma]


class RunConfig(BaseModel):
    """Everything one CLI invocation needs"""

    model_config = ConfigDict(frozen=True)

    mode: Literal["steady", "dispersion", "neutral", "viscous", "verify", "stability"]
    material: Optional[MaterialParams] = None
    sweep: Optional[Sweep] = None
    output: OutputSpec = Field(default_factory=OutputSpec)
    overrides: Overrides = Field(default_factory=Overrides)
    capillary_number: Optional[float] = Field(default=None, ge=0)
    measured_stress: Optional[float] = None
    verify_grid: VerifyGrid = Field(default_factory=VerifyGrid)
    samples: int = Field(default=10000, ge=1)
    seed: int = 0


def read_config_file(path: Path) -> dict[str, object]:
    """
    Raw key -> value mapping from a key=value or YAML file.

    Raises:
        ConfigError: unreadable file, malformed line or unknown key
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read config file {path}: {e}")

    if Path(path).suffix.lower() in (".yml", ".yaml"):
        try:
            raw = yaml.safe_load(text) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"Invalid YAML in {path}: {e}")
        if not isinstance(raw, dict):
            raise ConfigError(f"{path} must hold a mapping of keys to values")
        raw = {str(key): value for key, value in raw.items()}
    else:
        raw = {}
        for number, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{number}: expected 'key = value', got '{line}'")
            key, value = (part.strip() for part in line.split("=", 1))
            if key in raw:
                raise ConfigError(f"{path}:{number}: duplicate key '{key}'")
            raw[key] = value

    unknown = sorted(set(raw) - KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"Unknown config keys in {path}: {', '.join(unknown)}")
    return raw


def _number_list(key: str, value) -> list[float]:
    items = value if isinstance(value, list) else str(value).split(",")
    return [parse_quantity(key, item) for item in items if str(item).strip()]


def _integer(key: str, value) -> int:
    number = parse_quantity(key, value)
    if not number.is_integer():
        raise ConfigError(f"'{key}' must be an integer, got {value}")
    return int(number)


def _material(raw: dict[str, object], required: bool) -> Optional[MaterialParams]:
    present = [key for key in MATERIAL_KEYS if key in raw]
    if not present and not required:
        return None
    missing = [key for key in MATERIAL_KEYS if key not in raw]
    if missing:
        raise ConfigError(f"Missing material constants: {', '.join(missing)}")
    values = {key: parse_quantity(key, raw[key]) for key in MATERIAL_KEYS}
    try:
        return MaterialParams(**values)
    except ValidationError as e:
        raise ConfigError(f"Invalid material constants: {e}")


def _sweep(raw: dict[str, object]) -> Optional[Sweep]:
    if not any(key in raw for key in SWEEP_KEYS):
        return None
    quantity = str(raw.get("sweep", "k" if "k_min" in raw or "k_max" in raw else "Q")).strip()
    if quantity not in ("k", "Q"):
        raise ConfigError(f"'sweep' must be k or Q, got {quantity}")
    lo_key, hi_key = f"{quantity}_min", f"{quantity}_max"
    missing = [key for key in (lo_key, hi_key, "count") if key not in raw]
    if missing:
        raise ConfigError(f"Missing sweep settings: {', '.join(missing)}")
    try:
        return Sweep(
            quantity=quantity,
            min=parse_quantity(lo_key, raw[lo_key]),
            max=parse_quantity(hi_key, raw[hi_key]),
            count=_integer("count", raw["count"]),
            spacing=str(raw.get("spacing", "linear")).strip(),
        )
    except ValidationError as e:
        raise ConfigError(f"Invalid sweep: {e}")


def build_run_config(
    mode: str,
    raw: dict[str, object],
    output: Optional[OutputSpec] = None,
    cli_overrides: Optional[dict[str, object]] = None,
) -> RunConfig:
    """
    Assemble a RunConfig from a raw mapping plus command-line overrides.

    Command-line values win over file values. Modes that evaluate a material
    (steady, dispersion, viscous) require all seven material constants.
    """
    if mode not in MODES:
        raise ConfigError(f"Unknown mode '{mode}'; expected one of {', '.join(MODES)}")
    cli_overrides = {key: value for key, value in (cli_overrides or {}).items() if value is not None}
    merged = {**raw, **cli_overrides}

    material = _material(merged, required=mode in ("steady", "dispersion", "viscous"))
    sweep = _sweep(merged)
    if mode in ("dispersion", "neutral", "viscous") and sweep is None:
        raise ConfigError(f"Mode '{mode}' needs a sweep (k_min/k_max or Q_min/Q_max, count)")

    grid = {}
    for key in VERIFY_KEYS:
        if key in merged:
            grid[key.split("_", 1)[1]] = _number_list(key, merged[key])

    try:
        return RunConfig(
            mode=mode,
            material=material,
            sweep=sweep,
            output=output or OutputSpec(),
            overrides=Overrides(
                gamma_ratio=parse_quantity("gamma_ratio", merged["gamma_ratio"]) if "gamma_ratio" in merged else None,
                tol=parse_quantity("tol", merged["tol"]) if "tol" in merged else None,
                n_steps=_integer("n_steps", merged["n_steps"]) if "n_steps" in merged else None,
            ),
            capillary_number=parse_quantity("C", merged["C"]) if "C" in merged else None,
            measured_stress=(
                parse_quantity("measured_stress", merged["measured_stress"]) if "measured_stress" in merged else None
            ),
            verify_grid=VerifyGrid(**grid),
            samples=_integer("samples", merged["samples"]) if "samples" in merged else 10000,
            seed=_integer("seed", merged["seed"]) if "seed" in merged else 0,
        )
    except ValidationError as e:
        raise ConfigError(f"Invalid run configuration: {e}")


def load_run_config(
    mode: str,
    path: Optional[Path],
    output: Optional[OutputSpec] = None,
    cli_overrides: Optional[dict[str, object]] = None,
) -> RunConfig:
    raw = read_config_file(path) if path is not None else {}
    if path is None and mode not in ("verify", "stability"):
        raise ConfigError(f"Mode '{mode}' needs --config")
    logger.debug(f"Loaded {len(raw)} config keys from {path}")
    return build_run_config(mode, raw, output, cli_overrides)
