"""
Domain types for the irradiated-film solvers.

Serializable value objects are frozen pydantic models; the complex-valued
intermediates of the modal analysis are frozen dataclasses because they carry
numpy data and closures.
"""
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

# Sentinel for "take the limit G -> inf or B -> inf"
INFINITE_MODULUS = math.inf


class MaterialParams(BaseModel):
    """Physical film and beam constants, SI units throughout"""

    model_config = ConfigDict(frozen=True)

    eta: float = Field(gt=0, description="viscosity, Pa s")
    shear_modulus: float = Field(gt=0, description="G, Pa (inf = viscous limit)")
    bulk_modulus: float = Field(gt=0, description="B, Pa (inf = incompressible)")
    surface_energy: float = Field(ge=0, description="gamma, N/m")
    flux: float = Field(ge=0, description="f, ions/(m^2 s)")
    strain_per_dose: float = Field(ge=0, description="A, m^2/ion")
    thickness: float = Field(gt=0, description="h0, m")

    @field_validator("eta", "surface_energy", "flux", "strain_per_dose", "thickness")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError(f"must be finite, got {value}")
        return value

    @field_validator("shear_modulus", "bulk_modulus")
    @classmethod
    def _finite_or_sentinel(cls, value: float) -> float:
        if math.isnan(value):
            raise ValueError("modulus may not be NaN")
        return value

    @property
    def viscous_limit(self) -> bool:
        return math.isinf(self.shear_modulus)

    @property
    def incompressible(self) -> bool:
        return math.isinf(self.bulk_modulus)

    @property
    def forcing(self) -> float:
        """Beam strain rate f*A, 1/s"""
        return self.flux * self.strain_per_dose


class DimensionlessState(BaseModel):
    """Reduced parameter set {R, Q, D, C} plus the compressibility ratio Gamma"""

    model_config = ConfigDict(frozen=True)

    R: float = 0.0
    Q: float = Field(ge=0)
    D: float = Field(ge=0)
    C: float = Field(ge=0)
    Gamma: float = Field(gt=0)
    viscous_limit: bool = False
    # kept when the viscous-limit sentinel zeroes the groups above
    material: Optional[MaterialParams] = None
    wavenumber: Optional[float] = None
    sigma: Optional[float] = None

    @property
    def incompressible(self) -> bool:
        return math.isinf(self.Gamma)

    def with_R(self, R: float) -> "DimensionlessState":
        return self.model_copy(update={"R": R})


class SymTensor3(BaseModel):
    """Symmetric 3x3 tensor in (x, y, z) components"""

    model_config = ConfigDict(frozen=True)

    xx: float = 0.0
    yy: float = 0.0
    zz: float = 0.0
    xy: float = 0.0
    xz: float = 0.0
    yz: float = 0.0

    @classmethod
    def diag(cls, xx: float, yy: float, zz: float) -> "SymTensor3":
        return cls(xx=xx, yy=yy, zz=zz)

    @classmethod
    def from_array(cls, a: np.ndarray) -> "SymTensor3":
        a = np.asarray(a, dtype=float)
        if a.shape != (3, 3):
            raise ValueError(f"expected a 3x3 array, got shape {a.shape}")
        s = 0.5 * (a + a.T)
        return cls(xx=s[0, 0], yy=s[1, 1], zz=s[2, 2], xy=s[0, 1], xz=s[0, 2], yz=s[1, 2])

    def as_array(self) -> np.ndarray:
        return np.array(
            [
                [self.xx, self.xy, self.xz],
                [self.xy, self.yy, self.yz],
                [self.xz, self.yz, self.zz],
            ]
        )

    def trace(self) -> float:
        return self.xx + self.yy + self.zz

    def deviator(self) -> "SymTensor3":
        third = self.trace() / 3.0
        return self.model_copy(update={"xx": self.xx - third, "yy": self.yy - third, "zz": self.zz - third})

    def scaled(self, factor: float) -> "SymTensor3":
        return SymTensor3(**{name: factor * value for name, value in self.model_dump().items()})

    def plus(self, other: "SymTensor3") -> "SymTensor3":
        mine, theirs = self.model_dump(), other.model_dump()
        return SymTensor3(**{name: mine[name] + theirs[name] for name in mine})

    def norm(self) -> float:
        """Frobenius norm"""
        return float(np.linalg.norm(self.as_array()))


class SteadyState(BaseModel):
    """Flat-film steady state: stress T0, strain E0 and their traces"""

    model_config = ConfigDict(frozen=True)

    stress: SymTensor3
    strain: SymTensor3
    stress_trace: float
    strain_trace: float
    incompressible: bool = False
    # w0(z) vanishes identically
    velocity: float = 0.0


class DispersionRoot(BaseModel):
    """Real growth rate solving the dispersion relation, with diagnostics"""

    model_config = ConfigDict(frozen=True)

    Q: float
    R: float
    residual: float
    bracket: tuple[float, float]
    iterations: int
    converged: bool
    multiple_roots: bool = False
    brackets: list[tuple[float, float]] = Field(default_factory=list)
    unstable: bool = False
    # smallest positive root, when one was bracketed
    positive_root: Optional[float] = None
    residual_scale: float = 0.0


class StabilitySummary(BaseModel):
    """Outcome of a randomized growth-rate sweep over (Q, D, C, Gamma)"""

    model_config = ConfigDict(frozen=True)

    samples: int
    seed: int
    converged: int
    stable: int
    unstable: int
    failures: int
    # failures where the only real zero sat on the U, V pole
    no_real_mode: int = 0
    max_R: float
    # unstable samples with Gamma > D/2, where no positive root can exist
    bound_violations: int
    # sampled log-uniformly; the lower ends are floors on the open intervals
    ranges: dict[str, tuple[float, float]] = Field(default_factory=dict)
    unstable_points: list[dict[str, float]] = Field(default_factory=list)


@dataclass(frozen=True)
class ModalCoefficients:
    """Coefficients of the linearized perturbation problem at one (k, sigma)"""

    alpha: complex
    beta: complex
    K: complex
    L: complex
    M: complex
    N: complex
    U: complex
    V: complex
    Delta: complex
    b: complex
    d: complex
    Q: float
    k: float
    sigma: float
    # b and d multiplied by cosh(Q); finite even when cosh(Q) overflows
    b_scaled: complex = 0j
    d_scaled: complex = 0j
    # alpha / beta, zero in the incompressible limit
    t: complex = 0j


@dataclass(frozen=True)
class VelocityField:
    """Perturbation velocity (u~, w~) and its z-derivatives on [0, h]"""

    u_tilde: Callable[[np.ndarray], np.ndarray]
    w_tilde: Callable[[np.ndarray], np.ndarray]
    du_tilde: Callable[[np.ndarray], np.ndarray]
    dw_tilde: Callable[[np.ndarray], np.ndarray]
    b: complex
    d: complex
    a: complex = 0j
    c: complex = 0j


@dataclass(frozen=True)
class ShootingResult:
    """Growth rate found by integrating the perturbation ODEs directly"""

    sigma: float
    basis_mismatch: float
    profile: np.ndarray = field(repr=False)
    converged: bool
    k: float = 0.0
    residual: complex = 0j
    iterations: int = 0
    reorthogonalizations: int = 0
    brackets: list[tuple[float, float]] = field(default_factory=list)
