"""
Parameter Mapping Service

Maps between the dimensional material/beam description and the reduced
groups R = eta*sigma/G, Q = h*k, D = 6*f*A*eta/G, C = gamma/(2*G*h) and
Gamma = B/G.
"""
import logging
import math

from core.errors import ParameterError, ViscousLimitError
from film.models import INFINITE_MODULUS, DimensionlessState, MaterialParams

logger = logging.getLogger(__name__)

# Reference values used when a dimensionless point has to be made dimensional
REFERENCE_ETA = 6.2e8
REFERENCE_SHEAR_MODULUS = 3.1e10
REFERENCE_THICKNESS = 2e-9
REFERENCE_STRAIN_PER_DOSE = 5e-21


def to_dimensionless(p: MaterialParams, k: float, sigma: float = 0.0) -> DimensionlessState:
    """
    Reduce a dimensional (material, k, sigma) triple to {R, Q, D, C, Gamma}.

    Args:
        p: Material and beam constants
        k: Wavenumber, 1/m
        sigma: Growth rate, 1/s

    Returns:
        DimensionlessState. With an infinite shear modulus every group that
        divides by G collapses (R = D = C = 0, Gamma = inf) and the state keeps
        the dimensional inputs for the viscous-limit path.

    Raises:
        ParameterError: Negative or non-finite wavenumber
    """
    if not math.isfinite(k) or k < 0:
        raise ParameterError(f"Wavenumber must be finite and non-negative, got k={k}")

    Q = p.thickness * k
    if p.viscous_limit:
        logger.debug(f"Infinite shear modulus: dimensionless groups collapse at k={k}")
        return DimensionlessState(
            R=0.0,
            Q=Q,
            D=0.0,
            C=0.0,
            Gamma=INFINITE_MODULUS,
            viscous_limit=True,
            material=p,
            wavenumber=k,
            sigma=sigma,
        )

    G = p.shear_modulus
    return DimensionlessState(
        R=p.eta * sigma / G,
        Q=Q,
        D=6.0 * p.flux * p.strain_per_dose * p.eta / G,
        C=p.surface_energy / (2.0 * G * p.thickness),
        Gamma=p.bulk_modulus / G,
        material=p,
        wavenumber=k,
        sigma=sigma,
    )


def growth_rate_dimensional(p: MaterialParams, R: float) -> float:
    """sigma = R*G/eta, the inverse of the R map"""
    if p.viscous_limit:
        raise ViscousLimitError(
            "Growth rate is undefined in dimensionless form when G is infinite; use viscous_growth()"
        )
    return R * p.shear_modulus / p.eta


def maxwell_time(p: MaterialParams) -> float:
    """Stress relaxation time eta/G in seconds (0 for a purely viscous film)"""
    return p.eta / p.shear_modulus


def dimensionless_state(Q: float, D: float, C: float, Gamma: float, R: float = 0.0) -> DimensionlessState:
    return DimensionlessState(R=R, Q=Q, D=D, C=C, Gamma=Gamma)


def from_dimensionless(
    Q: float,
    D: float,
    C: float,
    Gamma: float,
    eta: float = REFERENCE_ETA,
    shear_modulus: float = REFERENCE_SHEAR_MODULUS,
    thickness: float = REFERENCE_THICKNESS,
    strain_per_dose: float = REFERENCE_STRAIN_PER_DOSE,
) -> tuple[MaterialParams, float]:
    """
    Build dimensional inputs reproducing a dimensionless grid point.

    eta, G, h and A are free choices; the flux, surface energy and bulk
    modulus are solved for so that D, C and Gamma come out as requested.

    Returns:
        (MaterialParams, k) with k = Q/h
    """
    if math.isinf(shear_modulus):
        raise ViscousLimitError("A dimensionless point needs a finite reference shear modulus")
    if Q < 0 or D < 0 or C < 0 or not Gamma > 0:
        raise ParameterError(f"Inadmissible dimensionless point Q={Q}, D={D}, C={C}, Gamma={Gamma}")

    p = MaterialParams(
        eta=eta,
        shear_modulus=shear_modulus,
        bulk_modulus=Gamma * shear_modulus,
        surface_energy=2.0 * shear_modulus * thickness * C,
        flux=D * shear_modulus / (6.0 * eta * strain_per_dose),
        strain_per_dose=strain_per_dose,
        thickness=thickness,
    )
    return p, Q / thickness
