"""
Steady State Service

Flat-film steady state under normal-incidence irradiation: the film is
stationary (w0 = 0), compressively stressed laterally and compressively
strained vertically.
"""
import logging

from core.errors import ParameterError, SingularityError
from film.models import MaterialParams, SteadyState, SymTensor3

logger = logging.getLogger(__name__)

# stress-free "pancake" strain imposed by the beam, per unit f*A
PANCAKE = SymTensor3.diag(1.0, 1.0, -2.0)


def steady_state(p: MaterialParams) -> SteadyState:
    """
    Steady stress and strain of the flat film.

    T0 = 6*eta*f*A*diag(-1, -1, 0) depends on the viscosity only;
    E0 = 4*(eta/B)*f*A*diag(0, 0, -1) vanishes for an incompressible film.
    """
    eta_fa = p.eta * p.forcing
    # + 0.0 keeps an unforced film free of -0.0
    lateral = -6.0 * eta_fa + 0.0
    stress = SymTensor3.diag(lateral, lateral, 0.0)

    if p.incompressible:
        strain = SymTensor3()
        strain_trace = 0.0
    else:
        strain_trace = -4.0 * eta_fa / p.bulk_modulus + 0.0
        strain = SymTensor3.diag(0.0, 0.0, strain_trace)

    logger.debug(f"Steady lateral stress {stress.xx:.6e} Pa, vertical strain {strain.zz:.6e}")
    return SteadyState(
        stress=stress,
        strain=strain,
        stress_trace=stress.xx + stress.yy + stress.zz,
        strain_trace=strain_trace,
        incompressible=p.incompressible,
    )


def steady_velocity(z: float) -> float:
    """w0(z); mass conservation forces it to vanish everywhere"""
    return 0.0


def deviatoric_stress(s: SteadyState) -> SymTensor3:
    """T_D,0, which equals -2*eta*f*A*diag(1, 1, -2)"""
    return s.stress.deviator()


def constitutive_residual(p: MaterialParams, s: SteadyState) -> SymTensor3:
    """Steady constitutive relation (1/2eta)*T_D,0 + f*A*diag(1,1,-2); zero at the steady state"""
    return deviatoric_stress(s).scaled(0.5 / p.eta).plus(PANCAKE.scaled(p.forcing))


def compare_to_measurement(s: SteadyState, measured_stress: float) -> float:
    """
    Ratio of a measured steady stress magnitude to the computed one.

    Args:
        s: Computed steady state
        measured_stress: Measured lateral stress magnitude, Pa

    Returns:
        measured_stress / |T0_xx|

    Raises:
        ParameterError: Non-positive measurement
        SingularityError: Computed stress is zero (no beam forcing)
    """
    if not measured_stress > 0:
        raise ParameterError(f"Measured stress must be positive, got {measured_stress}")
    computed = abs(s.stress.xx)
    if computed == 0.0:
        raise SingularityError("Computed steady stress is zero; nothing to compare against")
    ratio = measured_stress / computed
    logger.info(f"Measured/computed steady stress ratio: {ratio:.4f}")
    return ratio
