"""
Modal Analysis Service

Linearized perturbation problem for a normal mode h = h0 + eps*exp(ikx + sigma*t):
coefficients of the velocity ODEs, the closed-form velocity field, the
free-surface boundary system and the kinematic residual sigma - w~(h).

All hyperbolic quantities are carried relative to cosh(Q), so nothing
overflows at large Q. Complex arithmetic is used throughout; u~ is a quarter
period out of phase with w~.
"""
import logging
import math
from dataclasses import replace

import numpy as np

from core.errors import ParameterError, SingularityError
from core.settings import settings
from film.hyperbolic import cosh_ratio, sech2, sinh_ratio
from film.models import MaterialParams, ModalCoefficients, VelocityField

logger = logging.getLogger(__name__)


def _alpha_beta_t(p: MaterialParams, sigma: float) -> tuple[float, float, float]:
    """alpha = 2eta/(1 + eta*sigma/G), beta = B/sigma and their ratio t = alpha/beta"""
    if sigma == 0:
        raise SingularityError(
            "beta = B/sigma is singular at sigma = 0; use the neutral-limit path (neutral_boundary)"
        )
    R = 0.0 if p.viscous_limit else p.eta * sigma / p.shear_modulus
    if abs(1.0 + R) <= settings.POLE_EPS:
        raise SingularityError(
            f"Maxwell resonance: sigma = -G/eta = {sigma:.6e} makes alpha infinite",
            diagnostics={"sigma": sigma, "R": R},
        )
    alpha = 2.0 * p.eta / (1.0 + R)
    if p.incompressible:
        return alpha, math.inf, 0.0
    beta = p.bulk_modulus / sigma
    return alpha, beta, alpha * sigma / p.bulk_modulus


def modal_coefficients(p: MaterialParams, k: float, sigma: float) -> ModalCoefficients:
    """
    Coefficients of the perturbation ODEs and the surface amplitudes b, d.

    K = (4a+6b)/(3a) k^2, L = 3a/(4a+6b) k^2, M = -i(a+6b)/(4a+6b) k,
    N = -i(a+6b)/(3a) k with a = alpha, b = beta. U, V and the amplitudes are
    evaluated through t = alpha/beta so the incompressible limit (t = 0) is
    regular.

    Args:
        p: Material and beam constants
        k: Wavenumber, 1/m
        sigma: Growth rate, 1/s (nonzero)

    Returns:
        ModalCoefficients

    Raises:
        SingularityError: sigma = 0 or the Maxwell resonance sigma = -G/eta
    """
    if not math.isfinite(k) or k < 0:
        raise ParameterError(f"Wavenumber must be finite and non-negative, got k={k}")
    alpha, beta, t = _alpha_beta_t(p, sigma)
    Q = p.thickness * k

    U = (t + 6.0) / (7.0 * t + 6.0)
    V = (4.0 * t + 6.0) / (7.0 * t + 6.0)

    if k == 0:
        # the uniform mode carries no flow
        return ModalCoefficients(
            alpha=alpha, beta=beta, K=0j, L=0j, M=0j, N=0j, U=U, V=V,
            Delta=0j, b=0j, d=0j, Q=0.0, k=0.0, sigma=sigma, t=t,
        )

    k2 = k * k
    if math.isinf(beta):
        K, L = math.inf, 0.0
        M, N = complex(0.0, -k), complex(0.0, -math.inf)
    else:
        K = (4 * alpha + 6 * beta) / (3 * alpha) * k2
        L = 3 * alpha / (4 * alpha + 6 * beta) * k2
        M = complex(0.0, -(alpha + 6 * beta) / (4 * alpha + 6 * beta) * k)
        N = complex(0.0, -(alpha + 6 * beta) / (3 * alpha) * k)

    T = math.tanh(Q)
    s2 = float(sech2(Q))
    v_minus_u = 3.0 * t / (7.0 * t + 6.0)
    # E = Delta / (alpha k cosh Q)^2
    E = V * V * s2 + U * T * T + U * U * Q * Q * s2
    with np.errstate(over="ignore"):
        sinh_q = np.sinh(Q)
        Delta = (alpha * k) ** 2 * (V * V + U * sinh_q * sinh_q + U * U * Q * Q)

    beam = 6.0 * p.forcing * p.eta
    capillary = p.surface_energy * k
    b_scaled = -1j / (alpha * E) * (beam * (V - U * Q * T) + capillary * (-v_minus_u * T + U * Q))
    d_scaled = -1.0 / (alpha * E) * (beam * (-v_minus_u * T - U * Q) + capillary * (V + U * Q * T))
    sech = math.sqrt(s2)

    return ModalCoefficients(
        alpha=alpha,
        beta=beta,
        K=K,
        L=L,
        M=M,
        N=N,
        U=U,
        V=V,
        Delta=complex(Delta),
        b=b_scaled * sech,
        d=d_scaled * sech,
        Q=Q,
        k=k,
        sigma=sigma,
        b_scaled=complex(b_scaled),
        d_scaled=complex(d_scaled),
        t=t,
    )


def v_minus_u(c: ModalCoefficients) -> complex:
    """V - U = 3a/(7a+6b), free of the cancellation in c.V - c.U"""
    return 3.0 * c.t / (7.0 * c.t + 6.0)


def velocity_field(c: ModalCoefficients, p: MaterialParams, k: float) -> VelocityField:
    """
    Closed-form perturbation velocity with the no-slip coefficients a = c = 0:

        u~ = b sinh(kz) + U kz [b cosh(kz) - i d sinh(kz)]
        w~ = d sinh(kz) - U kz [d cosh(kz) + i b sinh(kz)]

    The closures work from the cosh(Q)-scaled amplitudes.
    """
    if k == 0:
        zero = lambda z: np.zeros_like(np.asarray(z, dtype=float), dtype=complex)  # noqa: E731
        return VelocityField(u_tilde=zero, w_tilde=zero, du_tilde=zero, dw_tilde=zero, b=0j, d=0j)

    U = c.U
    Q = p.thickness * k
    bs, ds = c.b_scaled, c.d_scaled

    def _parts(z):
        x = k * np.asarray(z, dtype=float)
        S, C = sinh_ratio(x, Q), cosh_ratio(x, Q)
        p_ = bs * C - 1j * ds * S
        q_ = ds * C + 1j * bs * S
        return x, S, C, p_, q_

    def u_tilde(z):
        x, S, C, p_, q_ = _parts(z)
        return bs * S + U * x * p_

    def w_tilde(z):
        x, S, C, p_, q_ = _parts(z)
        return ds * S - U * x * q_

    def du_tilde(z):
        x, S, C, p_, q_ = _parts(z)
        return k * (bs * C + U * p_ - 1j * U * x * q_)

    def dw_tilde(z):
        x, S, C, p_, q_ = _parts(z)
        return k * (ds * C - U * q_ - 1j * U * x * p_)

    return VelocityField(
        u_tilde=u_tilde, w_tilde=w_tilde, du_tilde=du_tilde, dw_tilde=dw_tilde, b=c.b, d=c.d
    )


def second_derivatives(c: ModalCoefficients, p: MaterialParams, k: float, z) -> tuple[np.ndarray, np.ndarray]:
    """(u~'', w~'') of the closed-form field"""
    x = k * np.asarray(z, dtype=float)
    Q = p.thickness * k
    S, C = sinh_ratio(x, Q), cosh_ratio(x, Q)
    bs, ds, U = c.b_scaled, c.d_scaled, c.U
    p_ = bs * C - 1j * ds * S
    q_ = ds * C + 1j * bs * S
    k2 = k * k
    return k2 * (bs * S - 2j * U * q_ + U * x * p_), k2 * (ds * S - 2j * U * p_ - U * x * q_)


def divergence(c: ModalCoefficients, p: MaterialParams, k: float, z):
    """ik u~ + w~' of the closed-form field, which reduces to k (1 - U)(d cosh kz + i b sinh kz)"""
    x = k * np.asarray(z, dtype=float)
    Q = p.thickness * k
    one_minus_u = 6.0 * c.t / (7.0 * c.t + 6.0)
    return k * one_minus_u * (c.d_scaled * cosh_ratio(x, Q) + 1j * c.b_scaled * sinh_ratio(x, Q))


def boundary_system(c: ModalCoefficients, p: MaterialParams) -> tuple[np.ndarray, np.ndarray]:
    """
    Linearized free-surface conditions at z = h as a 2x2 system in (b, d) * cosh(Q):

        T~xz = (alpha/2)(ik w~ + u~')                                  = -6 f A eta i k
        T~zz = (alpha/3)(-ik u~ + 2 w~') + beta (ik u~ + w~')          = -gamma k^2

    beta times the divergence is taken from the exact divergence of the
    closed-form field, 6 alpha / (7t + 6) * k * q, which stays finite as
    beta -> inf.
    """
    k, h = c.k, p.thickness
    alpha = c.alpha
    pressure_factor = 6.0 * alpha / (7.0 * c.t + 6.0)
    columns = []
    for bs, ds in ((1.0 + 0j, 0j), (0j, 1.0 + 0j)):
        basis = replace(c, b_scaled=bs, d_scaled=ds)
        field = velocity_field(basis, p, k)
        u, du = field.u_tilde(h), field.du_tilde(h)
        w, dw = field.w_tilde(h), field.dw_tilde(h)
        q_h = ds * cosh_ratio(k * h, k * h) + 1j * bs * sinh_ratio(k * h, k * h)
        t_xz = 0.5 * alpha * (1j * k * w + du)
        t_zz = alpha / 3.0 * (-1j * k * u + 2.0 * dw) + pressure_factor * k * q_h
        columns.append((t_xz, t_zz))

    matrix = np.array([[columns[0][0], columns[1][0]], [columns[0][1], columns[1][1]]], dtype=complex)
    rhs = np.array([-6.0 * p.forcing * p.eta * 1j * k, -p.surface_energy * k * k], dtype=complex)
    return matrix, rhs


def solve_boundary(c: ModalCoefficients, p: MaterialParams) -> ModalCoefficients:
    """Replace the closed-form surface amplitudes with a direct solve of the boundary system"""
    matrix, rhs = boundary_system(c, p)
    det = np.linalg.det(matrix)
    if det == 0 or not np.isfinite(det):
        raise SingularityError(
            f"Singular boundary matrix at Q={c.Q:.6g} (sigma={c.sigma:.6e}, eta={p.eta:.3e}, "
            f"G={p.shear_modulus:.3e}, B={p.bulk_modulus:.3e})",
            diagnostics={"Q": c.Q, "sigma": c.sigma},
        )
    bs, ds = np.linalg.solve(matrix, rhs)
    sech = math.sqrt(float(sech2(c.Q)))
    return replace(c, b_scaled=complex(bs), d_scaled=complex(ds), b=complex(bs) * sech, d=complex(ds) * sech)


def kinematic_residual(p: MaterialParams, k: float, sigma: float) -> complex:
    """
    sigma - w~(h), the linearized kinematic condition.

    Its zeros in sigma are the dispersion relation. The surface amplitudes
    come from a direct solve of the boundary system.

    Raises:
        SingularityError: sigma = 0, Maxwell resonance, or a singular boundary matrix
    """
    if k <= 0:
        raise ParameterError(f"Kinematic residual needs k > 0, got k={k}")
    c = solve_boundary(modal_coefficients(p, k, sigma), p)
    w_h = velocity_field(c, p, k).w_tilde(p.thickness)
    residual = sigma - complex(w_h)
    logger.debug(f"kinematic residual at k={k:.6e}, sigma={sigma:.6e}: {residual:.6e}")
    return residual
