"""
Shooting Oracle Service

Independent growth-rate path: integrates the perturbation ODEs from the
substrate with fixed-step RK4, imposes the free-surface tractions numerically
and drives sigma - w~(h) to zero. Nothing here uses the closed-form velocity
field or the dispersion relation.

The state is (u~, u~', w~, p~) with p~ = beta (ik u~ + w~') the perturbation
pressure. In these variables the ODEs read

    u~'' = k^2 u~ - ik (1/(3 beta) + 2/alpha) p~
    w~'  = p~/beta - ik u~
    p~'  = 3 alpha beta k / (4 alpha + 6 beta) (i u~' + k w~)

and every coefficient stays finite as beta -> inf.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import optimize

from core.errors import ConvergenceError, FilmError, IllConditionedError, ParameterError, SingularityError
from core.settings import settings
from film.models import MaterialParams, ShootingResult

logger = logging.getLogger(__name__)

MIN_STEPS = 100
CHECKPOINTS = 16
# uniform spacing in alpha/beta used to separate poles from roots
T_SPACING = 0.05
T_REACH = 8.0
MAX_REFINE = 400
# scan cells are halved at most MAX_SPLIT times
MAX_SPLIT = 6
JUMP = 10.0
# fraction of a scan cell kept clear on each side of a rejected pole
POLE_GAP = 1e-3


@dataclass(frozen=True)
class ModeBasis:
    """Two no-slip solutions of the perturbation ODEs, columns of a (4, 2) state"""

    surface: np.ndarray
    alpha: float
    beta: float
    k: float
    n_steps: int
    reorthogonalizations: int = 0
    z: Optional[np.ndarray] = field(default=None, repr=False)
    # (n_steps + 1, 4, 2), expressed in the same basis as `surface`
    states: Optional[np.ndarray] = field(default=None, repr=False)

    def w_prime(self, state: np.ndarray) -> np.ndarray:
        """Recover w~' from a (4, ...) state"""
        inv_beta = 0.0 if math.isinf(self.beta) else 1.0 / self.beta
        return state[3] * inv_beta - 1j * self.k * state[0]


def _primitive_coefficients(p: MaterialParams, sigma: float) -> tuple[float, float]:
    if sigma == 0:
        raise SingularityError("beta = B/sigma is singular at sigma = 0; use the neutral-limit path")
    relax = 1.0 if p.viscous_limit else 1.0 + p.eta * sigma / p.shear_modulus
    if relax == 0:
        raise SingularityError(f"Maxwell resonance at sigma = {sigma:.6e}")
    alpha = 2.0 * p.eta / relax
    beta = math.inf if p.incompressible else p.bulk_modulus / sigma
    return alpha, beta


def system_matrix(alpha: float, beta: float, k: float) -> np.ndarray:
    """First-order system y' = A y for y = (u~, u~', w~, p~)"""
    inv_beta = 0.0 if math.isinf(beta) else 1.0 / beta
    denominator = 4.0 * alpha * inv_beta + 6.0
    if denominator == 0:
        raise SingularityError(f"4 alpha + 6 beta = 0 at alpha={alpha:.6e}, beta={beta:.6e}")
    rho_u = inv_beta / 3.0 + 2.0 / alpha
    rho_p = 3.0 * alpha * k / denominator
    return np.array(
        [
            [0.0, 1.0, 0.0, 0.0],
            [k * k, 0.0, 0.0, -1j * k * rho_u],
            [-1j * k, 0.0, 0.0, inv_beta],
            [0.0, 1j * rho_p, k * rho_p, 0.0],
        ],
        dtype=complex,
    )


def balanced_condition(Y: np.ndarray, alpha: float, k: float) -> float:
    """Condition number of the basis after putting (u~, u~', w~, p~) on one scale and normalizing columns"""
    rows = np.array([k, 1.0, k, 1.0 / (alpha * k)])[:, None] if k > 0 else np.ones((4, 1))
    scaled = rows * Y
    norms = np.linalg.norm(scaled, axis=0)
    if np.any(norms == 0):
        return math.inf
    return float(np.linalg.cond(scaled / norms))


def rk4_propagator(A: np.ndarray, dz: float) -> np.ndarray:
    """One classical RK4 step of a constant linear system, as a matrix"""
    hA = dz * A
    eye = np.eye(A.shape[0], dtype=complex)
    return eye + hA @ (eye + hA @ (eye + hA @ (eye + hA / 4.0) / 3.0) / 2.0)


def integrate_modes(
    p: MaterialParams, k: float, sigma: float, n_steps: Optional[int] = None, keep_states: bool = True
) -> ModeBasis:
    """
    Integrate both no-slip solutions from z = 0 to z = h.

    Starting vectors are (u~', p~)(0) = (1, 0) and (0, 1) with u~ = w~ = 0.
    The basis is re-orthogonalized by QR at checkpoints whenever its
    condition number passes ORACLE_REORTH_THRESHOLD.

    Args:
        p: Material and beam constants
        k: Wavenumber, 1/m
        sigma: Trial growth rate, 1/s (nonzero)
        n_steps: RK4 steps across the film (at least 100)
        keep_states: Store the full trajectory; otherwise whole segments are
            applied as matrix powers

    Raises:
        ParameterError: n_steps < 100 or k < 0
        SingularityError: sigma = 0 or a singular coefficient
        ConvergenceError: the state stops being finite
    """
    n = settings.ORACLE_N_STEPS if n_steps is None else int(n_steps)
    if n < MIN_STEPS:
        raise ParameterError(f"n_steps must be at least {MIN_STEPS}, got {n}")
    if not math.isfinite(k) or k < 0:
        raise ParameterError(f"Wavenumber must be finite and non-negative, got k={k}")

    alpha, beta = _primitive_coefficients(p, sigma)
    h = p.thickness
    step = rk4_propagator(system_matrix(alpha, beta, k), h / n)

    Y = np.zeros((4, 2), dtype=complex)
    Y[1, 0] = 1.0
    Y[3, 1] = 1.0
    states = np.empty((n + 1, 4, 2), dtype=complex) if keep_states else None
    if keep_states:
        states[0] = Y

    span = max(1, n // CHECKPOINTS)
    segment = None if keep_states else np.linalg.matrix_power(step, span)
    reorthogonalizations = 0
    done = 0
    while done < n:
        length = min(span, n - done)
        if keep_states:
            for i in range(done, done + length):
                Y = step @ Y
                states[i + 1] = Y
        else:
            Y = (segment if length == span else np.linalg.matrix_power(step, length)) @ Y
        done += length

        if not np.all(np.isfinite(Y)):
            raise ConvergenceError(
                f"Non-finite state between steps {done - length} and {done} of {n}",
                diagnostics={"step": done, "k": k, "sigma": sigma},
            )
        if done < n and balanced_condition(Y, alpha, k) > settings.ORACLE_REORTH_THRESHOLD:
            Y, triangle = np.linalg.qr(Y)
            if keep_states:
                states[: done + 1] = states[: done + 1] @ np.linalg.inv(triangle)
            reorthogonalizations += 1

    return ModeBasis(
        surface=Y,
        alpha=alpha,
        beta=beta,
        k=k,
        n_steps=n,
        reorthogonalizations=reorthogonalizations,
        z=np.linspace(0.0, h, n + 1) if keep_states else None,
        states=states,
    )


def boundary_tractions(basis: ModeBasis) -> np.ndarray:
    """2x2 matrix of (T~xz, T~zz) at z = h for each basis solution"""
    u, du, w, _ = basis.surface
    dw = basis.w_prime(basis.surface)
    k, alpha = basis.k, basis.alpha
    t_xz = 0.5 * alpha * (1j * k * w + du)
    t_zz = alpha / 3.0 * (-1j * k * u + 2.0 * dw) + basis.surface[3]
    return np.vstack([t_xz, t_zz])


def _surface_solve(p: MaterialParams, k: float, basis: ModeBasis) -> tuple[np.ndarray, float]:
    matrix = boundary_tractions(basis)
    norms = np.linalg.norm(matrix, axis=0)
    condition = float(np.linalg.cond(matrix / norms)) if np.all(norms > 0) else math.inf
    if not math.isfinite(condition):
        raise SingularityError(f"Singular traction matrix at k={k:.6e}", diagnostics={"k": k})
    rhs = np.array([-6.0 * p.forcing * p.eta * 1j * k, -p.surface_energy * k * k], dtype=complex)
    return np.linalg.solve(matrix, rhs), condition


def shooting_residual(p: MaterialParams, k: float, sigma: float, n_steps: Optional[int] = None) -> complex:
    """sigma - w~(h) with w~ built from the integrated basis"""
    basis = integrate_modes(p, k, sigma, n_steps, keep_states=False)
    weights, _ = _surface_solve(p, k, basis)
    return sigma - complex(basis.surface[2] @ weights)


def _geometric(start: float, stop: float, factor: float = 4.0) -> list[float]:
    values, x = [], start
    while x < stop:
        values.append(x)
        x *= factor
    return values


def _trial_rates(p: MaterialParams, k: float) -> tuple[list[float], list[float]]:
    """Trial growth rates walking away from zero, negative side then positive"""
    start = settings.ORACLE_BRACKET_START
    if p.viscous_limit:
        unit = 6.0 * p.forcing + k * p.surface_energy / (2.0 * p.eta)
        negative = [-unit * x for x in _geometric(start, 1e2)]
        positive = [unit * x for x in _geometric(start, 1e2)]
        if not p.incompressible:
            # t = alpha/beta = 2 eta sigma / B
            to_sigma = p.bulk_modulus / (2.0 * p.eta)
            negative += [-T_SPACING * j * to_sigma for j in range(1, int(T_REACH / T_SPACING) + 1)]
            positive += [T_SPACING * j * to_sigma for j in range(1, int(T_REACH / T_SPACING) + 1)]
            negative = [s for s in negative if s >= -1e2 * unit]
            positive = [s for s in positive if s <= 1e2 * unit]
    else:
        unit = p.shear_modulus / p.eta
        R_neg = [-x for x in _geometric(start, 0.5)]
        gap = 0.5
        while gap > 1e-12:
            R_neg.append(-(1.0 - gap))
            gap /= 4.0
        R_pos = _geometric(start, settings.R_MAX) + [settings.R_MAX]
        if not p.incompressible:
            Gamma = p.bulk_modulus / p.shear_modulus
            R_neg += [Gamma * t / (2.0 - Gamma * t) for t in -T_SPACING * np.arange(1, int(T_REACH / T_SPACING) + 1)]
            t_max = 2.0 * settings.R_MAX / (Gamma * (1.0 + settings.R_MAX))
            t_step = max(T_SPACING, t_max / MAX_REFINE)
            R_pos += [Gamma * t / (2.0 - Gamma * t) for t in np.arange(t_step, t_max, t_step)]
        negative = [R * unit for R in R_neg]
        positive = [R * unit for R in R_pos]
    return sorted(set(negative), reverse=True), sorted(set(positive))


def _safe_residual(p: MaterialParams, k: float, sigma: float, n_steps: int) -> complex:
    try:
        return shooting_residual(p, k, sigma, n_steps)
    except FilmError as e:
        logger.debug(f"residual unavailable at sigma={sigma:.6e}: {e.detail}")
        return complex(math.nan, math.nan)


def _suspicious(before: float, fa: float, fb: float, after: float) -> bool:
    """
    A scan cell that may hide a pole next to a root: an endpoint is not
    finite, |residual| jumps across it, or an endpoint is a local extremum.
    """
    if not (math.isfinite(fa) and math.isfinite(fb)):
        return True
    small, large = sorted((abs(fa), abs(fb)))
    if large > JUMP * small:
        return True
    if math.isfinite(before) and (fa - before) * (fb - fa) < 0:
        return True
    return math.isfinite(after) and (fb - fa) * (after - fb) < 0


class _SideScan:
    """Root search along one side of sigma = 0, walking away from zero"""

    def __init__(self, p: MaterialParams, k: float, n_steps: int, tried: list):
        self.p, self.k, self.n_steps, self.tried = p, k, n_steps, tried
        self.iterations = 0

    def value(self, sigma: float) -> float:
        return _safe_residual(self.p, self.k, sigma, self.n_steps).real

    def polish(self, a: float, b: float) -> Optional[float]:
        """Brent on a sign-change cell; None when the zero is a pole of the residual"""
        lo, hi = min(a, b), max(a, b)
        self.tried.append((lo, hi))
        root, info = optimize.brentq(
            self.value,
            lo,
            hi,
            xtol=settings.ROOT_XTOL,
            rtol=settings.ROOT_RTOL,
            maxiter=settings.ROOT_MAXITER,
            full_output=True,
            disp=False,
        )
        self.iterations += info.iterations
        residual = _safe_residual(self.p, self.k, root, self.n_steps)
        if abs(residual) <= settings.ORACLE_RESIDUAL_RTOL * abs(root):
            return float(root)
        logger.debug(f"Rejected sign change at sigma={root:.6e}: |residual| {abs(residual):.3e} (pole)")
        return None

    def search(self, a: float, fa: float, b: float, fb: float, depth: int, split: bool, gap: float) -> Optional[float]:
        """
        First accepted root in the cell from a to b. Suspicious cells are
        halved until each half is finite and monotone at its midpoint; a
        rejected pole is cut out with `gap` on either side and both remainders
        searched again.
        """
        if split and depth > 0:
            m = 0.5 * (a + b)
            fm = self.value(m)
            monotone = all(map(math.isfinite, (fa, fm, fb))) and min(fa, fb) <= fm <= max(fa, fb)
            if not monotone:
                if not any(map(math.isfinite, (fa, fm, fb))):
                    return None
                for lo, flo, hi, fhi in ((a, fa, m, fm), (m, fm, b, fb)):
                    root = self.search(lo, flo, hi, fhi, depth - 1, True, gap)
                    if root is not None:
                        return root
                return None

        if not (math.isfinite(fa) and math.isfinite(fb)) or not (fb == 0.0 or fa * fb < 0):
            return None
        root = self.polish(a, b)
        if root is not None or depth == 0:
            return root

        step = math.copysign(gap, b - a)
        for lo, hi in ((a, root - step), (root + step, b)):
            if (hi - lo) * (b - a) <= 0:
                continue
            flo = fa if lo == a else self.value(lo)
            fhi = fb if hi == b else self.value(hi)
            found = self.search(lo, flo, hi, fhi, depth - 1, True, gap)
            if found is not None:
                return found
        return None


def _scan_side(p: MaterialParams, k: float, trials: list[float], n_steps: int, tried: list) -> tuple[Optional[float], int]:
    """Accepted root of smallest |sigma| along one side of sigma = 0, and the brentq iterations spent"""
    scan = _SideScan(p, k, n_steps, tried)
    values: list[float] = []

    def value_at(i: int) -> float:
        if not 0 <= i < len(trials):
            return math.nan
        while len(values) <= i:
            values.append(scan.value(trials[len(values)]))
        return values[i]

    for i in range(len(trials) - 1):
        a, b = trials[i], trials[i + 1]
        fa, fb = value_at(i), value_at(i + 1)
        split = _suspicious(value_at(i - 1), fa, fb, value_at(i + 2))
        root = scan.search(a, fa, b, fb, MAX_SPLIT, split, POLE_GAP * abs(b - a))
        if root is not None:
            return root, scan.iterations
    return None, scan.iterations


def shoot_growth_rate(p: MaterialParams, k: float, n_steps: Optional[int] = None) -> ShootingResult:
    """
    Growth rate by shooting: scan trial sigma away from zero on both sides,
    polish every sign change of Re(sigma - w~(h)) with Brent's method and keep
    the accepted root of smallest |sigma|.

    Raises:
        ParameterError: k <= 0
        ConvergenceError: unforced film, or no accepted root
        IllConditionedError: traction matrix condition above ORACLE_COND_LIMIT
    """
    if not math.isfinite(k) or k <= 0:
        raise ParameterError(f"shoot_growth_rate needs k > 0, got k={k}")
    if p.forcing == 0 and p.surface_energy == 0:
        raise ConvergenceError(
            "Unforced film (f = 0, gamma = 0): the residual reduces to sigma and has no root away from zero",
            diagnostics={"unforced": True, "k": k},
        )
    n = settings.ORACLE_N_STEPS if n_steps is None else int(n_steps)
    if n < MIN_STEPS:
        raise ParameterError(f"n_steps must be at least {MIN_STEPS}, got {n}")

    negative, positive = _trial_rates(p, k)
    tried: list[tuple[float, float]] = []
    roots, iterations = [], 0
    for trials in (negative, positive):
        root, spent = _scan_side(p, k, trials, n, tried)
        iterations += spent
        if root is not None:
            roots.append(root)
    if not roots:
        raise ConvergenceError(
            f"No accepted root of the shooting residual at k={k:.6e}",
            diagnostics={"k": k, "brackets": tried},
        )
    sigma = min(roots, key=abs)

    basis = integrate_modes(p, k, sigma, n, keep_states=True)
    weights, condition = _surface_solve(p, k, basis)
    if condition > settings.ORACLE_COND_LIMIT:
        raise IllConditionedError(
            f"Traction matrix condition {condition:.3e} exceeds {settings.ORACLE_COND_LIMIT:.1e} at k={k:.6e}",
            diagnostics={"k": k, "sigma": sigma, "condition": condition},
        )
    u = basis.states[:, 0, :] @ weights
    w = basis.states[:, 2, :] @ weights
    profile = np.column_stack([basis.z.astype(complex), u, w])
    residual = sigma - complex(w[-1])
    converged = abs(residual) <= settings.ORACLE_RESIDUAL_RTOL * abs(sigma)
    logger.debug(f"shooting root sigma={sigma:.12e} at k={k:.6e}, residual {abs(residual):.3e}")

    return ShootingResult(
        sigma=sigma,
        basis_mismatch=condition,
        profile=profile,
        converged=converged,
        k=k,
        residual=residual,
        iterations=iterations,
        reorthogonalizations=basis.reorthogonalizations,
        brackets=tried,
    )
