"""
Dispersion Service

Growth rate of a surface mode from the implicit dispersion relation

    (2R/(1+R)) [V^2 + U^2 Q^2 + U sinh^2 Q]
        + D [U^2 Q^2 - (V - U) sinh^2 Q]
        + C V Q [sinh 2Q - 2UQ] = 0

with U = (t+6)/(7t+6), V = (4t+6)/(7t+6) and t = alpha/beta = 2R/(Gamma(1+R)),
plus the neutral-stability curve and the closed-form limits.

Root finding works on the relation multiplied by ((7t+6)/6)^2 / cosh^2 Q. That
form has no poles at 7t+6 = 0 and no overflow at large Q, and for finite Gamma
it is a cubic in t. Besides the roots of the relation it has one zero within
O(sech^2 Q) of 7t+6 = 0, which the solver drops.
"""
import logging
import math
from typing import Optional

import numpy as np
from scipy import optimize

from core.errors import ConvergenceError, ParameterError, SingularityError, ViscousLimitError
from core.settings import settings
from film.hyperbolic import SAFE_SQUARE_ARG, leveling_gap, sech, sech2, sinh_minus_x
from film.models import DimensionlessState, DispersionRoot, MaterialParams, StabilitySummary

logger = logging.getLogger(__name__)

_EPS = np.finfo(float).eps

DEFAULT_SWEEP_RANGES = {
    "Q": (1e-3, 50.0),
    "D": (1e-4, 10.0),
    "C": (1e-4, 10.0),
    "Gamma": (0.1, 1e6),
}


def _compressibility(R, Gamma: float):
    """t = alpha/beta; zero for an incompressible film"""
    if math.isinf(Gamma):
        return R * 0.0
    return 2.0 * R / (Gamma * (1.0 + R))


def _as_output(value):
    value = np.asarray(value)
    if value.ndim:
        return value
    return complex(value) if np.iscomplexobj(value) else float(value)


def _check_pole(R) -> None:
    if np.any(np.asarray(R) == -1.0):
        raise SingularityError("Dispersion relation has a pole at R = -1 (2R/(1+R))", diagnostics={"R": -1.0})


def dispersion_terms(R, s: DimensionlessState) -> tuple:
    """The growth, beam and capillary terms of the dispersion relation"""
    _check_pole(R)
    R = np.asarray(R)
    Q = s.Q
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        t = _compressibility(R, s.Gamma)
        w = 7.0 * t + 6.0
        U = (t + 6.0) / w
        V = (4.0 * t + 6.0) / w
        v_minus_u = 3.0 * t / w
        one_minus_u = 6.0 * t / w
        sinh_sq = np.sinh(Q) ** 2
        growth = 2.0 * R / (1.0 + R) * (V * V + U * U * Q * Q + U * sinh_sq)
        beam = s.D * (U * U * Q * Q - v_minus_u * sinh_sq) if s.D else growth * 0.0
        capillary = (
            s.C * V * Q * (sinh_minus_x(2.0 * Q) + 2.0 * Q * one_minus_u) if s.C else growth * 0.0
        )
    return _as_output(growth), _as_output(beam), _as_output(capillary)


def dispersion_lhs(R, s: DimensionlessState):
    """
    Left side of the dispersion relation at growth rate R.

    R = 0 is the continuous extension U = V = 1, where the relation reduces to
    D Q^2 + C Q (sinh 2Q - 2Q). Complex R and numpy arrays are accepted for
    diagnostic sweeps.

    Raises:
        SingularityError: R = -1
    """
    growth, beam, capillary = dispersion_terms(R, s)
    return _as_output(np.asarray(growth) + beam + capillary)


def cleared_terms(R, s: DimensionlessState) -> tuple:
    """The three terms times ((7t+6)/6)^2 / cosh^2 Q"""
    _check_pole(R)
    R = np.asarray(R)
    Q = s.Q
    T = np.tanh(Q)
    s2 = sech2(Q)
    gap = cleared_gap(Q)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        t = _compressibility(R, s.Gamma)
        u, v, w = (t + 6.0) / 6.0, (4.0 * t + 6.0) / 6.0, (7.0 * t + 6.0) / 6.0
        growth = 2.0 * R / (1.0 + R) * (v * v * s2 + u * w * T * T + u * u * Q * Q * s2)
        beam = s.D * (u * u * Q * Q * s2 - 0.5 * t * w * T * T)
        capillary = s.C * Q * v * (2.0 * t * T + u * gap)
    return _as_output(growth), _as_output(beam), _as_output(capillary)


def cleared_lhs(R, s: DimensionlessState):
    """Pole-free, overflow-free multiple of dispersion_lhs with the same sign for R > -1"""
    growth, beam, capillary = cleared_terms(R, s)
    return _as_output(np.asarray(growth) + beam + capillary)


def cleared_cubic(s: DimensionlessState) -> np.ndarray:
    """
    Coefficients (highest power first) of cleared_lhs as a polynomial in t.

    Only meaningful for finite Gamma, where 2R/(1+R) = Gamma * t.
    """
    Q = s.Q
    T = math.tanh(Q)
    T2 = T * T
    s2 = float(sech2(Q))
    q2s = Q * Q * s2
    gap = float(cleared_gap(Q))
    Gamma, D, C = s.Gamma, s.D, s.C
    c3 = Gamma * (16.0 * s2 + 7.0 * T2 + q2s)
    c2 = Gamma * (48.0 * s2 + 48.0 * T2 + 12.0 * q2s) + D * (q2s - 21.0 * T2) + C * Q * (48.0 * T + 4.0 * gap)
    c1 = Gamma * 36.0 * (s2 + T2 + q2s) + D * (12.0 * q2s - 18.0 * T2) + C * Q * (72.0 * T + 30.0 * gap)
    c0 = 36.0 * (D * q2s + C * Q * gap)
    return np.array([c3, c2, c1, c0]) / 36.0


def cleared_gap(Q: float) -> float:
    """(sinh 2Q - 2Q) / cosh^2 Q"""
    if Q < SAFE_SQUARE_ARG:
        return float(sinh_minus_x(2.0 * Q) * sech2(Q))
    return 2.0 * math.tanh(Q) - 2.0 * Q * float(sech2(Q))


def _turning_points(s: DimensionlessState) -> list[float]:
    """R values where the cleared relation changes monotonicity"""
    if s.incompressible:
        return []
    slope = np.polyder(cleared_cubic(s))
    points = []
    for t in np.roots(slope):
        if abs(t.imag) > 1e-12 * max(1.0, abs(t.real)):
            continue
        t = t.real
        if s.Gamma * t >= 2.0:
            continue
        R = s.Gamma * t / (2.0 - s.Gamma * t)
        if -1.0 + settings.POLE_EPS < R < settings.R_MAX and R != 0.0:
            points.append(float(R))
    return points


def _search_grid(s: DimensionlessState) -> tuple[list[float], list[float]]:
    """
    Trial points walking away from R = 0: geometric toward -1 and toward R_MAX,
    refined with the turning points so every cell is monotone.
    """
    start, factor, pole_eps = settings.BRACKET_START, settings.BRACKET_FACTOR, settings.POLE_EPS
    negative, x = [], start
    while x < 0.5:
        negative.append(-x)
        x *= factor
    gap = 0.5
    while gap > pole_eps:
        negative.append(-(1.0 - gap))
        gap /= factor
    negative.append(-(1.0 - pole_eps))

    positive, x = [], start
    while x < settings.R_MAX:
        positive.append(x)
        x *= factor
    positive.append(settings.R_MAX)

    turning = _turning_points(s)
    negative = sorted(set(negative + [R for R in turning if R < 0]), reverse=True)
    positive = sorted(set(positive + [R for R in turning if R > 0]))
    return [0.0] + negative, [0.0] + positive


def _sign_brackets(points: list[float], values: np.ndarray) -> list[tuple[float, float]]:
    brackets = []
    for i in range(len(points) - 1):
        a, b = values[i], values[i + 1]
        if not (np.isfinite(a) and np.isfinite(b)):
            continue
        if b == 0.0 and points[i + 1] != 0.0:
            brackets.append((min(points[i + 1], points[i]), max(points[i + 1], points[i])))
        elif a * b < 0:
            brackets.append((min(points[i], points[i + 1]), max(points[i], points[i + 1])))
    return brackets


def _final_bracket(f, root: float) -> Optional[tuple[float, float]]:
    """Smallest interval around the polished root that still shows a sign change"""
    if f(root) == 0.0:
        return (root, root)
    width = 4.0 * _EPS * max(abs(root), 1e-300)
    limit = 0.5 * settings.BRACKET_TOL * max(1.0, abs(root))
    while width <= limit:
        lo, hi = root - width, root + width
        if f(lo) * f(hi) <= 0.0:
            return (lo, hi)
        width *= 4.0
    return None


def _polish(f, bracket: tuple[float, float]) -> tuple[float, int, bool]:
    root, info = optimize.brentq(
        f,
        bracket[0],
        bracket[1],
        xtol=settings.ROOT_XTOL,
        rtol=settings.ROOT_RTOL,
        maxiter=settings.ROOT_MAXITER,
        full_output=True,
        disp=False,
    )
    return float(root), int(info.iterations), bool(info.converged)


def _residual(R: float, s: DimensionlessState) -> tuple[float, float]:
    """Residual of the dispersion relation at R and the size of its largest term"""
    terms = dispersion_terms(R, s)
    if not all(np.isfinite(term) for term in terms):
        terms = cleared_terms(R, s)
    return float(np.real(sum(terms))), float(max(abs(term) for term in terms))


def on_pole(R: float, s: DimensionlessState) -> bool:
    """
    True when R lies on the U, V pole 7t + 6 = 0 to within POLE_REMNANT_TOL.

    The cleared relation equals (7t + 6) G(t) plus terms of order sech^2 Q, so
    it keeps a zero within that distance of the pole. At large Q the zero is
    the (7t + 6) factor, not a mode of the film.
    """
    if s.incompressible:
        return False
    return abs(7.0 * _compressibility(R, s.Gamma) + 6.0) <= 6.0 * settings.POLE_REMNANT_TOL


def _candidate(f, bracket: tuple[float, float], s: DimensionlessState) -> dict:
    R, iterations, polished = _polish(f, bracket)
    final = _final_bracket(f, R)
    residual, scale = _residual(R, s)
    converged = (
        polished
        and final is not None
        and abs(residual) <= settings.RESIDUAL_RTOL * scale * max(1.0, 1.0 / abs(1.0 + R))
    )
    return {
        "R": R,
        "bracket": final if final is not None else bracket,
        "iterations": iterations,
        "converged": converged,
        "residual": residual,
        "scale": scale,
    }


def solve_growth_rate(s: DimensionlessState) -> DispersionRoot:
    """
    Real growth rate R solving the dispersion relation at (Q, D, C, Gamma).

    The search walks geometrically away from R = 0 toward -1 and toward
    R_MAX, collects every sign change of the cleared relation and polishes
    each with Brent's method. Zeros on the U, V pole are dropped (see on_pole).
    The root of smallest |R| that meets the residual tolerance is returned,
    or the smallest |R| root flagged unconverged when none does;
    multiple_roots flags that more than one root was found.

    Raises:
        ParameterError: Q <= 0 or negative D, C
        ViscousLimitError: state built from an infinite shear modulus
        ConvergenceError: no sign change anywhere in (-1, R_MAX], or only the
            zero on the U, V pole
    """
    if s.viscous_limit:
        raise ViscousLimitError("Dimensionless growth rate is degenerate for G = inf; use viscous_growth()")
    if not s.Q > 0:
        raise ParameterError(f"solve_growth_rate needs Q > 0, got Q={s.Q}")
    if s.D < 0 or s.C < 0:
        raise ParameterError(f"D and C must be non-negative, got D={s.D}, C={s.C}")

    if s.D == 0 and s.C == 0:
        return DispersionRoot(Q=s.Q, R=0.0, residual=0.0, bracket=(0.0, 0.0), iterations=0, converged=True)

    negative, positive = _search_grid(s)
    negative_brackets = _sign_brackets(negative, np.asarray(cleared_lhs(np.array(negative), s)))
    positive_brackets = _sign_brackets(positive, np.asarray(cleared_lhs(np.array(positive), s)))
    brackets = negative_brackets + positive_brackets
    logger.debug(f"Q={s.Q:.6g} D={s.D:.6g} C={s.C:.6g} Gamma={s.Gamma:.6g}: brackets {brackets}")

    if not brackets:
        raise ConvergenceError(
            f"No sign change of the dispersion relation in (-1, {settings.R_MAX}] "
            f"at Q={s.Q}, D={s.D}, C={s.C}, Gamma={s.Gamma}",
            diagnostics={"Q": s.Q, "D": s.D, "C": s.C, "Gamma": s.Gamma, "R_max": settings.R_MAX},
        )

    def f(R: float) -> float:
        return float(cleared_lhs(R, s))

    candidates, pole_zeros = [], []
    for bracket in brackets:
        candidate = _candidate(f, bracket, s)
        if on_pole(candidate["R"], s):
            logger.debug(f"Dropped zero R={candidate['R']:.12e} on the U, V pole at Q={s.Q:.6g}")
            pole_zeros.append(candidate["R"])
        else:
            candidates.append(candidate)

    if not candidates:
        raise ConvergenceError(
            f"Only the zero on the U, V pole was found at Q={s.Q}, D={s.D}, C={s.C}, Gamma={s.Gamma}; "
            "no real mode",
            diagnostics={"Q": s.Q, "D": s.D, "C": s.C, "Gamma": s.Gamma, "pole_zeros": pole_zeros},
        )

    passing = [c for c in candidates if c["converged"]] or candidates
    best = min(passing, key=lambda c: abs(c["R"]))
    R = best["R"]
    positive_root = min((c["R"] for c in candidates if c["R"] > 0), default=None)

    if len(candidates) > 1:
        logger.warning(f"{len(candidates)} roots bracketed at Q={s.Q:.6g}; keeping R={R:.6e}")
    if positive_root is not None:
        logger.warning(
            f"Growing mode R={positive_root:.6e} at Q={s.Q:.6g}, D={s.D:.6g}, C={s.C:.6g}, Gamma={s.Gamma:.6g}"
        )
    if not best["converged"]:
        logger.warning(
            f"Root at Q={s.Q:.6g} did not meet tolerance: residual {best['residual']:.3e} (scale {best['scale']:.3e})"
        )

    return DispersionRoot(
        Q=s.Q,
        R=R,
        residual=best["residual"],
        bracket=best["bracket"],
        iterations=best["iterations"],
        converged=best["converged"],
        multiple_roots=len(candidates) > 1,
        brackets=brackets,
        unstable=positive_root is not None,
        positive_root=positive_root,
        residual_scale=best["scale"],
    )


def neutral_boundary(Q, C: float):
    """
    Neutral-stability curve D*(Q) = 2C(1 - sinh(2Q)/(2Q)).

    Evaluated as -C (sinh 2Q - 2Q)/Q, with D*(0) = 0.
    """
    Q_arr = np.asarray(Q, dtype=float)
    if np.any(Q_arr < 0):
        raise ParameterError(f"Neutral boundary needs Q >= 0, got {Q}")
    if C < 0:
        raise ParameterError(f"Capillary number must be non-negative, got C={C}")
    safe = np.where(Q_arr == 0, 1.0, Q_arr)
    with np.errstate(over="ignore"):
        D_star = np.where(Q_arr == 0, 0.0, -C * sinh_minus_x(2.0 * safe) / safe) + 0.0
    return _as_output(D_star)


def long_wavelength_growth(s: DimensionlessState) -> float:
    """R ~ -D Q^2/2 - 2 C Q^4/3 for Q << 1"""
    return -0.5 * s.D * s.Q**2 - 2.0 / 3.0 * s.C * s.Q**4


def long_wavelength_growth_dimensional(p: MaterialParams, k: float) -> float:
    """sigma ~ -3 f A (hk)^2 - gamma/(3 eta h) (hk)^4"""
    Q = p.thickness * k
    return -3.0 * p.forcing * Q**2 - p.surface_energy / (3.0 * p.eta * p.thickness) * Q**4


def viscous_growth(p: MaterialParams, k):
    """
    Growth rate of a purely viscous, incompressible film:

        sigma = -[6 f A Q^2 + (k gamma / 2 eta)(sinh 2Q - 2Q)] / [1 + 2Q^2 + cosh 2Q]

    Numerator and denominator are divided through by cosh 2Q. Independent of
    G and B.
    """
    k_arr = np.asarray(k, dtype=float)
    if np.any(k_arr < 0) or not np.all(np.isfinite(k_arr)):
        raise ParameterError(f"Wavenumber must be finite and non-negative, got k={k}")
    Q = p.thickness * k_arr
    s = sech(2.0 * Q)
    numerator = 6.0 * p.forcing * Q * Q * s + k_arr * p.surface_energy / (2.0 * p.eta) * leveling_gap(2.0 * Q)
    # + 0.0 turns -0.0 into 0.0 for an unforced film
    sigma = -numerator / ((1.0 + 2.0 * Q * Q) * s + 1.0) + 0.0
    return _as_output(sigma)


def orchard_rate(p: MaterialParams, k):
    """Viscous capillary leveling rate, the beam switched off"""
    return viscous_growth(p.model_copy(update={"flux": 0.0}), k)


def incompressible_growth(s: DimensionlessState) -> float:
    """
    Exact root for Gamma = inf: R = -X/(2 + X) with
    X = [D Q^2 + C Q (sinh 2Q - 2Q)] / [(1 + 2Q^2 + cosh 2Q)/2].
    """
    Q = s.Q
    sc = float(sech(2.0 * Q))
    X = 2.0 * (s.D * Q * Q * sc + s.C * Q * float(leveling_gap(2.0 * Q))) / ((1.0 + 2.0 * Q * Q) * sc + 1.0)
    return -X / (2.0 + X)


def growth_sensitivity(R: float, s: DimensionlessState) -> float:
    """
    dR/dD at a root, by implicit differentiation: -(dF/dD)/(dF/dR).

    dF/dR is taken by a complex step, so it carries no truncation error.
    """
    step = 1e-20 * max(1.0, abs(R))
    dF_dR = float(np.imag(dispersion_lhs(complex(R, step), s))) / step
    if dF_dR == 0.0 or not math.isfinite(dF_dR):
        raise SingularityError(f"dF/dR vanishes at R={R}; the root is not simple", diagnostics={"R": R})
    dF_dD = float(np.real(dispersion_terms(R, s.model_copy(update={"D": 1.0}))[1]))
    return -dF_dD / dF_dR


def _log_uniform(rng: np.random.Generator, bounds: tuple[float, float], n: int) -> np.ndarray:
    lo, hi = bounds
    return np.exp(rng.uniform(math.log(lo), math.log(hi), n))


def stability_sweep(n: int, seed: int = 0, ranges: Optional[dict[str, tuple[float, float]]] = None) -> StabilitySummary:
    """
    Solve the dispersion relation at n random (Q, D, C, Gamma), log-uniform in
    each range, and count stable and growing modes.
    """
    if n < 1:
        raise ParameterError(f"Sweep needs at least one sample, got n={n}")
    bounds = {**DEFAULT_SWEEP_RANGES, **(ranges or {})}
    rng = np.random.default_rng(seed)
    samples = {name: _log_uniform(rng, bounds[name], n) for name in ("Q", "D", "C", "Gamma")}
    ranges_text = ", ".join(f"{name} in [{lo:g}, {hi:g}]" for name, (lo, hi) in bounds.items())
    logger.info(f"Stability sweep: {n} samples, seed {seed}, log-uniform over {ranges_text}")

    converged = stable = unstable = failures = no_real_mode = violations = 0
    max_R = -math.inf
    unstable_points = []
    for i in range(n):
        point = {name: float(values[i]) for name, values in samples.items()}
        state = DimensionlessState(**point)
        try:
            root = solve_growth_rate(state)
        except ConvergenceError as e:
            logger.warning(f"Sample {i} failed: {e.detail}")
            failures += 1
            no_real_mode += "pole_zeros" in e.diagnostics
            continue
        converged += root.converged
        max_R = max(max_R, root.R if root.positive_root is None else root.positive_root)
        if root.unstable:
            unstable += 1
            unstable_points.append({**point, "R": root.positive_root})
            if point["Gamma"] > point["D"] / 2.0:
                violations += 1
        else:
            stable += 1

    logger.info(f"Stability sweep done: {stable} stable, {unstable} growing, {failures} failed, max R {max_R:.6e}")
    return StabilitySummary(
        samples=n,
        seed=seed,
        converged=converged,
        stable=stable,
        unstable=unstable,
        failures=failures,
        no_real_mode=no_real_mode,
        max_R=max_R,
        bound_violations=violations,
        ranges=bounds,
        unstable_points=unstable_points,
    )
