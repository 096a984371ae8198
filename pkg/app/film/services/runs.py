"""
Run Service

The operations behind each CLI mode. Each returns a RunReport whose rows are
written as CSV or JSON by main.py; per-row numerical failures are recorded in
the row and the run carries on.
"""
import logging
import math
from typing import Any

from pydantic import BaseModel, Field

from core.errors import ConfigError, FilmError, ParameterError
from core.settings import settings
from film.models import MaterialParams
from film.run_config import RunConfig
from film.services import dispersion, oracle, params, steady
from film.units import GPA
from film.utils import relative_deviation

logger = logging.getLogger(__name__)

DISPERSION_COLUMNS = ["k", "Q", "sigma", "R", "converged"]
NEUTRAL_COLUMNS = ["Q", "D_star"]
VERIFY_COLUMNS = ["Q", "D", "C", "Gamma", "sigma_analytic", "sigma_shoot", "deviation", "status"]


class RunReport(BaseModel):
    mode: str
    columns: list[str]
    rows: list[dict[str, Any]]
    summary: dict[str, Any] = Field(default_factory=dict)
    exit_code: int = 0


def _material(cfg: RunConfig) -> MaterialParams:
    if cfg.material is None:
        raise ConfigError(f"Mode '{cfg.mode}' needs the material constants")
    if cfg.overrides.gamma_ratio is None:
        return cfg.material
    if cfg.material.viscous_limit:
        raise ParameterError("gamma_ratio cannot be applied when the shear modulus is infinite")
    return cfg.material.model_copy(update={"bulk_modulus": cfg.overrides.gamma_ratio * cfg.material.shear_modulus})


def _wavenumbers(cfg: RunConfig, p: MaterialParams) -> list[tuple[float, float]]:
    """(k, Q) pairs for the configured sweep"""
    values = cfg.sweep.values()
    if cfg.sweep.quantity == "k":
        return [(float(k), float(k) * p.thickness) for k in values]
    return [(float(Q) / p.thickness, float(Q)) for Q in values]


def run_steady(cfg: RunConfig) -> RunReport:
    """Steady stress and strain, with the comparison ratio when a measured stress is given"""
    p = _material(cfg)
    state = steady.steady_state(p)
    lateral = abs(state.stress.xx)
    row = {
        "stress_xx": state.stress.xx,
        "stress_yy": state.stress.yy,
        "stress_zz": state.stress.zz,
        "stress_trace": state.stress_trace,
        "strain_xx": state.strain.xx,
        "strain_yy": state.strain.yy,
        "strain_zz": state.strain.zz,
        "strain_trace": state.strain_trace,
        "lateral_stress_GPa": lateral / float(GPA),
        "stress_label": "compressive" if state.stress.xx < 0 else "none",
        "strain_label": "incompressible" if state.incompressible else ("compressive" if state.strain.zz < 0 else "none"),
        "maxwell_time_s": params.maxwell_time(p),
    }
    if cfg.measured_stress is not None:
        row["measured_stress_GPa"] = cfg.measured_stress / float(GPA)
        row["measured_ratio"] = steady.compare_to_measurement(state, cfg.measured_stress)

    logger.info(f"Steady state: {row['lateral_stress_GPa']:.4g} GPa lateral {row['stress_label']} stress")
    return RunReport(mode="steady", columns=list(row), rows=[row])


def run_neutral(cfg: RunConfig) -> RunReport:
    """D*(Q) over the sweep"""
    if cfg.capillary_number is not None:
        C = cfg.capillary_number
    elif cfg.material is not None and not cfg.material.viscous_limit:
        C = params.to_dimensionless(cfg.material, 0.0).C
    else:
        raise ConfigError("Mode 'neutral' needs C or finite material constants")

    if cfg.sweep.quantity == "Q":
        Qs = [float(Q) for Q in cfg.sweep.values()]
    elif cfg.material is not None:
        Qs = [float(k) * cfg.material.thickness for k in cfg.sweep.values()]
    else:
        raise ConfigError("A k sweep in mode 'neutral' needs the film thickness")

    rows = [{"Q": Q, "D_star": dispersion.neutral_boundary(Q, C)} for Q in Qs]
    return RunReport(mode="neutral", columns=NEUTRAL_COLUMNS, rows=rows, summary={"C": C})


def run_dispersion(cfg: RunConfig) -> RunReport:
    """
    Growth rate per wavenumber: solve_growth_rate in mode `dispersion`, the
    viscous incompressible closed form in mode `viscous`.
    """
    p = _material(cfg)
    rows = []
    failures = 0
    for k, Q in _wavenumbers(cfg, p):
        if cfg.mode == "viscous":
            sigma = dispersion.viscous_growth(p, k)
            R = math.nan if p.viscous_limit else p.eta * sigma / p.shear_modulus
            rows.append({"k": k, "Q": Q, "sigma": sigma, "R": R, "converged": True})
            continue
        try:
            root = dispersion.solve_growth_rate(params.to_dimensionless(p, k))
            sigma = params.growth_rate_dimensional(p, root.R)
            rows.append({"k": k, "Q": Q, "sigma": sigma, "R": root.R, "converged": root.converged})
            failures += not root.converged
        except ParameterError:
            raise
        except FilmError as e:
            logger.warning(f"Row k={k:.6e} failed: {e.detail}")
            rows.append({"k": k, "Q": Q, "sigma": math.nan, "R": math.nan, "converged": False})
            failures += 1

    logger.info(f"{cfg.mode} sweep: {len(rows)} rows, {failures} not converged")
    return RunReport(mode=cfg.mode, columns=DISPERSION_COLUMNS, rows=rows, summary={"not_converged": failures})


def verify_point(Q: float, D: float, C: float, Gamma: float, n_steps: int | None = None) -> dict[str, Any]:
    """Analytic and shooting growth rates at one dimensionless point"""
    row: dict[str, Any] = {"Q": Q, "D": D, "C": C, "Gamma": Gamma}
    p, k = params.from_dimensionless(Q, D, C, Gamma)
    try:
        root = dispersion.solve_growth_rate(params.dimensionless_state(Q, D, C, Gamma))
        row["sigma_analytic"] = params.growth_rate_dimensional(p, root.R)
    except FilmError as e:
        row.update(sigma_analytic=math.nan, sigma_shoot=math.nan, deviation=math.inf, status=f"analytic: {e.detail}")
        return row
    try:
        shot = oracle.shoot_growth_rate(p, k, n_steps)
        row["sigma_shoot"] = shot.sigma
    except FilmError as e:
        row.update(sigma_shoot=math.nan, deviation=math.inf, status=f"shooting: {e.detail}")
        return row
    row["deviation"] = relative_deviation(row["sigma_shoot"], row["sigma_analytic"])
    row["status"] = "ok"
    return row


def run_verify(cfg: RunConfig) -> RunReport:
    """
    Dual-path check over the configured grid. Exit code 3 when any point
    deviates by more than the tolerance or fails on either path.
    """
    tol = cfg.overrides.tol if cfg.overrides.tol is not None else settings.VERIFY_RTOL
    rows = []
    for Q, D, C, Gamma in cfg.verify_grid.points():
        row = verify_point(Q, D, C, Gamma, cfg.overrides.n_steps)
        if row["status"] == "ok" and row["deviation"] > tol:
            row["status"] = "deviation"
        if row["status"] != "ok":
            logger.warning(f"Verification point Q={Q} D={D} C={C} Gamma={Gamma}: {row['status']}")
        rows.append(row)

    max_deviation = max((row["deviation"] for row in rows), default=0.0)
    failed = sum(row["status"] != "ok" for row in rows)
    logger.info(f"Verification: {len(rows)} points, max deviation {max_deviation:.3e}, {failed} failed (tol {tol:g})")
    return RunReport(
        mode="verify",
        columns=VERIFY_COLUMNS,
        rows=rows,
        summary={"max_deviation": max_deviation, "failed": failed, "tolerance": tol},
        exit_code=3 if failed else 0,
    )


def run_stability(cfg: RunConfig) -> RunReport:
    """Randomized sweep; rows list the growing modes found"""
    summary = dispersion.stability_sweep(cfg.samples, cfg.seed)
    return RunReport(
        mode="stability",
        columns=["Q", "D", "C", "Gamma", "R"],
        rows=summary.unstable_points,
        summary=summary.model_dump(exclude={"unstable_points"}),
    )


RUNNERS = {
    "steady": run_steady,
    "neutral": run_neutral,
    "dispersion": run_dispersion,
    "viscous": run_dispersion,
    "verify": run_verify,
    "stability": run_stability,
}
