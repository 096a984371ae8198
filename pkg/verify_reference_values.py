"""
Print the reference numbers for amorphous silicon under 250 eV Ar+ and the
dual-path agreement on a reduced grid.

    python verify_reference_values.py
"""
import math
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent / "app"))

from film.models import MaterialParams  # noqa: E402
from film.services import dispersion, params, steady  # noqa: E402
from film.services.runs import verify_point  # noqa: E402

SILICON = MaterialParams(
    eta=6.2e8,
    shear_modulus=3.1e10,
    bulk_modulus=3.1e10,
    surface_energy=1.0,
    flux=3.5e19,
    strain_per_dose=5e-21,
    thickness=2e-9,
)

failures = 0


def check(label: str, value: float, expected: float, rel: float) -> None:
    global failures
    ok = math.isclose(value, expected, rel_tol=rel)
    failures += not ok
    print(f"[{'PASS' if ok else 'FAIL'}] {label}: {value:.10g} (expected {expected:.10g}, rel {rel:g})")


print("=" * 80)
print("STEADY STATE")
print("=" * 80)
state = steady.steady_state(SILICON)
check("lateral stress, Pa", state.stress.xx, -6.51e8, 1e-12)
check("vertical strain at B = 1e10 Pa", steady.steady_state(SILICON.model_copy(update={"bulk_modulus": 1e10})).strain.zz, -4.34e-2, 1e-12)
check("measured / computed stress", steady.compare_to_measurement(state, 1.4e9), 2.15, 2e-3)

print("")
print("=" * 80)
print("DIMENSIONLESS GROUPS AT k = 1e8 1/m")
print("=" * 80)
s = params.to_dimensionless(SILICON, 1e8)
check("Q", s.Q, 0.2, 1e-15)
check("D", s.D, 0.021, 1e-12)
check("C", s.C, 8.0645e-3, 1e-4)
check("sigma at R = -5e-5, 1/s", params.growth_rate_dimensional(SILICON, -5e-5), -2.5e-3, 1e-14)

print("")
print("=" * 80)
print("LIMITS")
print("=" * 80)
check("neutral boundary D*(Q=1, C=1)", dispersion.neutral_boundary(1.0, 1.0), -1.6268604, 1e-7)
check("neutral boundary D*/Q^2 at Q = 1e-4", dispersion.neutral_boundary(1e-4, 1.0) / 1e-8, -4.0 / 3.0, 1e-6)
long_wave = params.dimensionless_state(0.01, 1.0, 1.0, math.inf)
check("long-wavelength root at Q = 0.01", dispersion.solve_growth_rate(long_wave).R, dispersion.long_wavelength_growth(long_wave), 5e-4)
p, k = params.from_dimensionless(0.2, 1e-3, 1e-3, 1e8)
stiff = params.growth_rate_dimensional(p, dispersion.solve_growth_rate(params.to_dimensionless(p, k)).R)
check("Gamma = 1e8 against the viscous closed form", stiff, dispersion.viscous_growth(p, k), 1e-4)

print("")
print("=" * 80)
print("DUAL-PATH VERIFICATION")
print("=" * 80)
for Q in (0.2, 0.5, 2.0):
    for Gamma in (1.0, 1e4):
        row = verify_point(Q, 0.2, 0.1, Gamma)
        ok = row["status"] == "ok" and row["deviation"] <= 1e-6
        failures += not ok
        print(
            f"[{'PASS' if ok else 'FAIL'}] Q={Q:<4} Gamma={Gamma:<7g} analytic {row['sigma_analytic']:.12e} "
            f"shooting {row['sigma_shoot']:.12e} deviation {row['deviation']:.2e}"
        )

print("=" * 80)
print(f"{'ALL CHECKS PASSED' if failures == 0 else f'{failures} CHECK(S) FAILED'}")
print("=" * 80)
sys.exit(1 if failures else 0)
