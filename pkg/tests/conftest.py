import math

import pytest

from film.models import MaterialParams

# Amorphous silicon under 250 eV Ar+ at normal incidence
ETA = 6.2e8
SHEAR = 3.1e10
THICKNESS = 2e-9
SURFACE_ENERGY = 1.0
FLUX = 3.5e19
STRAIN_PER_DOSE = 5e-21


def material(**changes) -> MaterialParams:
    values = dict(
        eta=ETA,
        shear_modulus=SHEAR,
        bulk_modulus=SHEAR,
        surface_energy=SURFACE_ENERGY,
        flux=FLUX,
        strain_per_dose=STRAIN_PER_DOSE,
        thickness=THICKNESS,
    )
    values.update(changes)
    return MaterialParams(**values)


@pytest.fixture
def silicon() -> MaterialParams:
    return material()


@pytest.fixture
def viscous_silicon() -> MaterialParams:
    return material(shear_modulus=math.inf, bulk_modulus=math.inf)
