from functools import lru_cache
from pathlib import Path

from pydantic import model_validator
from pydantic_settings import (
    BaseSettings,
    PydanticBaseSettingsSource,
    SettingsConfigDict,
    YamlConfigSettingsSource,
)

DEFAULT_CONFIG_PATH = Path(__file__).resolve().parents[1] / "solver_config.yml"


class Settings(BaseSettings):
    """Solver defaults. Values come from solver_config.yml, never from the environment."""

    model_config = SettingsConfigDict(yaml_file=DEFAULT_CONFIG_PATH, extra="ignore", frozen=True)

    APP_TITLE: str = "ionfilm"
    VERSION: str = "1.0.0"
    LOG_LEVEL: str = "INFO"

    ROOT_XTOL: float = 1e-300
    ROOT_RTOL: float = 1e-15
    ROOT_MAXITER: int = 200
    BRACKET_TOL: float = 1e-12
    RESIDUAL_RTOL: float = 1e-12
    BRACKET_START: float = 1e-12
    BRACKET_FACTOR: float = 4.0
    POLE_EPS: float = 1e-15
    POLE_REMNANT_TOL: float = 1e-3
    R_MAX: float = 10.0

    ORACLE_N_STEPS: int = 2000
    ORACLE_BRACKET_START: float = 1e-8
    ORACLE_COND_LIMIT: float = 1e12
    ORACLE_REORTH_THRESHOLD: float = 1e8
    ORACLE_RESIDUAL_RTOL: float = 1e-10

    VERIFY_RTOL: float = 1e-6
    CSV_DIGITS: int = 17

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> tuple[PydanticBaseSettingsSource, ...]:
        return (init_settings, YamlConfigSettingsSource(settings_cls))

    @model_validator(mode="after")
    def validator(self) -> "Settings":
        if self.BRACKET_FACTOR <= 1.0:
            raise ValueError(f"BRACKET_FACTOR must exceed 1, got {self.BRACKET_FACTOR}")
        if self.ORACLE_N_STEPS < 1:
            raise ValueError(f"ORACLE_N_STEPS must be positive, got {self.ORACLE_N_STEPS}")
        # scipy.optimize.brentq refuses rtol below 4 machine epsilons
        if self.ROOT_RTOL < 4 * 2.220446049250313e-16:
            raise ValueError(f"ROOT_RTOL must be at least 4 eps, got {self.ROOT_RTOL}")
        if not 0.0 < self.POLE_REMNANT_TOL < 1.0:
            raise ValueError(f"POLE_REMNANT_TOL must lie in (0, 1), got {self.POLE_REMNANT_TOL}")
        return self


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return Settings()


settings = get_settings()
