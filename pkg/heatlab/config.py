from pathlib import Path

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    LOG_LEVEL: str = "INFO"
    OUTPUT_DIR: Path = Path("heatlab-out")
    PROFILES_PATH: Path | None = None
    WORKERS: int = 4

    # quadrature
    QUAD_RTOL: float = 1e-10
    PSI_RTOL: float = 1e-8
    KERNEL_RTOL: float = 1e-6
    MAX_WAVES: int = 4000
    SHANKS_WAVES: int = 40

    # tabulated psi for derived models
    PSI_TABLE_LO: float = 1e-6
    PSI_TABLE_HI: float = 1e10
    PSI_TABLE_PER_DECADE: int = 16

    # simulator
    BLOCK_SIZE: int = 2048

    @property
    def profiles_path(self) -> Path:
        return self.PROFILES_PATH or Path(__file__).resolve().parent / "data" / "profiles.json"

    model_config = SettingsConfigDict(env_file=".env", env_prefix="HEATLAB_", extra="ignore")


settings = Settings()
