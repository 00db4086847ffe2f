import os
from functools import lru_cache

from dotenv import load_dotenv
from pydantic_settings import BaseSettings, SettingsConfigDict


load_dotenv()


def _default_reports_dir() -> str:
    base_dir = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
    return os.path.join(os.path.dirname(base_dir), "storage", "reports")


class Settings(BaseSettings):
    """Process-wide defaults, read from STIEFEL_XFORM_* variables or `.env`."""

    model_config = SettingsConfigDict(
        env_prefix="STIEFEL_XFORM_",
        env_file=".env",
        extra="ignore",
    )

    seed: int = 0
    samples: int = 100_000
    shards: int = 1
    threads: int = 1
    jobs: int = 1
    z_tol: float = 4.0
    abs_tol: float = 1e-9
    # numerical slack for exact-manifold predicates
    frame_tol: float = 1e-10
    rank_tol: float = 1e-10
    pole_tol: float = 1e-12
    # nested compositions
    n_outer: int = 10_000
    n_inner: int = 1_000
    smoke_samples: int = 20_000
    smoke_outer: int = 2_000
    smoke_inner: int = 50
    chunk_size: int = 8_192
    log_level: str = "INFO"
    reports_dir: str = _default_reports_dir()


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return Settings()
