from pydantic_settings import BaseSettings
from typing import Optional
from loguru import logger


class Settings(BaseSettings):
    """
    Library and CLI settings loaded from environment variables (prefix GSS_)
    """

    # Application
    APP_NAME: str = "gss"
    LOG_LEVEL: str = "INFO"
    LOG_FILE: Optional[str] = None

    # Stationary solve
    POWER_ITERATION_TOL: float = 1e-13  # L1 distance between iterates
    POWER_ITERATION_MAX_ITER: int = 1_000_000
    KERNEL_TOL: float = 1e-12

    # Walks
    EXACT_STATE_CAP: int = 200_000  # pair states allowed for exact-stationary starts
    BURN_IN_FACTOR: int = 50  # burn-in steps = factor * N

    # Graph construction and enumeration
    ENUMERATION_MAX_NODES: int = 12
    CONSTRUCTION_MAX_RETRIES: int = 1000

    # Simulation harness
    DEFAULT_REPS: int = 10_000
    DEFAULT_THREADS: int = 4
    OUTPUT_DIR: str = "data/results"

    class Config:
        env_prefix = "GSS_"
        env_file = ".env"
        case_sensitive = True
        env_file_encoding = "utf-8"
        extra = "ignore"


try:
    settings = Settings()
except Exception as e:
    # unreadable .env: fall back to environment and defaults
    logger.warning(f"Could not load .env file: {e}")
    logger.warning("Using default gss configuration.")
    settings = Settings(_env_file=None)
