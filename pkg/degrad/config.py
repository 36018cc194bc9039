"""
Application Configuration
"""

import os
from functools import lru_cache

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


def _default_threads() -> int:
    return min(os.cpu_count() or 1, 8)


class Settings(BaseSettings):
    """Process settings loaded from DEGRAD_* environment variables or .env."""

    model_config = SettingsConfigDict(
        env_prefix="DEGRAD_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # Parallelism
    threads: int = Field(default_factory=_default_threads, ge=1)

    # Numerical defaults
    fixed_point_tol: float = Field(default=1e-12, gt=0)
    max_iterations: int = Field(default=10_000_000, ge=1)
    divergence_guard: float = Field(default=1e150, gt=0)

    # Logging
    log_level: str = "INFO"
    log_json: bool = False


@lru_cache
def get_settings() -> Settings:
    """Process-wide settings, read from the environment on first use."""
    return Settings()
