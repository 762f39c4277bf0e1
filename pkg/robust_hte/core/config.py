"""Configuration management for the robust HTE toolkit."""

from typing import Optional
from pathlib import Path

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Toolkit defaults with environment variable support (``HTE_*``)."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="HTE_",
        case_sensitive=False,
        extra="ignore"  # Ignore unrelated environment variables
    )

    # === Application Settings ===
    app_name: str = "Robust HTE Toolkit"
    app_version: str = "1.0.0"
    debug: bool = False
    log_level: str = "INFO"

    # === Reproducibility ===
    default_seed: int = Field(42, ge=0, lt=2**64)
    n_jobs: int = 1

    # === Confounder Graph ===
    graph_threshold: float = Field(0.3, ge=0.0)
    graph_max_degree: int = Field(10, ge=1)
    gat_out_dim: int = Field(8, ge=1)
    leaky_slope: float = 0.2

    # === Conditional VAE ===
    latent_dim: int = Field(2, ge=1)
    hidden_dim: int = Field(16, ge=1)
    epochs: int = Field(500, ge=1)
    learning_rate: float = Field(1e-2, gt=0.0)
    kl_weight: float = Field(1.0, ge=0.0)
    augmentation: int = Field(0, ge=0)

    # === Clustering ===
    outlier_multiplier: float = Field(3.0, gt=0.0)
    k_max: int = Field(6, ge=2)
    min_arm_size: int = Field(4, ge=1)

    # === Estimation ===
    propensity_trim: float = Field(0.05, ge=0.0, lt=0.5)
    huber_c: float = Field(1.345, gt=0.0)
    ridge_lambda: float = Field(1.0, ge=0.0)
    bootstrap_draws: int = Field(500, ge=1)

    # === Directory Configuration ===
    output_directory: Path = Field(default_factory=lambda: Path("./results"))
    dgp_config_path: Optional[Path] = None

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v):
        """Ensure log level is an upper-case logging name."""
        v = v.upper()
        if v not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"Unknown log level: {v}")
        return v

    @field_validator("n_jobs")
    @classmethod
    def validate_n_jobs(cls, v):
        if v == 0:
            raise ValueError("n_jobs must be non-zero (use -1 for all cores)")
        return v


# Global settings instance
settings = Settings()
