"""Application configuration using an optional JSON config file."""

import json
import os
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

PROJECT_ROOT = Path(__file__).parent.parent.parent
BUNDLED_DATA_DIR = Path(__file__).parent.parent / "data"


class Settings(BaseModel):
    """Engine defaults loaded from qwalk.json."""

    model_config = ConfigDict(extra="ignore")

    # Application
    app_name: str = "qwalk"
    app_version: str = "1.0.0"

    # Data
    data_dir: Optional[str] = None

    # Execution
    shots: int = Field(default=4096, ge=1)
    cycles: int = Field(default=6, ge=1)
    iters_per_cycle: int = Field(default=72, ge=1)
    max_amplitudes_per_batch: int = Field(default=1 << 22, ge=1)

    # Schedule fractions
    alpha: float = Field(default=0.5, gt=0, lt=1)
    beta: float = Field(default=1 / 3, gt=0, lt=1)
    gamma: float = Field(default=0.5, gt=0, lt=1)

    # Optimizer
    initial_step: float = Field(default=1.0, gt=0)
    window: int = Field(default=100, ge=1)
    min_rel_improvement: float = Field(default=0.04, gt=0, lt=1)
    default_tolerance: float = Field(default=1e-4, gt=0)
    max_evals: int = Field(default=1000, ge=1)

    # Qoncord baseline
    qoncord_low_step: float = Field(default=1.0, gt=0)
    qoncord_low_tolerance: float = Field(default=0.1, gt=0)
    qoncord_high_step: float = Field(default=0.1, gt=0)
    qoncord_constant: float = Field(default=1.0, ge=0)

    # Metrics
    cost_constant: float = Field(default=1.0, ge=0)
    qaoa_samples: int = Field(default=4096, ge=1)

    # Logging
    log_level: str = "INFO"
    log_format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

    def resolved_data_dir(self) -> Path:
        """Bundled data directory, overridable by NEST_DATA_DIR."""
        override = os.environ.get("NEST_DATA_DIR")
        if override:
            return Path(override)
        if self.data_dir:
            return Path(self.data_dir)
        return BUNDLED_DATA_DIR


def load_settings(path: Optional[Path] = None) -> Settings:
    """Load settings from qwalk.json (or QWALK_CONFIG) if present."""
    if path is None:
        env_path = os.environ.get("QWALK_CONFIG")
        path = Path(env_path) if env_path else PROJECT_ROOT / "qwalk.json"

    if path.exists():
        with open(path, "r", encoding="utf-8") as f:
            config_data = json.load(f)
        return Settings(**config_data)

    return Settings()


# Global settings instance
settings = load_settings()
