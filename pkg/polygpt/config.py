"""
Configuration management for polygpt.

Handles numerical tolerances, default system construction choices and
runtime options with validation and environment-based overrides.
"""
import os
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

FAMILIES = ("unrestricted", "selfdual")
SCHEMES = ("intersection", "rotated-pairing", "inscribed")
TENSOR_KINDS = ("minimal", "maximal")
GAME_TABLES = ("literal", "swap-consistent")


class Settings(BaseSettings):
    """Application settings."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="POLYGPT_",
        case_sensitive=False,
        extra="ignore",
    )

    # Application
    VERSION: str = "0.3.1"
    DEBUG: bool = False
    LOG_LEVEL: str = "warning"

    # Tolerances
    TAU_GEOM: float = 1e-9
    TAU_FEAS: float = 1e-9
    TAU_GAP: float = 1e-8
    PIVOT_TOLERANCE: float = 1e-11
    LP_MAX_ITERATIONS: int = 20000

    # System construction
    FAMILY: str = "selfdual"
    SCHEME: str = "inscribed"
    TENSOR: str = "maximal"
    MARGINAL_CONSTRAINTS: bool = True
    GAME_TABLE: str = "literal"

    # Acceptance thresholds
    STRICTNESS_MARGIN: float = 1e-4
    ANCHOR_TOLERANCE: float = 1e-6

    # Worker pool
    WORKERS: int = 0  # 0 = one per CPU
    CHUNK_SIZE: int = 64

    # Output
    OUTPUT_DIR: str = "./results"
    SIGNIFICANT_DIGITS: int = 12
    SELECTION_FILE: str = "config/selection.yml"

    @field_validator("TAU_GEOM", "TAU_FEAS", "TAU_GAP", "PIVOT_TOLERANCE",
                     "STRICTNESS_MARGIN", "ANCHOR_TOLERANCE")
    @classmethod
    def ensure_positive(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("tolerances must be positive")
        return v

    @field_validator("FAMILY")
    @classmethod
    def validate_family(cls, v: str) -> str:
        v = v.lower()
        if v not in FAMILIES:
            raise ValueError(f"unknown family: {v}")
        return v

    @field_validator("SCHEME")
    @classmethod
    def validate_scheme(cls, v: str) -> str:
        v = v.lower()
        if v not in SCHEMES:
            raise ValueError(f"unknown scheme: {v}")
        return v

    @field_validator("TENSOR")
    @classmethod
    def validate_tensor(cls, v: str) -> str:
        v = v.lower()
        if v not in TENSOR_KINDS:
            raise ValueError(f"unknown tensor kind: {v}")
        return v

    @field_validator("GAME_TABLE")
    @classmethod
    def validate_table(cls, v: str) -> str:
        v = v.lower()
        if v not in GAME_TABLES:
            raise ValueError(f"unknown game table: {v}")
        return v

    @property
    def worker_count(self) -> int:
        """Resolve the effective worker count."""
        if self.WORKERS > 0:
            return self.WORKERS
        return os.cpu_count() or 1


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances shared by the services."""

    geom: float = 1e-9
    feas: float = 1e-9
    gap: float = 1e-8
    pivot: float = 1e-11
    max_iterations: int = 20000

    @classmethod
    def from_settings(cls, overrides: Optional[Dict[str, float]] = None) -> "Tolerances":
        s = get_settings()
        values = dict(
            geom=s.TAU_GEOM,
            feas=s.TAU_FEAS,
            gap=s.TAU_GAP,
            pivot=s.PIVOT_TOLERANCE,
            max_iterations=s.LP_MAX_ITERATIONS,
        )
        for key, value in (overrides or {}).items():
            if value is None:
                continue
            if key not in values:
                raise ValueError(f"unknown tolerance: {key}")
            if value <= 0:
                raise ValueError(f"tolerance {key} must be positive")
            values[key] = value
        return cls(**values)

    def as_dict(self) -> Dict[str, float]:
        return {
            "tau_geom": self.geom,
            "tau_feas": self.feas,
            "tau_gap": self.gap,
            "pivot_tolerance": self.pivot,
        }


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()


@lru_cache(maxsize=1)
def get_selection(path: Optional[str] = None) -> Dict[str, Any]:
    """Load the frozen self-dualization selection."""
    selection_path = Path(path or get_settings().SELECTION_FILE)
    if not selection_path.exists():
        return {}
    with open(selection_path, "r") as f:
        data = yaml.safe_load(f) or {}
    return data.get("selection", {})


def save_selection(selection: Dict[str, Any], path: Optional[str] = None) -> Path:
    """Write a frozen selection and invalidate the cached copy."""
    selection_path = Path(path or get_settings().SELECTION_FILE)
    selection_path.parent.mkdir(parents=True, exist_ok=True)
    with open(selection_path, "w") as f:
        yaml.safe_dump({"selection": selection}, f, sort_keys=True)
    get_selection.cache_clear()
    return selection_path


# Global settings instance
settings = get_settings()
