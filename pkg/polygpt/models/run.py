"""
Run configuration schema.
"""
from enum import Enum
from pathlib import Path
from typing import Annotated, Dict, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from polygpt.config import FAMILIES, SCHEMES, TENSOR_KINDS


class Command(str, Enum):
    INFO = "info"
    CHSH_MAX = "chsh-max"
    SWEEP = "sweep"
    ADAPTIVE = "adaptive"
    VERIFY = "verify"


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


class Theory(str, Enum):
    """Strategy class evaluated by the adaptive command."""
    CLASSICAL = "classical"
    QUANTUM = "quantum"
    BOXWORLD = "boxworld"
    GPT = "gpt"


class RunConfig(BaseModel):
    """Validated options of one CLI invocation."""

    model_config = ConfigDict(
        extra="forbid",
        json_schema_extra={
            "examples": [
                {
                    "command": "sweep",
                    "family": "selfdual",
                    "scheme": "inscribed",
                    "tensor": "maximal",
                    "n_range": [3, 30],
                    "format": "csv",
                }
            ]
        },
    )

    command: Annotated[Command, Field(description="Subcommand to run")]

    family: Annotated[
        str,
        Field(default="selfdual", description="Polygon family", examples=list(FAMILIES)),
    ]

    scheme: Annotated[
        Optional[str],
        Field(default=None, description="Self-dualization scheme for even n"),
    ]

    tensor: Annotated[
        str,
        Field(default="maximal", description="Tensor product kind", examples=list(TENSOR_KINDS)),
    ]

    n_range: Annotated[
        Tuple[int, int],
        Field(default=(3, 30), description="Inclusive range of polygon sizes"),
    ]

    marginal_constraints: Annotated[
        bool,
        Field(default=True, description="Include conditional cone-membership rows"),
    ]

    game_table: Annotated[
        str,
        Field(default="literal", description="Adaptive game variant table"),
    ]

    theory: Annotated[
        Theory,
        Field(default=Theory.GPT, description="Strategy class for the adaptive command"),
    ]

    output: Annotated[
        Optional[Path],
        Field(default=None, description="Result file; stdout when omitted"),
    ]

    format: Annotated[OutputFormat, Field(default=OutputFormat.CSV)]

    tolerances: Annotated[
        Dict[str, float],
        Field(default_factory=dict, description="Overrides for geom, feas, gap, pivot"),
    ]

    workers: Annotated[Optional[int], Field(default=None, ge=1)]

    full_enumeration: bool = False
    no_timing: bool = False
    plot: bool = False

    @field_validator("family")
    @classmethod
    def validate_family(cls, v: str) -> str:
        if v not in FAMILIES:
            raise ValueError(f"unknown family: {v}")
        return v

    @field_validator("scheme")
    @classmethod
    def validate_scheme(cls, v: Optional[str]) -> Optional[str]:
        if v is not None and v not in SCHEMES:
            raise ValueError(f"unknown scheme: {v}")
        return v

    @field_validator("tensor")
    @classmethod
    def validate_tensor(cls, v: str) -> str:
        if v not in TENSOR_KINDS:
            raise ValueError(f"unknown tensor kind: {v}")
        return v

    @field_validator("tolerances")
    @classmethod
    def validate_tolerances(cls, v: Dict[str, float]) -> Dict[str, float]:
        for key, value in v.items():
            if key not in ("geom", "feas", "gap", "pivot"):
                raise ValueError(f"unknown tolerance: {key}")
            if value <= 0:
                raise ValueError(f"tolerance {key} must be positive")
        return v

    @model_validator(mode="after")
    def validate_range(self) -> "RunConfig":
        low, high = self.n_range
        if low < 3 or high < low:
            raise ValueError(f"n range must be nonempty with lower bound >= 3, got {self.n_range}")
        return self

    @property
    def sizes(self) -> range:
        return range(self.n_range[0], self.n_range[1] + 1)
