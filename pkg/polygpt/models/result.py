"""
Result row schema shared by the CSV and JSON writers.
"""
from typing import Annotated, Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, computed_field

CSV_COLUMNS = (
    "family",
    "scheme",
    "n",
    "n_mod_8",
    "tensor",
    "marginal_constraints",
    "p_win",
    "gap_to_quantum",
    "certificate_gap",
    "argmax_effect_indices",
    "wall_time_ms",
)


def format_number(value: float, digits: int) -> str:
    return f"{value:.{digits}g}"


class ResultRow(BaseModel):
    """One CHSH maximum for a pair of identical polygon systems."""

    model_config = ConfigDict(frozen=True)

    family: str
    scheme: Optional[str] = None
    n: Annotated[int, Field(ge=3)]
    tensor: str
    marginal_constraints: bool
    p_win: float
    gap_to_quantum: float
    certificate_gap: float
    argmax_effect_indices: Tuple[int, int, int, int]
    wall_time_ms: Annotated[float, Field(ge=0)] = 0.0
    state: Optional[List[List[float]]] = None
    lp_count: int = 0

    @computed_field
    @property
    def n_mod_8(self) -> int:
        return self.n % 8

    def csv_record(self, digits: int = 12) -> Dict[str, str]:
        """Column values in CSV order, numbers at ``digits`` significant digits."""
        return {
            "family": self.family,
            "scheme": self.scheme or "",
            "n": str(self.n),
            "n_mod_8": str(self.n_mod_8),
            "tensor": self.tensor,
            "marginal_constraints": str(self.marginal_constraints).lower(),
            "p_win": format_number(self.p_win, digits),
            "gap_to_quantum": format_number(self.gap_to_quantum, digits),
            "certificate_gap": format_number(self.certificate_gap, digits),
            "argmax_effect_indices": "-".join(str(i) for i in self.argmax_effect_indices),
            "wall_time_ms": format_number(self.wall_time_ms, digits),
        }

    def document(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")
