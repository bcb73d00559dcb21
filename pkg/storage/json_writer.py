"""
JSON result writer.
"""
import json
from typing import Any, Dict, Sequence

from polygpt.models.result import ResultRow
from storage.base import ResultWriter


class JSONResultWriter(ResultWriter):
    """Rows with their W matrices, plus the provenance block."""

    extension = ".json"

    def render_rows(self, rows: Sequence[ResultRow], provenance: Dict[str, Any]) -> str:
        document = {
            "provenance": provenance,
            "rows": [self._row(row) for row in rows],
        }
        return json.dumps(document, indent=2, sort_keys=True) + "\n"

    def render_document(self, document: Dict[str, Any]) -> str:
        return json.dumps(document, indent=2, sort_keys=True, default=str) + "\n"

    def _row(self, row: ResultRow) -> Dict[str, Any]:
        data = row.document()
        for key in ("p_win", "gap_to_quantum", "certificate_gap", "wall_time_ms"):
            data[key] = float(f"{data[key]:.{self.digits}g}")
        if data.get("state") is not None:
            data["state"] = [[float(f"{v:.{self.digits}g}") for v in line] for line in data["state"]]
        return data
