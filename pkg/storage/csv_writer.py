"""
CSV result writer.
"""
import csv
import io
from typing import Any, Dict, Sequence

import yaml

from polygpt.models.result import CSV_COLUMNS, ResultRow
from storage.base import ResultWriter


class CSVResultWriter(ResultWriter):
    """Writes the fixed column set; provenance goes into ``#`` header lines."""

    extension = ".csv"

    def render_rows(self, rows: Sequence[ResultRow], provenance: Dict[str, Any]) -> str:
        buffer = io.StringIO()
        for key in sorted(provenance):
            buffer.write(f"# {key}: {provenance[key]}\n")
        writer = csv.DictWriter(buffer, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row.csv_record(self.digits))
        return buffer.getvalue()

    def render_document(self, document: Dict[str, Any]) -> str:
        # reports are nested; flatten to key,value lines
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["key", "value"])
        for key, value in _flatten(document):
            if isinstance(value, float):
                value = f"{value:.{self.digits}g}"
            elif isinstance(value, (list, dict)):
                value = yaml.safe_dump(value, default_flow_style=True).strip()
            writer.writerow([key, value])
        return buffer.getvalue()


def _flatten(document: Dict[str, Any], prefix: str = ""):
    for key in document:
        value = document[key]
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            yield from _flatten(value, f"{name}.")
        else:
            yield name, value
