"""
Factory for creating result writers.
"""
from typing import Any, Dict

from storage.base import ResultWriter


def create_result_writer(config: Dict[str, Any]) -> ResultWriter:
    """
    Create a result writer from configuration.

    Args:
        config: Writer configuration dictionary with at least:
            - format: csv or json

    Returns:
        Configured ResultWriter instance

    Raises:
        ValueError: If the format is unknown
    """
    output_format = str(config.get("format", "")).lower()

    if not output_format:
        raise ValueError("Writer configuration must include 'format'")

    if output_format == "csv":
        from storage.csv_writer import CSVResultWriter
        return CSVResultWriter(config)

    elif output_format == "json":
        from storage.json_writer import JSONResultWriter
        return JSONResultWriter(config)

    else:
        raise ValueError(f"Unknown output format: {output_format}")
