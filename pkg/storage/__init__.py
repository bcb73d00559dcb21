"""
Result writers for sweep tables and adaptive-game reports.

Supports CSV and JSON files, plus residue-class curve emission.
"""
from storage.base import ResultWriter
from storage.factory import create_result_writer

__all__ = ["ResultWriter", "create_result_writer"]
