from polygpt.models.result import ResultRow
from polygpt.models.run import Command, OutputFormat, RunConfig, Theory

__all__ = ["Command", "OutputFormat", "ResultRow", "RunConfig", "Theory"]
