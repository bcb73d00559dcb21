"""
Abstract base class for result writers.
"""
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, TextIO

from polygpt.models.result import ResultRow


class ResultWriter(ABC):
    """Abstract base class for result writers."""

    extension = ""

    def __init__(self, config: Dict[str, Any]):
        """
        Initialize the writer.

        Args:
            config: Writer configuration dictionary with optional keys:
                - path: output file; stdout when missing
                - digits: significant digits for numbers
                - no_timing: zero the wall-time column
        """
        self.config = config
        self.path: Optional[Path] = Path(config["path"]) if config.get("path") else None
        self.digits = int(config.get("digits", 12))
        self.no_timing = bool(config.get("no_timing", False))

    def prepare(self, rows: Sequence[ResultRow]) -> Sequence[ResultRow]:
        if not self.no_timing:
            return rows
        return [row.model_copy(update={"wall_time_ms": 0.0}) for row in rows]

    @abstractmethod
    def render_rows(self, rows: Sequence[ResultRow], provenance: Dict[str, Any]) -> str:
        """
        Render result rows as text.

        Args:
            rows: Rows in output order
            provenance: Run settings and tolerances

        Returns:
            File contents
        """
        pass

    @abstractmethod
    def render_document(self, document: Dict[str, Any]) -> str:
        """Render a free-form report (adaptive game, verification)."""
        pass

    def write_rows(self, rows: Sequence[ResultRow], provenance: Dict[str, Any],
                   stream: Optional[TextIO] = None) -> Optional[Path]:
        """Write rows to the configured path, or to ``stream`` when no path is set."""
        return self._emit(self.render_rows(self.prepare(rows), provenance), stream)

    def write_document(self, document: Dict[str, Any],
                       stream: Optional[TextIO] = None) -> Optional[Path]:
        return self._emit(self.render_document(document), stream)

    def _emit(self, text: str, stream: Optional[TextIO]) -> Optional[Path]:
        if self.path is None:
            if stream is not None:
                stream.write(text)
            return None
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text(text, encoding="utf-8")
        return self.path

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__} path={self.path}>"
