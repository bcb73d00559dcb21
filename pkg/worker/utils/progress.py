"""Progress tracking utilities"""
import time
from typing import Callable, Optional

import structlog

logger = structlog.get_logger()


class ProgressTracker:
    """Tracks completed tasks with throttled updates."""

    def __init__(self, label: str, callback: Optional[Callable[[int, int], None]] = None,
                 update_interval: float = 2.0):
        self.label = label
        self.callback = callback
        self.update_interval = update_interval
        self.total = 0
        self.done = 0
        self.last_update = 0.0
        self.last_percentage = 0.0

    def start(self, total: int) -> None:
        self.total = total
        self.done = 0
        self.last_update = time.monotonic()
        self.last_percentage = 0.0
        logger.info("Progress started", label=self.label, total=total)
        if self.callback:
            self.callback(0, total)

    def advance(self, steps: int = 1) -> None:
        self.done += steps
        self.update()

    @property
    def percentage(self) -> float:
        if self.total <= 0:
            return 100.0
        return 100.0 * self.done / self.total

    def update(self) -> None:
        """Report progress when enough time or work has passed."""
        now = time.monotonic()
        percentage = self.percentage
        force_update = (
            percentage >= 100.0
            or percentage - self.last_percentage >= 5.0
            or now - self.last_update >= self.update_interval
        )
        if not force_update:
            return
        try:
            if self.callback:
                self.callback(self.done, self.total)
        except Exception as e:
            logger.error("Progress callback failed", label=self.label, error=str(e))
        logger.debug("Progress updated", label=self.label, done=self.done,
                     total=self.total, percentage=round(percentage, 1))
        self.last_update = now
        self.last_percentage = percentage

    def complete(self) -> None:
        self.done = self.total
        if self.callback:
            self.callback(self.total, self.total)
        logger.info("Progress completed", label=self.label, total=self.total)
