"""
Process-pool work queue with deterministic merging.
"""
from concurrent.futures import ProcessPoolExecutor, as_completed
from typing import Any, Callable, List, Optional, Sequence

import structlog

from polygpt.config import get_settings
from worker.utils.progress import ProgressTracker

logger = structlog.get_logger()


class WorkQueue:
    """Runs independent tasks and returns results in submission order."""

    def __init__(self, workers: Optional[int] = None,
                 progress: Optional[ProgressTracker] = None):
        self.workers = workers if workers and workers > 0 else get_settings().worker_count
        self.progress = progress

    def map(self, func: Callable[..., Any], payloads: Sequence[tuple]) -> List[Any]:
        """Apply ``func(*payload)`` to every payload.

        Exceptions raised by a task propagate unchanged after pending tasks
        are cancelled.
        """
        total = len(payloads)
        if self.progress:
            self.progress.start(total)
        if self.workers == 1 or total <= 1:
            results = []
            for payload in payloads:
                results.append(func(*payload))
                self._advance()
            self._finish()
            return results

        results: List[Any] = [None] * total
        logger.debug("dispatching tasks", tasks=total, workers=self.workers)
        with ProcessPoolExecutor(max_workers=min(self.workers, total)) as executor:
            futures = {executor.submit(func, *payload): k for k, payload in enumerate(payloads)}
            try:
                for future in as_completed(futures):
                    results[futures[future]] = future.result()
                    self._advance()
            except BaseException:
                for future in futures:
                    future.cancel()
                raise
        self._finish()
        return results

    def _advance(self) -> None:
        if self.progress:
            self.progress.advance()

    def _finish(self) -> None:
        if self.progress:
            self.progress.complete()
