"""
Test the work queue, progress tracking and task functions
"""
import numpy as np
import pytest

from polygpt.services.chsh import CANONICAL, measurement_effects, measurement_tuples
from polygpt.services.tensor import maximal_tensor_constraints
from worker.pool import WorkQueue
from worker.tasks import evaluate_tuple_chunk
from worker.utils.progress import ProgressTracker


def fail_on_three(value):
    if value == 3:
        raise ValueError("three")
    return value


class TestWorkQueue:
    """Test ordered mapping inline and across processes."""

    def test_inline(self):
        assert WorkQueue(1).map(pow, [(2, 3), (3, 2), (5, 0)]) == [8, 9, 1]

    def test_pool_keeps_order(self):
        payloads = [(k, 2) for k in range(20)]
        assert WorkQueue(2).map(pow, payloads) == [k ** 2 for k in range(20)]

    def test_default_worker_count(self):
        """Workers come from POLYGPT_WORKERS when not given."""
        assert WorkQueue().workers == 1

    @pytest.mark.parametrize("workers", [1, 2])
    def test_exceptions_propagate(self, workers):
        with pytest.raises(ValueError):
            WorkQueue(workers).map(fail_on_three, [(k,) for k in range(6)])

    def test_progress_reported(self):
        seen = []
        tracker = ProgressTracker("pow", callback=lambda done, total: seen.append((done, total)))
        WorkQueue(1, progress=tracker).map(pow, [(2, k) for k in range(4)])
        assert seen[0] == (0, 4)
        assert seen[-1] == (4, 4)


class TestProgressTracker:
    """Test throttled progress updates."""

    def test_percentage(self):
        tracker = ProgressTracker("x")
        tracker.start(8)
        tracker.advance(2)
        assert tracker.percentage == 25.0

    def test_empty_total(self):
        tracker = ProgressTracker("x")
        tracker.start(0)
        assert tracker.percentage == 100.0

    def test_throttling(self):
        """Small steps inside the interval are not reported."""
        seen = []
        tracker = ProgressTracker("x", callback=lambda d, t: seen.append(d), update_interval=3600)
        tracker.start(1000)
        tracker.advance()
        assert seen == [0]
        tracker.advance(100)
        assert seen == [0, 101]
        tracker.complete()
        assert seen[-1] == 1000

    def test_callback_errors_swallowed(self):
        def broken(done, total):
            if done:
                raise RuntimeError("display gone")

        tracker = ProgressTracker("x", callback=broken)
        tracker.start(1)
        tracker.advance()
        assert tracker.done == 1


class TestTasks:
    """Test the picklable task functions."""

    def test_tuple_chunk(self, gbit, tol):
        """One value and gap per tuple; the gbit chunk reaches one."""
        polytope = maximal_tensor_constraints(gbit, gbit)
        tuples = measurement_tuples(gbit, gbit)
        values, gaps = evaluate_tuple_chunk(
            polytope, measurement_effects(gbit), measurement_effects(gbit), tuples, CANONICAL, tol
        )
        assert values.shape == gaps.shape == (len(tuples),)
        assert values.max() == pytest.approx(1.0, abs=1e-8)
        assert np.all(gaps <= tol.gap)
