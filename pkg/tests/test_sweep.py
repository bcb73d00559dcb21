"""
Test sweeps and residue-class analysis
"""
import pytest

from polygpt.models.result import ResultRow
from polygpt.services.chsh import QUANTUM_VALUE
from polygpt.services.sweep import (
    convergence_report,
    fit_residue_class,
    residue_groups,
    sweep,
)


def make_row(n: int, p_win: float) -> ResultRow:
    return ResultRow(
        family="selfdual",
        scheme="inscribed",
        n=n,
        tensor="maximal",
        marginal_constraints=True,
        p_win=p_win,
        gap_to_quantum=QUANTUM_VALUE - p_win,
        certificate_gap=0.0,
        argmax_effect_indices=(2, 3, 2, 4),
    )


class TestSweep:
    """Test sweeps over polygon sizes."""

    def test_rows_sorted_by_n(self):
        """Rows come back in increasing n whatever the request order."""
        rows = sweep("unrestricted", None, [5, 3, 4], "maximal", marginal_constraints=True)
        assert [r.n for r in rows] == [3, 4, 5]
        assert rows[0].p_win == pytest.approx(0.75, abs=1e-9)
        assert rows[1].p_win == pytest.approx(1.0, abs=1e-8)
        assert all(r.lp_count > 0 for r in rows)

    def test_duplicate_sizes_collapsed(self):
        """Each n is computed once."""
        rows = sweep("unrestricted", None, [3, 3], "minimal")
        assert [r.n for r in rows] == [3]


class TestResidueClasses:
    """Test grouping, fitting and convergence by n mod 8."""

    def test_grouping(self):
        """Rows are keyed by n mod 8 and sorted within each class."""
        rows = [make_row(n, 0.8) for n in (16, 3, 8, 11, 5)]
        groups = residue_groups(rows)
        assert list(groups) == [0, 3, 5]
        assert [r.n for r in groups[0]] == [8, 16]
        assert [r.n for r in groups[3]] == [3, 11]

    def test_fit_recovers_coefficients(self):
        """Exact a - b/n² data is fitted exactly."""
        rows = [make_row(n, 0.8 - 2.0 / n ** 2) for n in (8, 16, 24)]
        fit = fit_residue_class(rows)
        assert fit.residue == 0
        assert fit.a == pytest.approx(0.8)
        assert fit.b == pytest.approx(2.0)
        assert fit.rms_residual == pytest.approx(0.0, abs=1e-12)
        assert fit.predict(32) == pytest.approx(0.8 - 2.0 / 32 ** 2)

    def test_fit_needs_two_points(self):
        """A single point has no fit."""
        assert fit_residue_class([make_row(8, 0.8)]) is None

    def test_fit_rejects_mixed_classes(self):
        """Fits are per residue class."""
        with pytest.raises(ValueError):
            fit_residue_class([make_row(8, 0.8), make_row(9, 0.8)])

    def test_convergence_report(self):
        """Increasing values shrink the gap; a dip is flagged."""
        rows = [make_row(8, 0.80), make_row(16, 0.82), make_row(24, 0.84),
                make_row(5, 0.80), make_row(13, 0.79)]
        report = convergence_report(rows)
        assert report[0].nondecreasing and report[0].gap_shrinks
        assert report[0].sizes == [8, 16, 24]
        assert not report[5].nondecreasing
        assert not report[5].gap_shrinks
