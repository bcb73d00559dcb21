"""
Test result writers and residue curve files
"""
import json

import pytest

from polygpt.models.result import CSV_COLUMNS, ResultRow
from polygpt.services.chsh import QUANTUM_VALUE
from storage.factory import create_result_writer
from storage.plot import write_residue_curves

PROVENANCE = {"version": "0.1.0", "family": "selfdual", "tau_gap": 1e-9}


def make_row(n: int, p_win: float, wall_time_ms: float = 12.5) -> ResultRow:
    return ResultRow(
        family="selfdual",
        scheme="inscribed",
        n=n,
        tensor="maximal",
        marginal_constraints=True,
        p_win=p_win,
        gap_to_quantum=QUANTUM_VALUE - p_win,
        certificate_gap=1e-13,
        argmax_effect_indices=(2, 3, 2, 5),
        wall_time_ms=wall_time_ms,
        state=[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        lp_count=42,
    )


ROWS = [make_row(8, QUANTUM_VALUE), make_row(9, 0.8)]


class TestCSVWriter:
    """Test the CSV writer."""

    def test_provenance_and_header(self, tmp_path):
        """Provenance lines come first, then the fixed header."""
        path = tmp_path / "out.csv"
        create_result_writer({"format": "csv", "path": path}).write_rows(ROWS, PROVENANCE)
        lines = path.read_text().splitlines()
        assert lines[:3] == ["# family: selfdual", "# tau_gap: 1e-09", "# version: 0.1.0"]
        assert lines[3] == ",".join(CSV_COLUMNS)
        assert lines[4].startswith("selfdual,inscribed,8,0,maximal,true,")
        assert "2-3-2-5" in lines[4]
        assert len(lines) == 6

    def test_significant_digits(self, tmp_path):
        """Numbers carry twelve significant digits."""
        path = tmp_path / "out.csv"
        create_result_writer({"format": "csv", "path": path}).write_rows(ROWS[:1], {})
        fields = path.read_text().splitlines()[1].split(",")
        assert fields[CSV_COLUMNS.index("p_win")] == f"{QUANTUM_VALUE:.12g}"

    def test_no_timing(self, tmp_path):
        """Timing is zeroed on request and reruns are byte-identical."""
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        for path, wall in ((first, 12.5), (second, 99.0)):
            writer = create_result_writer({"format": "csv", "path": path, "no_timing": True})
            writer.write_rows([make_row(8, 0.8, wall)], PROVENANCE)
        assert first.read_bytes() == second.read_bytes()
        assert first.read_text().splitlines()[-1].endswith(",0")

    def test_stream_output(self, capsys):
        """Without a path the writer renders to the given stream."""
        import sys

        writer = create_result_writer({"format": "csv"})
        assert writer.write_rows(ROWS, {}, stream=sys.stdout) is None
        assert capsys.readouterr().out.startswith("family,scheme,n")

    def test_document_flattened(self, tmp_path):
        """Nested reports become key,value lines."""
        path = tmp_path / "report.csv"
        create_result_writer({"format": "csv", "path": path}).write_document(
            {"classical": {"value": 0.75, "strategy": [0, 0]}}
        )
        lines = path.read_text().splitlines()
        assert lines[0] == "key,value"
        assert "classical.value,0.75" in lines


class TestJSONWriter:
    """Test the JSON writer."""

    def test_rows_and_state(self, tmp_path):
        """Rows keep their W matrix and the provenance block."""
        path = tmp_path / "out.json"
        create_result_writer({"format": "json", "path": path}).write_rows(ROWS, PROVENANCE)
        document = json.loads(path.read_text())
        assert document["provenance"] == PROVENANCE
        assert [row["n"] for row in document["rows"]] == [8, 9]
        assert document["rows"][0]["state"][2][2] == 1.0
        assert document["rows"][1]["n_mod_8"] == 1
        assert document["rows"][0]["argmax_effect_indices"] == [2, 3, 2, 5]


class TestFactory:
    """Test writer selection."""

    def test_unknown_format(self):
        """Only csv and json are supported."""
        with pytest.raises(ValueError):
            create_result_writer({"format": "parquet"})

    def test_missing_format(self):
        """A format is required."""
        with pytest.raises(ValueError):
            create_result_writer({})


class TestResidueCurves:
    """Test per-residue curve files."""

    def test_csv_curves(self, tmp_path):
        """One file per residue class; fits only where two points exist."""
        rows = [make_row(8, 0.80), make_row(16, 0.82), make_row(9, 0.79)]
        written = write_residue_curves(rows, tmp_path)
        assert sorted(p.name for p in written) == ["residue_0.csv", "residue_1.csv"]
        zero = (tmp_path / "residue_0.csv").read_text().splitlines()
        assert zero[0] == "n,p_win,gap_to_quantum,fit_p_win"
        assert len(zero) == 3 and zero[1].split(",")[3] != ""
        one = (tmp_path / "residue_1.csv").read_text().splitlines()
        assert one[1].endswith(",")

    def test_svg_is_reproducible(self, tmp_path):
        """The plot is written and identical across reruns."""
        rows = [make_row(8, 0.80), make_row(16, 0.82)]
        first = write_residue_curves(rows, tmp_path / "a", svg=True)[-1]
        second = write_residue_curves(rows, tmp_path / "b", svg=True)[-1]
        assert first.name == "sweep.svg"
        assert first.read_bytes() == second.read_bytes()
