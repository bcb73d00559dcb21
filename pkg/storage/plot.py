"""
Residue-class curve emission: one CSV per n mod 8 class and an optional SVG.
"""
import csv
from pathlib import Path
from typing import List, Sequence

import structlog

from polygpt.models.result import ResultRow, format_number
from polygpt.services.chsh import QUANTUM_VALUE
from polygpt.services.sweep import fit_residue_class, residue_groups

logger = structlog.get_logger()


def write_residue_curves(rows: Sequence[ResultRow], directory: Path, digits: int = 12,
                         svg: bool = False) -> List[Path]:
    """Write ``residue_<k>.csv`` files, plus ``sweep.svg`` when requested."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    groups = residue_groups(rows)
    for residue, group in groups.items():
        fit = fit_residue_class(group)
        path = directory / f"residue_{residue}.csv"
        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["n", "p_win", "gap_to_quantum", "fit_p_win"])
            for row in group:
                fitted = format_number(fit.predict(row.n), digits) if fit else ""
                writer.writerow([row.n, format_number(row.p_win, digits),
                                 format_number(row.gap_to_quantum, digits), fitted])
        written.append(path)
    if svg:
        written.append(_plot(groups, directory / "sweep.svg"))
    logger.info("residue curves written", files=len(written), directory=str(directory))
    return written


def _plot(groups, path: Path) -> Path:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    # fixed salt and metadata keep reruns byte-identical
    with matplotlib.rc_context({"svg.hashsalt": "polygpt"}):
        fig, ax = plt.subplots(figsize=(8, 5))
        for residue, group in groups.items():
            ax.plot([r.n for r in group], [r.p_win for r in group], marker="o",
                    label=f"n mod 8 = {residue}")
        ax.axhline(QUANTUM_VALUE, color="black", linestyle="--", linewidth=1, label="quantum value")
        ax.set_xlabel("n")
        ax.set_ylabel("maximal CHSH winning probability")
        ax.legend(fontsize="small")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path
