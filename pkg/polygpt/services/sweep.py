"""
Sweeps of the CHSH maximum over polygon sizes, grouped by n mod 8.
"""
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np
import structlog

from polygpt.config import Tolerances, get_settings
from polygpt.models.result import ResultRow
from polygpt.services.chsh import QUANTUM_VALUE, chsh_max
from polygpt.services.geometry import build_polygon_system

logger = structlog.get_logger()


def sweep_point(n: int, family: str, scheme: Optional[str], kind: str,
                marginal_constraints: bool, tol: Optional[Tolerances] = None,
                workers: Optional[int] = None, full_enumeration: bool = False,
                progress=None) -> ResultRow:
    """CHSH maximum for two copies of the n-gon system."""
    system = build_polygon_system(n, family, scheme, tol)
    result = chsh_max(
        system, system, kind,
        marginal_constraints=marginal_constraints,
        full_enumeration=full_enumeration,
        workers=workers,
        tol=tol,
        progress=progress,
    )
    return ResultRow(
        family=system.family.value,
        scheme=system.scheme.value if system.scheme else None,
        n=n,
        tensor=result.settings["tensor"],
        marginal_constraints=result.settings["marginal_constraints"],
        p_win=result.value,
        gap_to_quantum=result.gap_to_quantum,
        certificate_gap=result.certificate_gap,
        argmax_effect_indices=result.indices,
        wall_time_ms=result.wall_time_ms,
        state=result.state.matrix.tolist(),
        lp_count=result.lp_count,
    )


def sweep(family: str, scheme: Optional[str], sizes: Iterable[int], kind: str,
          marginal_constraints: Optional[bool] = None, workers: Optional[int] = None,
          tol: Optional[Tolerances] = None, progress=None) -> List[ResultRow]:
    """One row per n, in increasing n; points run in parallel."""
    from worker.pool import WorkQueue
    from worker.tasks import evaluate_sweep_point

    tol = tol or Tolerances.from_settings()
    if marginal_constraints is None:
        marginal_constraints = get_settings().MARGINAL_CONSTRAINTS
    sizes = sorted(set(sizes))
    payloads = [(n, family, scheme, kind, marginal_constraints, tol) for n in sizes]
    logger.info("sweep started", family=family, scheme=scheme, tensor=kind, points=len(sizes))
    rows = WorkQueue(workers, progress=progress).map(evaluate_sweep_point, payloads)
    logger.info("sweep finished", points=len(rows))
    return rows


def residue_groups(rows: Sequence[ResultRow]) -> Dict[int, List[ResultRow]]:
    """Rows keyed by n mod 8, each list sorted by n."""
    groups: Dict[int, List[ResultRow]] = {}
    for row in sorted(rows, key=lambda r: r.n):
        groups.setdefault(row.n_mod_8, []).append(row)
    return dict(sorted(groups.items()))


@dataclass(frozen=True)
class ResidueFit:
    """Least-squares fit p_win ≈ a - b / n² over one residue class.

    This is an empirical fit to the computed values, not a derived formula.
    """

    residue: int
    a: float
    b: float
    rms_residual: float
    points: int
    label: str = "least-squares fit"

    def predict(self, n: int) -> float:
        return self.a - self.b / n ** 2


def fit_residue_class(rows: Sequence[ResultRow]) -> Optional[ResidueFit]:
    if len(rows) < 2:
        return None
    residues = {r.n_mod_8 for r in rows}
    if len(residues) != 1:
        raise ValueError("rows span more than one residue class")
    n = np.array([r.n for r in rows], dtype=float)
    values = np.array([r.p_win for r in rows])
    design = np.column_stack([np.ones_like(n), -1.0 / n ** 2])
    (a, b), *_ = np.linalg.lstsq(design, values, rcond=None)
    residual = values - design @ np.array([a, b])
    return ResidueFit(
        residue=residues.pop(),
        a=float(a),
        b=float(b),
        rms_residual=float(np.sqrt(np.mean(residual ** 2))),
        points=len(rows),
    )


@dataclass(frozen=True)
class ConvergenceEntry:
    residue: int
    sizes: List[int]
    nondecreasing: bool
    initial_gap: float
    final_gap: float

    @property
    def gap_shrinks(self) -> bool:
        return self.final_gap < self.initial_gap or self.initial_gap <= 1e-6


def convergence_report(rows: Sequence[ResultRow],
                       tol: Optional[Tolerances] = None) -> Dict[int, ConvergenceEntry]:
    """Monotonicity and shrinking gap to the quantum value per residue class."""
    tol = tol or Tolerances.from_settings()
    report = {}
    for residue, group in residue_groups(rows).items():
        values = [r.p_win for r in group]
        report[residue] = ConvergenceEntry(
            residue=residue,
            sizes=[r.n for r in group],
            nondecreasing=all(b >= a - tol.gap for a, b in zip(values, values[1:])),
            initial_gap=QUANTUM_VALUE - values[0],
            final_gap=QUANTUM_VALUE - values[-1],
        )
    return report
