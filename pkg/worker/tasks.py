"""
Picklable task functions run by the work queue.
"""
from typing import Tuple

import numpy as np
import structlog

from polygpt.config import Tolerances
from polygpt.services.chsh import GameCondition, evaluate_tuples
from polygpt.services.tensor import TensorPolytope

logger = structlog.get_logger()


def evaluate_tuple_chunk(
    polytope: TensorPolytope,
    effects_a: np.ndarray,
    effects_b: np.ndarray,
    tuples: np.ndarray,
    game: GameCondition,
    tol: Tolerances,
) -> Tuple[np.ndarray, np.ndarray]:
    """Solve the inner LPs for one chunk of measurement tuples."""
    values, gaps = evaluate_tuples(polytope, effects_a, effects_b, tuples, game, tol)
    logger.debug("chunk evaluated", tuples=len(tuples), best=float(values.max()))
    return values, gaps


def evaluate_sweep_point(n: int, family: str, scheme, kind: str,
                         marginal_constraints: bool, tol: Tolerances):
    """One sweep row, computed serially inside a worker process."""
    from polygpt.services.sweep import sweep_point

    return sweep_point(n, family, scheme, kind, marginal_constraints, tol=tol, workers=1)
