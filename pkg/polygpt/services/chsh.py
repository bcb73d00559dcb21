"""
Maximal CHSH winning probability of bipartite polygon GPTs.

Outer loop: extremal measurement 4-tuples (mA0, mA1, mB0, mB1), reduced by
the local symmetries. Inner loop: one LP over the tensor polytope per tuple.
"""
import math
import time
from dataclasses import dataclass, field
from itertools import product
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import structlog

from polygpt.config import Tolerances, get_settings
from polygpt.services.geometry import PolygonSystem
from polygpt.services.lp import LinearProgram, LPStatus, solve_lp
from polygpt.services.tensor import (
    BipartiteState,
    TensorKind,
    TensorPolytope,
    as_tensor_kind,
    tensor_polytope,
)
from polygpt.utils.errors import ComputationError, DomainError, PolyGPTError

logger = structlog.get_logger()

QUANTUM_VALUE = 0.5 * (1.0 + 1.0 / math.sqrt(2.0))
LOCAL_VALUE = 0.75
TIE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class Measurement:
    """Binary measurement; outcome 0 is ``positive``, outcome 1 its complement."""

    index: int
    positive: np.ndarray
    complement: np.ndarray
    label: str

    @property
    def effects(self) -> np.ndarray:
        return np.vstack([self.positive, self.complement])


@dataclass(frozen=True)
class GameCondition:
    """Winning condition a ⊕ b = (x ⊕ alpha)(y ⊕ gamma) ⊕ parity."""

    alpha: int = 0
    gamma: int = 0
    parity: int = 0

    def target(self, x: int, y: int) -> int:
        return ((x ^ self.alpha) & (y ^ self.gamma)) ^ self.parity

    def as_tuple(self) -> Tuple[int, int, int]:
        return (self.alpha, self.gamma, self.parity)


CANONICAL = GameCondition()


@dataclass
class ChshResult:
    value: float
    state: BipartiteState
    indices: Tuple[int, int, int, int]
    certificate_gap: float
    lp_count: int
    settings: Dict[str, Any] = field(default_factory=dict)
    wall_time_ms: float = 0.0

    @property
    def gap_to_quantum(self) -> float:
        return QUANTUM_VALUE - self.value


def extremal_measurements(system: PolygonSystem) -> List[Measurement]:
    """Indexed extremal binary measurements.

    Index 0 is (0, u), index 1 is (u, 0), then (e_i, u - e_i) for every listed
    effect, then (u - e_i, e_i) for complements that are not listed effects.
    """
    unit = system.unit
    zero = np.zeros(3)
    measurements = [
        Measurement(0, zero, unit.copy(), "0"),
        Measurement(1, unit.copy(), zero, "u"),
    ]
    effects = system.effect_vertices
    for i, effect in enumerate(effects):
        measurements.append(Measurement(len(measurements), effect, unit - effect, f"e{i}"))
    for i, effect in enumerate(effects):
        complement = unit - effect
        if np.linalg.norm(effects - complement, axis=1).min() <= 1e-9:
            continue
        measurements.append(Measurement(len(measurements), complement, effect, f"u-e{i}"))
    return measurements


def validate_measurement(measurement: Measurement, system: PolygonSystem,
                         tol: Optional[Tolerances] = None) -> None:
    """Raises DomainError unless both effects are valid and sum to u."""
    tol = tol or Tolerances.from_settings()
    values = measurement.effects @ system.state_vertices.T
    if values.min() < -tol.geom or values.max() > 1.0 + tol.geom:
        raise DomainError(f"measurement {measurement.label} has an invalid effect")
    if np.abs(measurement.positive + measurement.complement - system.unit).max() > tol.geom:
        raise DomainError(f"measurement {measurement.label} does not sum to the unit effect")


def score_matrix(effects_a: np.ndarray, effects_b: np.ndarray,
                 game: GameCondition = CANONICAL) -> np.ndarray:
    """Matrix C with score = Σ C_ij W_ij.

    ``effects_a[x, a]`` is Alice's effect for outcome a of setting x, same
    for Bob.
    """
    C = np.zeros((3, 3))
    for x, y in product((0, 1), repeat=2):
        target = game.target(x, y)
        for a, b in product((0, 1), repeat=2):
            if a ^ b == target:
                C += np.outer(effects_a[x, a], effects_b[y, b])
    return C / 4.0


def chsh_value(state: BipartiteState, m_a0: Measurement, m_a1: Measurement,
               m_b0: Measurement, m_b1: Measurement,
               game: GameCondition = CANONICAL,
               tol: Optional[Tolerances] = None) -> float:
    """Winning probability of ``game`` for a state and four measurements.

    Raises:
        DomainError: invalid measurement
    """
    for m in (m_a0, m_a1):
        validate_measurement(m, state.sys_a, tol)
    for m in (m_b0, m_b1):
        validate_measurement(m, state.sys_b, tol)
    C = score_matrix(
        np.stack([m_a0.effects, m_a1.effects]), np.stack([m_b0.effects, m_b1.effects]), game
    )
    return float(np.sum(C * state.matrix))


def _is_odd_type(system: PolygonSystem) -> bool:
    return not system.complement_listed()


def measurement_tuples(sys_a: PolygonSystem, sys_b: PolygonSystem,
                       full_enumeration: bool = False) -> np.ndarray:
    """Index tuples to evaluate, sorted lexicographically.

    The reduced set fixes Alice's first measurement to (e_0, u - e_0) using
    the dihedral symmetry and a global output flip, and Bob's first
    measurement to an orbit representative; setting swaps take care of
    tuples with a trivial first measurement, except the all-trivial ones,
    which are kept as the local baseline.
    """
    count_a = len(extremal_measurements(sys_a))
    count_b = len(extremal_measurements(sys_b))
    if full_enumeration:
        grid = np.indices((count_a, count_a, count_b, count_b)).reshape(4, -1).T
        return grid
    baseline = np.array(list(product((0, 1), repeat=4)))
    b0 = [2]
    if _is_odd_type(sys_b):
        # first appended complement is u - e_0
        b0.append(2 + len(sys_b.effect_vertices))
    reduced = np.array([
        (2, a1, b0_index, b1)
        for a1 in range(count_a)
        for b0_index in b0
        for b1 in range(count_b)
    ])
    return np.unique(np.vstack([baseline, reduced]), axis=0)


def base_program(polytope: TensorPolytope) -> LinearProgram:
    """Feasible region of one inner LP, with a zero objective."""
    if polytope.kind == TensorKind.MINIMAL:
        count = polytope.vertices.shape[0]
        return LinearProgram.from_blocks(
            np.array([-1.0]), ge=np.ones((count, 1)), ge_rhs=np.zeros(count)
        )
    return LinearProgram.from_blocks(
        np.zeros(9),
        ge=polytope.inequalities,
        ge_rhs=np.zeros(polytope.inequalities.shape[0]),
        eq=polytope.normalization[None, :],
        eq_rhs=np.array([1.0]),
    )


def solve_tuple(polytope: TensorPolytope, program: LinearProgram, C: np.ndarray,
                tol: Tolerances, subproblem: Optional[Dict[str, Any]] = None
                ) -> Tuple[float, np.ndarray, float]:
    """Maximize the score C over the polytope; returns (value, W, duality gap).

    Raises:
        ComputationError: the LP failed or was not optimal
    """
    if polytope.kind == TensorKind.MINIMAL:
        # max over products: minimize t subject to t >= score(vertex)
        scores = np.einsum("ij,kij->k", C, polytope.vertices)
        program = LinearProgram(program.objective, program.coefficients,
                                program.relations, scores)
    else:
        program = LinearProgram(C.reshape(9), program.coefficients,
                                program.relations, program.bounds)
    try:
        solution = solve_lp(program, tol)
    except PolyGPTError as e:
        raise ComputationError("inner LP failed", subproblem=subproblem, cause=e)
    if solution.status != LPStatus.OPTIMAL:
        raise ComputationError(
            f"inner LP is {solution.status.value}", subproblem=subproblem
        )
    if polytope.kind == TensorKind.MINIMAL:
        weights = np.clip(-solution.dual, 0.0, None)
        weights /= weights.sum()
        W = np.einsum("k,kij->ij", weights, polytope.vertices)
        return -solution.value, W, solution.duality_gap
    return solution.value, solution.primal.reshape(3, 3), solution.duality_gap


def measurement_effects(system: PolygonSystem) -> np.ndarray:
    """(count, 2, 3) array of outcome effects per indexed measurement."""
    return np.stack([m.effects for m in extremal_measurements(system)])


def chsh_max(
    sys_a: PolygonSystem,
    sys_b: PolygonSystem,
    kind: Union[TensorKind, str, None] = None,
    game: GameCondition = CANONICAL,
    marginal_constraints: Optional[bool] = None,
    full_enumeration: bool = False,
    workers: Optional[int] = None,
    tol: Optional[Tolerances] = None,
    progress=None,
) -> ChshResult:
    """Maximum winning probability over extremal measurements and feasible states.

    Raises:
        ComputationError: an inner LP failed; carries the measurement tuple
    """
    from worker.pool import WorkQueue
    from worker.tasks import evaluate_tuple_chunk

    settings = get_settings()
    tol = tol or Tolerances.from_settings()
    kind = as_tensor_kind(kind or settings.TENSOR)
    if marginal_constraints is None:
        marginal_constraints = settings.MARGINAL_CONSTRAINTS
    started = time.perf_counter()

    polytope = tensor_polytope(sys_a, sys_b, kind, marginal_constraints)
    effects_a, effects_b = measurement_effects(sys_a), measurement_effects(sys_b)
    tuples = measurement_tuples(sys_a, sys_b, full_enumeration)
    chunk = max(1, settings.CHUNK_SIZE)
    payloads = [
        (polytope, effects_a, effects_b, tuples[start:start + chunk], game, tol)
        for start in range(0, len(tuples), chunk)
    ]
    logger.info(
        "chsh maximization started",
        sys_a=sys_a.label,
        sys_b=sys_b.label,
        tensor=kind.value,
        tuples=len(tuples),
        chunks=len(payloads),
    )
    results = WorkQueue(workers, progress=progress).map(evaluate_tuple_chunk, payloads)
    values = np.concatenate([r[0] for r in results])
    gaps = np.concatenate([r[1] for r in results])

    best = float(values.max())
    winner = int(np.flatnonzero(values >= best - TIE_TOLERANCE)[0])
    indices = tuple(int(i) for i in tuples[winner])
    C = score_matrix(effects_a[list(indices[:2])], effects_b[list(indices[2:])], game)
    _, W, _ = solve_tuple(polytope, base_program(polytope), C, tol,
                          subproblem={"indices": list(indices)})

    if not (LOCAL_VALUE - tol.gap <= best <= 1.0 + tol.gap):
        raise ComputationError(
            f"chsh maximum {best} outside [3/4, 1]",
            subproblem={"sys_a": sys_a.label, "sys_b": sys_b.label, "indices": list(indices)},
        )
    result = ChshResult(
        value=best,
        state=BipartiteState(W, sys_a, sys_b),
        indices=indices,
        certificate_gap=float(gaps.max()),
        lp_count=len(tuples),
        settings={
            "family": sys_a.family.value,
            "scheme": sys_a.scheme.value if sys_a.scheme else None,
            "tensor": kind.value,
            "marginal_constraints": bool(marginal_constraints),
            "game": list(game.as_tuple()),
            "full_enumeration": full_enumeration,
        },
        wall_time_ms=(time.perf_counter() - started) * 1000.0,
    )
    logger.info(
        "chsh maximum computed",
        sys_a=sys_a.label,
        sys_b=sys_b.label,
        value=result.value,
        indices=indices,
        lp_count=result.lp_count,
    )
    return result


def evaluate_tuples(polytope: TensorPolytope, effects_a: np.ndarray, effects_b: np.ndarray,
                    tuples: Sequence[Sequence[int]], game: GameCondition,
                    tol: Tolerances) -> Tuple[np.ndarray, np.ndarray]:
    """Optimal value and duality gap for each measurement tuple."""
    program = base_program(polytope)
    values = np.empty(len(tuples))
    gaps = np.empty(len(tuples))
    for k, (a0, a1, b0, b1) in enumerate(tuples):
        C = score_matrix(effects_a[[a0, a1]], effects_b[[b0, b1]], game)
        subproblem = {
            "sys_a": polytope.sys_a.label,
            "sys_b": polytope.sys_b.label,
            "tensor": polytope.kind.value,
            "indices": [int(a0), int(a1), int(b0), int(b1)],
            "game": list(game.as_tuple()),
        }
        values[k], _, gaps[k] = solve_tuple(polytope, program, C, tol, subproblem)
    return values, gaps
