"""
Bipartite state spaces under the minimal and maximal tensor products.

A bipartite state is a 3x3 matrix W; the probability of the effect pair
(a, c) is aᵀ W c. Constraints act on vec(W) in row-major order.
"""
from dataclasses import dataclass
from enum import Enum
from itertools import combinations, islice
from math import comb
from typing import Iterator, List, Optional, Tuple, Union

import numpy as np
import structlog

from polygpt.config import Tolerances, get_settings
from polygpt.services.geometry import PolygonSystem, as_vec3
from polygpt.utils.errors import ConfigurationError, DomainError

logger = structlog.get_logger()


class TensorKind(str, Enum):
    MINIMAL = "minimal"
    MAXIMAL = "maximal"


class Side(str, Enum):
    """Which party an effect is applied to."""
    LEFT = "left"
    RIGHT = "right"


def as_tensor_kind(kind: Union[TensorKind, str]) -> TensorKind:
    try:
        return TensorKind(kind)
    except ValueError:
        raise ConfigurationError(f"unknown tensor kind: {kind}", setting="tensor")


@dataclass(frozen=True)
class BipartiteState:
    """Joint state of two polygon systems."""

    matrix: np.ndarray
    sys_a: PolygonSystem
    sys_b: PolygonSystem

    def probability(self, a, c) -> float:
        return float(np.asarray(a) @ self.matrix @ np.asarray(c))

    @property
    def left_marginal(self) -> np.ndarray:
        return self.matrix @ self.sys_b.unit

    @property
    def right_marginal(self) -> np.ndarray:
        return self.matrix.T @ self.sys_a.unit


@dataclass(frozen=True)
class ConditionalState:
    state: Optional[np.ndarray]
    probability: float

    @property
    def defined(self) -> bool:
        return self.state is not None


@dataclass(frozen=True)
class StateReport:
    """Invariant margins of a candidate bipartite state."""

    normalization_error: float
    positivity_margin: float
    marginal_margin: float
    feasible: bool


@dataclass(frozen=True)
class TensorPolytope:
    """H-representation of a bipartite state space on vec(W).

    ``inequalities`` rows g satisfy g·vec(W) ≥ 0; ``normalization`` is the
    row with normalization·vec(W) = 1. For the minimal kind ``vertices``
    lists all products of extremal states.
    """

    sys_a: PolygonSystem
    sys_b: PolygonSystem
    kind: TensorKind
    inequalities: np.ndarray
    normalization: np.ndarray
    marginal_constraints: bool
    vertices: Optional[np.ndarray] = None

    @property
    def constraint_count(self) -> int:
        return self.inequalities.shape[0] + 1


def _pair_rows(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    # row for (a, c) is vec(a cᵀ)
    return np.einsum("ik,jl->ijkl", left, right).reshape(-1, 9)


def _dedupe_rows(rows: np.ndarray) -> np.ndarray:
    """Drop rows parallel to an earlier row, keeping first occurrences."""
    units = rows / np.linalg.norm(rows, axis=1, keepdims=True)
    keys = np.round(units, 9) + 0.0
    _, first = np.unique(keys, axis=0, return_index=True)
    return rows[np.sort(first)]


def product_state(omega_a, omega_b, sys_a: PolygonSystem, sys_b: PolygonSystem,
                  tol: Optional[Tolerances] = None) -> BipartiteState:
    """W = ωA ωBᵀ.

    Raises:
        DomainError: if either input is not a normalized state of its system
    """
    tol = tol or Tolerances.from_settings()
    omega_a, omega_b = as_vec3(omega_a, "omega_a"), as_vec3(omega_b, "omega_b")
    for name, omega, system in (("omega_a", omega_a, sys_a), ("omega_b", omega_b, sys_b)):
        if abs(float(system.unit @ omega) - 1.0) > tol.feas:
            raise DomainError(f"{name} is not normalized", field=name)
        if float((system.state_cone.facets @ omega).min()) < -tol.geom:
            raise DomainError(f"{name} lies outside the state space", field=name)
    return BipartiteState(np.outer(omega_a, omega_b), sys_a, sys_b)


def maximal_tensor_constraints(sys_a: PolygonSystem, sys_b: PolygonSystem,
                               marginal_constraints: Optional[bool] = None) -> TensorPolytope:
    """Maximal tensor product: positivity on every pair of extremal effects.

    With ``marginal_constraints`` the conditional states W c and Wᵀ a must
    also lie in the opposite state cone for every extremal effect.
    """
    if marginal_constraints is None:
        marginal_constraints = get_settings().MARGINAL_CONSTRAINTS
    effects_a = sys_a.effect_cone.generators
    effects_b = sys_b.effect_cone.generators
    blocks = [_pair_rows(effects_a, effects_b)]
    if marginal_constraints:
        blocks.append(_pair_rows(sys_a.state_cone.facets, effects_b))
        blocks.append(_pair_rows(effects_a, sys_b.state_cone.facets))
    rows = _dedupe_rows(np.vstack(blocks))
    polytope = TensorPolytope(
        sys_a=sys_a,
        sys_b=sys_b,
        kind=TensorKind.MAXIMAL,
        inequalities=rows,
        normalization=np.outer(sys_a.unit, sys_b.unit).reshape(9),
        marginal_constraints=bool(marginal_constraints),
    )
    logger.debug(
        "maximal tensor product built",
        sys_a=sys_a.label,
        sys_b=sys_b.label,
        constraints=polytope.constraint_count,
    )
    return polytope


def minimal_tensor_polytope(sys_a: PolygonSystem, sys_b: PolygonSystem) -> TensorPolytope:
    """Minimal tensor product: convex hull of products of extremal states."""
    vertices = np.einsum("ik,jl->ijkl", sys_a.state_vertices, sys_b.state_vertices)
    vertices = vertices.reshape(-1, 3, 3)
    # membership reports use the maximal H-representation
    maximal = maximal_tensor_constraints(sys_a, sys_b, marginal_constraints=True)
    return TensorPolytope(
        sys_a=sys_a,
        sys_b=sys_b,
        kind=TensorKind.MINIMAL,
        inequalities=maximal.inequalities,
        normalization=maximal.normalization,
        marginal_constraints=True,
        vertices=vertices,
    )


def tensor_polytope(sys_a: PolygonSystem, sys_b: PolygonSystem,
                    kind: Union[TensorKind, str],
                    marginal_constraints: Optional[bool] = None) -> TensorPolytope:
    kind = as_tensor_kind(kind)
    if kind == TensorKind.MINIMAL:
        return minimal_tensor_polytope(sys_a, sys_b)
    return maximal_tensor_constraints(sys_a, sys_b, marginal_constraints)


def _validate_effect(effect: np.ndarray, system: PolygonSystem, tol: Tolerances) -> None:
    values = system.state_vertices @ effect
    if values.min() < -tol.geom or values.max() > 1.0 + tol.geom:
        raise DomainError("effect is not valid on its system", field="effect")


def conditional_state(state: BipartiteState, effect, side: Union[Side, str],
                      tol: Optional[Tolerances] = None) -> ConditionalState:
    """Condition on ``effect`` applied at ``side``; returns the other side's state.

    Raises:
        DomainError: if the effect is invalid on its system
    """
    tol = tol or Tolerances.from_settings()
    effect = as_vec3(effect, "effect")
    side = Side(side)
    if side == Side.RIGHT:
        _validate_effect(effect, state.sys_b, tol)
        vector = state.matrix @ effect
        probability = float(state.sys_a.unit @ vector)
    else:
        _validate_effect(effect, state.sys_a, tol)
        vector = state.matrix.T @ effect
        probability = float(state.sys_b.unit @ vector)
    if probability <= tol.feas:
        return ConditionalState(state=None, probability=0.0)
    return ConditionalState(state=vector / probability, probability=probability)


def marginals(state: BipartiteState) -> Tuple[np.ndarray, np.ndarray]:
    """Reduced states on the left and right systems."""
    return state.left_marginal, state.right_marginal


def check_state(matrix, polytope: TensorPolytope,
                tol: Optional[Tolerances] = None) -> StateReport:
    """Evaluate the bipartite state invariants of W against ``polytope``."""
    tol = tol or Tolerances.from_settings()
    matrix = np.asarray(matrix, dtype=float).reshape(3, 3)
    sys_a, sys_b = polytope.sys_a, polytope.sys_b
    normalization_error = abs(float(sys_a.unit @ matrix @ sys_b.unit) - 1.0)
    positivity = float((sys_a.effect_cone.generators @ matrix @ sys_b.effect_cone.generators.T).min())
    marginal = min(
        float((sys_a.state_cone.facets @ matrix @ sys_b.effect_cone.generators.T).min()),
        float((sys_a.effect_cone.generators @ matrix @ sys_b.state_cone.facets.T).min()),
    )
    feasible = (
        normalization_error <= tol.feas
        and positivity >= -tol.feas
        and (marginal >= -tol.geom or not polytope.marginal_constraints)
    )
    return StateReport(normalization_error, positivity, marginal, feasible)


def _subset_chunks(count: int, size: int, chunk: int) -> Iterator[np.ndarray]:
    iterator = combinations(range(count), size)
    while True:
        rows = list(islice(iterator, chunk))
        if not rows:
            return
        yield np.array(rows, dtype=np.intp)


def enumerate_vertices(polytope: TensorPolytope, chunk_size: int = 20000,
                       tol: Optional[Tolerances] = None) -> np.ndarray:
    """All vertices of a maximal tensor polytope, as 3x3 matrices.

    Exhaustive basis enumeration: every choice of 8 inequality rows plus the
    normalization row that is nonsingular yields a candidate, kept when
    feasible. Intended for small systems only.
    """
    tol = tol or Tolerances.from_settings()
    rows = polytope.inequalities
    count = rows.shape[0]
    logger.info("enumerating vertices", rows=count, bases=comb(count, 8))
    found: List[np.ndarray] = []
    for subsets in _subset_chunks(count, 8, chunk_size):
        systems = np.empty((subsets.shape[0], 9, 9))
        systems[:, :8, :] = rows[subsets]
        systems[:, 8, :] = polytope.normalization
        dets = np.linalg.det(systems)
        regular = np.abs(dets) > 1e-9
        if not regular.any():
            continue
        rhs = np.zeros(9)
        rhs[8] = 1.0
        count_regular = int(regular.sum())
        points = np.linalg.solve(systems[regular], np.tile(rhs, (count_regular, 1))[:, :, None])[:, :, 0]
        slack = points @ rows.T
        scale = 1.0 + np.abs(points).max(axis=1)
        feasible = slack.min(axis=1) >= -1e3 * tol.feas * scale
        found.extend(points[feasible])
    if not found:
        return np.zeros((0, 3, 3))
    distinct: List[np.ndarray] = []
    for point in found:
        if not distinct or np.abs(np.array(distinct) - point).max(axis=1).min() > 1e-7:
            distinct.append(point)
    vertices = np.array(distinct).reshape(-1, 3, 3)
    logger.info("vertex enumeration finished", vertices=len(vertices))
    return vertices


def is_product(matrix: np.ndarray, tol: float = 1e-8) -> bool:
    """Whether W has rank one."""
    singular = np.linalg.svd(np.asarray(matrix, dtype=float), compute_uv=False)
    return bool(singular[1] <= tol * max(1.0, singular[0]))
