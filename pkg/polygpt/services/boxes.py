"""
Bipartite no-signaling boxes with two inputs and two outputs per side.

A box is stored as P[x, y, a, b] = P(a, b | x, y).
"""
from dataclasses import dataclass
from itertools import product
from typing import List, Optional, Sequence

import numpy as np
import structlog

from polygpt.config import Tolerances
from polygpt.services.lp import LinearProgram, LPStatus, solve_lp
from polygpt.utils.errors import ComputationError, DomainError

logger = structlog.get_logger()


@dataclass(frozen=True)
class Box:
    table: np.ndarray
    name: str = "box"

    def __post_init__(self):
        table = np.asarray(self.table, dtype=float)
        if table.shape != (2, 2, 2, 2):
            raise DomainError(f"box table must have shape (2, 2, 2, 2), got {table.shape}")
        object.__setattr__(self, "table", table)

    def validate(self, tol: Optional[Tolerances] = None) -> None:
        """Raises DomainError unless the box is a normalized no-signaling box."""
        tol = tol or Tolerances.from_settings()
        P = self.table
        if not np.all(np.isfinite(P)) or P.min() < -tol.feas:
            raise DomainError(f"{self.name}: negative or non-finite probabilities")
        if np.abs(P.sum(axis=(2, 3)) - 1.0).max() > tol.feas:
            raise DomainError(f"{self.name}: conditional distributions are not normalized")
        alice = P.sum(axis=3)
        bob = P.sum(axis=2)
        if np.abs(alice[:, 0] - alice[:, 1]).max() > tol.feas:
            raise DomainError(f"{self.name}: Bob's input signals to Alice")
        if np.abs(bob[0] - bob[1]).max() > tol.feas:
            raise DomainError(f"{self.name}: Alice's input signals to Bob")

    def chsh_score(self, game=None) -> float:
        """Winning probability of a CHSH-type game, canonical by default."""
        from polygpt.services.chsh import CANONICAL

        game = game or CANONICAL
        total = 0.0
        for x, y, a, b in product((0, 1), repeat=4):
            if a ^ b == game.target(x, y):
                total += self.table[x, y, a, b]
        return total / 4.0


def pr_box() -> Box:
    """a ⊕ b = x·y with uniform marginals."""
    table = np.zeros((2, 2, 2, 2))
    for x, y, a in product((0, 1), repeat=3):
        table[x, y, a, a ^ (x & y)] = 0.5
    return Box(table, "pr")


def shared_random_bit() -> Box:
    """a = b, uniformly random, independent of the inputs."""
    table = np.zeros((2, 2, 2, 2))
    for x, y, a in product((0, 1), repeat=3):
        table[x, y, a, a] = 0.5
    return Box(table, "shared-random-bit")


def uniform_box() -> Box:
    return Box(np.full((2, 2, 2, 2), 0.25), "uniform")


def deterministic_box(alice: Sequence[int], bob: Sequence[int]) -> Box:
    """Outputs a = alice[x], b = bob[y]."""
    table = np.zeros((2, 2, 2, 2))
    for x, y in product((0, 1), repeat=2):
        table[x, y, alice[x], bob[y]] = 1.0
    return Box(table, f"local-{alice[0]}{alice[1]}-{bob[0]}{bob[1]}")


def local_vertices() -> List[Box]:
    """The 16 local deterministic boxes."""
    functions = list(product((0, 1), repeat=2))
    return [deterministic_box(f, g) for f in functions for g in functions]


def mixture(boxes: Sequence[Box], weights: Sequence[float], name: str = "mixture") -> Box:
    weights = np.asarray(weights, dtype=float)
    if weights.min() < 0 or abs(weights.sum() - 1.0) > 1e-12 or len(weights) != len(boxes):
        raise DomainError("mixture weights must be a probability vector over the boxes")
    return Box(np.einsum("k,kxyab->xyab", weights, np.stack([b.table for b in boxes])), name)


def local_visibility(box: Box, tol: Optional[Tolerances] = None) -> float:
    """Largest v ≤ 1 with v·P + (1 - v)·uniform in the local polytope."""
    tol = tol or Tolerances.from_settings()
    vertices = np.stack([v.table.reshape(16) for v in local_vertices()], axis=1)
    target = box.table.reshape(16)
    noise = uniform_box().table.reshape(16)
    # variables: 16 vertex weights, then v
    eq = np.hstack([vertices, (noise - target)[:, None]])
    weights_sum = np.concatenate([np.ones(16), [0.0]])[None, :]
    objective = np.zeros(17)
    objective[16] = 1.0
    program = LinearProgram.from_blocks(
        objective,
        ge=np.hstack([np.eye(16), np.zeros((16, 1))]),
        ge_rhs=np.zeros(16),
        le=objective[None, :],
        le_rhs=np.array([1.0]),
        eq=np.vstack([eq, weights_sum]),
        eq_rhs=np.concatenate([noise, [1.0]]),
    )
    solution = solve_lp(program, tol)
    if solution.status != LPStatus.OPTIMAL:
        raise ComputationError(
            f"local visibility LP is {solution.status.value}", subproblem={"box": box.name}
        )
    return solution.value


def is_local(box: Box, tol: Optional[Tolerances] = None, margin: float = 1e-7) -> bool:
    """Local polytope membership by the visibility LP."""
    return local_visibility(box, tol) >= 1.0 - margin
