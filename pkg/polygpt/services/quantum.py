"""
Two-qubit quantum strategies for the adaptive CHSH game.

Alice and Charlie measure cos θ Z + sin θ X; Bob performs a Bell
measurement on his two halves (entanglement swapping). All operators are
real, so every strategy here is a rebit strategy.
"""
from dataclasses import dataclass
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import structlog

from polygpt.config import Tolerances
from polygpt.services.chsh import CANONICAL, GameCondition
from polygpt.services.games import (
    ConditionalDistribution,
    VariantTable,
    as_variant_table,
    variant_condition,
    VARIANTS,
)
from polygpt.utils.errors import DomainError

logger = structlog.get_logger()

OPTIMAL_ANGLES = (0.0, np.pi / 2, np.pi / 4, 3 * np.pi / 4)

_I = np.eye(2)
_X = np.array([[0.0, 1.0], [1.0, 0.0]])
_Z = np.array([[1.0, 0.0], [0.0, -1.0]])


@dataclass(frozen=True)
class QuantumState:
    """Density matrix on 1, 2 or 4 qubits."""

    rho: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] not in (2, 4, 16):
            raise DomainError(f"density matrix must be 2x2, 4x4 or 16x16, got {rho.shape}")
        object.__setattr__(self, "rho", rho)

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    def validate(self, tol: Optional[Tolerances] = None) -> None:
        tol = tol or Tolerances.from_settings()
        if np.abs(self.rho - self.rho.conj().T).max() > tol.feas:
            raise DomainError("density matrix is not Hermitian")
        if np.linalg.eigvalsh(self.rho).min() < -tol.feas:
            raise DomainError("density matrix is not positive semidefinite")
        if abs(np.trace(self.rho).real - 1.0) > tol.feas:
            raise DomainError("density matrix does not have unit trace")


@dataclass(frozen=True)
class QuantumMeasurement:
    operators: Tuple[np.ndarray, ...]

    def validate(self, tol: Optional[Tolerances] = None) -> None:
        tol = tol or Tolerances.from_settings()
        dim = self.operators[0].shape[0]
        for E in self.operators:
            if np.linalg.eigvalsh(E).min() < -tol.feas:
                raise DomainError("measurement operator is not positive semidefinite")
        if np.abs(sum(self.operators) - np.eye(dim)).max() > tol.feas:
            raise DomainError("measurement operators do not sum to the identity")


def ket(*bits: int) -> np.ndarray:
    v = np.zeros(2 ** len(bits))
    v[int("".join(str(b) for b in bits), 2)] = 1.0
    return v


def density(vector: np.ndarray) -> QuantumState:
    return QuantumState(np.outer(vector, np.conj(vector)))


def bell_basis() -> List[np.ndarray]:
    """Φ+, Φ-, Ψ+, Ψ-."""
    s = 1.0 / np.sqrt(2.0)
    return [
        s * (ket(0, 0) + ket(1, 1)),
        s * (ket(0, 0) - ket(1, 1)),
        s * (ket(0, 1) + ket(1, 0)),
        s * (ket(0, 1) - ket(1, 0)),
    ]


def phi_plus() -> QuantumState:
    return density(bell_basis()[0])


def singlet() -> QuantumState:
    return density(bell_basis()[3])


def maximally_mixed(qubits: int = 1) -> QuantumState:
    dim = 2 ** qubits
    return QuantumState(np.eye(dim) / dim)


def born_probability(state: QuantumState, effect: np.ndarray,
                     tol: Optional[Tolerances] = None) -> float:
    """Tr(ρE), clamped to [-τ_feas, 1 + τ_feas].

    Raises:
        DomainError: dimension mismatch
    """
    tol = tol or Tolerances.from_settings()
    effect = np.asarray(effect)
    if effect.shape != state.rho.shape:
        raise DomainError(f"effect shape {effect.shape} does not match state {state.rho.shape}")
    value = float(np.trace(state.rho @ effect).real)
    return float(np.clip(value, -tol.feas, 1.0 + tol.feas))


def partial_trace(rho: np.ndarray, keep: Sequence[int], qubits: int) -> np.ndarray:
    """Reduce a ``qubits``-qubit operator to the qubits listed in ``keep``."""
    tensor = np.asarray(rho).reshape([2] * (2 * qubits))
    letters = "abcdefghijklmnop"
    rows = list(letters[:qubits])
    cols = list(letters[qubits:2 * qubits])
    for q in range(qubits):
        if q not in keep:
            cols[q] = rows[q]
    out = "".join(rows[q] for q in keep) + "".join(cols[q] for q in keep)
    reduced = np.einsum("".join(rows) + "".join(cols) + "->" + out, tensor)
    dim = 2 ** len(keep)
    return reduced.reshape(dim, dim)


def observable(angle: float) -> np.ndarray:
    return np.cos(angle) * _Z + np.sin(angle) * _X


def projector(angle: float, outcome: int) -> np.ndarray:
    """Projector for ``outcome`` of the observable cos θ Z + sin θ X."""
    sign = 1.0 if outcome == 0 else -1.0
    return (_I + sign * observable(angle)) / 2.0


def bell_measurement() -> QuantumMeasurement:
    return QuantumMeasurement(tuple(np.outer(b, b) for b in bell_basis()))


@dataclass(frozen=True)
class SwapOutcome:
    probability: float
    state: Optional[QuantumState]


def bell_measurement_outcomes(rho_ab: QuantumState, rho_bc: QuantumState,
                              tol: Optional[Tolerances] = None) -> List[SwapOutcome]:
    """Bell measurement on B B'; returns the A-C state for each outcome."""
    tol = tol or Tolerances.from_settings()
    for state in (rho_ab, rho_bc):
        if state.dim != 4:
            raise DomainError("entanglement swapping needs two-qubit states")
        state.validate(tol)
    joint = np.kron(rho_ab.rho, rho_bc.rho)
    outcomes = []
    for vector in bell_basis():
        P = np.kron(np.kron(_I, np.outer(vector, vector)), _I)
        post = P @ joint @ P
        probability = float(np.trace(post).real)
        if probability <= tol.feas:
            outcomes.append(SwapOutcome(0.0, None))
            continue
        reduced = partial_trace(post / probability, keep=(0, 3), qubits=4)
        outcomes.append(SwapOutcome(probability, QuantumState(reduced)))
    return outcomes


def quantum_game_strategy(
    angles: Sequence[float] = OPTIMAL_ANGLES,
    states: Optional[Tuple[QuantumState, QuantumState]] = None,
    outcome_variants: Sequence[int] = (0, 1, 2, 3),
    tol: Optional[Tolerances] = None,
) -> ConditionalDistribution:
    """P(a, b, c | rA, rC) for the swapping strategy.

    ``angles`` are (Alice rA=0, Alice rA=1, Charlie rC=0, Charlie rC=1);
    ``outcome_variants[k]`` is the variant index announced for Bell outcome k
    (default Φ+ → (0, 0), Φ- → (0, 1), Ψ+ → (1, 0), Ψ- → (1, 1)).
    """
    tol = tol or Tolerances.from_settings()
    if len(angles) != 4:
        raise DomainError("expected four measurement angles")
    rho_ab, rho_bc = states or (phi_plus(), phi_plus())
    for state in (rho_ab, rho_bc):
        state.validate(tol)
    joint = np.kron(rho_ab.rho, rho_bc.rho)
    bell = [np.outer(v, v) for v in bell_basis()]
    P = np.zeros((2, 2, 2, 4, 2))
    for r_a, r_c, a, c in product((0, 1), repeat=4):
        alice = projector(angles[r_a], a)
        charlie = projector(angles[2 + r_c], c)
        for k, bob in enumerate(bell):
            effect = np.kron(np.kron(alice, bob), charlie)
            P[r_a, r_c, a, outcome_variants[k], c] += float(np.trace(joint @ effect).real)
    distribution = ConditionalDistribution(np.clip(P, 0.0, None))
    distribution.validate(tol)
    return distribution


def quantum_chsh(angles: Sequence[float] = (0.0, np.pi / 2, np.pi / 4, -np.pi / 4),
                 state: Optional[QuantumState] = None,
                 game: GameCondition = CANONICAL) -> float:
    """Plain bipartite CHSH winning probability."""
    state = state or phi_plus()
    total = 0.0
    for x, y, a, b in product((0, 1), repeat=4):
        if a ^ b == game.target(x, y):
            effect = np.kron(projector(angles[x], a), projector(angles[2 + y], b))
            total += born_probability(state, effect)
    return total / 4.0


_CONDITIONS = [GameCondition(*bits) for bits in product((0, 1), repeat=3)]


def best_variant_table(angles: Sequence[float] = OPTIMAL_ANGLES,
                       states: Optional[Tuple[QuantumState, QuantumState]] = None
                       ) -> Dict[int, Tuple[GameCondition, float]]:
    """For each Bell outcome, the relabeled CHSH condition it wins best."""
    distribution = quantum_game_strategy(angles, states).table
    best = {}
    for k in range(4):
        scores = []
        for condition in _CONDITIONS:
            weight = distribution[:, :, :, k, :].sum(axis=(2, 3))
            wins = sum(
                distribution[r_a, r_c, a, k, c]
                for r_a, r_c, a, c in product((0, 1), repeat=4)
                if a ^ c == condition.target(r_a, r_c)
            )
            total = float(weight.sum())
            scores.append(wins / total if total > 0 else 0.0)
        index = int(np.argmax(scores))
        best[k] = (_CONDITIONS[index], float(scores[index]))
    return best


def table_matches(best: Dict[int, Tuple[GameCondition, float]],
                  table: VariantTable) -> bool:
    """Whether every outcome's best condition is the table's row for that variant."""
    table = as_variant_table(table)
    return all(best[k][0] == variant_condition(VARIANTS[k], table) for k in range(4))


def is_rebit_strategy(angles: Sequence[float],
                      states: Optional[Tuple[QuantumState, QuantumState]] = None) -> bool:
    """All states and measurement operators are real matrices."""
    states = states or (phi_plus(), phi_plus())
    operators = [projector(a, o) for a in angles for o in (0, 1)]
    operators += [np.outer(v, v) for v in bell_basis()]
    matrices = [s.rho for s in states] + operators
    return all(np.abs(np.imag(m)).max() <= 1e-15 for m in matrices)
