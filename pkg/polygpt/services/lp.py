"""
Dense linear programming with primal/dual certificates.

Problems here are small: up to a few dozen free variables and a few thousand
rows. The solver runs a two-phase revised simplex on the dual standard form, so
the basis has one row per primal variable and is cheap to refactorize. The
primal point is recovered from the simplex multipliers.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import structlog

from polygpt.config import Tolerances
from polygpt.utils.errors import DomainError, SolverFailure

logger = structlog.get_logger()


class Relation(str, Enum):
    """Constraint relation."""
    LE = "<="
    EQ = "="
    GE = ">="


class LPStatus(str, Enum):
    """Outcome of a solve."""
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LinearProgram:
    """maximize objective·x subject to coefficients[i]·x (relations[i]) bounds[i], x free."""

    objective: np.ndarray
    coefficients: np.ndarray
    relations: Tuple[Relation, ...]
    bounds: np.ndarray

    def __post_init__(self):
        objective = np.asarray(self.objective, dtype=float)
        if objective.ndim != 1 or objective.size == 0:
            raise DomainError("objective must be a nonempty vector", field="objective")
        coefficients = np.asarray(self.coefficients, dtype=float)
        if coefficients.size == 0:
            coefficients = coefficients.reshape(0, objective.size)
        if coefficients.ndim != 2 or coefficients.shape[1] != objective.size:
            raise DomainError(
                f"constraint rows must have length {objective.size}", field="coefficients"
            )
        bounds = np.asarray(self.bounds, dtype=float).reshape(-1)
        relations = tuple(Relation(r) for r in self.relations)
        if not (len(relations) == bounds.size == coefficients.shape[0]):
            raise DomainError("constraint rows, relations and bounds disagree in count")
        for name, array in (("objective", objective), ("coefficients", coefficients),
                            ("bounds", bounds)):
            if not np.all(np.isfinite(array)):
                raise DomainError(f"{name} contains non-finite entries", field=name)
        object.__setattr__(self, "objective", objective)
        object.__setattr__(self, "coefficients", coefficients)
        object.__setattr__(self, "relations", relations)
        object.__setattr__(self, "bounds", bounds)

    @property
    def variable_count(self) -> int:
        return self.objective.size

    @property
    def constraint_count(self) -> int:
        return self.bounds.size

    @classmethod
    def from_rows(
        cls,
        objective: Sequence[float],
        rows: Sequence[Tuple[Sequence[float], Union[str, Relation], float]],
    ) -> "LinearProgram":
        """Build from (coefficients, relation, bound) triples."""
        n = len(objective)
        coefficients = np.array([r[0] for r in rows], dtype=float).reshape(len(rows), n)
        relations = tuple(Relation(r[1]) for r in rows)
        bounds = np.array([r[2] for r in rows], dtype=float)
        return cls(np.asarray(objective, dtype=float), coefficients, relations, bounds)

    @classmethod
    def from_blocks(
        cls,
        objective: Sequence[float],
        ge: Optional[np.ndarray] = None,
        ge_rhs: Optional[np.ndarray] = None,
        le: Optional[np.ndarray] = None,
        le_rhs: Optional[np.ndarray] = None,
        eq: Optional[np.ndarray] = None,
        eq_rhs: Optional[np.ndarray] = None,
    ) -> "LinearProgram":
        """Build from dense blocks of ≥, ≤ and = rows."""
        objective = np.asarray(objective, dtype=float)
        n = objective.size
        blocks, relations, bounds = [], [], []
        for matrix, rhs, relation in ((ge, ge_rhs, Relation.GE), (le, le_rhs, Relation.LE),
                                      (eq, eq_rhs, Relation.EQ)):
            if matrix is None:
                continue
            matrix = np.asarray(matrix, dtype=float).reshape(-1, n)
            rhs = np.zeros(matrix.shape[0]) if rhs is None else np.asarray(rhs, dtype=float)
            blocks.append(matrix)
            bounds.append(rhs.reshape(-1))
            relations.extend([relation] * matrix.shape[0])
        coefficients = np.vstack(blocks) if blocks else np.zeros((0, n))
        bounds_arr = np.concatenate(bounds) if bounds else np.zeros(0)
        return cls(objective, coefficients, tuple(relations), bounds_arr)


@dataclass(frozen=True)
class LPSolution:
    """Solver output with certificates.

    ``dual`` holds one multiplier per original row with
    objective = Σ dual[i]·row[i]; multipliers are ≥ 0 on ≤ rows, ≤ 0 on ≥ rows.
    For infeasible programs ``ray`` is a Farkas multiplier vector over the rows;
    for unbounded programs it is a primal improving direction.
    """

    status: LPStatus
    value: float
    primal: Optional[np.ndarray] = None
    dual: Optional[np.ndarray] = None
    duality_gap: float = float("nan")
    primal_residual: float = float("nan")
    dual_residual: float = float("nan")
    ray: Optional[np.ndarray] = None
    iterations: int = 0

    @property
    def is_optimal(self) -> bool:
        return self.status == LPStatus.OPTIMAL


@dataclass
class _StandardResult:
    status: str
    v: Optional[np.ndarray] = None
    multipliers: Optional[np.ndarray] = None
    ray: Optional[np.ndarray] = None
    phase_one_multipliers: Optional[np.ndarray] = None


class _Simplex:
    """Two-phase revised simplex for min cost·v s.t. M v = rhs, v ≥ 0.

    The basis matrix is refactorized from the original columns at every
    iteration, so round-off never accumulates across pivots. Entering columns
    follow Dantzig's rule with smallest-index ties; after a run of degenerate
    pivots the solver switches to Bland's rule until the objective moves.
    The ratio test is Harris's two-pass test, bounded by a tenth of the
    feasibility tolerance.

    Single-use: holds mutable working state for one problem.
    """

    DEGENERATE_RUN = 25
    STABLE_PIVOT = 1e-7

    def __init__(self, M: np.ndarray, rhs: np.ndarray, tol: Tolerances):
        m, N = M.shape
        self.m, self.N = m, N
        self.tol = tol
        self.sign = np.where(rhs < 0, -1.0, 1.0)
        self.A = np.hstack([M * self.sign[:, None], np.eye(m)])
        self.rhs = rhs * self.sign
        self.scale = 1.0 + float(np.abs(rhs).max(initial=0.0))
        self.basis = np.arange(N, N + m)
        self.iterations = 0
        self.degenerate = 0
        self.direction: Optional[np.ndarray] = None

    def _solve(self, rhs: np.ndarray, transpose: bool = False) -> np.ndarray:
        """Solve with the current basis matrix plus one refinement step."""
        B = self.A[:, self.basis]
        if transpose:
            B = B.T
        try:
            x = np.linalg.solve(B, rhs)
            x += np.linalg.solve(B, rhs - B @ x)
        except np.linalg.LinAlgError:
            raise SolverFailure("singular simplex basis", iterations=self.iterations)
        return x

    def _leaving(self, x: np.ndarray, w: np.ndarray, pin_artificials: bool) -> Optional[int]:
        eps = self.tol.pivot
        if pin_artificials:
            # artificials left on redundant rows must stay at zero
            pinned = np.flatnonzero((self.basis >= self.N) & (np.abs(w) > eps))
            if pinned.size:
                return int(pinned[0])
        rows = np.flatnonzero(w > eps)
        if rows.size == 0:
            return None
        x = np.maximum(x, 0.0)
        delta = 0.1 * self.tol.feas
        limit = float(((x[rows] + delta) / w[rows]).min())
        eligible = rows[x[rows] / w[rows] <= limit]
        stable = eligible[w[eligible] >= self.STABLE_PIVOT * float(np.abs(w).max())]
        if stable.size:
            eligible = stable
        if self.degenerate >= self.DEGENERATE_RUN:
            return int(eligible[np.argmin(self.basis[eligible])])
        order = np.lexsort((self.basis[eligible], -w[eligible]))
        return int(eligible[order[0]])

    def _iterate(self, cost: np.ndarray, allowed: np.ndarray,
                 pin_artificials: bool = False) -> Tuple[str, Optional[int]]:
        optimality = 0.1 * self.tol.feas
        delta = 0.1 * self.tol.feas
        self.degenerate = 0
        while True:
            x = self._solve(self.rhs)
            y = self._solve(cost[self.basis], transpose=True)
            reduced = cost - self.A.T @ y
            entering = np.flatnonzero((reduced < -optimality) & allowed)
            if entering.size == 0:
                return "optimal", None
            if self.iterations >= self.tol.max_iterations:
                raise SolverFailure(
                    "simplex iteration limit reached", iterations=self.iterations
                )
            if self.degenerate >= self.DEGENERATE_RUN:
                j = int(entering[0])
            else:
                j = int(entering[np.argmin(reduced[entering])])
            w = self._solve(self.A[:, j])
            i = self._leaving(x, w, pin_artificials)
            if i is None:
                self.direction = w
                return "unbounded", j
            step = max(float(x[i]), 0.0) / abs(float(w[i]))
            self.degenerate = self.degenerate + 1 if step <= delta else 0
            self.basis[i] = j
            self.iterations += 1

    def _multipliers(self, cost: np.ndarray) -> np.ndarray:
        return self.sign * self._solve(cost[self.basis], transpose=True)

    def _drive_out_artificials(self) -> None:
        # rows where no structural column can replace the artificial are
        # redundant and keep a zero artificial
        threshold = 100.0 * self.tol.pivot
        for i in range(self.m):
            if self.basis[i] < self.N or self.N == 0:
                continue
            unit = np.zeros(self.m)
            unit[i] = 1.0
            row = self._solve(unit, transpose=True) @ self.A[:, :self.N]
            row[self.basis[self.basis < self.N]] = 0.0
            j = int(np.argmax(np.abs(row)))
            if abs(row[j]) > threshold:
                self.basis[i] = j

    def solve(self, cost: np.ndarray) -> _StandardResult:
        m, N = self.m, self.N
        phase_one = np.zeros(N + m)
        phase_one[N:] = 1.0
        self._iterate(phase_one, np.ones(N + m, dtype=bool))
        infeasibility = float(phase_one[self.basis] @ self._solve(self.rhs))
        if infeasibility > self.tol.feas * self.scale:
            return _StandardResult(
                "infeasible", phase_one_multipliers=self._multipliers(phase_one)
            )

        self._drive_out_artificials()
        full_cost = np.zeros(N + m)
        full_cost[:N] = cost
        allowed = np.zeros(N + m, dtype=bool)
        allowed[:N] = True
        status, column = self._iterate(full_cost, allowed, pin_artificials=True)
        if status == "unbounded":
            ray = np.zeros(N)
            ray[column] = 1.0
            for i, b in enumerate(self.basis):
                if b < N:
                    ray[b] = -self.direction[i]
            return _StandardResult("unbounded", ray=ray)

        x = self._solve(self.rhs)
        v = np.zeros(N)
        for i, b in enumerate(self.basis):
            if b < N:
                v[b] = max(float(x[i]), 0.0)
        return _StandardResult("optimal", v=v, multipliers=self._multipliers(full_cost))


def _split_rows(program: LinearProgram):
    """Return (A_le, b_le, le_index, le_sign, E, d, eq_index)."""
    A = program.coefficients
    b = program.bounds
    le_index = np.array(
        [k for k, r in enumerate(program.relations) if r != Relation.EQ], dtype=int
    )
    eq_index = np.array(
        [k for k, r in enumerate(program.relations) if r == Relation.EQ], dtype=int
    )
    le_sign = np.array(
        [-1.0 if program.relations[k] == Relation.GE else 1.0 for k in le_index]
    )
    A_le = A[le_index] * le_sign[:, None]
    b_le = b[le_index] * le_sign
    return A_le, b_le, le_index, le_sign, A[eq_index], b[eq_index], eq_index


def _residuals(program: LinearProgram, x: np.ndarray, dual: np.ndarray) -> Tuple[float, float, float]:
    A, b, c = program.coefficients, program.bounds, program.objective
    slack = A @ x - b
    primal = 0.0
    dual_sign = 0.0
    for k, relation in enumerate(program.relations):
        if relation == Relation.LE:
            primal = max(primal, slack[k])
            dual_sign = max(dual_sign, -dual[k])
        elif relation == Relation.GE:
            primal = max(primal, -slack[k])
            dual_sign = max(dual_sign, dual[k])
        else:
            primal = max(primal, abs(slack[k]))
    stationarity = float(np.abs(A.T @ dual - c).max(initial=0.0))
    gap = abs(float(c @ x) - float(dual @ b))
    return float(primal), max(stationarity, float(dual_sign)), gap


def solve_lp(program: LinearProgram, tol: Optional[Tolerances] = None) -> LPSolution:
    """Solve ``program`` and certify the answer.

    Raises:
        DomainError: malformed program
        SolverFailure: iteration limit reached or certificate check failed
    """
    if not isinstance(program, LinearProgram):
        raise DomainError("solve_lp expects a LinearProgram")
    tol = tol or Tolerances.from_settings()
    n = program.variable_count
    A_le, b_le, le_index, le_sign, E, d, eq_index = _split_rows(program)
    k, e = A_le.shape[0], E.shape[0]

    # dual standard form: min b_le·y + d·(z+ - z-) s.t. A_le^T y + E^T (z+ - z-) = c
    M = np.hstack([A_le.T, E.T, -E.T]) if (k + e) else np.zeros((n, 0))
    cost = np.concatenate([b_le, d, -d])
    simplex = _Simplex(M, program.objective, tol)
    result = simplex.solve(cost)
    iterations = simplex.iterations

    def to_rows(v: np.ndarray) -> np.ndarray:
        rows = np.zeros(program.constraint_count)
        rows[le_index] = v[:k] * le_sign
        rows[eq_index] = v[k:k + e] - v[k + e:]
        return rows

    if result.status == "unbounded":
        # dual unbounded below: the improving dual direction is a Farkas certificate
        logger.debug("linear program infeasible", iterations=iterations)
        return LPSolution(LPStatus.INFEASIBLE, float("-inf"), ray=to_rows(result.ray),
                          iterations=iterations)

    if result.status == "infeasible":
        farkas = _farkas_ray(M, cost, tol)
        if farkas is not None:
            logger.debug("linear program infeasible", iterations=iterations)
            return LPSolution(LPStatus.INFEASIBLE, float("-inf"), ray=to_rows(farkas),
                              iterations=iterations)
        # phase-one multipliers give A d <= 0, E d = 0, c·d > 0
        logger.debug("linear program unbounded", iterations=iterations)
        return LPSolution(LPStatus.UNBOUNDED, float("inf"),
                          ray=result.phase_one_multipliers, iterations=iterations)

    x = result.multipliers
    dual = to_rows(result.v)
    primal_res, dual_res, gap = _residuals(program, x, dual)
    scale = max(1.0, float(np.abs(program.bounds).max(initial=0.0)),
                float(np.abs(program.objective).max(initial=0.0)))
    if primal_res > tol.feas * scale or dual_res > tol.feas * scale or gap > tol.gap * scale:
        raise SolverFailure(
            "certificate check failed",
            iterations=iterations,
            residuals={"primal": primal_res, "dual": dual_res, "gap": gap},
        )
    return LPSolution(
        status=LPStatus.OPTIMAL,
        value=float(program.objective @ x),
        primal=x,
        dual=dual,
        duality_gap=gap,
        primal_residual=primal_res,
        dual_residual=dual_res,
        iterations=iterations,
    )


def _farkas_ray(M: np.ndarray, cost: np.ndarray, tol: Tolerances) -> Optional[np.ndarray]:
    """Look for v ≥ 0 with M v = 0 and cost·v < 0, normalized by Σv ≤ 1."""
    n, N = M.shape
    if N == 0:
        return None
    system = np.zeros((n + 1, N + 1))
    system[:n, :N] = M
    system[n, :] = 1.0
    rhs = np.zeros(n + 1)
    rhs[n] = 1.0
    simplex = _Simplex(system, rhs, tol)
    result = simplex.solve(np.concatenate([cost, [0.0]]))
    if result.status != "optimal":
        return None
    v = result.v[:N]
    if float(cost @ v) < -tol.feas:
        return v
    return None


def vertex_oracle(objective: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> float:
    """Maximum of a linear objective over a box by corner selection."""
    objective = np.asarray(objective, dtype=float)
    return float(np.sum(np.where(objective >= 0, objective * upper, objective * lower)))
