"""
Test the dense LP solver and its certificates
"""
import numpy as np
import pytest
from scipy.optimize import linprog

from polygpt.config import Tolerances
from polygpt.services.boxes import local_vertices
from polygpt.services.lp import LinearProgram, LPStatus, Relation, solve_lp, vertex_oracle
from polygpt.utils.errors import DomainError, SolverFailure


def assert_certified(program: LinearProgram, solution, tol: Tolerances) -> None:
    """Dual multipliers reproduce the objective with the right signs."""
    assert solution.is_optimal
    A = program.coefficients
    assert np.allclose(A.T @ solution.dual, program.objective, atol=1e-8)
    for relation, multiplier in zip(program.relations, solution.dual):
        if relation == Relation.LE:
            assert multiplier >= -1e-9
        elif relation == Relation.GE:
            assert multiplier <= 1e-9
    assert solution.duality_gap <= tol.gap
    slack = A @ solution.primal - program.bounds
    for relation, s in zip(program.relations, slack):
        if relation == Relation.LE:
            assert s <= 1e-8
        elif relation == Relation.GE:
            assert s >= -1e-8
        else:
            assert abs(s) <= 1e-8


class TestLinearProgram:
    """Test program construction and validation."""

    def test_from_rows(self):
        """Rows keep their order, relations and bounds."""
        program = LinearProgram.from_rows([1.0, 2.0], [([1, 0], "<=", 1), ([0, 1], ">=", 0)])
        assert program.variable_count == 2
        assert program.constraint_count == 2
        assert program.relations == (Relation.LE, Relation.GE)

    def test_from_blocks(self):
        """Blocks are stacked as >=, <=, =."""
        program = LinearProgram.from_blocks(
            [1.0], ge=np.ones((2, 1)), le=np.ones((1, 1)), le_rhs=[3.0], eq=np.ones((1, 1)), eq_rhs=[2.0]
        )
        assert program.relations == (Relation.GE, Relation.GE, Relation.LE, Relation.EQ)
        assert list(program.bounds) == [0.0, 0.0, 3.0, 2.0]

    def test_empty_objective_rejected(self):
        """An empty objective is malformed."""
        with pytest.raises(DomainError):
            LinearProgram(np.array([]), np.zeros((0, 0)), (), np.array([]))

    def test_row_length_mismatch_rejected(self):
        """Constraint rows must match the variable count."""
        with pytest.raises(DomainError):
            LinearProgram(np.ones(2), np.ones((1, 3)), ("<=",), np.ones(1))

    def test_count_mismatch_rejected(self):
        """Relations and bounds must match the row count."""
        with pytest.raises(DomainError):
            LinearProgram(np.ones(2), np.ones((2, 2)), ("<=",), np.ones(2))

    def test_non_finite_rejected(self):
        """Infinite bounds are malformed."""
        with pytest.raises(DomainError):
            LinearProgram.from_rows([1.0], [([1.0], "<=", np.inf)])

    def test_unknown_relation_rejected(self):
        """Relations are limited to <=, = and >=."""
        with pytest.raises(ValueError):
            LinearProgram.from_rows([1.0], [([1.0], "<", 1.0)])


class TestSolveLP:
    """Test optimal, infeasible and unbounded outcomes."""

    def test_unit_interval(self, tol):
        """max x s.t. 0 <= x <= 1 is 1."""
        program = LinearProgram.from_rows([1.0], [([1.0], ">=", 0.0), ([1.0], "<=", 1.0)])
        solution = solve_lp(program, tol)
        assert solution.status == LPStatus.OPTIMAL
        assert solution.value == pytest.approx(1.0, abs=1e-12)
        assert_certified(program, solution, tol)

    def test_unit_square(self, tol):
        """max x + y on [0, 1]^2 is 2 at (1, 1)."""
        program = LinearProgram.from_blocks(
            [1.0, 1.0], ge=np.eye(2), le=np.eye(2), le_rhs=np.ones(2)
        )
        solution = solve_lp(program, tol)
        assert solution.value == pytest.approx(2.0, abs=1e-12)
        assert np.allclose(solution.primal, [1.0, 1.0])
        assert_certified(program, solution, tol)

    def test_equality_rows(self, tol):
        """Equalities are honoured and carry free multipliers."""
        program = LinearProgram.from_rows(
            [1.0, -1.0],
            [([1, 1], "=", 1.0), ([1, 0], "<=", 0.75), ([0, 1], ">=", 0.0)],
        )
        solution = solve_lp(program, tol)
        assert solution.value == pytest.approx(0.5, abs=1e-12)
        assert np.allclose(solution.primal, [0.75, 0.25])
        assert_certified(program, solution, tol)

    def test_local_chsh_value(self, tol):
        """CHSH over the 16 local deterministic boxes peaks at 3/4."""
        scores = np.array([box.chsh_score() for box in local_vertices()])
        program = LinearProgram.from_blocks(
            scores, ge=np.eye(16), eq=np.ones((1, 16)), eq_rhs=[1.0]
        )
        solution = solve_lp(program, tol)
        assert solution.value == pytest.approx(0.75, abs=1e-12)
        assert_certified(program, solution, tol)

    def test_infeasible_with_farkas_ray(self, tol):
        """x >= 1 and x <= 0 has no solution; the ray proves it."""
        program = LinearProgram.from_rows([1.0], [([1.0], ">=", 1.0), ([1.0], "<=", 0.0)])
        solution = solve_lp(program, tol)
        assert solution.status == LPStatus.INFEASIBLE
        ray = solution.ray
        assert np.allclose(program.coefficients.T @ ray, 0.0, atol=1e-9)
        assert program.bounds @ ray < 0

    def test_unbounded(self, tol):
        """max x s.t. x >= 0 is unbounded."""
        program = LinearProgram.from_rows([1.0], [([1.0], ">=", 0.0)])
        solution = solve_lp(program, tol)
        assert solution.status == LPStatus.UNBOUNDED
        assert solution.value == float("inf")
        assert not solution.is_optimal

    def test_iteration_cap(self):
        """Hitting the iteration cap is a solver failure."""
        program = LinearProgram.from_blocks(
            [1.0, 1.0], ge=np.eye(2), le=np.eye(2), le_rhs=np.ones(2)
        )
        with pytest.raises(SolverFailure) as exc_info:
            solve_lp(program, Tolerances(max_iterations=0))
        assert exc_info.value.exit_code == 3

    def test_rejects_non_program(self):
        """Only LinearProgram instances are accepted."""
        with pytest.raises(DomainError):
            solve_lp("maximize x")

    def test_deterministic(self, tol):
        """Repeated solves give identical answers."""
        program = LinearProgram.from_rows(
            [3.0, 2.0], [([1, 1], "<=", 4.0), ([1, 3], "<=", 6.0), ([1, 0], ">=", 0.0),
                         ([0, 1], ">=", 0.0), ([1, 1], "<=", 4.0)]
        )
        first, second = solve_lp(program, tol), solve_lp(program, tol)
        assert np.array_equal(first.primal, second.primal)
        assert np.array_equal(first.dual, second.dual)
        assert first.iterations == second.iterations

    def test_degenerate_rows(self, tol):
        """Duplicated tight rows do not stall the solver."""
        rows = [([1, 1], "<=", 1.0)] * 5 + [([1, 0], ">=", 0.0), ([0, 1], ">=", 0.0)]
        program = LinearProgram.from_rows([1.0, 1.0], rows)
        solution = solve_lp(program, tol)
        assert solution.value == pytest.approx(1.0, abs=1e-12)


class TestOracles:
    """Test the solver against independent answers."""

    def test_random_box_programs(self, tol, rng):
        """Box LPs with rational corners match corner selection."""
        for _ in range(200):
            k = int(rng.integers(1, 5))
            lower = rng.integers(-8, 0, size=k) / 4.0
            upper = rng.integers(1, 9, size=k) / 4.0
            objective = rng.integers(-5, 6, size=k).astype(float)
            program = LinearProgram.from_blocks(
                objective, ge=np.eye(k), ge_rhs=lower, le=np.eye(k), le_rhs=upper
            )
            solution = solve_lp(program, tol)
            assert solution.value == pytest.approx(vertex_oracle(objective, lower, upper), abs=1e-9)

    def test_matches_highs(self, tol, rng):
        """Bounded random polytopes agree with scipy's HiGHS."""
        for _ in range(50):
            A = rng.normal(size=(10, 3))
            b = rng.uniform(0.5, 2.0, size=10)
            A = np.vstack([A, np.eye(3), -np.eye(3)])
            b = np.concatenate([b, np.full(6, 5.0)])
            c = rng.normal(size=3)
            program = LinearProgram.from_blocks(c, le=A, le_rhs=b)
            solution = solve_lp(program, tol)
            reference = linprog(-c, A_ub=A, b_ub=b, bounds=[(None, None)] * 3, method="highs")
            assert reference.success
            assert solution.value == pytest.approx(-reference.fun, abs=1e-7)
            assert_certified(program, solution, tol)

    def test_degenerate_vertex(self, tol):
        """Dozens of rows tight at the optimum keep the certificate within tolerance."""
        angles = 2 * np.pi * np.arange(360) / 360
        circle = np.column_stack([np.cos(angles), np.sin(angles), np.zeros(360)])
        through_vertex = np.column_stack([np.ones(50), np.linspace(-1, 1, 50), np.zeros(50)])
        height = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]])
        A = np.repeat(np.vstack([circle, through_vertex, height]), 3, axis=0)
        program = LinearProgram.from_blocks([1.0, 0.0, 1.0], le=A, le_rhs=np.ones(A.shape[0]))
        solution = solve_lp(program, tol)
        assert solution.value == pytest.approx(2.0, abs=1e-9)
        assert np.allclose(solution.primal, [1.0, 0.0, 1.0], atol=1e-8)
        assert solution.primal_residual <= tol.feas
        assert_certified(program, solution, tol)
