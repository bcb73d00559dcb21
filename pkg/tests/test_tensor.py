"""
Test bipartite state spaces
"""
import numpy as np
import pytest

from polygpt.services.geometry import build_polygon_system
from polygpt.services.tensor import (
    TensorKind,
    check_state,
    conditional_state,
    enumerate_vertices,
    is_product,
    marginals,
    maximal_tensor_constraints,
    minimal_tensor_polytope,
    product_state,
    tensor_polytope,
)
from polygpt.utils.errors import ConfigurationError, DomainError


class TestProductState:
    """Test product states and their reductions."""

    def test_outer_product(self, gbit):
        """A product state is the outer product of its factors."""
        state = product_state(gbit.state_vertices[0], gbit.state_vertices[1], gbit, gbit)
        assert np.allclose(state.matrix, np.outer(gbit.state_vertices[0], gbit.state_vertices[1]))
        assert state.probability(gbit.unit, gbit.unit) == pytest.approx(1.0)
        assert is_product(state.matrix)

    def test_marginals(self, triangle):
        """Marginals of a product are its factors."""
        state = product_state(triangle.state_vertices[0], triangle.state_vertices[2], triangle, triangle)
        left, right = marginals(state)
        assert np.allclose(left, triangle.state_vertices[0])
        assert np.allclose(right, triangle.state_vertices[2])

    def test_unnormalized_rejected(self, gbit):
        """Both factors must be normalized."""
        with pytest.raises(DomainError):
            product_state(2 * gbit.state_vertices[0], gbit.state_vertices[0], gbit, gbit)

    def test_outside_state_space_rejected(self, gbit):
        """Both factors must lie in the state space."""
        with pytest.raises(DomainError):
            product_state([10.0, 0.0, 1.0], gbit.state_vertices[0], gbit, gbit)


class TestTensorPolytope:
    """Test the minimal and maximal tensor products."""

    def test_gbit_constraint_count(self, gbit):
        """Marginal rows of the gbit are parallel to positivity rows and are merged."""
        with_marginals = maximal_tensor_constraints(gbit, gbit, marginal_constraints=True)
        without = maximal_tensor_constraints(gbit, gbit, marginal_constraints=False)
        assert without.constraint_count == 17
        assert with_marginals.constraint_count == 17
        assert with_marginals.kind == TensorKind.MAXIMAL

    def test_marginal_switch_recorded(self, octagon):
        """The marginal switch is part of the polytope and adds rows when enabled."""
        with_marginals = maximal_tensor_constraints(octagon, octagon, marginal_constraints=True)
        without = maximal_tensor_constraints(octagon, octagon, marginal_constraints=False)
        assert with_marginals.marginal_constraints and not without.marginal_constraints
        assert with_marginals.constraint_count > without.constraint_count

    def test_products_feasible(self, tol):
        """Every product of extremal states satisfies the maximal constraints."""
        system = build_polygon_system(5)
        polytope = maximal_tensor_constraints(system, system, marginal_constraints=True)
        for omega_a in system.state_vertices:
            for omega_b in system.state_vertices:
                report = check_state(np.outer(omega_a, omega_b), polytope, tol)
                assert report.feasible

    def test_minimal_inside_maximal(self, tol):
        """Minimal vertices are feasible for the maximal product."""
        system = build_polygon_system(6)
        minimal = minimal_tensor_polytope(system, system)
        assert minimal.vertices.shape == (36, 3, 3)
        maximal = maximal_tensor_constraints(system, system)
        for W in minimal.vertices:
            assert check_state(W, maximal, tol).feasible

    def test_unknown_kind_rejected(self, gbit):
        """Only minimal and maximal are supported."""
        with pytest.raises(ConfigurationError):
            tensor_polytope(gbit, gbit, "intermediate")

    def test_check_state_flags_violation(self, gbit, tol):
        """A negative pairing makes a state infeasible."""
        polytope = maximal_tensor_constraints(gbit, gbit)
        W = np.outer(gbit.state_vertices[0], gbit.state_vertices[0])
        W[0, 0] = -5.0
        report = check_state(W, polytope, tol)
        assert not report.feasible
        assert report.positivity_margin < 0

    def test_no_signaling(self, gbit, rng):
        """Marginals do not depend on the other party's measurement."""
        polytope = maximal_tensor_constraints(gbit, gbit)
        vertices = enumerate_vertices(polytope)
        W = vertices[int(rng.integers(len(vertices)))]
        for effect in gbit.effect_vertices:
            alice = [a @ W @ effect + a @ W @ (gbit.unit - effect) for a in gbit.effect_vertices]
            assert np.allclose(alice, gbit.effect_vertices @ W @ gbit.unit)


class TestVertexEnumeration:
    """Test exhaustive vertex enumeration of the maximal product."""

    def test_gbit_vertices(self, gbit, tol):
        """Two gbits have 24 vertices: 16 products and 8 PR-type states."""
        polytope = maximal_tensor_constraints(gbit, gbit)
        vertices = enumerate_vertices(polytope, tol=tol)
        assert len(vertices) == 24
        products = sum(is_product(W) for W in vertices)
        assert products == 16
        for W in vertices:
            assert check_state(W, polytope, tol).feasible

    def test_triangle_vertices_are_products(self, triangle, tol):
        """Two triangles only have product vertices."""
        vertices = enumerate_vertices(maximal_tensor_constraints(triangle, triangle), tol=tol)
        assert len(vertices) == 9
        assert all(is_product(W) for W in vertices)

    def test_small_chunks(self, gbit, tol):
        """The chunk size does not change the result."""
        polytope = maximal_tensor_constraints(gbit, gbit)
        assert len(enumerate_vertices(polytope, chunk_size=97, tol=tol)) == 24


class TestConditionalState:
    """Test conditioning on one party's effect."""

    def test_product_conditioning(self, gbit):
        """Conditioning a product returns the other factor."""
        omega_a, omega_b = gbit.state_vertices[0], gbit.state_vertices[2]
        state = product_state(omega_a, omega_b, gbit, gbit)
        effect = gbit.effect_vertices[0]
        result = conditional_state(state, effect, "left")
        assert result.defined
        assert result.probability == pytest.approx(effect @ omega_a)
        assert np.allclose(result.state, omega_b)

    def test_zero_probability(self, triangle):
        """A zero-probability outcome has no conditional state."""
        omega = triangle.state_vertices[0]
        state = product_state(omega, omega, triangle, triangle)
        zero_effect = triangle.effect_vertices[int(np.argmin(triangle.effect_vertices @ omega))]
        result = conditional_state(state, zero_effect, "right")
        assert result.probability == 0.0
        assert not result.defined

    def test_invalid_effect_rejected(self, gbit):
        """Effects must be valid on the conditioned system."""
        state = product_state(gbit.state_vertices[0], gbit.state_vertices[0], gbit, gbit)
        with pytest.raises(DomainError):
            conditional_state(state, [0.0, 0.0, 2.0], "right")
