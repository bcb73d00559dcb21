"""
Test cones and polygon systems
"""
import numpy as np
import pytest

from polygpt.services.geometry import (
    UNIT,
    Cone,
    Family,
    Scheme,
    build_polygon_system,
    cone_membership,
    dual_cone,
    intersect_cones,
    rotation,
    same_rays,
    self_duality_check,
    system_is_self_dual,
    transform_system,
    validate_system,
)
from polygpt.utils.errors import ConfigurationError, DomainError

OCTANT = np.eye(3)


class TestCone:
    """Test cone construction, duality and membership."""

    def test_octant_is_self_dual(self, tol):
        """The nonnegative octant is its own dual."""
        octant = Cone.from_generators(OCTANT, tol)
        assert same_rays(dual_cone(octant, tol).generators, OCTANT, 1e-12)
        assert self_duality_check(octant, tol)

    def test_redundant_generators_dropped(self, tol):
        """Interior rays are not kept as generators."""
        cone = Cone.from_generators(np.vstack([OCTANT, [1.0, 1.0, 1.0]]), tol)
        assert cone.size == 3

    def test_generators_satisfy_facets(self, tol):
        """Every generator lies on the inner side of every facet."""
        for n in range(3, 12):
            cone = build_polygon_system(n).state_cone
            assert (cone.generators @ cone.facets.T).min() >= -tol.geom

    def test_double_dual(self, tol):
        """The dual of the dual is the original cone."""
        for n in range(3, 13):
            cone = build_polygon_system(n).state_cone
            assert same_rays(dual_cone(dual_cone(cone, tol), tol).generators, cone.generators, 1e-7)

    def test_square_dual_is_rotated_square(self, tol):
        """The gbit dual is the square turned by π/4, with the same vertex radius."""
        cone = build_polygon_system(4).state_cone
        dual = dual_cone(cone, tol)
        assert same_rays(dual.generators, cone.generators @ rotation(np.pi / 4).T, 1e-9)
        states = cone.generators / cone.generators[:, 2:3]
        duals = dual.generators / dual.generators[:, 2:3]
        assert np.allclose(np.hypot(states[:, 0], states[:, 1]), np.hypot(duals[:, 0], duals[:, 1]))

    @pytest.mark.parametrize("n", [3, 5, 7, 9, 29])
    def test_odd_polygons_self_dual(self, n, tol):
        """Odd unrestricted polygons have self-dual state cones."""
        assert self_duality_check(build_polygon_system(n).state_cone, tol)

    @pytest.mark.parametrize("n", [4, 6, 8])
    def test_even_polygons_not_self_dual(self, n, tol):
        """Even polygon cones are rotated by their duals."""
        assert not self_duality_check(build_polygon_system(n).state_cone, tol)

    def test_zero_generator_rejected(self, tol):
        """A zero ray cannot generate a cone."""
        with pytest.raises(DomainError):
            Cone.from_generators([[0.0, 0.0, 0.0]], tol)

    def test_opposite_rays_rejected(self, tol):
        """Opposite rays do not span a pointed cone."""
        with pytest.raises(DomainError):
            Cone.from_generators([[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]], tol)

    def test_single_ray_dual_is_flagged(self, tol):
        """A ray is lower dimensional; its dual is not pointed."""
        ray = Cone.from_generators([[0.0, 0.0, 2.0]], tol)
        assert not ray.full_dimensional
        dual = dual_cone(ray, tol)
        assert not dual.pointed

    def test_membership_margins(self, tol):
        """Membership reports the smallest facet slack."""
        octant = Cone.from_generators(OCTANT, tol)
        inside, margin = cone_membership(octant, [1.0, 1.0, 1.0], tol)
        assert inside and margin == pytest.approx(1.0)
        inside, margin = cone_membership(octant, [-1.0, 0.0, 0.0], tol)
        assert not inside and margin == pytest.approx(-1.0)

    def test_membership_on_boundary(self, gbit, tol):
        """The midpoint of adjacent square vertices sits on a facet."""
        midpoint = (gbit.state_vertices[0] + gbit.state_vertices[1]) / 2
        inside, margin = cone_membership(gbit.state_cone, midpoint, tol)
        assert inside
        assert abs(margin) < 1e-12

    def test_membership_rejects_bad_vector(self, tol):
        """Vectors must be finite 3-vectors."""
        octant = Cone.from_generators(OCTANT, tol)
        with pytest.raises(DomainError):
            cone_membership(octant, [1.0, 1.0], tol)

    def test_intersection_with_itself(self, tol):
        """Intersecting a cone with itself returns it."""
        octant = Cone.from_generators(OCTANT, tol)
        assert same_rays(intersect_cones(octant, octant, tol).generators, OCTANT, 1e-9)


class TestPolygonSystem:
    """Test the polygon system families and schemes."""

    def test_triangle_states_orthogonal(self, triangle):
        """Distinct triangle states have zero inner product."""
        gram = triangle.state_vertices @ triangle.state_vertices.T
        assert np.allclose(gram[~np.eye(3, dtype=bool)], 0.0)
        assert triangle.radius ** 2 == pytest.approx(2.0)

    def test_gbit(self, gbit):
        """n = 4 is the square with four extremal effects."""
        assert gbit.state_vertices.shape == (4, 3)
        assert gbit.effect_vertices.shape == (4, 3)
        assert gbit.radius == pytest.approx(2 ** 0.25)
        assert gbit.complement_listed()

    @pytest.mark.parametrize("n", range(3, 13))
    def test_single_system_invariants(self, n, tol):
        """States are normalized and every effect and complement is valid."""
        system = build_polygon_system(n)
        assert np.allclose(system.state_vertices @ UNIT, 1.0)
        values = system.effect_vertices @ system.state_vertices.T
        assert values.min() >= -tol.geom
        assert values.max(axis=1) == pytest.approx(np.ones(len(values)))
        complements = system.complements @ system.state_vertices.T
        assert complements.min() >= -tol.geom and complements.max() <= 1 + tol.geom

    def test_rotation_invariance(self, tol):
        """The state polygon is invariant under rotation by 2π/n."""
        system = build_polygon_system(7)
        turned = system.state_vertices @ rotation(2 * np.pi / 7).T
        assert same_rays(turned, system.state_vertices, 1e-9)

    def test_odd_selfdual_matches_unrestricted(self):
        """For odd n the self-dual family is the unrestricted polygon."""
        selfdual = build_polygon_system(5, "selfdual")
        unrestricted = build_polygon_system(5, "unrestricted")
        assert selfdual.family == Family.SELFDUAL
        assert selfdual.scheme is None
        assert np.allclose(selfdual.state_vertices, unrestricted.state_vertices)
        assert np.allclose(selfdual.effect_vertices, unrestricted.effect_vertices)
        assert system_is_self_dual(selfdual)

    def test_inscribed_scheme(self, octagon):
        """Inscribed effects are half the states; complements are opposite effects."""
        assert octagon.scheme == Scheme.INSCRIBED
        assert np.allclose(octagon.effect_vertices, octagon.state_vertices / 2)
        assert np.allclose(octagon.complements, np.roll(octagon.effect_vertices, -4, axis=0))
        assert octagon.complement_listed()
        assert system_is_self_dual(octagon)

    def test_rotated_pairing_scheme(self):
        """Rotated pairing keeps the unrestricted polygon and adds the identification."""
        system = build_polygon_system(6, "selfdual", "rotated-pairing")
        unrestricted = build_polygon_system(6)
        assert np.allclose(system.state_vertices, unrestricted.state_vertices)
        assert system_is_self_dual(system)
        assert not system_is_self_dual(unrestricted)

    def test_intersection_scheme(self, tol):
        """The intersection scheme yields a 2n-gon."""
        system = build_polygon_system(4, "selfdual", "intersection")
        assert system.state_vertices.shape == (8, 3)
        assert system.symmetry_order == 8
        assert np.allclose(system.state_vertices[:, 2], 1.0)
        validate_system(system, tol)

    def test_default_scheme_from_settings(self, monkeypatch):
        """Even self-dual systems fall back to the configured scheme."""
        from polygpt.config import get_settings

        monkeypatch.setenv("POLYGPT_SCHEME", "rotated-pairing")
        get_settings.cache_clear()
        assert build_polygon_system(6, "selfdual").scheme == Scheme.ROTATED_PAIRING

    @pytest.mark.parametrize("n", [2, 0, -1])
    def test_small_n_rejected(self, n):
        """Polygons need at least three vertices."""
        with pytest.raises(DomainError):
            build_polygon_system(n)

    def test_unknown_family_rejected(self):
        """Unknown families are configuration errors."""
        with pytest.raises(ConfigurationError) as exc_info:
            build_polygon_system(5, "disc")
        assert exc_info.value.exit_code == 2

    def test_unknown_scheme_rejected(self):
        """Unknown schemes are configuration errors."""
        with pytest.raises(ConfigurationError):
            build_polygon_system(6, "selfdual", "averaged")

    def test_label(self, octagon, triangle):
        """Labels name family, scheme and size."""
        assert octagon.label == "selfdual/inscribed/n=8"
        assert triangle.label == "unrestricted/n=3"

    def test_reparametrization_preserves_pairings(self):
        """States by L and effects by L^-T keep every probability."""
        system = build_polygon_system(6)
        linear = np.array([[2.0, 0.3, 0.0], [0.0, 0.5, 0.0], [0.1, 0.0, 1.0]])
        moved = transform_system(system, linear)
        assert np.allclose(moved.effect_vertices @ moved.state_vertices.T,
                           system.effect_vertices @ system.state_vertices.T)
        assert np.allclose(moved.state_vertices @ moved.unit, 1.0)

    def test_singular_reparametrization_rejected(self, gbit):
        """A singular map is not a reparametrization."""
        with pytest.raises(DomainError):
            transform_system(gbit, np.zeros((3, 3)))
