"""
Convex-cone primitives and polygon GPT systems.

All cones live in R^3 with z as the normalization coordinate. Generators are
kept irredundant and ordered counterclockwise about the cone's central axis,
so facet normals come from cross products of adjacent generators.
"""
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import Optional, Tuple, Union

import numpy as np
import structlog
from scipy.spatial import ConvexHull

from polygpt.config import Tolerances, get_settings
from polygpt.utils.errors import ConfigurationError, DomainError

logger = structlog.get_logger()

UNIT = np.array([0.0, 0.0, 1.0])


class Family(str, Enum):
    """Polygon system family."""
    UNRESTRICTED = "unrestricted"
    SELFDUAL = "selfdual"


class Scheme(str, Enum):
    """Self-dualization scheme for even polygons."""
    INTERSECTION = "intersection"
    ROTATED_PAIRING = "rotated-pairing"
    INSCRIBED = "inscribed"


def as_vec3(v, name: str = "vector") -> np.ndarray:
    """Validate a 3-vector."""
    arr = np.asarray(v, dtype=float)
    if arr.shape != (3,):
        raise DomainError(f"{name} must have shape (3,), got {arr.shape}", field=name)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} has non-finite entries", field=name)
    return arr


def rotation(angle: float) -> np.ndarray:
    """Rotation about the z-axis."""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _unit_rows(rays: np.ndarray) -> np.ndarray:
    return rays / np.linalg.norm(rays, axis=1, keepdims=True)


def _plane_basis(axis: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    reference = np.array([1.0, 0.0, 0.0])
    if abs(axis @ reference) > 0.9:
        reference = np.array([0.0, 1.0, 0.0])
    e1 = reference - (reference @ axis) * axis
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(axis, e1)
    return e1, e2


def same_rays(first: np.ndarray, second: np.ndarray, tol: float) -> bool:
    """Compare two ray sets after unit normalization, greedy nearest matching."""
    first = _unit_rows(np.atleast_2d(first))
    second = _unit_rows(np.atleast_2d(second))
    if first.shape != second.shape:
        return False
    unmatched = list(range(second.shape[0]))
    for ray in first:
        distances = np.linalg.norm(second[unmatched] - ray, axis=1)
        k = int(np.argmin(distances))
        if distances[k] > tol:
            return False
        unmatched.pop(k)
    return True


@dataclass(frozen=True)
class Cone:
    """Finitely generated convex cone in R^3.

    ``facets`` are unit inward normals (facet·x ≥ 0 on the cone). For a pointed
    full-dimensional cone, facet i is spanned by generators i and i+1. Cones
    that are not full-dimensional, or not pointed, keep the flags set and list
    equality directions as opposite facet (or generator) pairs.
    """

    generators: np.ndarray
    facets: np.ndarray
    full_dimensional: bool = True
    pointed: bool = True

    @classmethod
    def from_generators(cls, rays, tol: Optional[Tolerances] = None) -> "Cone":
        tol = tol or Tolerances.from_settings()
        rays = np.atleast_2d(np.asarray(rays, dtype=float))
        if rays.size == 0:
            raise DomainError("a cone needs at least one generator", field="generators")
        if rays.shape[1] != 3 or not np.all(np.isfinite(rays)):
            raise DomainError("generators must be finite 3-vectors", field="generators")
        norms = np.linalg.norm(rays, axis=1)
        if np.any(norms <= tol.geom):
            raise DomainError("zero generator", field="generators")
        units = rays / norms[:, None]

        axis = units.sum(axis=0)
        if np.linalg.norm(axis) <= tol.geom or np.any(units @ axis <= tol.geom * np.linalg.norm(axis)):
            raise DomainError("generators do not span a pointed cone", field="generators")
        axis /= np.linalg.norm(axis)

        rank = np.linalg.matrix_rank(units, tol=1e3 * tol.geom)
        if rank < 3:
            return cls._lower_dimensional(units, axis, rank, tol)

        e1, e2 = _plane_basis(axis)
        projected = units / (units @ axis)[:, None]
        planar = np.column_stack([projected @ e1, projected @ e2])
        hull = ConvexHull(planar)
        order = list(hull.vertices)
        angles = np.mod(np.arctan2(planar[order, 1], planar[order, 0]), 2 * np.pi)
        start = int(np.argmin(np.round(angles, 12)))
        order = order[start:] + order[:start]
        generators = units[order]

        facets = np.cross(generators, np.roll(generators, -1, axis=0))
        facets = _unit_rows(facets)
        flip = facets @ axis < 0
        facets[flip] *= -1.0
        cone = cls(generators=generators, facets=facets)
        cone._cross_check(tol)
        return cone

    @classmethod
    def _lower_dimensional(cls, units: np.ndarray, axis: np.ndarray, rank: int,
                           tol: Tolerances) -> "Cone":
        e1, e2 = _plane_basis(axis)
        if rank == 1:
            return cls(
                generators=axis[None, :],
                facets=np.vstack([axis, e1, -e1, e2, -e2]),
                full_dimensional=False,
            )
        # planar cone: normal of the plane, then the two extreme in-plane rays
        normal = np.cross(units[0], units[np.argmax(np.linalg.norm(np.cross(units[0], units), axis=1))])
        normal /= np.linalg.norm(normal)
        in_plane = np.cross(normal, axis)
        angles = np.arctan2(units @ in_plane, units @ axis)
        first, last = units[int(np.argmin(angles))], units[int(np.argmax(angles))]
        h_first = last - (last @ first) * first
        h_last = first - (first @ last) * last
        facets = np.vstack([normal, -normal, h_first / np.linalg.norm(h_first),
                            h_last / np.linalg.norm(h_last)])
        return cls(generators=np.vstack([first, last]), facets=facets, full_dimensional=False)

    def _cross_check(self, tol: Tolerances) -> None:
        slack = self.generators @ self.facets.T
        if slack.min() < -tol.geom:
            raise DomainError("generator violates a facet of its own cone")
        k = self.generators.shape[0]
        for i in range(k):
            tight = np.abs(slack[:, i]) <= 1e3 * tol.geom
            if tight.sum() < 2:
                raise DomainError("facet is not supported by two generators")

    @property
    def size(self) -> int:
        return self.generators.shape[0]


def dual_cone(c: Cone, tol: Optional[Tolerances] = None) -> Cone:
    """Return {y : y·x ≥ 0 for all x in c}."""
    tol = tol or Tolerances.from_settings()
    if not (c.full_dimensional and c.pointed):
        logger.debug("dual of a degenerate cone", full_dimensional=c.full_dimensional)
        return Cone(
            generators=c.facets.copy(),
            facets=_unit_rows(c.generators),
            full_dimensional=c.pointed,
            pointed=c.full_dimensional,
        )
    return Cone.from_generators(c.facets, tol)


def cone_membership(c: Cone, v, tol: Optional[Tolerances] = None) -> Tuple[bool, float]:
    """Membership with the minimum facet slack as margin."""
    tol = tol or Tolerances.from_settings()
    v = as_vec3(v)
    margin = float((c.facets @ v).min())
    return margin >= -tol.geom, margin


def self_duality_check(c: Cone, tol: Optional[Tolerances] = None) -> bool:
    """True iff c and its dual have the same rays."""
    tol = tol or Tolerances.from_settings()
    return same_rays(c.generators, dual_cone(c, tol).generators, tol.geom)


def intersect_cones(first: Cone, second: Cone, tol: Optional[Tolerances] = None) -> Cone:
    """Intersection, computed as the dual of the sum of the duals."""
    tol = tol or Tolerances.from_settings()
    return dual_cone(Cone.from_generators(np.vstack([first.facets, second.facets]), tol), tol)


@dataclass(frozen=True)
class PolygonSystem:
    """Single-system GPT with a regular polygon state space.

    ``identification`` maps the state cone onto the effect cone when the
    system is self-dual under it, otherwise it is None.
    """

    n: int
    family: Family
    scheme: Optional[Scheme]
    state_vertices: np.ndarray
    effect_vertices: np.ndarray
    unit: np.ndarray
    radius: float
    symmetry_order: int
    identification: Optional[np.ndarray] = None

    @property
    def label(self) -> str:
        scheme = f"/{self.scheme.value}" if self.scheme else ""
        return f"{self.family.value}{scheme}/n={self.n}"

    @cached_property
    def complements(self) -> np.ndarray:
        return self.unit[None, :] - self.effect_vertices

    @cached_property
    def state_cone(self) -> Cone:
        return Cone.from_generators(self.state_vertices)

    @cached_property
    def effect_cone(self) -> Cone:
        return Cone.from_generators(np.vstack([self.effect_vertices, self.complements]))

    def complement_listed(self, tol: float = 1e-9) -> bool:
        """Whether u - e_0 is itself one of the listed effects."""
        return bool(np.min(np.linalg.norm(self.effect_vertices - self.complements[0], axis=1)) <= tol)


def _effects_from_rays(rays: np.ndarray, states: np.ndarray) -> np.ndarray:
    # largest scaling with max over states equal to 1
    return rays / (rays @ states.T).max(axis=1, keepdims=True)


def _unrestricted(n: int) -> Tuple[np.ndarray, np.ndarray, float]:
    radius = float(np.sqrt(1.0 / np.cos(np.pi / n)))
    angles = 2 * np.pi * np.arange(n) / n
    states = np.column_stack([radius * np.cos(angles), radius * np.sin(angles), np.ones(n)])
    dual = Cone.from_generators(Cone.from_generators(states).facets)
    effects = _effects_from_rays(dual.generators, states)
    return states, effects, radius


def build_polygon_system(
    n: int,
    family: Union[Family, str] = Family.UNRESTRICTED,
    scheme: Union[Scheme, str, None] = None,
    tol: Optional[Tolerances] = None,
) -> PolygonSystem:
    """Construct a polygon system.

    Args:
        n: number of extremal states, at least 3
        family: unrestricted or selfdual
        scheme: self-dualization scheme, used only for selfdual even n
            (defaults to the configured scheme)

    Raises:
        DomainError: n < 3
        ConfigurationError: unknown family or scheme
    """
    tol = tol or Tolerances.from_settings()
    if isinstance(n, bool) or int(n) != n or n < 3:
        raise DomainError(f"polygon needs n >= 3, got {n}", field="n")
    n = int(n)
    try:
        family = Family(family)
    except ValueError:
        raise ConfigurationError(f"unknown family: {family}", setting="family")
    if scheme is not None:
        try:
            scheme = Scheme(scheme)
        except ValueError:
            raise ConfigurationError(f"unknown scheme: {scheme}", setting="scheme")

    states, effects, radius = _unrestricted(n)
    if family == Family.UNRESTRICTED or n % 2 == 1:
        identification = None
        if n % 2 == 1:
            identification = np.eye(3) / (1.0 + radius ** 2)
        system = PolygonSystem(
            n=n, family=family, scheme=None, state_vertices=states,
            effect_vertices=effects, unit=UNIT.copy(), radius=radius,
            symmetry_order=n, identification=identification,
        )
    else:
        scheme = scheme or Scheme(get_settings().SCHEME)
        system = _self_dualize(n, states, effects, scheme, tol)

    validate_system(system, tol)
    logger.debug("polygon system built", system=system.label, effects=len(system.effect_vertices))
    return system


def _self_dualize(n: int, states: np.ndarray, effects: np.ndarray, scheme: Scheme,
                  tol: Tolerances) -> PolygonSystem:
    if scheme == Scheme.INSCRIBED:
        angles = 2 * np.pi * np.arange(n) / n
        inscribed = np.column_stack([np.cos(angles), np.sin(angles), np.ones(n)])
        return PolygonSystem(
            n=n, family=Family.SELFDUAL, scheme=scheme, state_vertices=inscribed,
            effect_vertices=inscribed / 2.0, unit=UNIT.copy(), radius=1.0,
            symmetry_order=n, identification=np.eye(3) / 2.0,
        )

    if scheme == Scheme.ROTATED_PAIRING:
        return PolygonSystem(
            n=n, family=Family.SELFDUAL, scheme=scheme, state_vertices=states,
            effect_vertices=effects, unit=UNIT.copy(),
            radius=float(np.hypot(states[0, 0], states[0, 1])),
            symmetry_order=n, identification=rotation(np.pi / n) / 2.0,
        )

    state_cone = Cone.from_generators(states, tol)
    common = intersect_cones(state_cone, dual_cone(state_cone, tol), tol)
    vertices = common.generators / common.generators[:, 2:3]
    effect_rays = _effects_from_rays(vertices, vertices)
    return PolygonSystem(
        n=n, family=Family.SELFDUAL, scheme=scheme, state_vertices=vertices,
        effect_vertices=effect_rays, unit=UNIT.copy(),
        radius=float(np.hypot(vertices[0, 0], vertices[0, 1])),
        symmetry_order=vertices.shape[0], identification=np.eye(3) * float(effect_rays[0, 2]),
    )


def validate_system(system: PolygonSystem, tol: Optional[Tolerances] = None) -> None:
    """Check the single-system invariants.

    Raises:
        DomainError: if any invariant fails
    """
    tol = tol or Tolerances.from_settings()
    states, unit = system.state_vertices, system.unit
    if np.abs(states @ unit - 1.0).max() > tol.geom:
        raise DomainError(f"{system.label}: unit effect does not normalize the states")
    for name, effects in (("effect", system.effect_vertices), ("complement", system.complements)):
        values = effects @ states.T
        if values.min() < -tol.geom or values.max() > 1.0 + tol.geom:
            raise DomainError(f"{system.label}: {name} leaves [0, 1] on the state space")
    turned = states @ rotation(2 * np.pi / system.n).T
    if not same_rays(turned, states, 1e3 * tol.geom):
        raise DomainError(f"{system.label}: state polygon is not rotation invariant")


def system_is_self_dual(system: PolygonSystem, tol: Optional[Tolerances] = None) -> bool:
    """Whether the identification maps the state cone onto the effect cone."""
    tol = tol or Tolerances.from_settings()
    if system.identification is None:
        return False
    image = system.state_cone.generators @ system.identification.T
    return same_rays(image, system.effect_cone.generators, 1e3 * tol.geom)


def transform_system(system: PolygonSystem, linear: np.ndarray) -> PolygonSystem:
    """Reparametrize: states by L, effects and unit by the inverse transpose."""
    linear = np.asarray(linear, dtype=float)
    if linear.shape != (3, 3) or abs(np.linalg.det(linear)) < 1e-12:
        raise DomainError("reparametrization must be an invertible 3x3 map")
    inverse_t = np.linalg.inv(linear).T
    identification = None
    if system.identification is not None:
        identification = inverse_t @ system.identification @ np.linalg.inv(linear)
    return replace(
        system,
        state_vertices=system.state_vertices @ linear.T,
        effect_vertices=system.effect_vertices @ inverse_t.T,
        unit=inverse_t @ system.unit,
        identification=identification,
    )
