"""Euclidean primitives in two and three dimensions.

Points, segments, lines, planes, circles, spheres and ellipses, plus the
constructions the theorem checks and experiments are built from:
perpendicular feet, Cevian feet, ratio division, circle/sphere/ellipse
intersections and orthic feet. Everything here is a pure function of
immutable values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, NamedTuple, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import brentq


class GeometryError(ValueError):
    """Base class for invalid geometric input or out-of-domain configurations."""


class InvalidInputError(GeometryError):
    pass


class DomainError(GeometryError):
    pass


class ParallelLinesError(GeometryError):
    def __init__(self, message: str, *, coincident: bool) -> None:
        super().__init__(message)
        self.coincident = coincident


class NoIntersectionError(GeometryError):
    pass


class NoCircleError(NoIntersectionError):
    pass


class GenerationExhaustedError(RuntimeError):
    pass


@dataclass(frozen=True)
class TolerancePolicy:
    """Thresholds used by every pass/fail decision."""

    threshold: float = 1e-9
    parallel_eps: float = 1e-12
    on_curve_eps: float = 1e-9
    unit_eps: float = 1e-12
    angle_guard: float = 1e-9

    def relative(self, lhs: float, rhs: float) -> float:
        return abs(lhs - rhs) / max(1.0, abs(lhs), abs(rhs))

    def scaled(self, residual: float, scale: float) -> float:
        if scale <= 0:
            raise InvalidInputError("Normalization scale must be positive.")
        return abs(residual) / scale

    def passes(self, residual: float) -> bool:
        # NaN never passes.
        return residual < self.threshold


DEFAULT_POLICY = TolerancePolicy()


@dataclass(frozen=True)
class PointD:
    coords: Tuple[float, ...]

    def __post_init__(self) -> None:
        coords = tuple(float(value) for value in self.coords)
        if len(coords) not in (2, 3):
            raise InvalidInputError(f"Points have 2 or 3 coordinates, got {len(coords)}.")
        if not all(math.isfinite(value) for value in coords):
            raise InvalidInputError(f"Point coordinates must be finite: {coords}")
        object.__setattr__(self, "coords", coords)

    @classmethod
    def of(cls, *coords: float) -> "PointD":
        return cls(tuple(coords))

    @classmethod
    def from_vec(cls, vec: Sequence[float]) -> "PointD":
        return cls(tuple(float(value) for value in vec))

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def vec(self) -> np.ndarray:
        return np.array(self.coords, dtype=float)

    def __iter__(self):
        return iter(self.coords)

    def __len__(self) -> int:
        return len(self.coords)

    def __getitem__(self, item: int) -> float:
        return self.coords[item]


PointLike = Union[PointD, Sequence[float], np.ndarray]


def as_point(value: PointLike) -> PointD:
    if isinstance(value, PointD):
        return value
    return PointD.from_vec(value)


def _vec(value: PointLike) -> np.ndarray:
    if isinstance(value, PointD):
        return value.vec
    return np.asarray(value, dtype=float)


def norm(vec: Sequence[float]) -> float:
    return math.hypot(*(float(value) for value in vec))


def distance(p: PointLike, q: PointLike) -> float:
    return norm(_vec(p) - _vec(q))


def distance_sq(p: PointLike, q: PointLike) -> float:
    delta = _vec(p) - _vec(q)
    return float(np.dot(delta, delta))


def cross2(u: Sequence[float], v: Sequence[float]) -> float:
    return float(u[0] * v[1] - u[1] * v[0])


def signed_area(points: Sequence[PointLike]) -> float:
    """Shoelace area of a closed 2D vertex cycle (positive when counterclockwise)."""
    arr = np.array([_vec(p) for p in points], dtype=float)
    x, y = arr[:, 0], arr[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _same_dim(*points: PointD) -> int:
    dims = {p.dim for p in points}
    if len(dims) != 1:
        raise InvalidInputError(f"Dimension mismatch: {sorted(dims)}")
    return dims.pop()


@dataclass(frozen=True)
class Segment:
    a: PointD
    b: PointD

    def __post_init__(self) -> None:
        a, b = as_point(self.a), as_point(self.b)
        _same_dim(a, b)
        if a == b or distance(a, b) == 0.0:
            raise InvalidInputError("Degenerate segment: endpoints coincide.")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def dim(self) -> int:
        return self.a.dim

    @property
    def direction(self) -> np.ndarray:
        return self.b.vec - self.a.vec

    @property
    def length(self) -> float:
        return distance(self.a, self.b)

    def point_at(self, t: float) -> PointD:
        return PointD.from_vec(self.a.vec + t * self.direction)


@dataclass(frozen=True)
class Line:
    point: PointD
    direction: Tuple[float, ...]

    def __post_init__(self) -> None:
        point = as_point(self.point)
        direction = tuple(float(value) for value in self.direction)
        if len(direction) != point.dim:
            raise InvalidInputError("Line direction and point dimensions differ.")
        if norm(direction) == 0.0:
            raise InvalidInputError("Line direction must be non-zero.")
        object.__setattr__(self, "point", point)
        object.__setattr__(self, "direction", direction)

    @classmethod
    def through(cls, p: PointLike, q: PointLike) -> "Line":
        return cls(as_point(p), tuple(_vec(q) - _vec(p)))


@dataclass(frozen=True)
class Plane:
    point: PointD
    normal: Tuple[float, float, float]

    def __post_init__(self) -> None:
        point = as_point(self.point)
        normal = tuple(float(value) for value in self.normal)
        if point.dim != 3 or len(normal) != 3:
            raise InvalidInputError("Planes live in three dimensions.")
        object.__setattr__(self, "point", point)
        object.__setattr__(self, "normal", normal)

    @classmethod
    def from_points(cls, a: PointLike, b: PointLike, c: PointLike) -> "Plane":
        n = np.cross(_vec(b) - _vec(a), _vec(c) - _vec(a))
        length = norm(n)
        if length == 0.0:
            raise InvalidInputError("Collinear points do not span a plane.")
        return cls(as_point(a), tuple(n / length))


@dataclass(frozen=True)
class Ratio:
    """Internal division ratio: X divides PQ in ratio k when |PX| = k |XQ|."""

    k: float

    def __post_init__(self) -> None:
        k = float(self.k)
        if not math.isfinite(k) or k <= 0:
            raise InvalidInputError(f"Ratio must be a positive finite number, got {self.k}.")
        object.__setattr__(self, "k", k)

    @classmethod
    def coerce(cls, value: Union["Ratio", float]) -> "Ratio":
        return value if isinstance(value, Ratio) else cls(float(value))


@dataclass(frozen=True)
class Triangle:
    """A non-degenerate planar triangle, stored counterclockwise.

    A clockwise input is normalized by swapping ``b`` and ``c``.
    """

    a: PointD
    b: PointD
    c: PointD

    def __post_init__(self) -> None:
        a, b, c = (as_point(p) for p in (self.a, self.b, self.c))
        if _same_dim(a, b, c) != 2:
            raise InvalidInputError("Triangles are planar (dim 2).")
        area = signed_area((a, b, c))
        scale = max(distance(a, b), distance(b, c), distance(c, a))
        if scale == 0.0 or abs(area) <= 1e-12 * scale * scale:
            raise InvalidInputError("Degenerate triangle: vertices are collinear.")
        if area < 0:
            b, c = c, b
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @classmethod
    def from_sides(cls, side_a: float, side_b: float, side_c: float) -> "Triangle":
        """Place B at the origin, C on the positive x-axis and A above it."""
        _check_triangle_inequality(side_a, side_b, side_c)
        x = (side_c**2 + side_a**2 - side_b**2) / (2.0 * side_a)
        y = math.sqrt(max(side_c**2 - x * x, 0.0))
        return cls(PointD.of(x, y), PointD.of(0.0, 0.0), PointD.of(side_a, 0.0))

    @property
    def vertices(self) -> Tuple[PointD, PointD, PointD]:
        return (self.a, self.b, self.c)

    @property
    def side_a(self) -> float:
        return distance(self.b, self.c)

    @property
    def side_b(self) -> float:
        return distance(self.c, self.a)

    @property
    def side_c(self) -> float:
        return distance(self.a, self.b)

    @property
    def sides(self) -> Tuple[float, float, float]:
        return (self.side_a, self.side_b, self.side_c)

    @property
    def sum_sq_sides(self) -> float:
        return sum(side * side for side in self.sides)

    @property
    def diameter(self) -> float:
        return max(self.sides)

    @property
    def area(self) -> float:
        return signed_area(self.vertices)

    @property
    def centroid(self) -> PointD:
        return PointD.from_vec((self.a.vec + self.b.vec + self.c.vec) / 3.0)

    @property
    def incenter(self) -> PointD:
        a, b, c = self.sides
        weighted = a * self.a.vec + b * self.b.vec + c * self.c.vec
        return PointD.from_vec(weighted / (a + b + c))

    @property
    def orthocenter(self) -> PointD:
        altitude_a = Line(self.a, tuple(_perp(self.c.vec - self.b.vec)))
        altitude_b = Line(self.b, tuple(_perp(self.a.vec - self.c.vec)))
        return line_line_intersection_2d(altitude_a, altitude_b)

    def angles(self) -> Tuple[float, float, float]:
        """Interior angles at A, B, C in radians."""
        return tuple(
            _angle_between(q.vec - p.vec, r.vec - p.vec)
            for p, q, r in ((self.a, self.b, self.c), (self.b, self.c, self.a), (self.c, self.a, self.b))
        )

    def is_acute(self, angle_guard: float = DEFAULT_POLICY.angle_guard) -> bool:
        limit = math.sin(angle_guard)
        for p, q, r in ((self.a, self.b, self.c), (self.b, self.c, self.a), (self.c, self.a, self.b)):
            u, v = q.vec - p.vec, r.vec - p.vec
            cosine = float(np.dot(u, v)) / (norm(u) * norm(v))
            if not cosine > limit:
                return False
        return True

    def barycentric(self, p: PointLike) -> Tuple[float, float, float]:
        pv = _vec(p)
        total = self.area
        wa = signed_area((pv, self.b, self.c)) / total
        wb = signed_area((self.a, pv, self.c)) / total
        return (wa, wb, 1.0 - wa - wb)

    def side_segments(self) -> Tuple[Segment, Segment, Segment]:
        """Sides opposite A, B, C: BC, CA, AB."""
        return (Segment(self.b, self.c), Segment(self.c, self.a), Segment(self.a, self.b))


def _perp(vec: np.ndarray) -> np.ndarray:
    return np.array([-vec[1], vec[0]], dtype=float)


def _angle_between(u: np.ndarray, v: np.ndarray) -> float:
    return math.atan2(abs(cross2(u, v)) if len(u) == 2 else norm(np.cross(u, v)), float(np.dot(u, v)))


def _check_triangle_inequality(side_a: float, side_b: float, side_c: float) -> None:
    sides = (side_a, side_b, side_c)
    if not all(math.isfinite(side) and side > 0 for side in sides):
        raise InvalidInputError(f"Side lengths must be positive: {sides}")
    longest = max(sides)
    if not longest < sum(sides) - longest:
        raise InvalidInputError(f"Side lengths violate the strict triangle inequality: {sides}")


def _segments_intersect(p1: np.ndarray, p2: np.ndarray, q1: np.ndarray, q2: np.ndarray) -> bool:
    d1 = cross2(q2 - q1, p1 - q1)
    d2 = cross2(q2 - q1, p2 - q1)
    d3 = cross2(p2 - p1, q1 - p1)
    d4 = cross2(p2 - p1, q2 - p1)
    if ((d1 > 0 > d2) or (d1 < 0 < d2)) and ((d3 > 0 > d4) or (d3 < 0 < d4)):
        return True

    def on_segment(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> bool:
        return min(a[0], b[0]) <= c[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])

    return (
        (d1 == 0 and on_segment(q1, q2, p1))
        or (d2 == 0 and on_segment(q1, q2, p2))
        or (d3 == 0 and on_segment(p1, p2, q1))
        or (d4 == 0 and on_segment(p1, p2, q2))
    )


@dataclass(frozen=True)
class Polygon:
    """A closed planar vertex cycle, stored counterclockwise.

    ``simple=True`` enforces that no two non-adjacent edges meet. Non-simple
    cycles are allowed for identities that do not need simplicity.
    """

    vertices: Tuple[PointD, ...]
    simple: bool = True

    def __post_init__(self) -> None:
        vertices = tuple(as_point(v) for v in self.vertices)
        if len(vertices) < 3:
            raise InvalidInputError("A polygon needs at least 3 vertices.")
        if _same_dim(*vertices) != 2:
            raise InvalidInputError("Polygons are planar (dim 2).")
        n = len(vertices)
        for i in range(n):
            if vertices[i] == vertices[(i + 1) % n]:
                raise InvalidInputError(f"Consecutive vertices {i} and {(i + 1) % n} coincide.")
        if self.simple:
            arr = [v.vec for v in vertices]
            for i in range(n):
                for j in range(i + 1, n):
                    if j == i + 1 or (i == 0 and j == n - 1):
                        continue
                    if _segments_intersect(arr[i], arr[(i + 1) % n], arr[j], arr[(j + 1) % n]):
                        raise InvalidInputError(f"Polygon is not simple: edges {i} and {j} intersect.")
        if signed_area(vertices) < 0:
            vertices = tuple(reversed(vertices))
        object.__setattr__(self, "vertices", vertices)

    @classmethod
    def regular(cls, n: int, radius: float = 1.0, center: PointLike = (0.0, 0.0), phase: float = 0.0) -> "Polygon":
        c = _vec(center)
        angles = phase + 2.0 * math.pi * np.arange(n) / n
        return cls(tuple(PointD.from_vec(c + radius * np.array([math.cos(t), math.sin(t)])) for t in angles))

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def array(self) -> np.ndarray:
        return np.array([v.coords for v in self.vertices], dtype=float)

    def edges(self) -> List[Segment]:
        return [Segment(self.vertices[i], self.vertices[(i + 1) % self.n]) for i in range(self.n)]

    @property
    def side_lengths(self) -> np.ndarray:
        arr = self.array
        return np.hypot(*(np.roll(arr, -1, axis=0) - arr).T)

    @property
    def sum_sq_sides(self) -> float:
        return float(np.sum(self.side_lengths**2))

    @property
    def diameter(self) -> float:
        arr = self.array
        deltas = arr[:, None, :] - arr[None, :, :]
        return float(np.max(np.hypot(deltas[..., 0], deltas[..., 1])))

    @property
    def vertex_centroid(self) -> PointD:
        return PointD.from_vec(self.array.mean(axis=0))

    @property
    def area(self) -> float:
        return signed_area(self.vertices)

    def contains(self, p: PointLike) -> bool:
        """Even-odd ray crossing test; boundary points are not reliably classified."""
        x, y = _vec(p)
        arr = self.array
        inside = False
        for i in range(self.n):
            x1, y1 = arr[i]
            x2, y2 = arr[(i + 1) % self.n]
            if (y1 > y) != (y2 > y):
                x_cross = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
                if x < x_cross:
                    inside = not inside
        return inside

    def boundary_distance(self, p: PointLike) -> float:
        pv = _vec(p)
        best = math.inf
        for edge in self.edges():
            d = edge.direction
            t = min(1.0, max(0.0, float(np.dot(pv - edge.a.vec, d) / np.dot(d, d))))
            best = min(best, norm(pv - (edge.a.vec + t * d)))
        return best


@dataclass(frozen=True)
class _Round:
    center: PointD
    radius: float

    _dim = 0

    def __post_init__(self) -> None:
        center = as_point(self.center)
        radius = float(self.radius)
        if center.dim != self._dim:
            raise InvalidInputError(f"{type(self).__name__} center must have dim {self._dim}.")
        if not math.isfinite(radius) or radius <= 0:
            raise InvalidInputError(f"Radius must be positive, got {self.radius}.")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", radius)

    @property
    def dim(self) -> int:
        return self._dim

    def level(self, p: PointLike) -> float:
        """Zero on the surface, negative inside, scaled to be dimensionless."""
        return (distance_sq(p, self.center) - self.radius**2) / self.radius**2


class Circle(_Round):
    _dim = 2

    def point_at(self, theta: float) -> PointD:
        return PointD.from_vec(self.center.vec + self.radius * np.array([math.cos(theta), math.sin(theta)]))


class Sphere(_Round):
    _dim = 3


@dataclass(frozen=True)
class Ellipse:
    center: PointD
    semi_axes: Tuple[float, float]
    rotation: float = 0.0

    def __post_init__(self) -> None:
        center = as_point(self.center)
        a, b = (float(value) for value in self.semi_axes)
        if center.dim != 2:
            raise InvalidInputError("Ellipses are planar (dim 2).")
        if not (math.isfinite(a) and math.isfinite(b)) or not a >= b > 0:
            raise InvalidInputError(f"Ellipse semi-axes need a >= b > 0, got {(a, b)}.")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "semi_axes", (a, b))
        object.__setattr__(self, "rotation", float(self.rotation))

    @property
    def dim(self) -> int:
        return 2

    @property
    def _frame(self) -> np.ndarray:
        cos_r, sin_r = math.cos(self.rotation), math.sin(self.rotation)
        return np.array([[cos_r, -sin_r], [sin_r, cos_r]])

    def offset_at(self, theta: float) -> np.ndarray:
        a, b = self.semi_axes
        return self._frame @ np.array([a * math.cos(theta), b * math.sin(theta)])

    def point_at(self, theta: float) -> PointD:
        return PointD.from_vec(self.center.vec + self.offset_at(theta))

    def to_local(self, p: PointLike) -> np.ndarray:
        return self._frame.T @ (_vec(p) - self.center.vec)

    def level(self, p: PointLike) -> float:
        a, b = self.semi_axes
        x, y = self.to_local(p)
        return (x / a) ** 2 + (y / b) ** 2 - 1.0


Shape = Union[Circle, Sphere, Ellipse]


class LineFoot(NamedTuple):
    point: PointD
    t: float
    inside_segment: bool


def project_to_line(m: PointLike, line: Segment) -> LineFoot:
    """Foot of the perpendicular from ``m`` onto the supporting line of ``line``."""
    m = as_point(m)
    _same_dim(m, line.a)
    a = line.a.vec
    d = line.direction
    t = float(np.dot(m.vec - a, d) / np.dot(d, d))
    return LineFoot(PointD.from_vec(a + t * d), t, 0.0 <= t <= 1.0)


def project_to_plane(m: PointLike, plane: Plane, policy: TolerancePolicy = DEFAULT_POLICY) -> PointD:
    m = as_point(m)
    _same_dim(m, plane.point)
    n = np.array(plane.normal)
    if abs(norm(n) - 1.0) > policy.unit_eps:
        raise InvalidInputError("Plane normal must have unit length.")
    offset = float(np.dot(m.vec - plane.point.vec, n))
    return PointD.from_vec(m.vec - offset * n)


def divide_segment(p: PointLike, q: PointLike, k: Union[Ratio, float]) -> PointD:
    """Point X strictly between p and q with |pX| = k |Xq|."""
    p, q = as_point(p), as_point(q)
    _same_dim(p, q)
    if p == q:
        raise InvalidInputError("Cannot divide a zero-length segment.")
    ratio = Ratio.coerce(k).k
    return PointD.from_vec((p.vec + ratio * q.vec) / (1.0 + ratio))


def _intersection_params(
    p1: np.ndarray, d1: np.ndarray, p2: np.ndarray, d2: np.ndarray, policy: TolerancePolicy
) -> Tuple[float, float]:
    """Solve p1 + s d1 = p2 + u d2 for (s, u)."""
    denom = cross2(d1, d2)
    if abs(denom) < policy.parallel_eps * norm(d1) * norm(d2):
        offset = p2 - p1
        scale = max(1.0, norm(offset))
        coincident = abs(cross2(offset, d1)) <= policy.parallel_eps * norm(d1) * scale
        kind = "coincident" if coincident else "disjoint"
        raise ParallelLinesError(f"Lines are parallel ({kind}).", coincident=coincident)
    offset = p2 - p1
    s = cross2(offset, d2) / denom
    u = cross2(offset, d1) / denom
    return s, u


def line_line_intersection_2d(l1: Line, l2: Line, policy: TolerancePolicy = DEFAULT_POLICY) -> PointD:
    if l1.point.dim != 2 or l2.point.dim != 2:
        raise InvalidInputError("line_line_intersection_2d needs planar lines.")
    p1, d1 = l1.point.vec, np.array(l1.direction)
    p2, d2 = l2.point.vec, np.array(l2.direction)
    s, _ = _intersection_params(p1, d1, p2, d2, policy)
    return PointD.from_vec(p1 + s * d1)


class CevianFoot(NamedTuple):
    point: PointD
    t: float


def cevian_foot(
    vertex: PointLike, through: PointLike, opposite: Segment, policy: TolerancePolicy = DEFAULT_POLICY
) -> CevianFoot:
    """Intersection of line(vertex, through) with the supporting line of ``opposite``."""
    vertex, through = as_point(vertex), as_point(through)
    if _same_dim(vertex, through, opposite.a) != 2:
        raise InvalidInputError("Cevian feet are computed in the plane.")
    if vertex == through:
        raise InvalidInputError("Cevian needs two distinct points.")
    p1, d1 = vertex.vec, through.vec - vertex.vec
    p2, d2 = opposite.a.vec, opposite.direction
    try:
        _, u = _intersection_params(p1, d1, p2, d2, policy)
    except ParallelLinesError as exc:
        raise NoIntersectionError("Cevian is parallel to the opposite side.") from exc
    return CevianFoot(PointD.from_vec(p2 + u * d2), u)


def stewart_cevian_length_sq(side_a: float, side_b: float, side_c: float, k: float) -> float:
    """Squared length of AA1 where BA1 = k * BC.

    Sides follow the usual labelling: side_a = |BC|, side_b = |CA|, side_c = |AB|.
    """
    _check_triangle_inequality(side_a, side_b, side_c)
    if not 0.0 < k < 1.0:
        raise DomainError(f"Stewart's ratio must lie in (0, 1), got {k}.")
    return (1.0 - k) * side_c**2 + k * side_b**2 - (1.0 - k) * k * side_a**2


def _check_on_round(shape: _Round, p: PointD, policy: TolerancePolicy) -> None:
    _same_dim(p, shape.center)
    if abs(distance(p, shape.center) - shape.radius) > policy.on_curve_eps * shape.radius:
        raise InvalidInputError(f"Point {p.coords} does not lie on the {type(shape).__name__.lower()}.")


def _check_unit(direction: np.ndarray, policy: TolerancePolicy) -> None:
    if abs(norm(direction) - 1.0) > policy.unit_eps:
        raise InvalidInputError("Direction must be a unit vector.")


def chord_parameter(
    shape: Shape, through: PointLike, direction: Sequence[float], policy: TolerancePolicy = DEFAULT_POLICY
) -> float:
    """Signed parameter t of the second intersection through + t*direction.

    ``t == 0`` exactly when the line is tangent at ``through``.
    """
    through = as_point(through)
    d = np.asarray(direction, dtype=float)
    _check_unit(d, policy)
    if isinstance(shape, Ellipse):
        if abs(shape.level(through)) > policy.on_curve_eps:
            raise InvalidInputError(f"Point {through.coords} does not lie on the ellipse.")
        a, b = shape.semi_axes
        weights = np.array([1.0 / a**2, 1.0 / b**2])
        local = shape.to_local(through)
        u = shape._frame.T @ d
        return float(-2.0 * np.dot(local * weights, u) / np.dot(u * weights, u))
    _check_on_round(shape, through, policy)
    return float(-2.0 * np.dot(through.vec - shape.center.vec, d))


def circle_line_second_intersection(
    c: Union[Circle, Sphere], through: PointLike, direction: Sequence[float], policy: TolerancePolicy = DEFAULT_POLICY
) -> PointD:
    if not isinstance(c, (Circle, Sphere)):
        raise InvalidInputError("Expected a circle or sphere.")
    return second_intersection(c, through, direction, policy)


def second_intersection(
    shape: Shape, through: PointLike, direction: Sequence[float], policy: TolerancePolicy = DEFAULT_POLICY
) -> PointD:
    through = as_point(through)
    t = chord_parameter(shape, through, direction, policy)
    return PointD.from_vec(through.vec + t * np.asarray(direction, dtype=float))


def tangent_line_at(c: Circle, p: PointLike, policy: TolerancePolicy = DEFAULT_POLICY) -> Line:
    p = as_point(p)
    if not isinstance(c, Circle):
        raise InvalidInputError("Tangent lines are defined for circles.")
    _check_on_round(c, p, policy)
    radial = p.vec - c.center.vec
    return Line(p, tuple(_perp(radial) / norm(radial)))


class IntersectionCircle(NamedTuple):
    center: PointD
    radius: float
    normal: Tuple[float, float, float]

    def basis(self) -> Tuple[np.ndarray, np.ndarray]:
        n = np.array(self.normal)
        helper = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        u = np.cross(n, helper)
        u /= norm(u)
        return u, np.cross(n, u)

    def point_at(self, theta: float) -> PointD:
        u, v = self.basis()
        return PointD.from_vec(self.center.vec + self.radius * (math.cos(theta) * u + math.sin(theta) * v))

    def distance_to(self, p: PointLike) -> float:
        q = _vec(p) - self.center.vec
        height = float(np.dot(q, np.array(self.normal)))
        radial = norm(q - height * np.array(self.normal))
        return math.hypot(height, radial - self.radius)


def _radical_geometry(c1: _Round, c2: _Round, policy: TolerancePolicy) -> Tuple[np.ndarray, float, float]:
    """Unit axis, distance along it and half-chord of two transversal round shapes."""
    delta = c2.center.vec - c1.center.vec
    d = norm(delta)
    r1, r2 = c1.radius, c2.radius
    scale = max(r1, r2)
    if d <= abs(r1 - r2) + policy.parallel_eps * scale or d >= r1 + r2 - policy.parallel_eps * scale:
        raise NoCircleError(f"Shapes do not intersect transversally (distance {d}, radii {r1}, {r2}).")
    x = (d * d + r1 * r1 - r2 * r2) / (2.0 * d)
    return delta / d, x, math.sqrt(max(r1 * r1 - x * x, 0.0))


def sphere_sphere_intersection_circle(
    s1: Sphere, s2: Sphere, policy: TolerancePolicy = DEFAULT_POLICY
) -> IntersectionCircle:
    if s1.dim != 3 or s2.dim != 3:
        raise InvalidInputError("Sphere intersection needs spheres in dim 3.")
    axis, x, h = _radical_geometry(s1, s2, policy)
    center = PointD.from_vec(s1.center.vec + x * axis)
    return IntersectionCircle(center, h, tuple(float(value) for value in axis))


def circle_circle_intersection(
    c1: Circle, c2: Circle, policy: TolerancePolicy = DEFAULT_POLICY
) -> Tuple[PointD, PointD]:
    """The two transversal intersection points, left of c1->c2 first."""
    try:
        axis, x, h = _radical_geometry(c1, c2, policy)
    except NoCircleError as exc:
        raise NoIntersectionError(str(exc)) from exc
    base = c1.center.vec + x * axis
    offset = h * _perp(axis)
    return PointD.from_vec(base + offset), PointD.from_vec(base - offset)


def _curve_point(shape: Union[Circle, Ellipse], theta: float) -> PointD:
    return shape.point_at(theta)


def curve_intersections(
    first: Union[Circle, Ellipse], second: Union[Circle, Ellipse], samples: int = 4096
) -> List[PointD]:
    """Transversal intersections of two planar conics by parameter scan and Brent refinement."""
    if isinstance(first, Circle) and isinstance(second, Circle):
        return list(circle_circle_intersection(first, second))
    thetas = np.linspace(0.0, 2.0 * math.pi, samples + 1)
    values = np.array([second.level(_curve_point(first, t)) for t in thetas])
    roots: List[PointD] = []
    for i in range(samples):
        lo, hi = values[i], values[i + 1]
        if lo == 0.0:
            roots.append(_curve_point(first, thetas[i]))
        elif lo * hi < 0:
            theta = brentq(lambda t: second.level(_curve_point(first, t)), thetas[i], thetas[i + 1], xtol=1e-15)
            roots.append(_curve_point(first, theta))
    return roots


def orthic_feet(t: Triangle, angle_guard: float = DEFAULT_POLICY.angle_guard) -> Tuple[PointD, PointD, PointD]:
    """Feet of the three altitudes (A' on BC, B' on CA, C' on AB)."""
    if not t.is_acute(angle_guard):
        raise DomainError("Orthic feet are defined here for strictly acute triangles only.")
    feet = []
    for vertex, side in zip(t.vertices, t.side_segments()):
        foot = project_to_line(vertex, side)
        if not foot.inside_segment:
            raise DomainError("Altitude foot fell outside its side.")
        feet.append(foot.point)
    return tuple(feet)
