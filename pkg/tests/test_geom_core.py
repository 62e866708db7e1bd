import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from geom_core import (
    Circle,
    DomainError,
    Ellipse,
    InvalidInputError,
    Line,
    NoCircleError,
    NoIntersectionError,
    ParallelLinesError,
    Plane,
    PointD,
    Polygon,
    Segment,
    Sphere,
    TolerancePolicy,
    Triangle,
    cevian_foot,
    chord_parameter,
    circle_circle_intersection,
    circle_line_second_intersection,
    cross2,
    curve_intersections,
    distance,
    divide_segment,
    line_line_intersection_2d,
    orthic_feet,
    project_to_line,
    project_to_plane,
    second_intersection,
    sphere_sphere_intersection_circle,
    stewart_cevian_length_sq,
    tangent_line_at,
)
from scenes import SceneKind, sample_scene

SQRT3_2 = math.sqrt(3.0) / 2.0


@st.composite
def seeds(draw):
    return draw(st.integers(min_value=0, max_value=2**64 - 1))


def test_point_rejects_non_finite_coordinates():
    with pytest.raises(InvalidInputError):
        PointD.of(0.0, math.nan)
    with pytest.raises(InvalidInputError):
        PointD.of(1.0, math.inf, 0.0)


def test_project_axis_aligned_drop():
    foot = project_to_line((0.3, 5.0), Segment(PointD.of(0, 0), PointD.of(1, 0)))
    assert foot.point.coords == pytest.approx((0.3, 0.0))
    assert foot.t == pytest.approx(0.3)
    assert foot.inside_segment


def test_project_point_on_line_is_identity():
    seg = Segment(PointD.of(1, 1), PointD.of(3, 5))
    foot = project_to_line((2.0, 3.0), seg)
    assert distance(foot.point, (2.0, 3.0)) < 1e-15


def test_project_3d_matches_dense_grid_minimum():
    rng = np.random.default_rng(5)
    a, b, m = rng.normal(size=(3, 3))
    foot = project_to_line(m, Segment(PointD.from_vec(a), PointD.from_vec(b)))
    grid = np.linspace(-2.0, 3.0, 200_001)
    pts = a + grid[:, None] * (b - a)
    best = pts[np.argmin(np.sum((pts - m) ** 2, axis=1))]
    assert np.linalg.norm(best - foot.point.vec) < 1e-4


def test_degenerate_segment_is_rejected():
    with pytest.raises(InvalidInputError):
        Segment(PointD.of(1, 1), PointD.of(1, 1))


def test_project_to_plane():
    plane = Plane(PointD.of(0, 0, 0), (0.0, 0.0, 1.0))
    assert project_to_plane((1.0, 2.0, 7.0), plane).coords == (1.0, 2.0, 0.0)
    assert project_to_plane((1.0, 2.0, 0.0), plane).coords == (1.0, 2.0, 0.0)


def test_project_to_plane_rejects_non_unit_normal():
    with pytest.raises(InvalidInputError):
        project_to_plane((1.0, 2.0, 7.0), Plane(PointD.of(0, 0, 0), (0.0, 0.0, 2.0)))


def test_divide_segment():
    assert divide_segment((0, 0), (3, 0), 2).coords == pytest.approx((2.0, 0.0))
    assert divide_segment((0, 0), (4, 2), 1).coords == pytest.approx((2.0, 1.0))


@settings(max_examples=100, deadline=None)
@given(k=st.floats(min_value=1e-3, max_value=1e3))
def test_divide_segment_distance_ratio(k):
    p, q = PointD.of(-1.0, 2.0, 0.5), PointD.of(3.0, -1.0, 4.0)
    x = divide_segment(p, q, k)
    assert distance(p, x) / distance(x, q) == pytest.approx(k, rel=1e-9)


def test_divide_segment_rejects_bad_ratio():
    with pytest.raises(InvalidInputError):
        divide_segment((0, 0), (1, 0), 0.0)
    with pytest.raises(InvalidInputError):
        divide_segment((0, 0), (0, 0), 1.0)


def test_cevian_foot_equilateral_centroid_hits_midpoint():
    t = Triangle.from_sides(1.0, 1.0, 1.0)
    foot = cevian_foot(t.a, t.centroid, Segment(t.b, t.c))
    assert foot.t == pytest.approx(0.5)
    assert foot.point.coords == pytest.approx(((t.b.vec + t.c.vec) / 2).tolist())


def test_cevian_foot_through_side_point_returns_it():
    t = Triangle(PointD.of(0, 3), PointD.of(0, 0), PointD.of(4, 0))
    on_side = PointD.of(1.0, 0.0)
    foot = cevian_foot(t.a, on_side, Segment(t.b, t.c))
    assert foot.point.coords == pytest.approx((1.0, 0.0))


@settings(max_examples=50, deadline=None)
@given(seed=seeds())
def test_cevian_foot_is_collinear(seed):
    scene = sample_scene(SceneKind.TRIANGLE_POINT, seed=seed, index=0)
    t, p = scene.triangle, scene.probe
    foot = cevian_foot(t.a, p, Segment(t.b, t.c)).point
    residual = abs(cross2(p.vec - t.a.vec, foot.vec - t.a.vec))
    assert residual < 1e-10 * t.diameter**2


def test_cevian_parallel_to_side_has_no_foot():
    with pytest.raises(NoIntersectionError):
        cevian_foot((0.0, 1.0), (1.0, 1.0), Segment(PointD.of(0, 0), PointD.of(2, 0)))


def test_line_line_intersection():
    x_axis = Line(PointD.of(0, 0), (1.0, 0.0))
    y_axis = Line(PointD.of(0, 0), (0.0, 1.0))
    assert line_line_intersection_2d(x_axis, y_axis).coords == (0.0, 0.0)


def test_parallel_lines_report_coincidence():
    with pytest.raises(ParallelLinesError) as distinct:
        line_line_intersection_2d(Line(PointD.of(0, 0), (1.0, 0.0)), Line(PointD.of(0, 1), (2.0, 0.0)))
    assert not distinct.value.coincident
    with pytest.raises(ParallelLinesError) as same:
        line_line_intersection_2d(Line(PointD.of(0, 0), (1.0, 0.0)), Line(PointD.of(3, 0), (-1.0, 0.0)))
    assert same.value.coincident


@settings(max_examples=100, deadline=None)
@given(values=st.lists(st.floats(min_value=-10, max_value=10), min_size=8, max_size=8))
def test_line_intersection_satisfies_both_lines(values):
    p1, d1, p2, d2 = (np.array(values[i : i + 2]) for i in range(0, 8, 2))
    if np.linalg.norm(d1) < 1e-3 or np.linalg.norm(d2) < 1e-3:
        return
    if abs(cross2(d1, d2)) < 1e-3 * np.linalg.norm(d1) * np.linalg.norm(d2):
        return
    x = line_line_intersection_2d(Line(PointD.from_vec(p1), tuple(d1)), Line(PointD.from_vec(p2), tuple(d2)))
    scale = max(1.0, float(np.max(np.abs(values))))
    assert abs(cross2(x.vec - p1, d1)) / np.linalg.norm(d1) < 1e-9 * scale
    assert abs(cross2(x.vec - p2, d2)) / np.linalg.norm(d2) < 1e-9 * scale


def test_stewart_examples():
    assert stewart_cevian_length_sq(1.0, 1.0, 1.0, 0.5) == pytest.approx(0.75)
    assert stewart_cevian_length_sq(4.0, 5.0, 3.0, 0.5) == pytest.approx(13.0)
    assert stewart_cevian_length_sq(4.0, 5.0, 3.0, 1e-12) == pytest.approx(9.0)


def test_stewart_rejects_ratio_outside_unit_interval():
    with pytest.raises(DomainError):
        stewart_cevian_length_sq(4.0, 5.0, 3.0, 1.0)


def test_circle_second_intersection_examples():
    unit = Circle(PointD.of(0, 0), 1.0)
    tangent = circle_line_second_intersection(unit, (1.0, 0.0), (0.0, 1.0))
    assert tangent.coords == pytest.approx((1.0, 0.0))
    s = math.sqrt(0.5)
    assert circle_line_second_intersection(unit, (1.0, 0.0), (-s, s)).coords == pytest.approx((0.0, 1.0))


def test_divided_secant_worked_example():
    c1, c2 = Circle(PointD.of(0, 0), 1.0), Circle(PointD.of(1, 0), 1.0)
    a = PointD.of(0.5, SQRT3_2)
    d = (math.sqrt(0.5), math.sqrt(0.5))
    m1 = circle_line_second_intersection(c1, a, d)
    m2 = circle_line_second_intersection(c2, a, d)
    assert m1.coords == pytest.approx((-SQRT3_2, -0.5), abs=1e-12)
    assert m2.coords == pytest.approx((1.0 - SQRT3_2, 0.5), abs=1e-12)
    m = divide_segment(m1, m2, 1.0)
    assert distance(m, (0.5, 0.0)) == pytest.approx(SQRT3_2, abs=1e-12)


def test_second_intersection_requires_point_on_circle_and_unit_direction():
    unit = Circle(PointD.of(0, 0), 1.0)
    with pytest.raises(InvalidInputError):
        circle_line_second_intersection(unit, (2.0, 0.0), (0.0, 1.0))
    with pytest.raises(InvalidInputError):
        circle_line_second_intersection(unit, (1.0, 0.0), (0.0, 2.0))


def test_unit_direction_check_follows_policy():
    unit = Circle(PointD.of(0, 0), 1.0)
    nearly = (0.0, 1.0 + 1e-10)
    with pytest.raises(InvalidInputError):
        chord_parameter(unit, (1.0, 0.0), nearly)
    loose = TolerancePolicy(unit_eps=1e-8)
    assert chord_parameter(unit, (1.0, 0.0), nearly, loose) == pytest.approx(0.0)


def test_circle_second_intersection_matches_general_form():
    circle = Circle(PointD.of(1.0, -2.0), 3.0)
    through = PointD.of(1.0, 1.0)
    d = (0.6, -0.8)
    assert circle_line_second_intersection(circle, through, d) == second_intersection(circle, through, d)
    with pytest.raises(InvalidInputError):
        circle_line_second_intersection(Ellipse(PointD.of(0.0, 0.0), (2.0, 1.0)), (2.0, 0.0), (0.0, 1.0))


def test_sphere_second_intersection():
    sphere = Sphere(PointD.of(0, 0, 0), 2.0)
    hit = circle_line_second_intersection(sphere, (0.0, 0.0, 2.0), (0.0, 0.0, -1.0))
    assert hit.coords == pytest.approx((0.0, 0.0, -2.0))


def test_ellipse_second_intersection_lands_on_ellipse():
    ellipse = Ellipse(PointD.of(1.0, -1.0), (2.0, 1.0), math.radians(30))
    start = ellipse.point_at(0.7)
    d = np.array([math.cos(2.0), math.sin(2.0)])
    hit = second_intersection(ellipse, start, d)
    assert abs(ellipse.level(hit)) < 1e-12
    assert chord_parameter(ellipse, start, d) != 0.0


def test_tangent_lines():
    unit = Circle(PointD.of(0, 0), 1.0)
    vertical = tangent_line_at(unit, (1.0, 0.0))
    assert abs(vertical.direction[0]) < 1e-15
    horizontal = tangent_line_at(unit, (0.0, 1.0))
    assert abs(horizontal.direction[1]) < 1e-15


@settings(max_examples=50, deadline=None)
@given(theta=st.floats(min_value=0.0, max_value=2 * math.pi))
def test_tangent_touches_once(theta):
    circle = Circle(PointD.of(0.3, -1.2), 2.5)
    p = circle.point_at(theta)
    line = tangent_line_at(circle, p)
    d = np.array(line.direction)
    assert abs(chord_parameter(circle, p, d / np.linalg.norm(d))) < 1e-12


def test_sphere_sphere_intersection_circle():
    ring = sphere_sphere_intersection_circle(Sphere(PointD.of(0, 0, 0), 1.0), Sphere(PointD.of(1, 0, 0), 1.0))
    assert ring.center.coords == pytest.approx((0.5, 0.0, 0.0))
    assert ring.radius == pytest.approx(SQRT3_2)
    assert ring.normal == pytest.approx((1.0, 0.0, 0.0))


def test_tangent_spheres_have_no_circle():
    with pytest.raises(NoCircleError):
        sphere_sphere_intersection_circle(Sphere(PointD.of(0, 0, 0), 1.0), Sphere(PointD.of(2, 0, 0), 1.0))


@settings(max_examples=50, deadline=None)
@given(seed=seeds())
def test_intersection_circle_points_lie_on_both_spheres(seed):
    s1, s2 = sample_scene(SceneKind.SPHERE_PAIR, seed=seed, index=0).shapes
    ring = sphere_sphere_intersection_circle(s1, s2)
    scale = max(s1.radius, s2.radius)
    for theta in np.linspace(0.0, 2.0 * math.pi, 7):
        p = ring.point_at(theta)
        assert abs(distance(p, s1.center) - s1.radius) < 1e-12 * scale * 10
        assert abs(distance(p, s2.center) - s2.radius) < 1e-12 * scale * 10


def test_circle_circle_intersection_order():
    a, b = circle_circle_intersection(Circle(PointD.of(0, 0), 1.0), Circle(PointD.of(1, 0), 1.0))
    assert a.coords == pytest.approx((0.5, SQRT3_2))
    assert b.coords == pytest.approx((0.5, -SQRT3_2))


def test_ellipse_circle_meet_twice():
    points = curve_intersections(Ellipse(PointD.of(0, 0), (2.0, 1.0)), Circle(PointD.of(2.0, 0.0), 1.0))
    assert len(points) == 2
    for p in points:
        assert distance(p, (2.0, 0.0)) == pytest.approx(1.0, abs=1e-12)


def test_orthic_feet_equilateral_are_midpoints():
    t = Triangle.from_sides(2.0, 2.0, 2.0)
    a1, b1, c1 = orthic_feet(t)
    assert distance(b1, c1) == pytest.approx(1.0)
    assert distance(c1, a1) == pytest.approx(1.0)
    assert distance(a1, b1) == pytest.approx(1.0)


def test_orthic_feet_are_perpendicular():
    t = Triangle(PointD.of(0, 0), PointD.of(4, 0), PointD.of(1, 3))
    for vertex, side, foot in zip(t.vertices, t.side_segments(), orthic_feet(t)):
        residual = abs(np.dot(vertex.vec - foot.vec, side.direction)) / side.length**2
        assert residual < 1e-12


def test_right_triangle_has_no_orthic_feet():
    with pytest.raises(DomainError):
        orthic_feet(Triangle(PointD.of(0, 3), PointD.of(0, 0), PointD.of(4, 0)))


def test_clockwise_inputs_are_normalized():
    t = Triangle(PointD.of(0, 0), PointD.of(0, 1), PointD.of(1, 0))
    assert t.area > 0
    square = Polygon((PointD.of(0, 0), PointD.of(0, 1), PointD.of(1, 1), PointD.of(1, 0)))
    assert square.area == pytest.approx(1.0)


def test_non_simple_polygon_is_rejected():
    with pytest.raises(InvalidInputError):
        Polygon((PointD.of(0, 0), PointD.of(1, 1), PointD.of(1, 0), PointD.of(0, 1)))


def test_collinear_triangle_is_rejected():
    with pytest.raises(InvalidInputError):
        Triangle(PointD.of(0, 0), PointD.of(1, 1), PointD.of(2, 2))
