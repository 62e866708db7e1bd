import itertools
import math

import numpy as np
import pandas as pd
import pytest

from conjecture_lab import (
    Verdict,
    cevian_objective,
    cycle_projection_sums,
    explore_cycle_projection_3d,
    explore_edge_pedal_dataset,
    explore_edge_projection_sum,
    explore_ellipse_pair_bound,
    explore_face_pedal_dataset,
    explore_locus,
    explore_pedal_polygon_extremum,
    explore_polygon_cevian_min,
    explore_polygon_product,
    explore_polygon_ratio_sum,
    hull_faces,
    judge,
    pedal_quantity,
    polygon_product,
    ray_exit,
    ratio_sum,
    replay,
)
from geom_core import (
    Circle,
    DomainError,
    Ellipse,
    InvalidInputError,
    NoIntersectionError,
    PointD,
    Polygon,
    Sphere,
)


RIGHT = Polygon((PointD.of(0.0, 3.0), PointD.of(0.0, 0.0), PointD.of(4.0, 0.0)))
ACUTE = Polygon((PointD.of(0.0, 0.0), PointD.of(4.0, 0.0), PointD.of(1.8, 3.0)))
UNIT_SQUARE = Polygon((PointD.of(0, 0), PointD.of(1, 0), PointD.of(1, 1), PointD.of(0, 1)))
CUBE = [PointD.of(*v) for v in itertools.product((-1.0, 1.0), repeat=3)]
TETRAHEDRON = [
    PointD.of(1.0, 1.0, 1.0),
    PointD.of(1.0, -1.0, -1.0),
    PointD.of(-1.0, 1.0, -1.0),
    PointD.of(-1.0, -1.0, 1.0),
]


# -- verdicts -------------------------------------------------------------------


def test_judge_supported_refuted_and_inconclusive():
    assert judge([(0, 1e-12), (1, 5e-10)], seed=1, tol=1e-9) == (Verdict.SUPPORTED, None)

    verdict, witness = judge([(0, 1e-12), (4, 1e-3), (7, 1e-5)], seed=9, tol=1e-9, scenes={4: {"kind": "x"}})
    assert verdict is Verdict.REFUTED
    assert (witness.seed, witness.index, witness.residual) == (9, 4, 1e-3)
    assert witness.scene == {"kind": "x"}

    assert judge([(0, 5e-9)], seed=0, tol=1e-9) == (Verdict.INCONCLUSIVE, None)
    assert judge([], seed=0, tol=1e-9) == (Verdict.INCONCLUSIVE, None)


def test_judge_treats_nan_as_refutation():
    verdict, witness = judge([(0, 0.0), (3, math.nan)], seed=2, tol=1e-9)
    assert verdict is Verdict.REFUTED
    assert witness.index == 3


# -- projection sums in space ------------------------------------------------


def test_cycle_projection_sums_balance_for_skew_cycle():
    cycle = [PointD.of(0, 0, 0), PointD.of(1, 0, 0), PointD.of(1, 1, 1), PointD.of(0, 2, -1)]
    lhs, rhs, scale = cycle_projection_sums(cycle, PointD.of(0.3, -0.7, 2.0))
    assert abs(lhs - rhs) / scale < 1e-12


def test_cycle_projection_random_trials_supported():
    result = explore_cycle_projection_3d(trials=100, seed=5)
    assert result.verdict is Verdict.SUPPORTED
    assert result.max_residual < 1e-10
    assert result.summary["min_non_planarity"] > 0.0
    assert len(result.rows) == 100
    assert "_scene" not in result.rows.columns


def test_cycle_projection_replay_matches_full_run():
    full = explore_cycle_projection_3d(trials=10, seed=17)
    single = replay("cycle-projection-3d", 17, 6)
    expected = full.rows[full.rows["trial"] == 6].reset_index(drop=True)
    pd.testing.assert_frame_equal(single.reset_index(drop=True), expected)


def test_edge_projection_cycle_is_balanced():
    result = explore_edge_projection_sum(TETRAHEDRON, orientation="cycle", trials=20, seed=1)
    assert result.summary["balanced"] is True
    assert result.verdict is Verdict.SUPPORTED


def test_edge_projection_complete_graph_follows_imbalance():
    result = explore_edge_projection_sum(TETRAHEDRON, trials=20, seed=1)
    assert result.summary["balanced"] is False
    assert result.summary["imbalance"] == [3, 1, -1, -3]
    assert result.summary["max_identity_residual"] < 1e-10
    assert result.summary["max_zero_residual"] > 1e-6
    assert result.verdict is Verdict.SUPPORTED


def test_edge_projection_rejects_missing_vertex():
    with pytest.raises(InvalidInputError):
        explore_edge_projection_sum(TETRAHEDRON, edges=[(0, 9)], trials=1)


# -- pedal datasets -----------------------------------------------------------


def test_cube_face_pedal_dataset():
    result = explore_face_pedal_dataset(CUBE, m=(0.0, 0.0, 0.0))
    assert result.verdict is Verdict.INCONCLUSIVE
    assert result.summary["faces"] == 6
    assert result.summary["min_distance"] == pytest.approx(1.0)
    assert result.summary["max_distance"] == pytest.approx(1.0)
    assert result.summary["feet_in_faces_fraction"] == 1.0
    assert result.summary["pedal_hull_volume"] == pytest.approx(4.0 / 3.0)
    assert result.summary["max_volume_decomposition_gap"] < 1e-12
    assert result.max_residual < 1e-12


def test_tetrahedron_faces_are_not_merged():
    _, faces = hull_faces(np.array([p.coords for p in TETRAHEDRON]))
    assert len(faces) == 4
    assert all(len(f.vertices) == 3 for f in faces)


def test_face_pedal_rejects_boundary_point():
    with pytest.raises(DomainError):
        explore_face_pedal_dataset(CUBE, m=(1.0, 0.0, 0.0))


def test_random_hull_face_pedal_runs():
    result = explore_face_pedal_dataset(trials=2, seed=3, n=12)
    assert result.trials == 2
    assert result.summary["max_volume_decomposition_gap"] < 1e-9


def test_edge_pedal_dataset_on_tetrahedron():
    result = explore_edge_pedal_dataset(TETRAHEDRON, p=(0.0, 0.0, 0.0))
    assert len(result.rows) == 6
    assert result.verdict is Verdict.INCONCLUSIVE
    # Every edge midpoint is the foot from the center of a regular tetrahedron.
    assert result.rows["t"].to_numpy() == pytest.approx(np.full(6, 0.5))
    assert result.summary["inside_fraction"] == 1.0
    assert math.isnan(result.max_residual)
    assert math.isnan(result.mean_residual)


# -- polygon Cevians ------------------------------------------------------


def test_regular_polygon_center_values():
    assert cevian_objective(Polygon.regular(6), (0.0, 0.0)) == pytest.approx(6.0)
    assert cevian_objective(Polygon.regular(5), (0.0, 0.0)) == pytest.approx(5.0 / math.cos(math.pi / 5))
    assert cevian_objective(Polygon.regular(5), (0.0, 0.0)) == pytest.approx(6.18034, abs=1e-5)
    assert cevian_objective(Polygon.regular(4), (0.0, 0.0), "F") == pytest.approx(1.0)


def test_ray_exit_through_opposite_vertex_uses_edge_ending_there():
    hexagon = Polygon.regular(6)
    exit_ = ray_exit(hexagon, 0, (0.0, 0.0))
    assert exit_.point.coords == pytest.approx((-1.0, 0.0))
    assert exit_.edge == 2
    assert exit_.edge_t == pytest.approx(1.0)


def test_triangle_cevian_min_lands_on_centroid():
    result = explore_polygon_cevian_min(RIGHT, "E", restarts=4, seed=0)
    assert result.verdict is Verdict.SUPPORTED
    assert result.summary["min_value"] == pytest.approx(6.0, abs=1e-9)
    assert result.summary["triangle_deviation"] < 1e-6


def test_polygon_cevian_min_reports_regular_center():
    result = explore_polygon_cevian_min(ngon=5, restarts=4, seed=0)
    assert result.verdict is Verdict.INCONCLUSIVE
    assert result.summary["regular_center_value"] == pytest.approx(5.0 / math.cos(math.pi / 5))
    assert result.summary["min_value"] <= result.summary["value_at_vertex_centroid"] + 1e-12


def test_unknown_objective_rejected():
    with pytest.raises(InvalidInputError):
        explore_polygon_cevian_min(RIGHT, "G")


# -- ratio sums ----------------------------------------------------------------


def test_ratio_sum_on_unit_square():
    assert ratio_sum(UNIT_SQUARE, 0.5, 2) == pytest.approx(5.0)


def test_ratio_sum_rejects_bad_offset():
    with pytest.raises(InvalidInputError):
        ratio_sum(UNIT_SQUARE, 0.5, 0)
    with pytest.raises(InvalidInputError):
        ratio_sum(UNIT_SQUARE, 0.5, 4)


def test_triangle_ratio_sum_minimum_at_half():
    result = explore_polygon_ratio_sum(RIGHT)
    assert result.verdict is Verdict.SUPPORTED
    assert result.summary["argmin"] == pytest.approx(0.5, abs=1e-9)
    assert result.summary["min_ratio"] == pytest.approx(0.75)
    assert result.summary["matches_triangle_curve"] is True


def test_square_ratio_sum_departs_from_triangle_curve():
    result = explore_polygon_ratio_sum(UNIT_SQUARE, d=2)
    assert result.verdict is Verdict.INCONCLUSIVE
    assert result.summary["matches_triangle_curve"] is False
    assert result.summary["fit_residual"] < 1e-10


@pytest.mark.parametrize("polygon, expected", [(RIGHT, 1), (UNIT_SQUARE, 2), (Polygon.regular(5), 2), (Polygon.regular(6), 3)])
def test_default_offset_is_half_the_vertex_count(polygon, expected):
    assert explore_polygon_ratio_sum(polygon).params["d"] == expected


def test_per_side_ratios_are_quadratic_in_each_ratio():
    result = explore_polygon_ratio_sum(ngon=5, per_side_ratios=[0.2, 0.4, 0.5, 0.6, 0.8])
    assert result.summary["positive_definite"] is True
    assert result.verdict is Verdict.SUPPORTED
    assert len(result.rows) == 5
    assert result.summary["value_at_joint_argmin"] <= result.summary["value_at_ratios"] + 1e-12


# -- ratio products --------------------------------------------------------


def test_product_identity_holds_on_triangles():
    lhs, rhs = polygon_product(RIGHT, (1.0, 1.0))
    assert lhs / rhs == pytest.approx(1.0)
    result = explore_polygon_product(RIGHT, trials=50, seed=2)
    assert result.verdict is Verdict.SUPPORTED
    assert result.summary["triangles_only"] is True


def test_product_identity_fails_on_pentagon_with_replayable_witness():
    result = explore_polygon_product(ngon=5, trials=20, seed=3)
    assert result.verdict is Verdict.REFUTED
    witness = result.witness
    assert witness is not None
    rows = replay("polygon-product", witness.seed, witness.index, ngon=5)
    assert rows["residual"].iloc[0] == witness.residual


def test_product_on_hexagon_center():
    lhs, rhs = polygon_product(Polygon.regular(6), (0.0, 0.0))
    assert lhs == pytest.approx(1.0)
    assert rhs == pytest.approx(1.0)


# -- pedal polygons ----------------------------------------------------------


def test_square_pedal_area_is_constant():
    assert pedal_quantity(UNIT_SQUARE, (0.5, 0.5), "area") == pytest.approx(0.5)
    assert pedal_quantity(UNIT_SQUARE, (0.2, 0.7), "area") == pytest.approx(0.5)
    result = explore_pedal_polygon_extremum(UNIT_SQUARE, "area", restarts=3)
    assert result.summary["max_value"] == pytest.approx(0.5)
    assert result.summary["is_local_max"] is True


def test_acute_triangle_pedal_product_sum_against_orthic_bound():
    result = explore_pedal_polygon_extremum(ACUTE, restarts=6, seed=1)
    assert result.summary["orthic_ratio"] <= 1.0 + 1e-12
    assert result.verdict is Verdict.SUPPORTED


def test_unknown_pedal_quantity_rejected():
    with pytest.raises(InvalidInputError):
        explore_pedal_polygon_extremum(UNIT_SQUARE, "volume")


# -- ellipse pair bound -------------------------------------------------------


@pytest.mark.parametrize("n", [3, 5, 8])
def test_circle_case_matches_known_bound(n):
    circle = Ellipse(PointD.of(0.0, 0.0), (1.0, 1.0))
    result = explore_ellipse_pair_bound(circle, n, restarts=4, seed=0)
    assert result.summary["minimax"] == pytest.approx(2.0 * math.cos(math.pi / n), abs=1e-9)
    assert result.summary["circle_bound_a"] == pytest.approx(2.0 * math.cos(math.pi / n))


def test_two_points_can_cancel():
    result = explore_ellipse_pair_bound(Ellipse(PointD.of(0.0, 0.0), (2.0, 1.0)), 2, restarts=2)
    assert result.summary["minimax"] == pytest.approx(0.0, abs=1e-12)


def test_ellipse_minimax_sits_between_axis_bounds():
    result = explore_ellipse_pair_bound(Ellipse(PointD.of(0.0, 0.0), (2.0, 1.0)), 6, restarts=8, seed=4)
    summary = result.summary
    assert summary["circle_bound_b"] - 1e-9 <= summary["minimax"] <= summary["circle_bound_a"] + 1e-9
    assert len(summary["argmin_deg"]) == 6


def test_pair_bound_needs_two_points():
    with pytest.raises(InvalidInputError):
        explore_ellipse_pair_bound(Ellipse(PointD.of(0.0, 0.0), (2.0, 1.0)), 1)


# -- loci ------------------------------------------------------------------


def test_sphere_locus_is_supported():
    spheres = [Sphere(PointD.of(0.0, 0.0, 0.0), 1.0), Sphere(PointD.of(1.0, 0.0, 0.0), 1.0)]
    result, fit = explore_locus(spheres, 1.0, trials=200, seed=3)
    assert result.verdict is Verdict.SUPPORTED
    assert result.summary["predicted_radius"] == pytest.approx(math.sqrt(3.0) / 2.0)
    assert fit.fitted_radius == pytest.approx(math.sqrt(3.0) / 2.0, rel=1e-9)
    assert result.summary["split_radius_gap"] < 1e-9
    assert set(result.rows["coplanar"]) == {True, False}


@pytest.mark.parametrize("k", [1.0, 2.0])
def test_circle_locus_matches_prediction(k):
    circles = [Circle(PointD.of(0.0, 0.0), 1.0), Circle(PointD.of(1.0, 0.0), 1.0)]
    result, fit = explore_locus(circles, k, trials=300, seed=8)
    assert result.verdict is Verdict.SUPPORTED
    assert result.summary["center_offset"] < 1e-9
    assert result.summary["radius_offset"] < 1e-9
    assert len(result.summary["excluded_points"]) == 2


def test_ellipse_locus_has_no_verdict():
    shapes = [Ellipse(PointD.of(0.0, 0.0), (2.0, 1.0)), Circle(PointD.of(2.0, 0.0), 1.0)]
    result, fit = explore_locus(shapes, 1.0, trials=200, seed=1)
    assert result.verdict is None
    assert fit is not None
    upper = [4.0 / 3.0, math.sqrt(5.0) / 3.0]
    assert any(p == pytest.approx(upper, abs=1e-9) for p in result.summary["excluded_points"])


def test_locus_needs_meeting_shapes():
    with pytest.raises(NoIntersectionError):
        explore_locus([Circle(PointD.of(0.0, 0.0), 1.0), Circle(PointD.of(5.0, 0.0), 1.0)], trials=5)


def test_locus_rejects_mixed_dimensions():
    with pytest.raises(InvalidInputError):
        explore_locus([Circle(PointD.of(0.0, 0.0), 1.0), Sphere(PointD.of(1.0, 0.0, 0.0), 1.0)], trials=5)


def test_locus_is_schedule_independent():
    circles = [Circle(PointD.of(0.0, 0.0), 1.0), Circle(PointD.of(1.0, 0.0), 1.0)]
    serial, _ = explore_locus(circles, 2.0, trials=64, seed=12, workers=1)
    threaded, _ = explore_locus(circles, 2.0, trials=64, seed=12, workers=4)
    assert serial.to_payload() == threaded.to_payload()
    pd.testing.assert_frame_equal(serial.rows, threaded.rows)


def test_replay_rejects_unknown_experiment():
    with pytest.raises(InvalidInputError):
        replay("ratio-sum", 0, 0)
