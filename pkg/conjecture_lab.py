"""Numerical experiments around the open problems.

Each experiment returns an :class:`ExploreResult`: a pandas dataset with one
row per trial (or face, restart, grid point), a summary of named statistics
and, where a claim is sharp enough to test, a verdict. Refuted verdicts carry
the ``(seed, index)`` of a violating trial so it can be replayed alone.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import minimize
from scipy.spatial import ConvexHull, QhullError

from fitting import LocusFit, fit_sphere, minimize_multistart
from geom_core import (
    DEFAULT_POLICY,
    Circle,
    DomainError,
    Ellipse,
    GenerationExhaustedError,
    InvalidInputError,
    NoIntersectionError,
    Plane,
    PointD,
    Polygon,
    Segment,
    Sphere,
    Triangle,
    chord_parameter,
    cross2,
    curve_intersections,
    distance,
    divide_segment,
    orthic_feet,
    project_to_line,
    project_to_plane,
    signed_area,
    sphere_sphere_intersection_circle,
)
from scenes import Scene, SceneKind, map_trials, polygon_probe, sample_scene, trial_rng
from theorem_suite import orthic_value

logger = logging.getLogger(__name__)

REFUTE_FACTOR = 10.0
OPTIMIZER_TOL = 1e-6
MAX_RESAMPLES = 1000
EXCLUSION_REL = 1e-6
PERTURB_DIRECTIONS = 16
PERTURB_STEP = 1e-4


class Verdict(str, Enum):
    SUPPORTED = "supported"
    REFUTED = "refuted"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class Witness:
    seed: int
    index: int
    residual: float
    scene: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {"seed": self.seed, "index": self.index, "residual": self.residual, "scene": self.scene}


@dataclass
class ExploreResult:
    experiment_id: str
    params: Dict[str, Any]
    seed: int
    trials: int
    tolerance: float
    rows: pd.DataFrame
    summary: Dict[str, Any]
    verdict: Optional[Verdict] = None
    witness: Optional[Witness] = None
    wall_time_ms: float = 0.0

    @property
    def max_residual(self) -> float:
        return float(self.summary.get("max_residual", math.nan))

    @property
    def mean_residual(self) -> float:
        return float(self.summary.get("mean_residual", math.nan))

    def to_payload(self) -> Dict[str, Any]:
        return {
            "kind": "explore",
            "experiment_id": self.experiment_id,
            "params": dict(self.params),
            "trials": self.trials,
            "seed": self.seed,
            "tolerance": self.tolerance,
            "max_residual": self.max_residual,
            "mean_residual": self.mean_residual,
            "verdict": self.verdict.value if self.verdict is not None else None,
            "witness": self.witness.to_dict() if self.witness is not None else None,
            "summary": dict(self.summary),
            "extras": {"row_count": int(len(self.rows)), "columns": [str(c) for c in self.rows.columns]},
        }


def judge(
    residuals: Sequence[Tuple[int, float]],
    seed: int,
    tol: float,
    scenes: Optional[Dict[int, Dict[str, Any]]] = None,
    refute_tol: Optional[float] = None,
) -> Tuple[Verdict, Optional[Witness]]:
    """Supported when every residual is below ``tol``; refuted by any single residual above ``refute_tol``."""
    if not residuals:
        return Verdict.INCONCLUSIVE, None
    refute_tol = REFUTE_FACTOR * tol if refute_tol is None else refute_tol
    ordered = sorted(residuals, key=lambda item: (-item[1] if not math.isnan(item[1]) else -math.inf, item[0]))
    worst_index, worst = ordered[0]
    if all(value < tol for _, value in residuals):
        return Verdict.SUPPORTED, None
    if math.isnan(worst) or worst > refute_tol:
        scene = (scenes or {}).get(worst_index, {})
        return Verdict.REFUTED, Witness(seed, worst_index, float(worst), scene)
    return Verdict.INCONCLUSIVE, None


def _stats(values: Sequence[float]) -> Dict[str, float]:
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return {"max_residual": math.nan, "mean_residual": math.nan}
    return {"max_residual": float(np.max(arr)), "mean_residual": float(np.mean(arr))}


def _finish(
    experiment_id: str,
    params: Dict[str, Any],
    seed: int,
    trials: int,
    tol: float,
    rows: List[Dict[str, Any]] | pd.DataFrame,
    summary: Dict[str, Any],
    started: float,
    verdict: Optional[Verdict],
    witness: Optional[Witness] = None,
) -> ExploreResult:
    frame = rows if isinstance(rows, pd.DataFrame) else pd.DataFrame(rows)
    result = ExploreResult(
        experiment_id=experiment_id,
        params=params,
        seed=seed,
        trials=trials,
        tolerance=tol,
        rows=frame,
        summary=summary,
        verdict=verdict,
        witness=witness,
        wall_time_ms=(time.perf_counter() - started) * 1000.0,
    )
    logger.info(
        "%s: %d rows, verdict %s", experiment_id, len(frame), verdict.value if verdict is not None else "none"
    )
    return result


def _indices(trials: int, indices: Optional[Sequence[int]]) -> List[int]:
    if trials < 1:
        raise InvalidInputError("At least one trial is required.")
    return sorted(indices) if indices is not None else list(range(trials))


def _as_points(points: Sequence[Any], dim: int) -> List[PointD]:
    result = [PointD.from_vec(p) for p in points]
    if any(p.dim != dim for p in result):
        raise InvalidInputError(f"Expected points of dimension {dim}.")
    return result


def _bbox_point(rng: np.random.Generator, points: Sequence[PointD], pad: float = 0.5) -> PointD:
    arr = np.array([p.coords for p in points])
    lo, hi = arr.min(axis=0), arr.max(axis=0)
    span = np.maximum(hi - lo, 1e-9)
    return PointD.from_vec(rng.uniform(lo - pad * span, hi + pad * span))


# -- edge projections in space -------------------------------------------


def cycle_projection_sums(cycle: Sequence[PointD], m: PointD) -> Tuple[float, float, float]:
    """(sum |M_i A_i|^2, sum |M_i A_{i+1}|^2, sum of squared edge lengths) for a closed cycle."""
    n = len(cycle)
    if n < 3:
        raise InvalidInputError("A cycle needs at least 3 points.")
    lhs = rhs = scale = 0.0
    for i in range(n):
        edge = Segment(cycle[i], cycle[(i + 1) % n])
        foot = project_to_line(m, edge).point
        lhs += distance(foot, edge.a) ** 2
        rhs += distance(foot, edge.b) ** 2
        scale += edge.length**2
    return lhs, rhs, scale


def _planarity(points: Sequence[PointD]) -> float:
    arr = np.array([p.coords for p in points])
    centered = arr - arr.mean(axis=0)
    singular = np.linalg.svd(centered, compute_uv=False)
    return float(singular[-1] / max(singular[0], 1e-300))


def explore_cycle_projection_3d(
    cycle: Optional[Sequence[Any]] = None,
    m: Optional[Any] = None,
    *,
    trials: int = 100,
    seed: int = 0,
    tol: float = DEFAULT_POLICY.threshold,
    n: Optional[int] = None,
    workers: int = 1,
    indices: Optional[Sequence[int]] = None,
) -> ExploreResult:
    """The projection identity for closed cycles in space, on random or given cycles."""
    started = time.perf_counter()
    fixed = _as_points(cycle, 3) if cycle is not None else None
    probe = PointD.from_vec(m) if m is not None else None

    def run(index: int) -> Dict[str, Any]:
        if fixed is not None:
            points = fixed
            scene = Scene(kind=SceneKind.CYCLE_3D, points=tuple(fixed), index=index)
            point = probe if probe is not None else _bbox_point(trial_rng(seed, index), fixed)
        else:
            scene = sample_scene(SceneKind.CYCLE_3D, {"n": n} if n else {}, seed=seed, index=index)
            points = list(scene.points)
            point = probe if probe is not None else scene.probe
        lhs, rhs, scale = cycle_projection_sums(points, point)
        return {
            "trial": index,
            "n": len(points),
            "non_planarity": _planarity(points),
            "lhs": lhs,
            "rhs": rhs,
            "residual": abs(lhs - rhs) / scale,
            "_scene": scene.summary() | {"probe": list(point.coords)},
        }

    rows = map_trials(run, _indices(trials, indices), workers)
    scenes = {row["trial"]: row.pop("_scene") for row in rows}
    residuals = [(row["trial"], row["residual"]) for row in rows]
    verdict, witness = judge(residuals, seed, tol, scenes)
    summary = _stats([r for _, r in residuals]) | {
        "min_non_planarity": float(min(row["non_planarity"] for row in rows)),
    }
    params = {"n": n, "cycle_given": fixed is not None, "probe_given": probe is not None}
    return _finish("cycle-projection-3d", params, seed, len(rows), tol, rows, summary, started, verdict, witness)


def _edge_list(n: int, orientation: str) -> List[Tuple[int, int]]:
    if orientation == "cycle":
        return [(i, (i + 1) % n) for i in range(n)]
    if orientation == "complete":
        return [(i, j) for i in range(n) for j in range(i + 1, n)]
    raise InvalidInputError(f"Unknown edge orientation '{orientation}'. Valid: cycle, complete")


def explore_edge_projection_sum(
    points: Optional[Sequence[Any]] = None,
    edges: Optional[Sequence[Tuple[int, int]]] = None,
    m: Optional[Any] = None,
    *,
    orientation: str = "complete",
    trials: int = 100,
    seed: int = 0,
    tol: float = DEFAULT_POLICY.threshold,
    indices: Optional[Sequence[int]] = None,
) -> ExploreResult:
    """Telescoping sum over a directed edge set.

    For feet f_e of M on every directed edge u->v, the measured sum of
    |f_e A_u|^2 - |f_e A_v|^2 is compared with sum_v (out(v) - in(v)) |M A_v|^2;
    it vanishes when every vertex is balanced.
    """
    started = time.perf_counter()
    if points is None:
        points = sample_scene(SceneKind.HULL_3D, {"n": 4}, seed=seed, index=0).points
    verts = _as_points(points, 3)
    edge_list = [tuple(int(v) for v in e) for e in edges] if edges is not None else _edge_list(len(verts), orientation)
    for u, v in edge_list:
        if not (0 <= u < len(verts) and 0 <= v < len(verts)):
            raise InvalidInputError(f"Edge ({u}, {v}) references a missing vertex.")
    segments = [Segment(verts[u], verts[v]) for u, v in edge_list]
    imbalance = np.zeros(len(verts), dtype=int)
    for u, v in edge_list:
        imbalance[u] += 1
        imbalance[v] -= 1
    balanced = bool(np.all(imbalance == 0))
    scale = sum(s.length**2 for s in segments)
    probe = PointD.from_vec(m) if m is not None else None

    rows = []
    for index in _indices(trials, indices):
        point = probe if probe is not None else _bbox_point(trial_rng(seed, index), verts)
        measured = 0.0
        for (u, v), segment in zip(edge_list, segments):
            foot = project_to_line(point, segment).point
            measured += distance(foot, verts[u]) ** 2 - distance(foot, verts[v]) ** 2
        predicted = float(sum(imbalance[i] * distance(point, verts[i]) ** 2 for i in range(len(verts))))
        rows.append(
            {
                "trial": index,
                "measured": measured,
                "predicted": predicted,
                "zero_residual": abs(measured) / scale,
                "identity_residual": abs(measured - predicted) / scale,
            }
        )
    key = "zero_residual" if balanced else "identity_residual"
    residuals = [(row["trial"], row[key]) for row in rows]
    verdict, witness = judge(residuals, seed, tol)
    summary = _stats([r for _, r in residuals]) | {
        "balanced": balanced,
        "imbalance": [int(v) for v in imbalance],
        "edges": [list(e) for e in edge_list],
        "max_zero_residual": float(max(row["zero_residual"] for row in rows)),
        "max_identity_residual": float(max(row["identity_residual"] for row in rows)),
    }
    params = {"orientation": orientation if edges is None else "custom", "vertices": len(verts)}
    return _finish("edge-projection-sum", params, seed, len(rows), tol, rows, summary, started, verdict, witness)


# -- face and edge pedal datasets ----------------------------------------------


class HullFace(NamedTuple):
    normal: np.ndarray
    offset: float
    vertices: Tuple[int, ...]
    area: float


def hull_faces(points: np.ndarray) -> Tuple[ConvexHull, List[HullFace]]:
    """Faces of the convex hull, with coplanar facets merged."""
    try:
        hull = ConvexHull(points)
    except QhullError as exc:
        raise InvalidInputError("Points do not span a 3D convex hull.") from exc
    scale = float(np.max(np.linalg.norm(points - points.mean(axis=0), axis=1)))
    merged: List[Dict[str, Any]] = []
    for simplex, equation in zip(hull.simplices, hull.equations):
        normal, offset = equation[:3], float(equation[3])
        tri = points[simplex]
        area = 0.5 * float(np.linalg.norm(np.cross(tri[1] - tri[0], tri[2] - tri[0])))
        for face in merged:
            if float(np.dot(face["normal"], normal)) > 1.0 - 1e-9 and abs(face["offset"] - offset) < 1e-9 * scale:
                face["vertices"].update(int(v) for v in simplex)
                face["area"] += area
                break
        else:
            merged.append({"normal": normal, "offset": offset, "vertices": set(int(v) for v in simplex), "area": area})
    faces = [HullFace(f["normal"], f["offset"], tuple(sorted(f["vertices"])), f["area"]) for f in merged]
    return hull, faces


def _hull_volume(points: Sequence[Sequence[float]]) -> Optional[float]:
    try:
        return float(ConvexHull(np.asarray(points, dtype=float)).volume)
    except (QhullError, ValueError):
        return None


def explore_face_pedal_dataset(
    points: Optional[Sequence[Any]] = None,
    m: Optional[Any] = None,
    *,
    trials: int = 1,
    seed: int = 0,
    tol: float = DEFAULT_POLICY.threshold,
    n: int = 10,
    indices: Optional[Sequence[int]] = None,
) -> ExploreResult:
    """Feet of a pedal point on every hull face; a dataset with no asserted identity."""
    started = time.perf_counter()
    rows: List[Dict[str, Any]] = []
    checks, pedal_volumes, volume_gaps = [], [], []
    for index in _indices(trials, indices):
        if points is not None:
            arr = np.array([p.coords for p in _as_points(points, 3)])
            if m is not None:
                probe = PointD.from_vec(m)
            else:
                probe = PointD.from_vec(trial_rng(seed, index).dirichlet(np.ones(len(arr))) @ arr)
        else:
            scene = sample_scene(SceneKind.HULL_3D, {"n": n}, seed=seed, index=index)
            arr = np.array([p.coords for p in scene.points])
            probe = PointD.from_vec(m) if m is not None else scene.probe
        hull, faces = hull_faces(arr)
        scale = float(np.max(np.linalg.norm(arr - arr.mean(axis=0), axis=1)))
        if max(float(np.dot(f.normal, probe.vec)) + f.offset for f in faces) >= -1e-9 * scale:
            raise DomainError(f"Pedal point {probe.coords} is not strictly inside the hull.")
        feet = []
        weighted = 0.0
        for face_id, face in enumerate(faces):
            plane = Plane(PointD.from_vec(arr[face.vertices[0]]), tuple(face.normal))
            foot = project_to_plane(probe, plane)
            feet.append(foot.coords)
            offset = probe.vec - foot.vec
            dist = float(np.linalg.norm(offset))
            weighted += face.area * dist / 3.0
            in_face = all(float(np.dot(g.normal, foot.vec)) + g.offset <= 1e-9 * scale for g in faces)
            plane_residual = abs(float(np.dot(face.normal, foot.vec)) + face.offset) / scale
            perp_residual = float(np.linalg.norm(np.cross(offset, face.normal))) / scale
            checks.append(max(plane_residual, perp_residual))
            rows.append(
                {
                    "trial": index,
                    "face": face_id,
                    "vertices": len(face.vertices),
                    "area": face.area,
                    "distance": dist,
                    "foot_in_face": in_face,
                    "foot_vertex_sq_sum": float(sum(np.sum((foot.vec - arr[v]) ** 2) for v in face.vertices)),
                    "plane_residual": plane_residual,
                    "perp_residual": perp_residual,
                }
            )
        pedal_volumes.append(_hull_volume(feet))
        volume_gaps.append(abs(weighted - hull.volume) / hull.volume)
    frame = pd.DataFrame(rows)
    summary = _stats(checks) | {
        "faces": int(frame["face"].max() + 1) if len(frame) else 0,
        "min_distance": float(frame["distance"].min()),
        "max_distance": float(frame["distance"].max()),
        "feet_in_faces_fraction": float(frame["foot_in_face"].mean()),
        "pedal_hull_volume": pedal_volumes[0] if len(pedal_volumes) == 1 else None,
        "mean_pedal_hull_volume": float(np.mean([v for v in pedal_volumes if v is not None]))
        if any(v is not None for v in pedal_volumes)
        else None,
        "max_volume_decomposition_gap": float(max(volume_gaps)),
    }
    params = {"n": n if points is None else len(points), "points_given": points is not None}
    return _finish("face-pedal", params, seed, len(volume_gaps), tol, frame, summary, started, Verdict.INCONCLUSIVE)


def explore_edge_pedal_dataset(
    points: Optional[Sequence[Any]] = None,
    edges: Optional[Sequence[Tuple[int, int]]] = None,
    p: Optional[Any] = None,
    *,
    trials: int = 1,
    seed: int = 0,
    tol: float = DEFAULT_POLICY.threshold,
    indices: Optional[Sequence[int]] = None,
) -> ExploreResult:
    """Feet of a pedal point on every edge of a tetrahedron or an explicit edge list."""
    started = time.perf_counter()
    rows: List[Dict[str, Any]] = []
    volumes = []
    for index in _indices(trials, indices):
        if points is not None:
            verts = _as_points(points, 3)
            arr = np.array([v.coords for v in verts])
            probe = PointD.from_vec(p) if p is not None else PointD.from_vec(
                trial_rng(seed, index).dirichlet(np.ones(len(arr))) @ arr
            )
        else:
            scene = sample_scene(SceneKind.HULL_3D, {"n": 4}, seed=seed, index=index)
            verts = list(scene.points)
            probe = PointD.from_vec(p) if p is not None else scene.probe
        edge_list = list(edges) if edges is not None else _edge_list(len(verts), "complete")
        feet = []
        for u, v in edge_list:
            hit = project_to_line(probe, Segment(verts[u], verts[v]))
            feet.append(hit.point.coords)
            rows.append(
                {
                    "trial": index,
                    "edge_u": int(u),
                    "edge_v": int(v),
                    "foot_x": hit.point[0],
                    "foot_y": hit.point[1],
                    "foot_z": hit.point[2],
                    "t": hit.t,
                    "inside": hit.inside_segment,
                    "distance": distance(probe, hit.point),
                }
            )
        volumes.append(_hull_volume(feet))
    frame = pd.DataFrame(rows)
    known = [v for v in volumes if v is not None]
    summary = {
        "max_residual": math.nan,
        "mean_residual": math.nan,
        "inside_fraction": float(frame["inside"].mean()),
        "mean_distance": float(frame["distance"].mean()),
        "mean_pedal_hull_volume": float(np.mean(known)) if known else None,
    }
    params = {"points_given": points is not None, "edges_given": edges is not None}
    return _finish("edge-pedal", params, seed, len(volumes), tol, frame, summary, started, Verdict.INCONCLUSIVE)


# -- polygon Cevians ------------------------------------------------------


class RayExit(NamedTuple):
    point: PointD
    edge: int
    edge_t: float
    s: float


def ray_exit(polygon: Polygon, i: int, p: Any) -> RayExit:
    """First boundary point of the ray from vertex i through p, beyond p.

    An exit through a vertex is reported on the edge ending at that vertex.
    """
    arr = polygon.array
    a = arr[i]
    d = np.asarray(PointD.from_vec(p).vec) - a
    if not np.any(d):
        raise InvalidInputError("Pedal point coincides with a vertex.")
    best: Optional[RayExit] = None
    for j in range(polygon.n):
        start, end = arr[j], arr[(j + 1) % polygon.n]
        e = end - start
        denom = cross2(d, e)
        if abs(denom) < 1e-12 * np.linalg.norm(d) * np.linalg.norm(e):
            continue
        w = start - a
        s = cross2(w, e) / denom
        u = cross2(w, d) / denom
        if s > 1.0 + 1e-12 and 1e-12 < u <= 1.0 + 1e-12 and (best is None or s < best.s):
            best = RayExit(PointD.from_vec(a + s * d), j, min(u, 1.0), s)
    if best is None:
        raise InvalidInputError(f"Ray from vertex {i} through {tuple(d + a)} never leaves the polygon.")
    return best


def cevian_ratio_terms(polygon: Polygon, p: Any) -> List[Tuple[float, RayExit]]:
    point = PointD.from_vec(p)
    terms = []
    for i, vertex in enumerate(polygon.vertices):
        exit_ = ray_exit(polygon, i, point)
        terms.append((distance(point, vertex) / distance(point, exit_.point), exit_))
    return terms


def cevian_objective(polygon: Polygon, p: Any, objective: str = "E") -> float:
    ratios = [ratio for ratio, _ in cevian_ratio_terms(polygon, p)]
    if objective == "E":
        return float(sum(ratios))
    if objective == "F":
        return float(np.prod(ratios))
    raise InvalidInputError(f"Unknown objective '{objective}'. Valid: E, F")


def resolve_polygon(polygon: Optional[Polygon], ngon: Optional[int], seed: int, n: Optional[int] = None) -> Polygon:
    if polygon is not None:
        return polygon
    if ngon is not None:
        if ngon < 3:
            raise InvalidInputError(f"A regular polygon needs at least 3 vertices, got {ngon}.")
        return Polygon.regular(int(ngon))
    return sample_scene(SceneKind.POLYGON, {"n": n} if n else {}, seed=seed, index=0).polygon


def _interior_starts(polygon: Polygon, restarts: int, seed: int, valid: Callable[[PointD], bool]) -> List[np.ndarray]:
    starts = []
    centroid = polygon.vertex_centroid
    if polygon.contains(centroid) and valid(centroid):
        starts.append(centroid.vec)
    for r in range(max(1, restarts) - len(starts)):
        rng = trial_rng(seed, r)
        for _ in range(MAX_RESAMPLES):
            try:
                candidate = polygon_probe(rng, polygon, "inside")
            except GenerationExhaustedError:
                break
            if valid(candidate):
                starts.append(candidate.vec)
                break
    return starts


def explore_polygon_cevian_min(
    polygon: Optional[Polygon] = None,
    objective: str = "E",
    *,
    restarts: int = 32,
    seed: int = 0,
    ngon: Optional[int] = None,
    n: Optional[int] = None,
    tol: float = DEFAULT_POLICY.threshold,
) -> ExploreResult:
    """Minimize E(P) or F(P) over interior points by multi-start Nelder-Mead."""
    started = time.perf_counter()
    if objective not in ("E", "F"):
        raise InvalidInputError(f"Unknown objective '{objective}'. Valid: E, F")
    polygon = resolve_polygon(polygon, ngon, seed, n)
    diameter = polygon.diameter

    def inside(p: PointD) -> bool:
        return polygon.contains(p) and polygon.boundary_distance(p) > 1e-9 * diameter

    def fn(xy: np.ndarray) -> float:
        p = PointD.from_vec(xy)
        if not inside(p):
            return math.inf
        try:
            return cevian_objective(polygon, p, objective)
        except InvalidInputError:
            return math.inf

    result = minimize_multistart(fn, _interior_starts(polygon, restarts, seed, inside), scale=diameter)
    rows = [
        {
            "restart": r,
            "start_x": run.start[0],
            "start_y": run.start[1],
            "start_value": run.start_value,
            "x": run.x[0],
            "y": run.x[1],
            "value": run.value,
            "iterations": run.iterations,
            "converged": run.converged,
        }
        for r, run in enumerate(result.runs)
    ]
    centroid = polygon.vertex_centroid
    regular = Polygon.regular(polygon.n)
    summary: Dict[str, Any] = {
        "n": polygon.n,
        "min_value": result.best.value,
        "argmin": [float(v) for v in result.best.x],
        "argmin_centroid_distance": float(np.linalg.norm(result.best.x - centroid.vec)) / diameter,
        "value_at_vertex_centroid": fn(centroid.vec),
        "regular_center_value": cevian_objective(regular, (0.0, 0.0), objective),
        "restart_spread": float(max(run.value for run in result.runs) - result.best.value),
    }
    verdict = Verdict.INCONCLUSIVE
    if polygon.n == 3:
        target = 6.0 if objective == "E" else 8.0
        deviation = max(
            abs(result.best.value - target) / target,
            float(np.linalg.norm(result.best.x - centroid.vec)) / diameter,
        )
        summary["triangle_deviation"] = deviation
        summary |= {"max_residual": deviation, "mean_residual": deviation}
        verdict, _ = judge([(0, deviation)], seed, OPTIMIZER_TOL)
    params = {"objective": objective, "restarts": restarts, "ngon": ngon, "n": polygon.n}
    return _finish("polygon-cevian-min", params, seed, len(rows), tol, rows, summary, started, verdict)


# -- ratio sums ----------------------------------------------------------------


def _check_offset(polygon: Polygon, d: int) -> int:
    d = int(d)
    if d == 0:
        raise InvalidInputError("Offset d=0 puts A_i' on A_i's own side; the sum is trivially k * side.")
    if not 1 <= d <= polygon.n - 1:
        raise InvalidInputError(f"Offset d must lie in [1, {polygon.n - 1}] for n={polygon.n}, got {d}.")
    return d


def ratio_sum(polygon: Polygon, k: Any, d: int) -> float:
    """sum |A_i A_i'|^2 with A_i' = A_{i+d} + k_j (A_{i+d+1} - A_{i+d}); k scalar or one per side."""
    d = _check_offset(polygon, d)
    arr = polygon.array
    n = polygon.n
    ks = np.broadcast_to(np.asarray(k, dtype=float), (n,))
    total = 0.0
    for i in range(n):
        j = (i + d) % n
        start, end = arr[j], arr[(j + 1) % n]
        foot = start + ks[j] * (end - start)
        total += float(np.sum((arr[i] - foot) ** 2))
    return total


def ratio_sum_curve(polygon: Polygon, grid: np.ndarray, d: int) -> np.ndarray:
    d = _check_offset(polygon, d)
    arr = polygon.array
    grid = np.asarray(grid, dtype=float)[:, None]
    total = np.zeros(len(grid))
    for i in range(polygon.n):
        j = (i + d) % polygon.n
        start, end = arr[j], arr[(j + 1) % polygon.n]
        total += np.sum((arr[i] - (start + grid * (end - start))) ** 2, axis=1)
    return total


def explore_polygon_ratio_sum(
    polygon: Optional[Polygon] = None,
    *,
    d: Optional[int] = None,
    k_grid: Optional[Sequence[float]] = None,
    per_side_ratios: Optional[Sequence[float]] = None,
    ngon: Optional[int] = None,
    n: Optional[int] = None,
    seed: int = 0,
    tol: float = DEFAULT_POLICY.threshold,
) -> ExploreResult:
    """Sum of squared vertex-to-divided-side lengths, swept over a common ratio or per side."""
    started = time.perf_counter()
    polygon = resolve_polygon(polygon, ngon, seed, n)
    if d is None:
        d = 1 if polygon.n == 3 else polygon.n // 2
    d = _check_offset(polygon, d)
    total = polygon.sum_sq_sides
    knots = np.array([0.25, 0.5, 0.75])
    params: Dict[str, Any] = {"d": d, "n": polygon.n, "ngon": ngon}

    if per_side_ratios is not None:
        base = np.asarray(per_side_ratios, dtype=float)
        if base.shape != (polygon.n,) or np.any(base <= 0):
            raise InvalidInputError(f"Need {polygon.n} positive per-side ratios.")
        grid = np.linspace(0.05, 0.95, 19)
        rows, joint = [], base.copy()
        for side in range(polygon.n):

            def along(values: np.ndarray) -> np.ndarray:
                out = []
                for value in values:
                    ks = base.copy()
                    ks[side] = value
                    out.append(ratio_sum(polygon, ks, d))
                return np.array(out)

            coefficients = np.polyfit(knots, along(knots), 2)
            fit_residual = float(np.max(np.abs(np.polyval(coefficients, grid) - along(grid)))) / total
            vertex = float(-coefficients[1] / (2.0 * coefficients[0])) if coefficients[0] != 0 else math.nan
            joint[side] = min(max(vertex, 0.0), 1.0) if math.isfinite(vertex) else base[side]
            rows.append(
                {
                    "side": side,
                    "leading": float(coefficients[0]),
                    "linear": float(coefficients[1]),
                    "constant": float(coefficients[2]),
                    "argmin": vertex,
                    "fit_residual": fit_residual,
                }
            )
        fits = [row["fit_residual"] for row in rows]
        positive = all(row["leading"] > 0 for row in rows)
        summary = _stats(fits) | {
            "value_at_ratios": ratio_sum(polygon, base, d),
            "positive_definite": positive,
            "joint_argmin": [float(v) for v in joint],
            "value_at_joint_argmin": ratio_sum(polygon, joint, d),
        }
        if positive:
            verdict, _ = judge(list(enumerate(fits)), seed, tol)
        else:
            verdict = Verdict.REFUTED
        params["per_side_ratios"] = [float(v) for v in base]
        return _finish("ratio-sum", params, seed, len(rows), tol, rows, summary, started, verdict)

    grid = np.asarray(k_grid, dtype=float) if k_grid is not None else np.linspace(0.001, 0.999, 999)
    values = ratio_sum_curve(polygon, grid, d)
    coefficients = np.polyfit(knots, ratio_sum_curve(polygon, knots, d), 2)
    fit_residual = float(np.max(np.abs(np.polyval(coefficients, grid) - values))) / total
    argmin_fit = float(-coefficients[1] / (2.0 * coefficients[0]))
    argmin = min(max(argmin_fit, 0.0), 1.0)
    reference = grid**2 - grid + 1.0
    deviation = float(np.max(np.abs(values / total - reference)))
    minimum = ratio_sum(polygon, argmin, d)
    summary = {
        "max_residual": fit_residual,
        "mean_residual": fit_residual,
        "argmin": argmin,
        "argmin_grid": float(grid[int(np.argmin(values))]),
        "min_value": minimum,
        "min_ratio": minimum / total,
        "fit_coefficients": [float(v) for v in coefficients],
        "fit_residual": fit_residual,
        "triangle_curve_deviation": deviation,
        "matches_triangle_curve": deviation < tol,
    }
    rows = pd.DataFrame({"k": grid, "value": values, "ratio": values / total, "reference": reference})
    verdict = Verdict.INCONCLUSIVE
    if polygon.n == 3 and d == 1:
        verdict, _ = judge([(0, max(deviation, max(0.0, abs(argmin - 0.5) - OPTIMIZER_TOL)))], seed, tol)
    return _finish("ratio-sum", params, seed, len(rows), tol, rows, summary, started, verdict)


# -- polygon ratio products ------------------------------------------------


def polygon_product(polygon: Polygon, p: Any) -> Tuple[float, float]:
    """(L, R): product of Cevian ratios and sides over legs from each exit to its edge start."""
    sides = polygon.side_lengths
    lhs, legs = 1.0, 1.0
    for ratio, exit_ in cevian_ratio_terms(polygon, p):
        lhs *= ratio
        legs *= exit_.edge_t * sides[exit_.edge]
    return lhs, float(np.prod(sides)) / legs


def explore_polygon_product(
    polygon: Optional[Polygon] = None,
    p: Optional[Any] = None,
    *,
    trials: int = 100,
    seed: int = 0,
    ngon: Optional[int] = None,
    n: Optional[int] = None,
    tol: float = DEFAULT_POLICY.threshold,
    workers: int = 1,
    indices: Optional[Sequence[int]] = None,
) -> ExploreResult:
    """Does the triangle ratio-product identity carry over to polygons?"""
    started = time.perf_counter()
    fixed = polygon if polygon is not None else (Polygon.regular(int(ngon)) if ngon is not None else None)
    probe = PointD.from_vec(p) if p is not None else None

    def run(index: int) -> Dict[str, Any]:
        if fixed is not None:
            poly = fixed
            point = probe if probe is not None else polygon_probe(trial_rng(seed, index), poly, "inside")
            scene = Scene(kind=SceneKind.POLYGON_POINT, polygon=poly, probe=point, index=index)
        else:
            scene = sample_scene(SceneKind.POLYGON_POINT, {"n": n} if n else {}, seed=seed, index=index)
            poly, point = scene.polygon, probe if probe is not None else scene.probe
        if not poly.contains(point):
            raise DomainError(f"Point {point.coords} is not inside the polygon.")
        lhs, rhs = polygon_product(poly, point)
        return {
            "trial": index,
            "n": poly.n,
            "L": lhs,
            "R": rhs,
            "L_over_R": lhs / rhs,
            "residual": abs(lhs / rhs - 1.0),
            "_scene": scene.summary(),
        }

    rows = map_trials(run, _indices(trials, indices), workers)
    scenes = {row["trial"]: row.pop("_scene") for row in rows}
    residuals = [(row["trial"], row["residual"]) for row in rows]
    verdict, witness = judge(residuals, seed, tol, scenes)
    ratios = [row["L_over_R"] for row in rows]
    summary = _stats([r for _, r in residuals]) | {
        "min_L_over_R": float(min(ratios)),
        "max_L_over_R": float(max(ratios)),
        "triangles_only": all(row["n"] == 3 for row in rows),
    }
    params = {"ngon": ngon, "n": n, "polygon_given": polygon is not None, "probe_given": probe is not None}
    return _finish("polygon-product", params, seed, len(rows), tol, rows, summary, started, verdict, witness)


# -- pedal polygons ----------------------------------------------------------

QUANTITIES = ("pairwise-product-sum", "area", "perimeter")


def pedal_feet(polygon: Polygon, p: Any) -> List[Tuple[PointD, bool]]:
    return [(hit.point, hit.inside_segment) for hit in (project_to_line(p, e) for e in polygon.edges())]


def pedal_quantity(polygon: Polygon, p: Any, quantity: str) -> float:
    feet = [f for f, _ in pedal_feet(polygon, PointD.from_vec(p))]
    n = len(feet)
    sides = [distance(feet[i], feet[(i + 1) % n]) for i in range(n)]
    if quantity == "pairwise-product-sum":
        return float(sum(sides[i] * sides[(i + 1) % n] for i in range(n)))
    if quantity == "area":
        return abs(signed_area(feet))
    if quantity == "perimeter":
        return float(sum(sides))
    raise InvalidInputError(f"Unknown quantity '{quantity}'. Valid: {', '.join(QUANTITIES)}")


def explore_pedal_polygon_extremum(
    polygon: Optional[Polygon] = None,
    quantity: str = "pairwise-product-sum",
    *,
    restarts: int = 32,
    seed: int = 0,
    ngon: Optional[int] = None,
    n: Optional[int] = None,
    tol: float = DEFAULT_POLICY.threshold,
) -> ExploreResult:
    """Maximize a pedal-polygon quantity over pedal points whose feet all land inside their sides."""
    started = time.perf_counter()
    if quantity not in QUANTITIES:
        raise InvalidInputError(f"Unknown quantity '{quantity}'. Valid: {', '.join(QUANTITIES)}")
    polygon = resolve_polygon(polygon, ngon, seed, n)
    diameter = polygon.diameter
    params = {"quantity": quantity, "restarts": restarts, "ngon": ngon, "n": polygon.n}

    def valid(p: PointD) -> bool:
        return polygon.contains(p) and all(inside for _, inside in pedal_feet(polygon, p))

    def value(xy: np.ndarray) -> float:
        p = PointD.from_vec(xy)
        return pedal_quantity(polygon, p, quantity) if valid(p) else -math.inf

    starts = _interior_starts(polygon, restarts, seed, valid)
    if not starts:
        summary = {"max_residual": math.nan, "mean_residual": math.nan, "valid_region_empty": True}
        return _finish("pedal-extremum", params, seed, 0, tol, [], summary, started, Verdict.INCONCLUSIVE)

    result = minimize_multistart(lambda xy: -value(xy), starts, scale=diameter)
    best_x, best_value = result.best.x, -result.best.value
    step = PERTURB_STEP * diameter
    neighbours = [
        value(best_x + step * np.array([math.cos(a), math.sin(a)]))
        for a in 2.0 * math.pi * np.arange(PERTURB_DIRECTIONS) / PERTURB_DIRECTIONS
    ]
    local_max = all(v <= best_value + 1e-12 * max(1.0, abs(best_value)) for v in neighbours if math.isfinite(v))
    rows = [
        {
            "restart": r,
            "start_x": run.start[0],
            "start_y": run.start[1],
            "x": run.x[0],
            "y": run.x[1],
            "value": -run.value,
            "iterations": run.iterations,
            "converged": run.converged,
        }
        for r, run in enumerate(result.runs)
    ]
    summary: Dict[str, Any] = {
        "max_residual": math.nan,
        "mean_residual": math.nan,
        "valid_region_empty": False,
        "max_value": best_value,
        "argmax": [float(v) for v in best_x],
        "is_local_max": local_max,
        "value_at_vertex_centroid": value(polygon.vertex_centroid.vec),
    }
    verdict = Verdict.INCONCLUSIVE
    if polygon.n == 3 and quantity == "pairwise-product-sum":
        tri = Triangle(*polygon.vertices)
        if tri.is_acute():
            orthic, _ = orthic_value(tri)
            excess = max(0.0, orthic.expression - orthic.bound) / tri.sum_sq_sides
            summary |= {
                "orthic_value": orthic.expression,
                "orthic_bound": orthic.bound,
                "orthic_ratio": orthic.expression / orthic.bound,
                "max_over_bound": best_value / orthic.bound,
                "max_residual": excess,
                "mean_residual": excess,
            }
            verdict, _ = judge([(0, excess)], seed, tol)
    return _finish("pedal-extremum", params, seed, len(rows), tol, rows, summary, started, verdict)


# -- ellipse pair bound -------------------------------------------------------


def pair_sum_norms(ellipse: Ellipse, thetas: np.ndarray) -> np.ndarray:
    """|OA_i + OA_j| over all pairs i < j for points at parameter angles ``thetas``."""
    a, b = ellipse.semi_axes
    vecs = np.column_stack([a * np.cos(thetas), b * np.sin(thetas)])
    iu, ju = np.triu_indices(len(thetas), 1)
    sums = vecs[iu] + vecs[ju]
    return np.hypot(sums[:, 0], sums[:, 1])


def minimax_pair_sum(ellipse: Ellipse, start: np.ndarray) -> Tuple[np.ndarray, float]:
    """SLSQP on the epigraph form: minimize s subject to s >= |OA_i + OA_j|^2."""
    n = len(start)
    x0 = np.append(start, float(np.max(pair_sum_norms(ellipse, start)) ** 2))
    result = minimize(
        lambda x: x[-1],
        x0,
        method="SLSQP",
        constraints=[{"type": "ineq", "fun": lambda x: x[-1] - pair_sum_norms(ellipse, x[:n]) ** 2}],
        options={"maxiter": 500, "ftol": 1e-14},
    )
    thetas = np.asarray(result.x[:n], dtype=float)
    return thetas, float(np.max(pair_sum_norms(ellipse, thetas)))


def explore_ellipse_pair_bound(
    ellipse: Ellipse,
    n: int,
    *,
    restarts: int = 32,
    seed: int = 0,
    tol: float = DEFAULT_POLICY.threshold,
) -> ExploreResult:
    """Empirical minimax of max_{i<j} |OA_i + OA_j| over n points on an ellipse."""
    started = time.perf_counter()
    if n < 2:
        raise InvalidInputError(f"Need at least 2 points, got {n}.")
    rows = []
    best_value, best_thetas = math.inf, None
    for r in range(max(1, restarts)):
        if r == 0:
            start = 2.0 * math.pi * np.arange(n) / n
        else:
            start = np.sort(trial_rng(seed, r).uniform(0.0, 2.0 * math.pi, size=n))
        start_value = float(np.max(pair_sum_norms(ellipse, start)))
        thetas, found = minimax_pair_sum(ellipse, start)
        value = min(start_value, found) if math.isfinite(found) else start_value
        if value < best_value:
            best_value, best_thetas = value, thetas if found <= start_value else start
        rows.append({"restart": r, "start_value": start_value, "value": value, "optimizer_value": found})
    values = np.array([row["value"] for row in rows])
    a, b = ellipse.semi_axes
    summary = {
        "max_residual": math.nan,
        "mean_residual": math.nan,
        "minimax": best_value,
        "argmin_deg": [float(math.degrees(t) % 360.0) for t in best_thetas],
        "circle_bound_a": 2.0 * a * math.cos(math.pi / n),
        "circle_bound_b": 2.0 * b * math.cos(math.pi / n),
        "best_quartile_spread": float(np.quantile(values, 0.25) - best_value),
    }
    params = {"semi_axes": [a, b], "n": n, "restarts": restarts}
    return _finish("ellipse-pair-bound", params, seed, len(rows), tol, rows, summary, started, Verdict.INCONCLUSIVE)


# -- loci of divided secants -------------------------------------------------


def _shape_scale(shape: Any) -> float:
    return float(shape.radius) if isinstance(shape, (Circle, Sphere)) else float(shape.semi_axes[0])


def _random_unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    while True:
        v = rng.normal(size=dim)
        length = float(np.linalg.norm(v))
        if length > 1e-12:
            return v / length


def _divided_point(s1, s2, k: float, base: PointD, d: np.ndarray, scale: float) -> Optional[Tuple[PointD, float, float]]:
    t1, t2 = chord_parameter(s1, base, d), chord_parameter(s2, base, d)
    if min(abs(t1), abs(t2), abs(t1 - t2)) < 1e-9 * scale:
        return None
    m1 = PointD.from_vec(base.vec + t1 * d)
    m2 = PointD.from_vec(base.vec + t2 * d)
    return divide_segment(m1, m2, k), t1, t2


def explore_locus(
    shapes: Sequence[Any],
    k: float = 1.0,
    *,
    trials: int = 1000,
    seed: int = 0,
    tol: float = DEFAULT_POLICY.threshold,
    workers: int = 1,
    indices: Optional[Sequence[int]] = None,
) -> Tuple[ExploreResult, Optional[LocusFit]]:
    """Trace M dividing the secant chord M1M2 in ratio k and fit a circle or sphere to the cloud."""
    started = time.perf_counter()
    if len(shapes) != 2:
        raise InvalidInputError("Locus tracing needs exactly two shapes.")
    s1, s2 = shapes
    spheres = isinstance(s1, Sphere) and isinstance(s2, Sphere)
    planar = all(isinstance(s, (Circle, Ellipse)) for s in shapes)
    if not (spheres or planar):
        raise InvalidInputError("Shapes must be two spheres or two planar conics.")
    round_pair = spheres or all(isinstance(s, Circle) for s in shapes)
    scale = max(_shape_scale(s1), _shape_scale(s2))
    k = float(k)

    if spheres:
        ring = sphere_sphere_intersection_circle(s1, s2)
        excluded: Tuple[PointD, ...] = ()
    else:
        ring = None
        excluded = tuple(curve_intersections(s1, s2))
        if len(excluded) != 2:
            raise NoIntersectionError(f"Shapes must meet transversally in exactly two points, found {len(excluded)}.")
    center = divide_segment(s1.center, s2.center, k) if round_pair else None
    anchor = ring.point_at(0.0) if spheres else excluded[0]
    radius = distance(center, anchor) if center is not None else None

    def excluded_distance(m: PointD) -> float:
        if ring is not None:
            return ring.distance_to(m)
        return min(distance(m, x) for x in excluded)

    def run(index: int) -> Dict[str, Any]:
        rng = trial_rng(seed, index)
        coplanar = spheres and index % 2 == 1
        for _ in range(MAX_RESAMPLES):
            if spheres:
                base = ring.point_at(rng.uniform(0.0, 2.0 * math.pi))
                if coplanar:
                    radial = (base.vec - ring.center.vec) / ring.radius
                    psi = rng.uniform(0.0, 2.0 * math.pi)
                    d = math.cos(psi) * np.array(ring.normal) + math.sin(psi) * radial
                else:
                    d = _random_unit(rng, 3)
            else:
                base = excluded[int(rng.integers(0, 2))]
                d = _random_unit(rng, 2)
            divided = _divided_point(s1, s2, k, base, d, scale)
            if divided is None or excluded_distance(divided[0]) < EXCLUSION_REL * scale:
                continue
            m, t1, t2 = divided
            row: Dict[str, Any] = {"trial": index, "coplanar": coplanar, "t1": t1, "t2": t2}
            row.update({axis: value for axis, value in zip("xyz", m.coords)})
            if center is not None:
                row["residual"] = abs(distance(m, center) - radius) / radius
                row["converse_residual"] = _converse_residual(s1, s2, k, center, radius, ring, excluded, rng, scale)
            return row
        raise GenerationExhaustedError("Could not sample a non-degenerate secant.")

    rows = map_trials(run, _indices(trials, indices), workers)
    frame = pd.DataFrame(rows)
    axes = list("xyz"[: 3 if spheres else 2])
    cloud = frame[axes].to_numpy(dtype=float)
    fit = fit_sphere(cloud) if len(cloud) >= len(axes) + 1 else None

    summary: Dict[str, Any] = {}
    verdict: Optional[Verdict] = None
    witness = None
    if fit is not None:
        summary |= {
            "fitted_center": list(fit.fitted_center.coords),
            "fitted_radius": fit.fitted_radius,
            "fit_rms_residual": fit.rms_residual / fit.fitted_radius,
            "fit_max_residual": fit.max_residual / fit.fitted_radius,
        }
    if center is not None:
        residuals = [(row["trial"], max(row["residual"], row["converse_residual"])) for row in rows]
        verdict, witness = judge(residuals, seed, tol)
        summary |= _stats([r for _, r in residuals]) | {
            "predicted_center": list(center.coords),
            "predicted_radius": radius,
        }
        if fit is not None:
            summary["center_offset"] = distance(fit.fitted_center, center) / (2.0 * radius)
            summary["radius_offset"] = abs(fit.fitted_radius - radius) / radius
    else:
        rms = summary.get("fit_rms_residual", math.nan)
        summary |= {"max_residual": rms, "mean_residual": rms}
    if spheres:
        split = {}
        for label, flag in (("skew", False), ("coplanar", True)):
            part = frame.loc[frame["coplanar"] == flag, axes].to_numpy(dtype=float)
            split[label] = fit_sphere(part) if len(part) >= 4 else None
        if split["skew"] is not None and split["coplanar"] is not None:
            summary["split_center_gap"] = distance(split["skew"].fitted_center, split["coplanar"].fitted_center) / (
                2.0 * radius
            )
            summary["split_radius_gap"] = abs(split["skew"].fitted_radius - split["coplanar"].fitted_radius) / radius
    summary["excluded_points"] = [list(x.coords) for x in excluded]

    params = {"k": k, "shapes": [type(s).__name__.lower() for s in shapes]}
    result = _finish("locus", params, seed, len(rows), tol, frame, summary, started, verdict, witness)
    return result, fit


def _converse_residual(s1, s2, k, center, radius, ring, excluded, rng, scale) -> float:
    """Signed division residual for a random point of the predicted locus joined to a base point."""
    dim = center.dim
    for _ in range(MAX_RESAMPLES):
        m = PointD.from_vec(center.vec + radius * _random_unit(rng, dim))
        if ring is not None:
            if ring.distance_to(m) < EXCLUSION_REL * scale:
                continue
            base = ring.point_at(rng.uniform(0.0, 2.0 * math.pi))
        else:
            if min(distance(m, x) for x in excluded) < EXCLUSION_REL * scale:
                continue
            base = excluded[int(rng.integers(0, 2))]
        s = distance(m, base)
        d = (m.vec - base.vec) / s
        t1, t2 = chord_parameter(s1, base, d), chord_parameter(s2, base, d)
        if min(abs(t1), abs(t2), abs(t1 - t2)) < 1e-9 * scale:
            continue
        return abs((s - t1) - k * (t2 - s)) / radius
    raise GenerationExhaustedError("Could not sample a non-degenerate converse point.")


def replay(experiment_id: str, seed: int, index: int, **kwargs: Any) -> pd.DataFrame:
    """Rows of a single trial; identical to the matching rows of the full run."""
    runners: Dict[str, Callable[..., Any]] = {
        "cycle-projection-3d": explore_cycle_projection_3d,
        "edge-projection-sum": explore_edge_projection_sum,
        "polygon-product": explore_polygon_product,
        "locus": explore_locus,
        "face-pedal": explore_face_pedal_dataset,
        "edge-pedal": explore_edge_pedal_dataset,
    }
    if experiment_id not in runners:
        raise InvalidInputError(f"Experiment '{experiment_id}' has no per-trial replay. Valid: {', '.join(runners)}")
    result = runners[experiment_id](seed=seed, indices=[index], **kwargs)
    if isinstance(result, tuple):
        result = result[0]
    return result.rows
