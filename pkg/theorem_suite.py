"""Executable checks for the nine solved theorems (t1 ... t9).

Each check evaluates both sides of a claim on a scene and reduces the
per-trial residuals into a :class:`CheckReport`. Random trials are pure
functions of ``(seed, index)`` so any failing trial can be replayed alone.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.spatial import ConvexHull

from fitting import minimize_multistart
from geom_core import (
    DEFAULT_POLICY,
    Circle,
    DomainError,
    GenerationExhaustedError,
    InvalidInputError,
    Line,
    ParallelLinesError,
    PointD,
    Polygon,
    Segment,
    TolerancePolicy,
    Triangle,
    chord_parameter,
    cevian_foot,
    circle_circle_intersection,
    distance,
    divide_segment,
    line_line_intersection_2d,
    orthic_feet,
    project_to_line,
    stewart_cevian_length_sq,
    tangent_line_at,
)
from scenes import (
    Scene,
    SceneKind,
    interior_triangle_point,
    map_trials,
    polygon_probe,
    sample_scene,
    trial_rng,
)

logger = logging.getLogger(__name__)

MAX_WITNESSES = 32
INCONCLUSIVE_FACTOR = 10.0
MAX_RESAMPLES = 1000
EXCLUSION_REL = 1e-6
FOOT_GUARD = 1e-9
SWEEP_GRID = np.arange(10, 991) / 1000.0


@dataclass(frozen=True)
class Failure:
    trial_index: int
    residual: float
    scene: Dict[str, Any]

    def to_dict(self) -> Dict[str, Any]:
        return {"trial_index": self.trial_index, "residual": self.residual, "scene": self.scene}


@dataclass
class CheckReport:
    theorem_id: str
    trials: int
    seed: Optional[int]
    tolerance: float
    max_residual: float
    mean_residual: float
    failures: List[Failure]
    passed: bool
    wall_time_ms: float
    extras: Dict[str, Any] = field(default_factory=dict)

    def to_payload(self) -> Dict[str, Any]:
        return {
            "kind": "check",
            "theorem_id": self.theorem_id,
            "trials": self.trials,
            "seed": self.seed,
            "tolerance": self.tolerance,
            "max_residual": self.max_residual,
            "mean_residual": self.mean_residual,
            "pass": self.passed,
            "failures": [f.to_dict() for f in self.failures],
            "extras": dict(self.extras),
        }


class TrialOutcome(NamedTuple):
    index: int
    residual: float
    scene: Dict[str, Any]
    extras: Dict[str, float]


Evaluator = Callable[[Scene, np.random.Generator, Mapping[str, Any], TolerancePolicy], Tuple[float, Dict[str, float]]]


@dataclass(frozen=True)
class TheoremDef:
    theorem_id: str
    scene_kind: SceneKind
    evaluate: Evaluator
    reducers: Mapping[str, Tuple[str, ...]] = field(default_factory=dict)
    scene_params: Callable[[Mapping[str, Any]], Dict[str, Any]] = lambda params: {}


_REDUCE = {
    "min": np.min,
    "max": np.max,
    "mean": np.mean,
    "sum": np.sum,
    "first": lambda values: values[0],
}


def _reduce_extras(outcomes: Sequence[TrialOutcome], reducers: Mapping[str, Tuple[str, ...]]) -> Dict[str, Any]:
    extras: Dict[str, Any] = {}
    for name, ops in reducers.items():
        values = [o.extras[name] for o in outcomes if name in o.extras]
        if not values:
            continue
        for op in ops:
            extras[name if op == "first" else f"{op}_{name}"] = float(_REDUCE[op](np.asarray(values, dtype=float)))
    return extras


def build_report(
    theorem_id: str,
    outcomes: Sequence[TrialOutcome],
    *,
    seed: Optional[int],
    tol: float,
    started: float,
    reducers: Mapping[str, Tuple[str, ...]],
) -> CheckReport:
    outcomes = sorted(outcomes, key=lambda o: o.index)
    residuals = np.array([o.residual for o in outcomes], dtype=float)
    failing = [o for o in outcomes if not o.residual < tol]
    failing.sort(key=lambda o: (-o.residual if not math.isnan(o.residual) else -math.inf, o.index))
    failures = [Failure(o.index, float(o.residual), o.scene) for o in failing[:MAX_WITNESSES]]
    return CheckReport(
        theorem_id=theorem_id,
        trials=len(outcomes),
        seed=seed,
        tolerance=tol,
        max_residual=float(np.max(residuals)),
        mean_residual=float(np.mean(residuals)),
        failures=failures,
        passed=not failing,
        wall_time_ms=(time.perf_counter() - started) * 1000.0,
        extras=_reduce_extras(outcomes, reducers),
    )


def _classify(value: float, tol: float) -> Optional[bool]:
    if value < tol:
        return True
    if value > INCONCLUSIVE_FACTOR * tol:
        return False
    return None


def _triangle_of(scene: Scene) -> Triangle:
    if scene.triangle is None:
        raise InvalidInputError(f"Scene of kind {scene.kind.value} carries no triangle.")
    return scene.triangle


def _polygon_of(scene: Scene) -> Polygon:
    if scene.polygon is not None:
        return scene.polygon
    if scene.triangle is not None:
        return Polygon(scene.triangle.vertices)
    raise InvalidInputError(f"Scene of kind {scene.kind.value} carries no polygon.")


def _circle_of(scene: Scene) -> Circle:
    circles = [s for s in scene.shapes if isinstance(s, Circle)]
    if not circles:
        raise InvalidInputError(f"Scene of kind {scene.kind.value} carries no circle.")
    return circles[0]


def _check_interior(t: Triangle, p: PointD) -> None:
    if min(t.barycentric(p)) <= FOOT_GUARD:
        raise DomainError(f"Point {p.coords} is not strictly inside the triangle.")


# -- t1: projection identity -------------------------------------------------


def t1_sums(polygon: Polygon, m: PointD) -> Tuple[float, float]:
    """(sum |M_i A_i|^2, sum |M_i A_{i+1}|^2) over the feet M_i on every side line."""
    lhs = rhs = 0.0
    for edge in polygon.edges():
        foot = project_to_line(m, edge).point
        lhs += distance(foot, edge.a) ** 2
        rhs += distance(foot, edge.b) ** 2
    return lhs, rhs


def check_t1(polygon: Polygon, m: PointD, tol: float = DEFAULT_POLICY.threshold) -> CheckReport:
    started = time.perf_counter()
    scene = Scene(kind=SceneKind.POLYGON_POINT, polygon=polygon, probe=PointD.from_vec(m))
    residual, extras = _evaluate_t1(scene, trial_rng(0, 0), {}, TolerancePolicy(threshold=tol))
    return _single_report("t1", residual, extras, tol, scene, started)


def _evaluate_t1(scene, rng, params, policy):
    polygon = _polygon_of(scene)
    m = scene.probe if scene.probe is not None else polygon_probe(rng, polygon, "anywhere")
    lhs, rhs = t1_sums(polygon, m)
    return abs(lhs - rhs) / polygon.sum_sq_sides, {"lhs": lhs, "inside": float(polygon.contains(m))}


# -- t2: tangents at secant intersections -----------------------------------


@dataclass
class TangentPolygonReport:
    chord_points: List[Tuple[PointD, PointD]]
    poles: List[Optional[PointD]]
    tangent_points: List[PointD]
    tangents: List[Line]
    intersections: List[Tuple[int, int, PointD]]
    polygon_vertices: List[PointD]
    polygon_formed: bool
    pole_residual: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "chord_points": [[list(p.coords), list(q.coords)] for p, q in self.chord_points],
            "poles": [list(p.coords) if p is not None else None for p in self.poles],
            "tangent_points": [list(p.coords) for p in self.tangent_points],
            "intersections": [[i, j, list(p.coords)] for i, j, p in self.intersections],
            "polygon_vertices": [list(p.coords) for p in self.polygon_vertices],
            "polygon_formed": self.polygon_formed,
            "pole_residual": self.pole_residual,
        }


def _secant_points(c: Circle, secant: Line, policy: TolerancePolicy) -> Tuple[PointD, PointD]:
    d = np.array(secant.direction) / math.hypot(*secant.direction)
    w = secant.point.vec - c.center.vec
    b = float(np.dot(w, d))
    disc = b * b - (float(np.dot(w, w)) - c.radius**2)
    if disc <= policy.parallel_eps * c.radius**2:
        raise InvalidInputError("Secant is tangent to the circle or misses it.")
    root = math.sqrt(disc)
    p0 = secant.point.vec
    return PointD.from_vec(p0 + (-b - root) * d), PointD.from_vec(p0 + (-b + root) * d)


def _pole_residual(c: Circle, p: PointD, q: PointD, pole: Optional[PointD]) -> float:
    center = c.center.vec
    mid = 0.5 * (p.vec + q.vec) - center
    mid_norm = math.hypot(*mid)
    if mid_norm <= 1e-12 * c.radius:
        # Diameter: tangents are parallel and there is no finite pole.
        return 0.0 if pole is None else math.inf
    expected = center + c.radius**2 * mid / mid_norm**2
    if pole is None:
        return math.inf
    offset = pole.vec - center
    scale = max(c.radius, math.hypot(*offset))
    incidence = max(abs(float(np.dot(x.vec - center, offset)) - c.radius**2) for x in (p, q)) / (c.radius * scale)
    return max(incidence, math.hypot(*(pole.vec - expected)) / scale)


def check_t2_tangent_polygon(
    c: Circle, secants: Sequence[Line], policy: TolerancePolicy = DEFAULT_POLICY
) -> TangentPolygonReport:
    """Tangents at every secant/circle intersection, their poles and the tangential polygon."""
    if not secants:
        raise InvalidInputError("At least one secant is required.")
    chord_points, poles, residual = [], [], 0.0
    for secant in secants:
        p, q = _secant_points(c, secant, policy)
        try:
            pole: Optional[PointD] = line_line_intersection_2d(tangent_line_at(c, p), tangent_line_at(c, q), policy)
        except ParallelLinesError:
            pole = None
        chord_points.append((p, q))
        poles.append(pole)
        residual = max(residual, _pole_residual(c, p, q, pole))

    unique: List[PointD] = []
    for pair in chord_points:
        for point in pair:
            if all(distance(point, seen) > 1e-9 * c.radius for seen in unique):
                unique.append(point)
    angles = [math.atan2(p[1] - c.center[1], p[0] - c.center[0]) % (2.0 * math.pi) for p in unique]
    order = np.argsort(angles, kind="stable")
    tangent_points = [unique[i] for i in order]
    tangents = [tangent_line_at(c, p) for p in tangent_points]

    intersections = []
    for i in range(len(tangents)):
        for j in range(i + 1, len(tangents)):
            try:
                intersections.append((i, j, line_line_intersection_2d(tangents[i], tangents[j], policy)))
            except ParallelLinesError:
                continue

    vertices: List[PointD] = []
    formed = False
    m = len(tangents)
    if m >= 3:
        sorted_angles = np.sort(angles)
        gaps = np.diff(np.append(sorted_angles, sorted_angles[0] + 2.0 * math.pi))
        if np.all(gaps < math.pi - 1e-12):
            vertices = [line_line_intersection_2d(tangents[i], tangents[(i + 1) % m], policy) for i in range(m)]
            hull = ConvexHull(np.array([v.coords for v in vertices]))
            hull_order = [int(v) for v in hull.vertices]
            if len(hull_order) == m:
                start = hull_order.index(0)
                formed = hull_order[start:] + hull_order[:start] == list(range(m))

    return TangentPolygonReport(
        chord_points=chord_points,
        poles=poles,
        tangent_points=tangent_points,
        tangents=tangents,
        intersections=intersections,
        polygon_vertices=vertices,
        polygon_formed=formed,
        pole_residual=residual,
    )


def _evaluate_t2(scene, rng, params, policy):
    circle = _circle_of(scene)
    points = list(scene.points)
    if len(points) < 2:
        raise InvalidInputError("Tangent construction needs at least two points on the circle.")
    order = rng.permutation(len(points) - len(points) % 2)
    secants = [Line.through(points[order[i]], points[order[i + 1]]) for i in range(0, len(order), 2)]
    report = check_t2_tangent_polygon(circle, secants, policy)
    return report.pole_residual, {"polygon_formed": float(report.polygon_formed)}


# -- t3: Van Aubel and the E, F bounds ---------------------------------------


@dataclass(frozen=True)
class CevianRatios:
    x: float
    y: float
    z: float
    e: float
    f: float

    def to_dict(self) -> Dict[str, float]:
        return {"x": self.x, "y": self.y, "z": self.z, "E": self.e, "F": self.f}


def cevian_feet(t: Triangle, p: PointD) -> Tuple[PointD, PointD, PointD]:
    """A' on BC, B' on CA, C' on AB for Cevians through p."""
    return tuple(cevian_foot(v, p, side).point for v, side in zip(t.vertices, t.side_segments()))


def cevian_ratios(t: Triangle, p: PointD, policy: TolerancePolicy = DEFAULT_POLICY) -> Tuple[CevianRatios, float]:
    """Side ratios, E and F from raw distances, plus the worst Van Aubel residual."""
    _check_interior(t, p)
    a_foot, b_foot, c_foot = cevian_feet(t, p)
    x = distance(t.a, c_foot) / distance(c_foot, t.b)
    y = distance(t.a, b_foot) / distance(b_foot, t.c)
    z = distance(t.b, a_foot) / distance(a_foot, t.c)
    ra = distance(p, t.a) / distance(p, a_foot)
    rb = distance(p, t.b) / distance(p, b_foot)
    rc = distance(p, t.c) / distance(p, c_foot)
    van_aubel = max(
        policy.relative(ra, x + y),
        policy.relative(rb, z + 1.0 / x),
        policy.relative(rc, 1.0 / z + 1.0 / y),
    )
    return CevianRatios(x, y, z, ra + rb + rc, ra * rb * rc), van_aubel


def _t3_residual(ratios: CevianRatios, van_aubel: float) -> float:
    return max(van_aubel, max(0.0, 6.0 - ratios.e) / 6.0, max(0.0, 8.0 - ratios.f) / 8.0)


def check_t3(t: Triangle, p: PointD, tol: float = DEFAULT_POLICY.threshold) -> Tuple[CevianRatios, CheckReport]:
    started = time.perf_counter()
    p = PointD.from_vec(p)
    ratios, van_aubel = cevian_ratios(t, p, TolerancePolicy(threshold=tol))
    scene = Scene(kind=SceneKind.TRIANGLE_POINT, triangle=t, probe=p)
    report = _single_report("t3", _t3_residual(ratios, van_aubel), ratios.to_dict(), tol, scene, started)
    return ratios, report


def _evaluate_t3(scene, rng, params, policy):
    t = _triangle_of(scene)
    if params.get("probe") == "near-vertex":
        p = PointD.from_vec(0.999 * t.a.vec + 0.0005 * t.b.vec + 0.0005 * t.c.vec)
    else:
        p = scene.probe if scene.probe is not None else interior_triangle_point(rng, t)
    ratios, van_aubel = cevian_ratios(t, p, policy)
    return _t3_residual(ratios, van_aubel), {"E": ratios.e, "F": ratios.f}


def t3_minimizer(t: Triangle, restarts: int = 8, seed: int = 0) -> Dict[str, Any]:
    """Multi-start Nelder-Mead on E(P); reports how far each run lands from the centroid."""

    def objective(xy: np.ndarray) -> float:
        p = PointD.from_vec(xy)
        if min(t.barycentric(p)) <= FOOT_GUARD:
            return math.inf
        return cevian_ratios(t, p)[0].e

    rng = trial_rng(seed, 0)
    verts = np.array([v.coords for v in t.vertices])
    starts = [rng.dirichlet(np.ones(3)) @ verts for _ in range(max(1, restarts))]
    result = minimize_multistart(objective, starts, scale=t.diameter)
    centroid = t.centroid.vec
    distances = [float(np.linalg.norm(run.x - centroid)) / t.diameter for run in result.runs]
    return {
        "argmin": [float(v) for v in result.best.x],
        "min_e": result.best.value,
        "max_centroid_distance": max(distances),
        "max_e_gap": max(run.value for run in result.runs) - 6.0,
        "restarts": len(result.runs),
    }


# -- t4: Stewart ratio sums ---------------------------------------------------


@dataclass(frozen=True)
class SweepMinimum:
    argmin: float
    minimum: float
    min_ratio: float
    argmin_fit: float
    fit_coefficients: Tuple[float, float, float]
    fit_residual: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "argmin": self.argmin,
            "minimum": self.minimum,
            "min_ratio": self.min_ratio,
            "argmin_fit": self.argmin_fit,
            "fit_coefficients": list(self.fit_coefficients),
            "fit_residual": self.fit_residual,
        }


def cevian_square_sum(t: Triangle, k):
    """|AA1|^2 + |BB1|^2 + |CC1|^2 with BA1 = k BC, CB1 = k CA, AC1 = k AB (vectorized over k)."""
    scalar = np.ndim(k) == 0
    k = np.asarray(k, dtype=float)[..., None]
    a, b, c = t.a.vec, t.b.vec, t.c.vec
    total = 0.0
    for vertex, start, end in ((a, b, c), (b, c, a), (c, a, b)):
        foot = start + k * (end - start)
        total = total + np.sum((vertex - foot) ** 2, axis=-1)
    return float(total[0]) if scalar else total


def ratio_sweep(t: Triangle) -> SweepMinimum:
    """Grid sweep over k in [0.01, 0.99], golden-section refinement and an exact quadratic fit."""
    values = cevian_square_sum(t, SWEEP_GRID)
    i = int(np.clip(np.argmin(values), 1, len(SWEEP_GRID) - 2))
    refined = minimize_scalar(
        lambda k: cevian_square_sum(t, k),
        bracket=(SWEEP_GRID[i - 1], SWEEP_GRID[i], SWEEP_GRID[i + 1]),
        method="golden",
        tol=1e-10,
    )
    coefficients = np.polyfit([0.25, 0.5, 0.75], cevian_square_sum(t, [0.25, 0.5, 0.75]), 2)
    total = t.sum_sq_sides
    fit_residual = float(np.max(np.abs(np.polyval(coefficients, SWEEP_GRID) - values))) / total
    minimum = float(refined.fun)
    return SweepMinimum(
        argmin=float(refined.x),
        minimum=minimum,
        min_ratio=minimum / total,
        argmin_fit=float(-coefficients[1] / (2.0 * coefficients[0])),
        fit_coefficients=tuple(float(v) for v in coefficients),
        fit_residual=fit_residual,
    )


def _t4_residual(t: Triangle, k: float, sweep: Optional[SweepMinimum]) -> Tuple[float, Dict[str, float]]:
    if not 0.0 < k < 1.0:
        raise DomainError(f"Ratio k must lie in (0, 1), got {k}.")
    total = t.sum_sq_sides
    direct = cevian_square_sum(t, k)
    side_a, side_b, side_c = t.sides
    stewart = (
        stewart_cevian_length_sq(side_a, side_b, side_c, k)
        + stewart_cevian_length_sq(side_b, side_c, side_a, k)
        + stewart_cevian_length_sq(side_c, side_a, side_b, k)
    )
    grid_identity = np.abs(cevian_square_sum(t, SWEEP_GRID) - (SWEEP_GRID**2 - SWEEP_GRID + 1.0) * total)
    residual = max(
        abs(direct - (k * k - k + 1.0) * total) / total,
        abs(direct - stewart) / total,
        float(np.max(grid_identity)) / total,
    )
    extras = {"value": direct, "ratio": direct / total}
    if sweep is not None:
        residual = max(
            residual,
            sweep.fit_residual,
            abs(sweep.min_ratio - 0.75),
            max(0.0, abs(sweep.argmin - 0.5) - 1e-6),
        )
        extras.update({"argmin": sweep.argmin, "min_ratio": sweep.min_ratio})
    return residual, extras


def check_t4(t: Triangle, k: float, tol: float = DEFAULT_POLICY.threshold) -> Tuple[CheckReport, SweepMinimum]:
    started = time.perf_counter()
    sweep = ratio_sweep(t)
    residual, extras = _t4_residual(t, float(k), sweep)
    extras["k"] = float(k)
    scene = Scene(kind=SceneKind.TRIANGLE, triangle=t, params={"k": float(k)})
    return _single_report("t4", residual, extras, tol, scene, started), sweep


def _evaluate_t4(scene, rng, params, policy):
    t = _triangle_of(scene)
    k = float(params["k"]) if params.get("k") is not None else float(rng.uniform(0.01, 0.99))
    sweep = ratio_sweep(t) if params.get("sweep", True) else None
    return _t4_residual(t, k, sweep)


# -- t5: concurrency condition ------------------------------------------------


@dataclass(frozen=True)
class ConcurrencyWitness:
    alpha: float
    beta: float
    gamma: float
    ceva_product: float
    intersection_spread: float
    sum_residual: float
    product_residual: float
    concurrent: Optional[bool]
    product_condition: Optional[bool]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "ceva_product": self.ceva_product,
            "intersection_spread": self.intersection_spread,
            "sum_residual": self.sum_residual,
            "product_residual": self.product_residual,
            "concurrent": self.concurrent,
            "product_condition": self.product_condition,
        }


def _side_parameter(t: Triangle, side: Segment, foot: PointD) -> float:
    hit = project_to_line(foot, side)
    if distance(hit.point, foot) > 1e-9 * t.diameter:
        raise InvalidInputError(f"Foot {foot.coords} does not lie on its side.")
    if not FOOT_GUARD < hit.t < 1.0 - FOOT_GUARD:
        raise DomainError(f"Foot {foot.coords} is not strictly inside its side.")
    return hit.t


def concurrency_witness(
    t: Triangle, feet: Sequence[PointD], policy: TolerancePolicy = DEFAULT_POLICY
) -> Tuple[ConcurrencyWitness, float]:
    a1, b1, c1 = (PointD.from_vec(f) for f in feet)
    for side, foot in zip(t.side_segments(), (a1, b1, c1)):
        _side_parameter(t, side, foot)
    a, b, c = t.sides
    a1b, a1c = distance(a1, t.b), distance(a1, t.c)
    b1c, b1a = distance(b1, t.c), distance(b1, t.a)
    c1a, c1b = distance(c1, t.a), distance(c1, t.b)
    alpha, beta, gamma = a * (a1b - a1c), b * (b1c - b1a), c * (c1a - c1b)
    ceva = (a1b / a1c) * (b1c / b1a) * (c1a / c1b)
    lhs = (a * a + alpha) * (b * b + beta) * (c * c + gamma)
    rhs = (a * a - alpha) * (b * b - beta) * (c * c - gamma)
    product_residual = abs(lhs - rhs) / (a * b * c) ** 2
    sum_residual = abs(alpha + beta + gamma) / t.sum_sq_sides

    cevians = [Line.through(v, f) for v, f in zip(t.vertices, (a1, b1, c1))]
    try:
        crossings = [line_line_intersection_2d(cevians[i], cevians[(i + 1) % 3], policy) for i in range(3)]
        spread = max(distance(crossings[i], crossings[(i + 1) % 3]) for i in range(3)) / t.diameter
    except ParallelLinesError:
        spread = math.inf

    identities = max(
        policy.relative(a1b / a1c, (a * a + alpha) / (a * a - alpha)),
        policy.relative(b1c / b1a, (b * b + beta) / (b * b - beta)),
        policy.relative(c1a / c1b, (c * c + gamma) / (c * c - gamma)),
    )
    concurrent = _classify(spread, policy.threshold)
    product_condition = _classify(product_residual, policy.threshold)
    disagreement = (
        1.0 if concurrent is not None and product_condition is not None and concurrent != product_condition else 0.0
    )
    witness = ConcurrencyWitness(
        alpha=alpha,
        beta=beta,
        gamma=gamma,
        ceva_product=ceva,
        intersection_spread=spread,
        sum_residual=sum_residual,
        product_residual=product_residual,
        concurrent=concurrent,
        product_condition=product_condition,
    )
    return witness, max(identities, disagreement)


def check_t5(
    t: Triangle, feet: Sequence[PointD], tol: float = DEFAULT_POLICY.threshold
) -> Tuple[ConcurrencyWitness, CheckReport]:
    started = time.perf_counter()
    witness, residual = concurrency_witness(t, feet, TolerancePolicy(threshold=tol))
    scene = Scene(kind=SceneKind.TRIANGLE, triangle=t, points=tuple(PointD.from_vec(f) for f in feet))
    extras = {
        "sum_residual": witness.sum_residual,
        "product_residual": witness.product_residual,
        "intersection_spread": witness.intersection_spread,
        "ceva_product": witness.ceva_product,
    }
    return witness, _single_report("t5", residual, extras, tol, scene, started)


def _on_side(start: PointD, end: PointD, s: float) -> PointD:
    return PointD.from_vec(start.vec + s * (end.vec - start.vec))


def _alpha_beta_gamma_sum(t: Triangle, a1: PointD, b1: PointD, c1: PointD) -> float:
    a, b, c = t.sides
    return (
        a * (distance(a1, t.b) - distance(a1, t.c))
        + b * (distance(b1, t.c) - distance(b1, t.a))
        + c * (distance(c1, t.a) - distance(c1, t.b))
    )


def _concurrent_feet(t: Triangle, rng: np.random.Generator) -> Optional[Tuple[PointD, PointD, PointD]]:
    """Concurrent Cevians through a point on the alpha+beta+gamma = 0 curve."""
    ab_side = Segment(t.a, t.b)
    for _ in range(64):
        a1 = _on_side(t.b, t.c, rng.uniform(0.1, 0.9))

        def feet_for(u: float) -> Tuple[PointD, PointD, PointD]:
            b1 = _on_side(t.c, t.a, u)
            p = line_line_intersection_2d(Line.through(t.a, a1), Line.through(t.b, b1))
            return a1, b1, cevian_foot(t.c, p, ab_side).point

        grid = np.linspace(0.02, 0.98, 97)
        values = [_alpha_beta_gamma_sum(t, *feet_for(u)) for u in grid]
        for lo, hi, f_lo, f_hi in zip(grid[:-1], grid[1:], values[:-1], values[1:]):
            if f_lo * f_hi < 0:
                u = brentq(lambda v: _alpha_beta_gamma_sum(t, *feet_for(v)), lo, hi, xtol=1e-15)
                return feet_for(u)
    return None


def _free_feet(t: Triangle, rng: np.random.Generator) -> Optional[Tuple[PointD, PointD, PointD]]:
    """A1, B1 free; C1 solved so that alpha + beta + gamma = 0."""
    a, b, c = t.sides
    for _ in range(64):
        a1 = _on_side(t.b, t.c, rng.uniform(0.05, 0.95))
        b1 = _on_side(t.c, t.a, rng.uniform(0.05, 0.95))
        gamma = -(a * (distance(a1, t.b) - distance(a1, t.c)) + b * (distance(b1, t.c) - distance(b1, t.a)))
        c1a = 0.5 * (c + gamma / c)
        if 0.02 * c < c1a < 0.98 * c:
            return a1, b1, _on_side(t.a, t.b, c1a / c)
    return None


T5_MODES = ("medians", "altitudes", "concurrent", "free")


def _evaluate_t5(scene, rng, params, policy):
    t = _triangle_of(scene)
    if len(scene.points) == 3:
        feet, mode = scene.points, "given"
    else:
        mode = params.get("mode") or T5_MODES[int(scene.index or 0) % len(T5_MODES)]
        feet = None
        if mode == "altitudes" and t.is_acute():
            feet = orthic_feet(t)
        elif mode == "concurrent":
            feet = _concurrent_feet(t, rng)
        elif mode == "free":
            feet = _free_feet(t, rng)
        if feet is None:
            mode = "medians"
            feet = tuple(PointD.from_vec(0.5 * (s.a.vec + s.b.vec)) for s in t.side_segments())
    witness, residual = concurrency_witness(t, feet, policy)
    decided = witness.concurrent is not None and witness.product_condition is not None
    extras = {
        "sum_residual": witness.sum_residual,
        "inconclusive": 0.0 if decided else 1.0,
        "concurrent": 1.0 if witness.concurrent else 0.0,
    }
    if decided:
        extras["agreement"] = float(witness.concurrent == witness.product_condition)
    # alpha + beta + gamma = 0 holds for every generated family.
    return max(residual, witness.sum_residual), extras


# -- t6: Cevian ratio product -------------------------------------------------


def t6_sides(t: Triangle, p: PointD, policy: TolerancePolicy = DEFAULT_POLICY) -> Tuple[float, Dict[str, float]]:
    _check_interior(t, p)
    a1, b1, c1 = cevian_feet(t, p)
    A, B, C = t.vertices
    ra = distance(p, A) / distance(p, a1)
    rb = distance(p, B) / distance(p, b1)
    rc = distance(p, C) / distance(p, c1)
    lhs = ra * rb * rc
    rhs = (distance(A, B) * distance(B, C) * distance(C, A)) / (
        distance(a1, B) * distance(b1, C) * distance(c1, A)
    )
    menelaus = (
        ra / ((distance(B, C) / distance(B, a1)) * (distance(b1, A) / distance(b1, C))),
        rb / ((distance(C, A) / distance(C, b1)) * (distance(c1, B) / distance(c1, A))),
        rc / ((distance(A, B) / distance(A, c1)) * (distance(a1, C) / distance(a1, B))),
    )
    residual = max([abs(lhs / rhs - 1.0)] + [abs(value - 1.0) for value in menelaus])
    return residual, {"lhs": lhs, "rhs": rhs}


def check_t6(t: Triangle, p: PointD, tol: float = DEFAULT_POLICY.threshold) -> CheckReport:
    started = time.perf_counter()
    p = PointD.from_vec(p)
    residual, extras = t6_sides(t, p, TolerancePolicy(threshold=tol))
    scene = Scene(kind=SceneKind.TRIANGLE_POINT, triangle=t, probe=p)
    return _single_report("t6", residual, extras, tol, scene, started)


def _evaluate_t6(scene, rng, params, policy):
    t = _triangle_of(scene)
    p = scene.probe if scene.probe is not None else interior_triangle_point(rng, t)
    return t6_sides(t, p, policy)


# -- t7: orthic inequality ----------------------------------------------------


@dataclass(frozen=True)
class OrthicValue:
    expression: float
    bound: float
    deficit: float
    normalized_deficit: float
    orthic_sides: Tuple[float, float, float]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "expression": self.expression,
            "bound": self.bound,
            "deficit": self.deficit,
            "normalized_deficit": self.normalized_deficit,
            "orthic_sides": list(self.orthic_sides),
        }


def orthic_value(t: Triangle, angle_guard: float = DEFAULT_POLICY.angle_guard) -> Tuple[OrthicValue, float]:
    """Orthic expression a'b' + b'c' + c'a' and the residual of its leg identity."""
    a_foot, b_foot, c_foot = orthic_feet(t, angle_guard)
    a_p, b_p, c_p = distance(b_foot, c_foot), distance(c_foot, a_foot), distance(a_foot, b_foot)
    expression = a_p * b_p + b_p * c_p + c_p * a_p
    a, b, c = t.sides
    x, y, z = distance(t.b, a_foot), distance(t.c, b_foot), distance(t.a, c_foot)
    legs = x * (a - x) + y * (b - y) + z * (c - z)
    total = t.sum_sq_sides
    deficit = total - 4.0 * expression
    value = OrthicValue(
        expression=expression,
        bound=0.25 * total,
        deficit=deficit,
        normalized_deficit=deficit / total,
        orthic_sides=(a_p, b_p, c_p),
    )
    return value, abs(expression - legs) / total


def _t7_residual(value: OrthicValue, identity: float) -> float:
    return max(identity, max(0.0, -value.normalized_deficit))


def check_t7(
    t: Triangle, tol: float = DEFAULT_POLICY.threshold, angle_guard: float = DEFAULT_POLICY.angle_guard
) -> Tuple[CheckReport, OrthicValue]:
    started = time.perf_counter()
    value, identity = orthic_value(t, angle_guard)
    scene = Scene(kind=SceneKind.ACUTE_TRIANGLE, triangle=t)
    report = _single_report("t7", _t7_residual(value, identity), value.to_dict(), tol, scene, started)
    return report, value


def t7_homotopy(t: Triangle, steps: int = 100) -> np.ndarray:
    """Normalized deficit along a squared-side interpolation towards the equilateral triangle.

    The sum of squared sides stays constant and every intermediate triangle is acute.
    """
    squares = np.array(t.sides) ** 2
    target = np.full(3, squares.mean())
    deficits = []
    for s in np.linspace(0.0, 1.0, steps + 1):
        sides = np.sqrt((1.0 - s) * squares + s * target)
        deficits.append(orthic_value(Triangle.from_sides(*sides))[0].normalized_deficit)
    return np.array(deficits)


def _evaluate_t7(scene, rng, params, policy):
    value, identity = orthic_value(_triangle_of(scene), policy.angle_guard)
    return _t7_residual(value, identity), {"deficit": value.normalized_deficit}


# -- t8: pair vector-sum bound ------------------------------------------------


@dataclass(frozen=True)
class BestPair:
    i: int
    j: int
    theta_min: float
    norm: float
    bound: float
    brute_i: int
    brute_j: int
    brute_norm: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "pair": [self.i, self.j],
            "theta_min_deg": math.degrees(self.theta_min),
            "norm": self.norm,
            "bound": self.bound,
            "brute_pair": [self.brute_i, self.brute_j],
            "brute_norm": self.brute_norm,
        }


def best_pair(points: Sequence[PointD], circle: Circle, policy: TolerancePolicy = DEFAULT_POLICY) -> BestPair:
    if len(points) < 2:
        raise InvalidInputError("At least two points are required.")
    vecs = np.array([PointD.from_vec(p).coords for p in points]) - circle.center.vec
    if vecs.shape[1] != 2:
        raise InvalidInputError("Points must be planar.")
    radius = circle.radius
    if np.any(np.abs(np.hypot(vecs[:, 0], vecs[:, 1]) - radius) > policy.on_curve_eps * radius):
        raise InvalidInputError("Every point must lie on the circle.")
    n = len(vecs)
    angles = np.arctan2(vecs[:, 1], vecs[:, 0]) % (2.0 * math.pi)
    order = np.argsort(angles, kind="stable")
    gaps = np.diff(np.append(angles[order], angles[order[0]] + 2.0 * math.pi))
    sums = vecs[:, None, :] + vecs[None, :, :]
    norms = np.hypot(sums[..., 0], sums[..., 1])
    gaps_between = np.hypot(*(vecs[:, None, :] - vecs[None, :, :]).transpose(2, 0, 1))
    if np.any(gaps_between[~np.eye(n, dtype=bool)] <= 1e-12 * radius):
        raise InvalidInputError("Points must be pairwise distinct.")
    g = int(np.argmin(gaps))
    i, j = int(order[g]), int(order[(g + 1) % n])
    np.fill_diagonal(norms, -np.inf)
    flat = int(np.argmax(norms))
    bi, bj = divmod(flat, n)
    return BestPair(
        i=i,
        j=j,
        theta_min=float(gaps[g]),
        norm=float(norms[i, j]),
        bound=2.0 * radius * math.cos(math.pi / n),
        brute_i=min(bi, bj),
        brute_j=max(bi, bj),
        brute_norm=float(norms[bi, bj]),
    )


def _t8_residual(pair: BestPair, radius: float) -> float:
    return max(max(0.0, pair.bound - pair.norm) / radius, abs(pair.brute_norm - pair.norm) / radius)


def check_t8(
    points: Sequence[PointD], circle: Circle, tol: float = DEFAULT_POLICY.threshold
) -> Tuple[CheckReport, BestPair]:
    started = time.perf_counter()
    pair = best_pair(points, circle)
    scene = Scene(kind=SceneKind.POINTS_ON_CIRCLE, shapes=(circle,), points=tuple(PointD.from_vec(p) for p in points))
    report = _single_report("t8", _t8_residual(pair, circle.radius), pair.to_dict(), tol, scene, started)
    return report, pair


def _evaluate_t8(scene, rng, params, policy):
    circle = _circle_of(scene)
    pair = best_pair(scene.points, circle, policy)
    n = len(scene.points)
    agrees = {pair.i, pair.j} == {pair.brute_i, pair.brute_j} or abs(pair.norm - pair.brute_norm) <= 1e-12 * circle.radius
    extras = {
        "gap_within_sector": float(pair.theta_min <= 2.0 * math.pi / n + 1e-12),
        "pair_agrees": float(agrees),
        "slack": (pair.norm - pair.bound) / circle.radius,
    }
    return _t8_residual(pair, circle.radius), extras


# -- t9: circle of divided secants -------------------------------------------


class LocusCircle(NamedTuple):
    center: PointD
    radius: float
    a: PointD
    b: PointD


def locus_circle(c1: Circle, c2: Circle, k: float) -> LocusCircle:
    a, b = circle_circle_intersection(c1, c2)
    center = divide_segment(c1.center, c2.center, k)
    return LocusCircle(center, distance(center, a), a, b)


def _direction(theta: float) -> np.ndarray:
    return np.array([math.cos(theta), math.sin(theta)])


def _chord(c1, c2, base: PointD, d: np.ndarray, scale: float) -> Optional[Tuple[float, float]]:
    t1, t2 = chord_parameter(c1, base, d), chord_parameter(c2, base, d)
    if min(abs(t1), abs(t2), abs(t1 - t2)) < 1e-9 * scale:
        return None
    return t1, t2


def t9_forward(c1, c2, k: float, locus: LocusCircle, rng: np.random.Generator) -> Tuple[PointD, float]:
    """One forward sample: the divided point M and its radial residual."""
    for _ in range(MAX_RESAMPLES):
        base = locus.a if rng.random() < 0.5 else locus.b
        d = _direction(rng.uniform(0.0, 2.0 * math.pi))
        chord = _chord(c1, c2, base, d, locus.radius)
        if chord is None:
            continue
        m1 = PointD.from_vec(base.vec + chord[0] * d)
        m2 = PointD.from_vec(base.vec + chord[1] * d)
        m = divide_segment(m1, m2, k)
        if min(distance(m, locus.a), distance(m, locus.b)) < EXCLUSION_REL * locus.radius:
            continue
        return m, abs(distance(m, locus.center) - locus.radius) / locus.radius
    raise GenerationExhaustedError("Could not sample a non-degenerate secant direction.")


def t9_converse(c1, c2, k: float, locus: LocusCircle, rng: np.random.Generator) -> float:
    """Signed division residual for a random point of the locus joined to A or B."""
    for _ in range(MAX_RESAMPLES):
        m = PointD.from_vec(locus.center.vec + locus.radius * _direction(rng.uniform(0.0, 2.0 * math.pi)))
        if min(distance(m, locus.a), distance(m, locus.b)) < EXCLUSION_REL * locus.radius:
            continue
        base = locus.a if rng.random() < 0.5 else locus.b
        s = distance(m, base)
        d = (m.vec - base.vec) / s
        chord = _chord(c1, c2, base, d, locus.radius)
        if chord is None:
            continue
        t1, t2 = chord
        return abs((s - t1) - k * (t2 - s)) / locus.radius
    raise GenerationExhaustedError("Could not sample a non-degenerate converse point.")


def _evaluate_t9(scene, rng, params, policy):
    circles = [s for s in scene.shapes if isinstance(s, Circle)]
    if len(circles) != 2:
        raise InvalidInputError("The divided-secant check needs exactly two circles.")
    c1, c2 = circles
    k = float(params.get("k") if params.get("k") is not None else 1.0)
    locus = locus_circle(c1, c2, k)
    _, forward = t9_forward(c1, c2, k, locus, rng)
    converse = t9_converse(c1, c2, k, locus, rng)
    extras = {
        "forward": forward,
        "converse": converse,
        "locus_radius": locus.radius,
        "locus_center_x": locus.center[0],
        "locus_center_y": locus.center[1],
    }
    return max(forward, converse), extras


def check_t9(
    c1: Circle,
    c2: Circle,
    k: float,
    trials: int = 1000,
    tol: float = DEFAULT_POLICY.threshold,
    seed: int = 0,
    workers: int = 1,
) -> Tuple[CheckReport, LocusCircle]:
    locus = locus_circle(c1, c2, k)
    scene = Scene(kind=SceneKind.CIRCLE_PAIR, shapes=(c1, c2), params={"k": float(k)})
    report = verify("t9", trials=trials, seed=seed, tol=tol, params={"k": float(k)}, scene=scene, workers=workers)
    return report, locus


# -- registry and drivers ----------------------------------------------------


def _clean(params: Mapping[str, Any]) -> Dict[str, Any]:
    return {key: value for key, value in params.items() if value is not None}


THEOREMS: Dict[str, TheoremDef] = {
    "t1": TheoremDef(
        "t1",
        SceneKind.POLYGON_POINT,
        _evaluate_t1,
        {"inside": ("mean",)},
        lambda p: _clean({"n": p.get("n"), "n_min": 3, "n_max": 12, "probe": p.get("probe", "anywhere")}),
    ),
    "t2": TheoremDef(
        "t2",
        SceneKind.POINTS_ON_CIRCLE,
        _evaluate_t2,
        {"polygon_formed": ("mean",)},
        lambda p: {"n": 2 * int(p.get("secants") or 4)},
    ),
    "t3": TheoremDef("t3", SceneKind.TRIANGLE_POINT, _evaluate_t3, {"E": ("min", "max"), "F": ("min", "max")}),
    "t4": TheoremDef("t4", SceneKind.TRIANGLE, _evaluate_t4, {"argmin": ("min", "max"), "min_ratio": ("min", "max")}),
    "t5": TheoremDef(
        "t5",
        SceneKind.ACUTE_TRIANGLE,
        _evaluate_t5,
        {"sum_residual": ("max",), "agreement": ("mean",), "inconclusive": ("sum",), "concurrent": ("sum",)},
    ),
    "t6": TheoremDef("t6", SceneKind.TRIANGLE_POINT, _evaluate_t6, {"lhs": ("min", "max")}),
    "t7": TheoremDef("t7", SceneKind.ACUTE_TRIANGLE, _evaluate_t7, {"deficit": ("min", "max")}),
    "t8": TheoremDef(
        "t8",
        SceneKind.POINTS_ON_CIRCLE,
        _evaluate_t8,
        {"gap_within_sector": ("min",), "pair_agrees": ("min",), "slack": ("min",)},
        lambda p: _clean({"n": p.get("n"), "n_min": 2, "n_max": 50}),
    ),
    "t9": TheoremDef(
        "t9",
        SceneKind.CIRCLE_PAIR,
        _evaluate_t9,
        {
            "forward": ("max",),
            "converse": ("max",),
            "locus_radius": ("first",),
            "locus_center_x": ("first",),
            "locus_center_y": ("first",),
        },
    ),
}


def _definition(theorem_id: str) -> TheoremDef:
    try:
        return THEOREMS[theorem_id]
    except KeyError:
        raise InvalidInputError(f"Unknown theorem '{theorem_id}'. Valid: {', '.join(THEOREMS)}") from None


def _single_report(
    theorem_id: str, residual: float, extras: Dict[str, Any], tol: float, scene: Scene, started: float
) -> CheckReport:
    outcome = TrialOutcome(0, float(residual), scene.summary(), {})
    report = build_report(theorem_id, [outcome], seed=None, tol=tol, started=started, reducers={})
    report.extras = {key: value for key, value in extras.items()}
    return report


def _run_trial(
    definition: TheoremDef,
    index: int,
    seed: int,
    params: Mapping[str, Any],
    scene: Optional[Scene],
    policy: TolerancePolicy,
) -> TrialOutcome:
    if scene is None:
        scene = sample_scene(definition.scene_kind, definition.scene_params(params), seed=seed, index=index)
    rng = trial_rng(seed, index)
    residual, extras = definition.evaluate(scene, rng, params, policy)
    logger.debug("%s trial %d residual %.3e", definition.theorem_id, index, residual)
    summary = scene.summary()
    if summary.get("index") is None:
        summary["index"] = index
    return TrialOutcome(index, float(residual), summary, extras)


def verify(
    theorem_id: str,
    *,
    trials: int = 1000,
    seed: int = 0,
    tol: float = DEFAULT_POLICY.threshold,
    params: Optional[Mapping[str, Any]] = None,
    scene: Optional[Scene] = None,
    workers: int = 1,
    indices: Optional[Sequence[int]] = None,
) -> CheckReport:
    """Run ``trials`` seeded trials of one theorem (or just ``indices``)."""
    definition = _definition(theorem_id)
    if trials < 1:
        raise InvalidInputError("At least one trial is required.")
    params = dict(params or {})
    policy = TolerancePolicy(threshold=tol)
    started = time.perf_counter()
    run_indices = list(indices) if indices is not None else list(range(trials))
    outcomes = map_trials(lambda i: _run_trial(definition, i, seed, params, scene, policy), run_indices, workers)
    report = build_report(
        theorem_id, outcomes, seed=seed, tol=tol, started=started, reducers=definition.reducers
    )
    logger.info(
        "%s: %d trials, max residual %.3e, %s",
        theorem_id,
        report.trials,
        report.max_residual,
        "pass" if report.passed else f"{len(report.failures)} failure witness(es)",
    )
    return report


def replay(
    theorem_id: str,
    seed: int,
    index: int,
    tol: float = DEFAULT_POLICY.threshold,
    params: Optional[Mapping[str, Any]] = None,
    scene: Optional[Scene] = None,
) -> TrialOutcome:
    """Re-run exactly one trial; the residual is bit-identical to the original run."""
    definition = _definition(theorem_id)
    return _run_trial(definition, index, seed, dict(params or {}), scene, TolerancePolicy(threshold=tol))
