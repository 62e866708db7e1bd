"""Seeded scene generation.

Every scene is a pure function of ``(kind, params, seed, index)``: the random
stream for a trial is derived from a ``SeedSequence`` keyed on those values,
so trials can run in any order or in parallel and still reproduce bit for bit.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, TypeVar

import numpy as np
from joblib import Parallel, delayed

from geom_core import (
    Circle,
    Ellipse,
    GenerationExhaustedError,
    InvalidInputError,
    PointD,
    Polygon,
    Sphere,
    Triangle,
    cross2,
)

logger = logging.getLogger(__name__)

MAX_ATTEMPTS = 10_000
SEED_LIMIT = 2**64
MIN_ANGLE_DEG = 5.0
ACUTE_MAX_ANGLE_DEG = 85.0
DIAMETER_RANGE = (0.5, 10.0)
PROBE_MARGIN = 1e-3
POLYGON_N_RANGE = (3, 64)

T = TypeVar("T")


class SceneKind(str, Enum):
    TRIANGLE = "triangle"
    ACUTE_TRIANGLE = "acute-triangle"
    TRIANGLE_POINT = "triangle-point"
    POLYGON = "polygon"
    POLYGON_POINT = "polygon-point"
    POINTS_ON_CIRCLE = "points-on-circle"
    CIRCLE_PAIR = "circle-pair"
    SPHERE_PAIR = "sphere-pair"
    CYCLE_3D = "cycle-3d"
    HULL_3D = "hull-3d"
    ELLIPSE = "ellipse"
    ELLIPSE_PAIR = "ellipse-pair"


# Stream codes are part of the reproducibility contract; append only.
_STREAM_CODES = {kind: code for code, kind in enumerate(SceneKind, start=1)}
TRIAL_STREAM = 0


def _coords(points: Sequence[PointD]) -> List[List[float]]:
    return [list(p.coords) for p in points]


def _shape_summary(shape: Any) -> Dict[str, Any]:
    if isinstance(shape, Ellipse):
        return {
            "type": "ellipse",
            "center": list(shape.center.coords),
            "semi_axes": list(shape.semi_axes),
            "rotation": shape.rotation,
        }
    return {"type": type(shape).__name__.lower(), "center": list(shape.center.coords), "radius": shape.radius}


@dataclass(frozen=True)
class Scene:
    kind: SceneKind
    seed: Optional[int] = None
    index: Optional[int] = None
    params: Mapping[str, Any] = field(default_factory=dict)
    triangle: Optional[Triangle] = None
    polygon: Optional[Polygon] = None
    shapes: Tuple[Any, ...] = ()
    points: Tuple[PointD, ...] = ()
    probe: Optional[PointD] = None

    @property
    def diameter(self) -> float:
        if self.triangle is not None:
            return self.triangle.diameter
        if self.polygon is not None:
            return self.polygon.diameter
        if self.points:
            arr = np.array([p.coords for p in self.points])
            deltas = arr[:, None, :] - arr[None, :, :]
            return float(np.max(np.sqrt(np.sum(deltas**2, axis=-1))))
        if self.shapes:
            return max(2.0 * getattr(s, "radius", max(getattr(s, "semi_axes", (1.0,)))) for s in self.shapes)
        return 1.0

    def summary(self) -> Dict[str, Any]:
        """JSON-ready description, enough to rebuild the scene by hand."""
        data: Dict[str, Any] = {
            "kind": self.kind.value,
            "seed": self.seed,
            "index": self.index,
            "params": dict(self.params),
        }
        if self.triangle is not None:
            data["triangle"] = _coords(self.triangle.vertices)
        if self.polygon is not None:
            data["polygon"] = _coords(self.polygon.vertices)
        if self.shapes:
            data["shapes"] = [_shape_summary(s) for s in self.shapes]
        if self.points:
            data["points"] = _coords(self.points)
        if self.probe is not None:
            data["probe"] = list(self.probe.coords)
        return data


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < SEED_LIMIT:
        raise InvalidInputError(f"Seed must be a 64-bit unsigned integer, got {seed}.")
    return seed


def trial_rng(seed: int, index: int, stream: int = TRIAL_STREAM) -> np.random.Generator:
    """Independent generator for one trial, keyed on (seed, index, stream)."""
    if index < 0:
        raise InvalidInputError(f"Trial index must be non-negative, got {index}.")
    return np.random.default_rng(np.random.SeedSequence([check_seed(seed), int(index), int(stream)]))


def scene_rng(kind: SceneKind, seed: int, index: int) -> np.random.Generator:
    return trial_rng(seed, index, _STREAM_CODES[SceneKind(kind)])


def _rejection(build: Callable[[], Optional[T]], what: str) -> T:
    for _ in range(MAX_ATTEMPTS):
        candidate = build()
        if candidate is not None:
            return candidate
    raise GenerationExhaustedError(f"Could not generate a valid {what} after {MAX_ATTEMPTS} attempts.")


def _in_range(value: float, bounds: Tuple[float, float]) -> bool:
    return bounds[0] <= value <= bounds[1]


def _random_triangle(rng: np.random.Generator, params: Mapping[str, Any], acute: bool) -> Triangle:
    min_angle = math.radians(float(params.get("min_angle_deg", MIN_ANGLE_DEG)))
    max_angle = math.radians(float(params.get("max_angle_deg", ACUTE_MAX_ANGLE_DEG if acute else 180.0)))

    def build() -> Optional[Triangle]:
        pts = rng.uniform(-5.0, 5.0, size=(3, 2))
        try:
            tri = Triangle(*(PointD.from_vec(p) for p in pts))
        except InvalidInputError:
            return None
        angles = tri.angles()
        if not _in_range(tri.diameter, DIAMETER_RANGE) or min(angles) < min_angle or max(angles) > max_angle:
            return None
        return tri

    return _rejection(build, "acute triangle" if acute else "triangle")


def interior_triangle_point(rng: np.random.Generator, tri: Triangle) -> PointD:
    margin = PROBE_MARGIN * tri.diameter
    verts = np.array([v.coords for v in tri.vertices])
    sides = tri.side_segments()

    def build() -> Optional[PointD]:
        weights = rng.dirichlet(np.ones(3))
        p = PointD.from_vec(weights @ verts)
        # Inside a triangle the boundary distance is the least distance to a side line.
        dists = [abs(cross2(s.direction, p.vec - s.a.vec)) / s.length for s in sides]
        return p if min(dists) >= margin else None

    return _rejection(build, "interior probe point")


def _polygon_size(rng: np.random.Generator, params: Mapping[str, Any]) -> int:
    if params.get("n") is not None:
        n = int(params["n"])
    else:
        n = int(rng.integers(int(params.get("n_min", 3)), int(params.get("n_max", 12)) + 1))
    if not POLYGON_N_RANGE[0] <= n <= POLYGON_N_RANGE[1]:
        raise InvalidInputError(f"Polygon size must lie in {list(POLYGON_N_RANGE)}, got {n}.")
    return n


def _random_polygon(rng: np.random.Generator, n: int) -> Polygon:
    """Radially perturbed regular polygon; star-shaped about its center, hence simple."""

    def build() -> Optional[Polygon]:
        radius = rng.uniform(0.5, 3.5)
        sector = 2.0 * math.pi / n
        phase = rng.uniform(0.0, 2.0 * math.pi)
        angles = phase + sector * (np.arange(n) + rng.uniform(-0.3, 0.3, size=n))
        radii = radius * (1.0 + rng.uniform(-0.4, 0.4, size=n))
        center = rng.uniform(-2.0, 2.0, size=2)
        pts = center + radii[:, None] * np.column_stack([np.cos(angles), np.sin(angles)])
        try:
            polygon = Polygon(tuple(PointD.from_vec(p) for p in pts), simple=True)
        except InvalidInputError:
            return None
        return polygon if _in_range(polygon.diameter, DIAMETER_RANGE) else None

    return _rejection(build, f"simple {n}-gon")


def polygon_probe(rng: np.random.Generator, polygon: Polygon, where: str) -> PointD:
    arr = polygon.array
    lo, hi = arr.min(axis=0), arr.max(axis=0)
    if where == "anywhere":
        pad = 0.5 * (hi - lo)
        return PointD.from_vec(rng.uniform(lo - pad, hi + pad))
    margin = PROBE_MARGIN * polygon.diameter

    def build() -> Optional[PointD]:
        p = rng.uniform(lo, hi)
        if polygon.contains(p) and polygon.boundary_distance(p) >= margin:
            return PointD.from_vec(p)
        return None

    return _rejection(build, "interior polygon probe")


def _points_on_circle(rng: np.random.Generator, params: Mapping[str, Any]) -> Tuple[Circle, Tuple[PointD, ...]]:
    if params.get("n") is not None:
        n = int(params["n"])
    else:
        n = int(rng.integers(int(params.get("n_min", 2)), int(params.get("n_max", 50)) + 1))
    if n < 2:
        raise InvalidInputError(f"Need at least 2 points on the circle, got {n}.")

    def build() -> Optional[Tuple[Circle, Tuple[PointD, ...]]]:
        center = rng.uniform(-3.0, 3.0, size=2)
        radius = rng.uniform(0.5, 5.0)
        angles = np.sort(rng.uniform(0.0, 2.0 * math.pi, size=n))
        gaps = np.diff(np.append(angles, angles[0] + 2.0 * math.pi))
        if gaps.min() < 1e-6:
            return None
        circle = Circle(PointD.from_vec(center), radius)
        return circle, tuple(circle.point_at(t) for t in angles)

    return _rejection(build, f"{n} points on a circle")


def _unit_vector(rng: np.random.Generator, dim: int) -> np.ndarray:
    while True:
        v = rng.normal(size=dim)
        length = float(np.linalg.norm(v))
        if length > 1e-12:
            return v / length


def _round_pair(rng: np.random.Generator, dim: int) -> Tuple[Any, Any]:
    shape_cls = Circle if dim == 2 else Sphere

    def build():
        r1, r2 = rng.uniform(0.5, 3.0, size=2)
        d = rng.uniform(0.3, 0.95) * (r1 + r2)
        if d <= abs(r1 - r2) * (1.0 + 1e-3):
            return None
        c1 = rng.uniform(-2.0, 2.0, size=dim)
        c2 = c1 + d * _unit_vector(rng, dim)
        return shape_cls(PointD.from_vec(c1), r1), shape_cls(PointD.from_vec(c2), r2)

    return _rejection(build, "transversal circle pair" if dim == 2 else "transversal sphere pair")


def _cycle_3d(rng: np.random.Generator, params: Mapping[str, Any]) -> Tuple[PointD, ...]:
    n = _polygon_size(rng, params)

    def build():
        pts = rng.uniform(-5.0, 5.0, size=(n, 3))
        edges = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
        if edges.min() < PROBE_MARGIN:
            return None
        return tuple(PointD.from_vec(p) for p in pts)

    return _rejection(build, "3D cycle")


def sample_scene(
    kind: SceneKind | str,
    params: Optional[Mapping[str, Any]] = None,
    seed: int = 0,
    index: int = 0,
) -> Scene:
    """Deterministic scene for (kind, params, seed, index)."""
    kind = SceneKind(kind)
    params = dict(params or {})
    rng = scene_rng(kind, seed, index)
    common = {"kind": kind, "seed": check_seed(seed), "index": int(index), "params": params}

    if kind in (SceneKind.TRIANGLE, SceneKind.ACUTE_TRIANGLE, SceneKind.TRIANGLE_POINT):
        tri = _random_triangle(rng, params, acute=kind is SceneKind.ACUTE_TRIANGLE)
        probe = interior_triangle_point(rng, tri) if kind is SceneKind.TRIANGLE_POINT else None
        return Scene(triangle=tri, probe=probe, **common)
    if kind in (SceneKind.POLYGON, SceneKind.POLYGON_POINT):
        polygon = _random_polygon(rng, _polygon_size(rng, params))
        probe = None
        if kind is SceneKind.POLYGON_POINT:
            probe = polygon_probe(rng, polygon, str(params.get("probe", "inside")))
        return Scene(polygon=polygon, probe=probe, **common)
    if kind is SceneKind.POINTS_ON_CIRCLE:
        circle, points = _points_on_circle(rng, params)
        return Scene(shapes=(circle,), points=points, **common)
    if kind in (SceneKind.CIRCLE_PAIR, SceneKind.SPHERE_PAIR):
        return Scene(shapes=_round_pair(rng, 2 if kind is SceneKind.CIRCLE_PAIR else 3), **common)
    if kind is SceneKind.CYCLE_3D:
        points = _cycle_3d(rng, params)
        probe = PointD.from_vec(rng.uniform(-6.0, 6.0, size=3))
        return Scene(points=points, probe=probe, **common)
    if kind is SceneKind.HULL_3D:
        n = int(params.get("n", 10))
        if n < 4:
            raise InvalidInputError(f"A 3D hull needs at least 4 points, got {n}.")
        pts = rng.uniform(-3.0, 3.0, size=(n, 3))
        # A convex combination of the points lies inside their hull.
        probe = PointD.from_vec(rng.dirichlet(np.ones(n)) @ pts)
        return Scene(points=tuple(PointD.from_vec(p) for p in pts), probe=probe, **common)
    raise InvalidInputError(f"Scene kind {kind.value!r} is built from explicit shapes only.")


def map_trials(fn: Callable[[int], T], indices: Sequence[int], workers: int = 1) -> List[T]:
    """Evaluate ``fn`` per trial index, returning results in index order."""
    indices = sorted(int(i) for i in indices)
    if workers == 1 or len(indices) < 2:
        results = [fn(i) for i in indices]
    else:
        results = Parallel(n_jobs=workers, prefer="threads")(delayed(fn)(i) for i in indices)
    logger.debug("Evaluated %d trials with %d worker(s).", len(indices), workers)
    return list(results)
