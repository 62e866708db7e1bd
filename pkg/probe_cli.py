"""geoprobe command line: verify theorems, explore open problems, trace figures.

Examples::

    python probe_cli.py verify t3 --trials 100000 --seed 42
    python probe_cli.py verify t9 --trials 1 --seed 7 --scene circles:0,0,1,1,0,1 --k 1
    python probe_cli.py explore ratio-sum --ngon 3 --d 1
    python probe_cli.py trace locus --shapes circles:0,0,1,1,0,1 --k 2
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

import conjecture_lab
import theorem_suite
from experiment_db import connect, insert_run, insert_witnesses
from geom_core import (
    Circle,
    Ellipse,
    GenerationExhaustedError,
    GeometryError,
    InvalidInputError,
    PointD,
    Polygon,
    Sphere,
    Triangle,
    curve_intersections,
)
from reporting import (
    LocusFigure,
    ReportEnvelope,
    SceneFigure,
    emit_svg,
    log_run_to_mlflow,
    to_builtin,
    write_csv,
    write_json,
)
from scenes import SEED_LIMIT, Scene, SceneKind, sample_scene

logger = logging.getLogger("geoprobe")

TOOL_VERSION = "0.1.0"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILED = 2
EXIT_EXHAUSTED = 3
EXIT_UNWRITABLE = 4

FORMATS = ("json", "csv", "svg")
SEED_ENV = "GEOPROBE_SEED"
DEFAULT_TOL = 1e-9

EXPERIMENT_TRIALS = {
    "cycle-projection-3d": 1000,
    "edge-projection-sum": 100,
    "face-pedal": 1,
    "edge-pedal": 1,
    "polygon-cevian-min": 1,
    "ratio-sum": 1,
    "polygon-product": 1000,
    "pedal-extremum": 1,
    "ellipse-pair-bound": 1,
    "locus": 1000,
}
TARGETS = {
    "verify": tuple(theorem_suite.THEOREMS),
    "explore": tuple(EXPERIMENT_TRIALS),
    "trace": ("locus", "scene"),
}
DEFAULT_FORMATS = {"verify": ("json",), "explore": ("json", "csv"), "trace": ("json", "svg")}
REPLAYABLE = ("cycle-projection-3d", "edge-projection-sum", "face-pedal", "edge-pedal", "polygon-product", "locus")


class UsageError(Exception):
    """Bad flags or configuration; exit code 1."""


class OutputError(Exception):
    """An output file could not be written; exit code 4."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


@dataclass
class RunConfig:
    command: str
    target_id: str
    trials: int
    seed: int
    tol: float = DEFAULT_TOL
    out: Optional[str] = None
    formats: Tuple[str, ...] = ()
    scene: Optional[str] = None
    k: Optional[float] = None
    ngon: Optional[int] = None
    d: Optional[int] = None
    n: Optional[int] = None
    replay: Optional[Tuple[int, int]] = None
    workers: int = 1
    objective: str = "E"
    quantity: str = "pairwise-product-sum"
    restarts: int = 32
    edges: str = "complete"
    db_path: Optional[str] = None
    mlflow: bool = False
    mlflow_tracking_uri: Optional[str] = None
    experiment_name: str = "geoprobe"
    verbose: bool = False
    extra: Dict[str, Any] = field(default_factory=dict)

    def validate(self) -> "RunConfig":
        if self.command not in TARGETS:
            raise UsageError(f"Unknown command '{self.command}'. Valid: {', '.join(TARGETS)}")
        if self.target_id not in TARGETS[self.command]:
            raise UsageError(
                f"Unknown {self.command} target '{self.target_id}'. Valid: {', '.join(TARGETS[self.command])}"
            )
        if self.trials < 1:
            raise UsageError(f"--trials must be at least 1, got {self.trials}.")
        if not 0 <= self.seed < SEED_LIMIT:
            raise UsageError(f"--seed must be an unsigned 64-bit integer, got {self.seed}.")
        if not (0.0 < self.tol < 1.0):
            raise UsageError(f"--tol must lie in (0, 1), got {self.tol}.")
        unknown = [f for f in self.formats if f not in FORMATS]
        if unknown:
            raise UsageError(f"Unknown format(s) {unknown}. Valid: {', '.join(FORMATS)}")
        if self.workers == 0 or self.workers < -1:
            raise UsageError("--workers must be positive or -1 (all cores).")
        if self.restarts < 1:
            raise UsageError("--restarts must be at least 1.")
        if self.replay is not None and self.command == "explore" and self.target_id not in REPLAYABLE:
            raise UsageError(f"--replay is not available for '{self.target_id}'. Valid: {', '.join(REPLAYABLE)}")
        return self

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["formats"] = list(self.formats)
        data["replay"] = list(self.replay) if self.replay is not None else None
        for key in ("verbose", "db_path", "mlflow", "mlflow_tracking_uri", "experiment_name", "extra"):
            data.pop(key)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        data = dict(data)
        data["formats"] = tuple(data.get("formats") or ())
        if data.get("replay") is not None:
            data["replay"] = tuple(int(v) for v in data["replay"])
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{key: value for key, value in data.items() if key in known})


def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed '{text}'") from None
    if not 0 <= value < SEED_LIMIT:
        raise argparse.ArgumentTypeError(f"seed {value} is outside [0, 2^64)")
    return value


def _replay(text: str) -> Tuple[int, int]:
    seed, sep, index = text.partition(":")
    if not sep:
        raise argparse.ArgumentTypeError("expected SEED:INDEX")
    try:
        return _seed(seed), int(index)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid replay '{text}'") from None


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return 0
    try:
        return _seed(raw)
    except argparse.ArgumentTypeError as exc:
        raise UsageError(f"{SEED_ENV}: {exc}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("target", help="Theorem id (t1..t9), experiment id, or trace target.")
    common.add_argument("--trials", type=int, default=None, help="Number of seeded trials.")
    common.add_argument("--seed", type=_seed, default=None, help=f"Base seed (default: ${SEED_ENV} or 0).")
    common.add_argument("--tol", type=float, default=DEFAULT_TOL, help="Residual threshold.")
    common.add_argument("--out", default=None, help="Output path stem (default: reports/<command>-<target>).")
    common.add_argument("--format", dest="formats", action="append", choices=FORMATS, help="Repeatable.")
    common.add_argument("--scene", default=None, help="Explicit scene, kind:n1,n2,...[@x,y[,z]].")
    common.add_argument("--shapes", default=None, help="Alias of --scene for locus tracing.")
    common.add_argument("--k", type=float, default=None, help="Division ratio.")
    common.add_argument("--ngon", type=int, default=None, help="Use the regular n-gon.")
    common.add_argument("--d", type=int, default=None, help="Vertex-to-side offset for ratio-sum.")
    common.add_argument("--n", type=int, default=None, help="Vertex or point count for generated scenes.")
    common.add_argument("--replay", type=_replay, default=None, help="Re-run one trial, SEED:INDEX.")
    common.add_argument("--workers", type=int, default=1, help="Parallel trial workers (-1 for all cores).")
    common.add_argument("--objective", choices=("E", "F"), default="E")
    common.add_argument("--quantity", choices=conjecture_lab.QUANTITIES, default="pairwise-product-sum")
    common.add_argument("--restarts", type=int, default=32)
    common.add_argument("--edges", choices=("complete", "cycle"), default="complete")
    common.add_argument("--db-path", default=None, help="Record the run in this SQLite file.")
    common.add_argument("--mlflow", action="store_true", help="Log the run to MLflow.")
    common.add_argument("--mlflow-tracking-uri", default=None)
    common.add_argument("--experiment-name", default="geoprobe")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="geoprobe", description="Numerical verification of geometric identities.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("verify", parents=[common], help="Check a theorem over seeded trials.")
    sub.add_parser("explore", parents=[common], help="Run an open-problem experiment.")
    sub.add_parser("trace", parents=[common], help="Draw a locus or a scene as SVG.")
    return parser


def parse_args(argv: Optional[Sequence[str]] = None) -> RunConfig:
    args = build_parser().parse_args(argv)
    if args.scene and args.shapes and args.scene != args.shapes:
        raise UsageError("--scene and --shapes disagree; pass only one.")
    if args.target in TARGETS.get(args.command, ()):
        default_trials = 1000 if args.command == "verify" else EXPERIMENT_TRIALS.get(args.target, 1000)
    else:
        default_trials = 1
    cfg = RunConfig(
        command=args.command,
        target_id=args.target,
        trials=args.trials if args.trials is not None else default_trials,
        seed=args.seed if args.seed is not None else _default_seed(),
        tol=args.tol,
        out=args.out,
        formats=tuple(dict.fromkeys(args.formats or DEFAULT_FORMATS[args.command])),
        scene=args.scene or args.shapes,
        k=args.k,
        ngon=args.ngon,
        d=args.d,
        n=args.n,
        replay=args.replay,
        workers=args.workers,
        objective=args.objective,
        quantity=args.quantity,
        restarts=args.restarts,
        edges=args.edges,
        db_path=args.db_path,
        mlflow=args.mlflow,
        mlflow_tracking_uri=args.mlflow_tracking_uri,
        experiment_name=args.experiment_name,
        verbose=args.verbose,
    )
    return cfg.validate()


# -- scenes from the command line ----------------------------------------------


SCENE_ARITY = {
    "triangle": (6,),
    "circles": (6,),
    "spheres": (8,),
    "ellipses": (10,),
    "ellipse-circle": (8,),
    "ellipse": (5,),
}


def _numbers(text: str, what: str) -> List[float]:
    try:
        values = [float(part) for part in text.split(",") if part.strip() != ""]
    except ValueError:
        raise UsageError(f"Could not parse numbers in {what} '{text}'.") from None
    if not all(math.isfinite(v) for v in values):
        raise UsageError(f"Non-finite number in {what} '{text}'.")
    return values


def _ellipse(values: Sequence[float]) -> Ellipse:
    cx, cy, a, b, rot = values
    return Ellipse(PointD.of(cx, cy), (a, b), math.radians(rot))


def _grouped(values: Sequence[float], size: int, what: str) -> List[PointD]:
    if len(values) % size:
        raise UsageError(f"{what} needs a multiple of {size} coordinates, got {len(values)}.")
    return [PointD.from_vec(values[i : i + size]) for i in range(0, len(values), size)]


def parse_scene(spec: str) -> Scene:
    """Build a scene from ``kind:n1,n2,...[@x,y[,z]]``; angles are in degrees."""
    kind, sep, rest = spec.partition(":")
    if not sep:
        raise UsageError(f"Scene '{spec}' is missing ':' after the kind.")
    body, _, probe_text = rest.partition("@")
    values = _numbers(body, "scene")
    probe = PointD.from_vec(_numbers(probe_text, "probe")) if probe_text else None
    if kind in SCENE_ARITY and len(values) not in SCENE_ARITY[kind]:
        raise UsageError(f"Scene kind '{kind}' takes {SCENE_ARITY[kind][0]} numbers, got {len(values)}.")
    params = {"source": spec}

    if kind == "triangle":
        tri = Triangle(*_grouped(values, 2, "triangle"))
        scene_kind = SceneKind.TRIANGLE_POINT if probe is not None else SceneKind.TRIANGLE
        return Scene(kind=scene_kind, params=params, triangle=tri, probe=probe)
    if kind == "polygon":
        polygon = Polygon(tuple(_grouped(values, 2, "polygon")))
        scene_kind = SceneKind.POLYGON_POINT if probe is not None else SceneKind.POLYGON
        return Scene(kind=scene_kind, params=params, polygon=polygon, probe=probe)
    if kind == "points":
        if len(values) < 5:
            raise UsageError("points needs cx,cy,R and at least two angles.")
        circle = Circle(PointD.of(values[0], values[1]), values[2])
        points = tuple(circle.point_at(math.radians(deg)) for deg in values[3:])
        return Scene(kind=SceneKind.POINTS_ON_CIRCLE, params=params, shapes=(circle,), points=points)
    if kind == "circles":
        shapes = (Circle(PointD.of(*values[0:2]), values[2]), Circle(PointD.of(*values[3:5]), values[5]))
        return Scene(kind=SceneKind.CIRCLE_PAIR, params=params, shapes=shapes)
    if kind == "spheres":
        shapes = (Sphere(PointD.of(*values[0:3]), values[3]), Sphere(PointD.of(*values[4:7]), values[7]))
        return Scene(kind=SceneKind.SPHERE_PAIR, params=params, shapes=shapes)
    if kind == "ellipses":
        return Scene(kind=SceneKind.ELLIPSE_PAIR, params=params, shapes=(_ellipse(values[:5]), _ellipse(values[5:])))
    if kind == "ellipse-circle":
        shapes = (_ellipse(values[:5]), Circle(PointD.of(values[5], values[6]), values[7]))
        return Scene(kind=SceneKind.ELLIPSE_PAIR, params=params, shapes=shapes)
    if kind == "ellipse":
        return Scene(kind=SceneKind.ELLIPSE, params=params, shapes=(_ellipse(values),))
    if kind == "cycle":
        return Scene(kind=SceneKind.CYCLE_3D, params=params, points=tuple(_grouped(values, 3, "cycle")), probe=probe)
    if kind == "hull":
        return Scene(kind=SceneKind.HULL_3D, params=params, points=tuple(_grouped(values, 3, "hull")), probe=probe)
    raise UsageError(
        f"Unknown scene kind '{kind}'. Valid: triangle, polygon, points, circles, spheres, "
        "ellipses, ellipse-circle, ellipse, cycle, hull"
    )


def _scene_polygon(scene: Optional[Scene]) -> Optional[Polygon]:
    if scene is None:
        return None
    if scene.polygon is not None:
        return scene.polygon
    if scene.triangle is not None:
        return Polygon(scene.triangle.vertices)
    raise InvalidInputError(f"Scene of kind {scene.kind.value} carries no polygon.")


def _scene_points(scene: Optional[Scene]) -> Optional[List[PointD]]:
    if scene is None:
        return None
    if not scene.points or scene.points[0].dim != 3:
        raise InvalidInputError(f"Scene of kind {scene.kind.value} carries no 3D points.")
    return list(scene.points)


def _require_shapes(scene: Optional[Scene], target: str) -> Tuple[Any, ...]:
    if scene is None or not scene.shapes:
        raise InvalidInputError(f"'{target}' needs --shapes (circles, spheres, ellipses or ellipse-circle).")
    return scene.shapes


# -- runs ----------------------------------------------------------------------


def _envelope(cfg: RunConfig, payload: Dict[str, Any], exit_code: int, wall_time_ms: float) -> ReportEnvelope:
    return ReportEnvelope(
        tool_version=TOOL_VERSION,
        created_at_utc=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        config=cfg.to_dict(),
        payload=payload,
        exit_code=exit_code,
        timing={"wall_time_ms": wall_time_ms},
    )


def _out_stem(cfg: RunConfig) -> Path:
    if cfg.out is None:
        return Path("reports") / f"{cfg.command}-{cfg.target_id}"
    out = Path(cfg.out)
    return out.with_suffix("") if out.suffix in (".json", ".csv", ".svg") else out


def _write_outputs(
    cfg: RunConfig,
    envelope: ReportEnvelope,
    rows: Optional[pd.DataFrame],
    figure: Optional[LocusFigure | SceneFigure],
) -> List[Path]:
    stem = _out_stem(cfg)
    written: List[Path] = []
    try:
        if "json" in cfg.formats:
            written.append(write_json(envelope, stem.with_name(stem.name + ".json")))
        if "csv" in cfg.formats and rows is not None:
            written.append(write_csv(rows, stem.with_name(stem.name + ".csv")))
        if "svg" in cfg.formats and figure is not None:
            written.append(emit_svg(figure, stem.with_name(stem.name + ".svg")))
    except OSError as exc:
        raise OutputError(f"Cannot write report under {stem}: {exc}") from exc
    for path in written:
        logger.info("Wrote %s", path)
    return written


def _scene_figure(scene: Scene, title: str = "") -> SceneFigure:
    return SceneFigure(
        triangle=scene.triangle,
        polygon=scene.polygon,
        shapes=scene.shapes,
        points=scene.points,
        probe=scene.probe,
        title=title,
    )


def _verify_figure(cfg: RunConfig, scene: Optional[Scene], report: theorem_suite.CheckReport) -> LocusFigure | SceneFigure:
    definition = theorem_suite.THEOREMS[cfg.target_id]
    if scene is None:
        scene = sample_scene(definition.scene_kind, definition.scene_params(_verify_params(cfg)), seed=cfg.seed, index=0)
    if cfg.target_id == "t9":
        c1, c2 = scene.shapes
        locus = theorem_suite.locus_circle(c1, c2, cfg.k if cfg.k is not None else 1.0)
        return LocusFigure(
            shapes=scene.shapes,
            samples=np.empty((0, 2)),
            fitted_center=locus.center.coords,
            fitted_radius=locus.radius,
            excluded=(locus.a, locus.b),
            title=f"t9, k={cfg.k if cfg.k is not None else 1.0:g}",
        )
    return _scene_figure(scene, title=cfg.target_id)


def _verify_params(cfg: RunConfig) -> Dict[str, Any]:
    return {key: value for key, value in {"k": cfg.k, "n": cfg.n}.items() if value is not None}


def run_verify(cfg: RunConfig) -> ReportEnvelope:
    """Run one theorem check and write its report; the envelope carries the exit code."""
    if cfg.command != "verify":
        raise UsageError("run_verify needs a verify config.")
    scene = parse_scene(cfg.scene) if cfg.scene else None
    params = _verify_params(cfg)
    if cfg.replay is not None:
        seed, index = cfg.replay
        report = theorem_suite.verify(
            cfg.target_id, trials=1, seed=seed, tol=cfg.tol, params=params, scene=scene, indices=[index]
        )
    else:
        report = theorem_suite.verify(
            cfg.target_id,
            trials=cfg.trials,
            seed=cfg.seed,
            tol=cfg.tol,
            params=params,
            scene=scene,
            workers=cfg.workers,
        )
    exit_code = EXIT_OK if report.passed else EXIT_FAILED
    envelope = _envelope(cfg, report.to_payload(), exit_code, report.wall_time_ms)
    rows = pd.DataFrame(
        [{"trial_index": f.trial_index, "residual": f.residual} for f in report.failures],
        columns=["trial_index", "residual"],
    )
    figure = _verify_figure(cfg, scene, report) if "svg" in cfg.formats else None
    cfg.extra["written"] = _write_outputs(cfg, envelope, rows, figure)
    if not report.passed:
        logger.warning(
            "%s FAILED: max residual %.3e; replay with --replay %s:%d",
            cfg.target_id,
            report.max_residual,
            cfg.seed if cfg.replay is None else cfg.replay[0],
            report.failures[0].trial_index if report.failures else 0,
        )
    return envelope


def _explore(cfg: RunConfig, scene: Optional[Scene]) -> Tuple[conjecture_lab.ExploreResult, Any]:
    seed, indices = (cfg.replay[0], [cfg.replay[1]]) if cfg.replay is not None else (cfg.seed, None)
    common = {"seed": seed, "tol": cfg.tol}
    target = cfg.target_id
    probe = scene.probe if scene is not None else None

    if target == "cycle-projection-3d":
        result = conjecture_lab.explore_cycle_projection_3d(
            _scene_points(scene), probe, trials=cfg.trials, n=cfg.n, workers=cfg.workers, indices=indices, **common
        )
        return result, _scene_figure(scene) if scene is not None else None
    if target == "edge-projection-sum":
        result = conjecture_lab.explore_edge_projection_sum(
            _scene_points(scene), None, probe, orientation=cfg.edges, trials=cfg.trials, indices=indices, **common
        )
        return result, None
    if target == "face-pedal":
        result = conjecture_lab.explore_face_pedal_dataset(
            _scene_points(scene), probe, trials=cfg.trials, n=cfg.n or 10, indices=indices, **common
        )
        return result, None
    if target == "edge-pedal":
        result = conjecture_lab.explore_edge_pedal_dataset(
            _scene_points(scene), None, probe, trials=cfg.trials, indices=indices, **common
        )
        return result, None
    if target == "polygon-cevian-min":
        result = conjecture_lab.explore_polygon_cevian_min(
            _scene_polygon(scene), cfg.objective, restarts=cfg.restarts, ngon=cfg.ngon, n=cfg.n, **common
        )
        polygon = _scene_polygon(scene) or conjecture_lab.resolve_polygon(None, cfg.ngon, seed, cfg.n)
        argmin = PointD.from_vec(result.summary["argmin"])
        return result, SceneFigure(polygon=polygon, probe=argmin, title=f"min {cfg.objective}")
    if target == "ratio-sum":
        result = conjecture_lab.explore_polygon_ratio_sum(
            _scene_polygon(scene), d=cfg.d, ngon=cfg.ngon, n=cfg.n, **common
        )
        return result, None
    if target == "polygon-product":
        result = conjecture_lab.explore_polygon_product(
            _scene_polygon(scene),
            probe,
            trials=cfg.trials,
            ngon=cfg.ngon,
            n=cfg.n,
            workers=cfg.workers,
            indices=indices,
            **common,
        )
        return result, None
    if target == "pedal-extremum":
        result = conjecture_lab.explore_pedal_polygon_extremum(
            _scene_polygon(scene), cfg.quantity, restarts=cfg.restarts, ngon=cfg.ngon, n=cfg.n, **common
        )
        figure = None
        if "argmax" in result.summary:
            polygon = _scene_polygon(scene) or conjecture_lab.resolve_polygon(None, cfg.ngon, seed, cfg.n)
            figure = SceneFigure(polygon=polygon, probe=PointD.from_vec(result.summary["argmax"]), title=cfg.quantity)
        return result, figure
    if target == "ellipse-pair-bound":
        shapes = _require_shapes(scene, target)
        ellipse = shapes[0]
        if isinstance(ellipse, Circle):
            ellipse = Ellipse(ellipse.center, (ellipse.radius, ellipse.radius))
        if not isinstance(ellipse, Ellipse):
            raise InvalidInputError("ellipse-pair-bound needs --scene ellipse:cx,cy,a,b,rot_deg.")
        if cfg.n is None:
            raise InvalidInputError("ellipse-pair-bound needs --n (number of points).")
        result = conjecture_lab.explore_ellipse_pair_bound(ellipse, cfg.n, restarts=cfg.restarts, **common)
        return result, SceneFigure(shapes=(ellipse,), title=f"n={cfg.n}")
    if target == "locus":
        return _locus(cfg, scene, seed, indices)
    raise UsageError(f"Unknown experiment '{target}'.")


def _locus(
    cfg: RunConfig, scene: Optional[Scene], seed: int, indices: Optional[List[int]]
) -> Tuple[conjecture_lab.ExploreResult, LocusFigure]:
    shapes = _require_shapes(scene, "locus")
    result, fit = conjecture_lab.explore_locus(
        shapes,
        cfg.k if cfg.k is not None else 1.0,
        trials=cfg.trials,
        seed=seed,
        tol=cfg.tol,
        workers=cfg.workers,
        indices=indices,
    )
    dim = 3 if isinstance(shapes[0], Sphere) else 2
    samples = result.rows[list("xyz"[:dim])].to_numpy(dtype=float) if len(result.rows) else np.empty((0, dim))
    excluded = curve_intersections(*shapes) if dim == 2 else ()
    figure = LocusFigure(
        shapes=shapes,
        samples=samples,
        fitted_center=fit.fitted_center.coords if fit is not None else None,
        fitted_radius=fit.fitted_radius if fit is not None else None,
        excluded=tuple(excluded),
        title=f"k={result.params['k']:g}",
    )
    return result, figure


def _explore_exit(result: conjecture_lab.ExploreResult) -> int:
    return EXIT_FAILED if result.verdict is conjecture_lab.Verdict.REFUTED else EXIT_OK


def run_explore(cfg: RunConfig) -> ReportEnvelope:
    """Run one experiment; writes the JSON summary and the CSV dataset."""
    if cfg.command != "explore":
        raise UsageError("run_explore needs an explore config.")
    scene = parse_scene(cfg.scene) if cfg.scene else None
    result, figure = _explore(cfg, scene)
    exit_code = _explore_exit(result)
    envelope = _envelope(cfg, result.to_payload(), exit_code, result.wall_time_ms)
    cfg.extra["written"] = _write_outputs(cfg, envelope, result.rows, figure)
    if exit_code == EXIT_FAILED:
        witness = result.witness
        logger.warning(
            "%s REFUTED: residual %.3e%s",
            cfg.target_id,
            result.max_residual,
            f"; replay with --replay {witness.seed}:{witness.index}" if witness is not None else "",
        )
    return envelope


def run_trace(cfg: RunConfig) -> ReportEnvelope:
    """Draw a locus cloud with its fitted circle, or a parsed scene, as SVG."""
    if cfg.command != "trace":
        raise UsageError("run_trace needs a trace config.")
    scene = parse_scene(cfg.scene) if cfg.scene else None
    if cfg.target_id == "locus":
        seed, indices = (cfg.replay[0], [cfg.replay[1]]) if cfg.replay is not None else (cfg.seed, None)
        result, figure = _locus(cfg, scene, seed, indices)
        exit_code = _explore_exit(result)
        envelope = _envelope(cfg, result.to_payload(), exit_code, result.wall_time_ms)
        rows = result.rows
    else:
        if scene is None:
            raise InvalidInputError("trace scene needs --scene.")
        figure = _scene_figure(scene)
        envelope = _envelope(cfg, {"kind": "scene", "scene": scene.summary()}, EXIT_OK, 0.0)
        rows = None
    cfg.extra["written"] = _write_outputs(cfg, envelope, rows, figure)
    return envelope


RUNNERS = {"verify": run_verify, "explore": run_explore, "trace": run_trace}


def _record(cfg: RunConfig, envelope: ReportEnvelope) -> Dict[str, Any]:
    written = [Path(p) for p in cfg.extra.get("written", [])]
    info: Dict[str, Any] = {}
    if cfg.mlflow:
        info["mlflow_run_id"] = log_run_to_mlflow(
            envelope=envelope,
            artifacts=written,
            experiment_name=cfg.experiment_name,
            tracking_uri=cfg.mlflow_tracking_uri,
            run_name=f"{cfg.command}-{cfg.target_id}",
        )
        info["mlflow_tracking_uri"] = cfg.mlflow_tracking_uri
    if cfg.db_path:
        payload = envelope.payload
        witnesses = [
            {
                "seed": f["scene"]["seed"] if f["scene"].get("seed") is not None else payload.get("seed"),
                "index": f["trial_index"],
                "residual": f["residual"],
                "scene": f["scene"],
            }
            for f in payload.get("failures", [])
        ]
        if payload.get("witness"):
            witnesses.append(payload["witness"])
        with connect(cfg.db_path) as conn:
            run_id = insert_run(
                conn,
                command=cfg.command,
                target_id=cfg.target_id,
                config=cfg.to_dict(),
                payload_sha256=envelope.payload_digest(),
                exit_code=envelope.exit_code,
                mlflow_run_id=info.get("mlflow_run_id"),
                mlflow_tracking_uri=info.get("mlflow_tracking_uri"),
                report_path=str(written[0]) if written else None,
            )
            if witnesses:
                insert_witnesses(conn, run_id=run_id, witnesses=witnesses)
        info["db_run_id"] = run_id
    return info


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="[geoprobe] %(message)s",
        stream=sys.stderr,
        force=True,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        cfg = parse_args(argv)
    except UsageError as exc:
        configure_logging(False)
        logger.error("%s", exc)
        return EXIT_USAGE
    configure_logging(cfg.verbose)

    try:
        envelope = RUNNERS[cfg.command](cfg)
        info = _record(cfg, envelope)
    except (UsageError, GeometryError) as exc:
        logger.error("%s", exc)
        return EXIT_USAGE
    except GenerationExhaustedError as exc:
        logger.error("Scene generation exhausted: %s", exc)
        return EXIT_EXHAUSTED
    except OutputError as exc:
        logger.error("%s", exc)
        return EXIT_UNWRITABLE

    payload = envelope.payload
    summary = {
        "command": cfg.command,
        "target": cfg.target_id,
        "exit_code": envelope.exit_code,
        "max_residual": payload.get("max_residual"),
        "pass": payload.get("pass"),
        "verdict": payload.get("verdict"),
        "outputs": [str(p) for p in cfg.extra.get("written", [])],
        **info,
    }
    print(json.dumps(to_builtin(summary), indent=2))
    return envelope.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
